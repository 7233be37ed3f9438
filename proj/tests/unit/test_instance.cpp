#include <doctest.h>

#include "persuasion/errors.hpp"
#include "persuasion/generators.hpp"
#include "persuasion/instance.hpp"

#include <cmath>
#include <random>

using namespace persuasion;
using nlohmann::json;

namespace {

Instance corpus(const std::string& name) { return load_instance_file(std::string(CORPUS_DIR) + "/" + name + ".json"); }

Belief bin(long num, long den) { return Belief::binary(Rational(num, den)); }

std::string validation_path(const std::string& text) {
    try {
        load_instance(text);
    } catch (const ValidationError& e) {
        return e.path().empty() ? "/" : e.path();
    }
    return "<accepted>";
}

const char* kMinimal = R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
  "utility": {"kind": "point_indicator", "points": [["1", "0"]], "hi": "1", "lo": "0"}})";

} // namespace

TEST_CASE("four-experiments corpus file") {
    const Instance inst = corpus("four_experiments");
    CHECK(inst.experiments.size() == 4);
    CHECK(inst.prior == bin(1, 3));
    CHECK(inst.experiments[1].label == "e2");
}

TEST_CASE("an instance without experiments only allows stopping") {
    const Instance inst = load_instance(kMinimal);
    const auto f = feasible_at(inst, inst.prior);
    REQUIRE(f.size() == 1);
    CHECK(is_trivial(f[0]));
}

TEST_CASE("validation errors name the offending path") {
    CHECK(validation_path(R"({"states": ["x", "y"], "prior": ["1/2", "1/3"],
        "utility": {"kind": "point_indicator", "points": [["1", "0"]]}})") == "/prior");
    CHECK(validation_path(R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
        "utility": {"kind": "point_indicator", "points": [["1", "0"]]},
        "experiments": [{"atoms": [{"w": "1/2", "p": ["0", "1"]}, {"w": "1/3", "p": ["1", "0"]}]}]})")
              .rfind("/experiments/0", 0) == 0);
    CHECK(validation_path(R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
        "utility": {"kind": "point_indicator", "points": [["1", "0"]]},
        "experiments": [{"atoms": [{"w": "1/2", "p": ["0", "1"]}, {"w": "1/2", "p": ["0", "1"]}]}]})")
              .rfind("/experiments/0", 0) == 0);
    CHECK(validation_path(R"({"states": ["x", "y"], "prior": ["1/2", "one half"],
        "utility": {"kind": "point_indicator", "points": [["1", "0"]]}})")
              .rfind("/prior", 0) == 0);
    CHECK(validation_path(R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
        "utility": {"kind": "builtin", "name": "nope"}})") == "/utility/name");
    CHECK(validation_path("{not json") != "<accepted>");
}

TEST_CASE("save and load round trip exactly") {
    for (const char* name : {"four_experiments", "entropy_halving", "triangle_f1", "triangle_f2"}) {
        const Instance inst = corpus(name);
        CHECK(load_instance(save_instance(inst)) == inst);
    }
    Instance fa = load_instance(R"({"states": ["x", "y"], "prior": ["123456789/1000000000", "876543211/1000000000"],
        "utility": {"kind": "finite_action", "actions": ["l", "r"],
                    "receiver": [[1, 0], [0, 1]], "sender": [[0.25, 1], [0.5, 2]]},
        "h": 3, "delta": 0.01, "v_bounds": [0.25, 2], "assume_positive": true})");
    CHECK(load_instance(save_instance(fa)) == fa);
}

TEST_CASE("feasible_at order and Bayes plausibility") {
    const Instance inst = corpus("four_experiments");
    const auto at13 = feasible_edges(inst, bin(1, 3));
    REQUIRE(at13.size() == 3);
    CHECK(at13[0].label == "e1");
    CHECK(at13[1].label == "e2");
    CHECK(is_trivial(at13[2].experiment));
    const auto at12 = feasible_at(inst, bin(1, 2));
    REQUIRE(at12.size() == 1);
    CHECK(is_trivial(at12[0]));

    for (const char* name : {"four_experiments", "entropy_halving", "triangle_f1", "triangle_f2"}) {
        const Instance x = corpus(name);
        for (const auto& p : {x.prior, Belief::vertex(x.dim(), 0)}) {
            const auto f = feasible_at(x, p);
            CHECK(f.back() == Experiment::trivial(p));
            for (const auto& e : f) CHECK(expectation(e) == p);
        }
    }
}

TEST_CASE("eval_v on the example utilities") {
    const Instance four = corpus("four_experiments");
    CHECK(eval_v(four, bin(0, 1)) == 1.0);
    CHECK(eval_v(four, bin(1, 2)) == 0.0);
    const Instance tri = corpus("triangle_f1");
    CHECK(eval_v(tri, Belief::vertex(3, 2)) == 1.0);
    CHECK(eval_v(tri, Belief::uniform(3)) == 0.0);
    const Instance halving = corpus("entropy_halving");
    CHECK(eval_v(halving, bin(1, 2)) == 0.0);
    CHECK(eval_v(halving, bin(1, 1)) == 1.0);
    CHECK(eval_v(halving, bin(1, 4)) == doctest::Approx(0.5));
}

TEST_CASE("finite-action utility is the sender-best receiver-optimal payoff") {
    const Instance inst = load_instance(R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
        "utility": {"kind": "finite_action", "actions": ["l", "m", "r"],
                    "receiver": [[1, 0.5, 0], [0, 0.5, 1]], "sender": [[0.1, 0.7, 0.3], [0.2, 0.9, 0.4]]}})");
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<long> num(0, 60);
    for (int i = 0; i < 200; ++i) {
        const Belief p = bin(num(rng), 60);
        const double t = p[0].to_double();
        double best_u = -1e300;
        std::vector<double> u(3), v(3);
        for (int a = 0; a < 3; ++a) {
            u[a] = t * inst.utility.receiver[0][a] + (1 - t) * inst.utility.receiver[1][a];
            v[a] = t * inst.utility.sender[0][a] + (1 - t) * inst.utility.sender[1][a];
            best_u = std::max(best_u, u[a]);
        }
        double expected = -1e300;
        for (int a = 0; a < 3; ++a)
            if (u[a] >= best_u - 1e-12) expected = std::max(expected, v[a]);
        CHECK(eval_v(inst, p) == doctest::Approx(expected));
        CHECK(eval_v(inst, p) >= 0.1);
        CHECK(eval_v(inst, p) <= 0.9);
    }
    // At t = 1/2 all three actions tie for the receiver and the sender prefers m.
    CHECK(eval_v(inst, bin(1, 2)) == doctest::Approx(0.8));
}

TEST_CASE("support bound") {
    CHECK(check_support_bound(corpus("four_experiments")).h == 3);
    CHECK(check_support_bound(corpus("four_experiments")).witness == "e2");
    CHECK(check_support_bound(corpus("triangle_f1")).h == 2);
    CHECK(check_support_bound(load_instance(kMinimal)).h == 1);
    Instance declared = corpus("four_experiments");
    declared.h = 2;
    CHECK_THROWS_AS(check_support_bound(declared), AssumptionError);
}

TEST_CASE("entropy gap assumption") {
    const Instance four = corpus("four_experiments");
    const auto g = check_entropy_gap(four, {bin(1, 3), bin(2, 3)});
    double expected = 1e300;
    for (const auto& le : four.experiments) expected = std::min(expected, entropy_gap(le.experiment));
    REQUIRE(g.delta.has_value());
    CHECK(*g.delta == doctest::Approx(expected));
    CHECK_FALSE(g.vacuous);

    const auto none = check_entropy_gap(load_instance(kMinimal));
    CHECK(none.vacuous);
    CHECK(std::isinf(none.infimum));
    REQUIRE(none.delta.has_value());
    CHECK(std::isinf(*none.delta));

    // A long prefix of the W-spread family pushes the gap below the floor.
    Instance f2 = corpus("triangle_f2");
    for (auto& gspec : f2.generators) gspec.resolution = gspec.kind == "triangle_ladder" ? 2 : 20;
    const auto small = check_entropy_gap(f2);
    CHECK_FALSE(small.delta.has_value());
    CHECK(small.witness == "e_20^(4)");
}

TEST_CASE("generators") {
    CHECK(generator_ids().size() == 3);
    const auto levels = triangle_levels(4);
    CHECK(levels[1][0] == Belief({Rational(0), Rational(1, 2), Rational(1, 2)}));
    CHECK(triangle_d(0) == Belief::vertex(3, 1));
    CHECK(triangle_d(1) == levels[2][0]);
    CHECK(triangle_d(2) == levels[4][2]);

    GeneratorSpec ladder{"triangle_ladder", json::object(), 4};
    const auto at = generate(ladder, levels[3][1]);
    REQUIRE(at.size() == 1);
    CHECK(at[0].label == "e_3^(2)");
    CHECK(support(at[0].experiment) == std::vector<Belief>{levels[2][1], levels[2][2]});
    CHECK(generate(ladder, Belief::uniform(3)).empty());
    CHECK(refine(ladder, 2).resolution == 8);

    GeneratorSpec halving{"binary_entropy_halving", json::object(), 3};
    const auto h = generate(halving, bin(1, 2));
    REQUIRE(h.size() == 1);
    CHECK(expectation(h[0].experiment) == bin(1, 2));
    CHECK(generate(halving, bin(0, 1)).empty());

    Instance bad = corpus("triangle_f2");
    bad.generators[1].params["W"] = json::array({"1/3", "1/3", "1/3"});
    CHECK_THROWS_AS(validate_instance(bad), ValidationError);
}

TEST_CASE("refined and with_prior") {
    const Instance f2 = corpus("triangle_f2");
    const Instance r = refined(f2, 1);
    CHECK(r.generators[0].resolution == f2.generators[0].resolution + 2);
    CHECK(r.generators[1].resolution == f2.generators[1].resolution + 1);
    const Instance moved = with_prior(f2, Belief::vertex(3, 0));
    CHECK(moved.prior == Belief::vertex(3, 0));
    CHECK_THROWS_AS(with_prior(f2, bin(1, 2)), StructuralError);
}

TEST_CASE("positivity flag is checked against the utility") {
    CHECK_THROWS_AS(load_instance(R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
        "utility": {"kind": "point_indicator", "points": [["1", "0"]], "hi": "1", "lo": "0"},
        "assume_positive": true})"),
                    ValidationError);
    CHECK_NOTHROW(load_instance(R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
        "utility": {"kind": "point_indicator", "points": [["1", "0"]], "hi": "2", "lo": "1"},
        "assume_positive": true})"));
    const auto b = utility_bounds(corpus("four_experiments"));
    CHECK(b.first == 0.0);
    CHECK(b.second == 1.0);
}
