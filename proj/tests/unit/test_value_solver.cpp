#include <doctest.h>

#include "oracle.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/generators.hpp"
#include "persuasion/value_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>

using namespace persuasion;

namespace {

Instance corpus(const std::string& name) { return load_instance_file(std::string(CORPUS_DIR) + "/" + name + ".json"); }

Belief bin(long num, long den) { return Belief::binary(Rational(num, den)); }

const char* kTrivialOnly = R"({"states": ["x", "y"], "prior": ["1/2", "1/2"],
  "utility": {"kind": "point_indicator", "points": [["1/2", "1/2"]], "hi": "3", "lo": "1"}})";

Instance product_instance(const std::string& utility, const std::string& experiments) {
    return load_instance(R"({"states": ["00", "01", "10", "11"], "prior": ["1/4", "1/4", "1/4", "1/4"],
        "product_structure": true, "utility": )" + utility + R"(, "experiments": )" + experiments + "}");
}

// Minimum of g(1/2, 1/2) over bilinear g that dominate v on the grid, by
// solving every 4x4 system of tight constraints in doubles.
double bilinear_brute_force(const std::vector<std::array<double, 3>>& pts) {
    double best = 1e300;
    const std::size_t m = pts.size();
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            for (std::size_t c = b + 1; c < m; ++c)
                for (std::size_t d = c + 1; d < m; ++d) {
                    double M[4][5];
                    const std::size_t rows[4] = {a, b, c, d};
                    for (int r = 0; r < 4; ++r) {
                        const auto& [x, y, v] = pts[rows[r]];
                        M[r][0] = x * y, M[r][1] = x, M[r][2] = y, M[r][3] = 1, M[r][4] = v;
                    }
                    bool singular = false;
                    for (int col = 0; col < 4 && !singular; ++col) {
                        int piv = col;
                        for (int r = col + 1; r < 4; ++r)
                            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
                        if (std::abs(M[piv][col]) < 1e-12) {
                            singular = true;
                            break;
                        }
                        std::swap(M[col], M[piv]);
                        for (int r = 0; r < 4; ++r) {
                            if (r == col) continue;
                            const double f = M[r][col] / M[col][col];
                            for (int k = col; k < 5; ++k) M[r][k] -= f * M[col][k];
                        }
                    }
                    if (singular) continue;
                    double coef[4];
                    for (int r = 0; r < 4; ++r) coef[r] = M[r][4] / M[r][r];
                    bool ok = true;
                    for (const auto& [x, y, v] : pts)
                        ok = ok && coef[0] * x * y + coef[1] * x + coef[2] * y + coef[3] >= v - 1e-9;
                    if (ok) best = std::min(best, coef[0] / 4 + coef[1] / 2 + coef[2] / 2 + coef[3]);
                }
    return best;
}

} // namespace

TEST_CASE("reachable belief graph") {
    const auto four = build_graph(corpus("four_experiments"));
    CHECK(four.size() == 5);
    CHECK_FALSE(four.truncated);
    CHECK(four.nodes[0] == bin(1, 3));
    std::vector<Belief> sorted = four.nodes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Belief> expected{bin(1, 3), bin(0, 1), bin(2, 3), bin(1, 2), bin(1, 1)};
    std::sort(expected.begin(), expected.end());
    CHECK(sorted == expected);
    for (std::size_t u = 0; u < four.size(); ++u) {
        CHECK(four.edges[u].back().trivial);
        CHECK(*four.find(four.nodes[u]) == u);
    }

    CHECK(build_graph(corpus("triangle_f1"), {2, 1000}).size() == 1);
    CHECK(build_graph(load_instance(kTrivialOnly)).size() == 1);

    CHECK(build_graph(corpus("four_experiments"), {64, 2}).truncated);
    CHECK(build_graph(with_prior(corpus("triangle_f1"), triangle_levels(12)[6][1]), {2, 1'000'000}).truncated);
}

TEST_CASE("value recursion on the four-experiment instance") {
    const Instance inst = corpus("four_experiments");
    const auto graph = build_graph(inst);
    const auto table = value_recursion(graph, inst, 8);
    REQUIRE(table.exact_levels.has_value());
    const auto& ex = *table.exact_levels;
    CHECK(ex[0][0] == Rational(0));
    CHECK(ex[1][0] == Rational(2, 3));
    CHECK(ex[2][0] == Rational(5, 6));
    CHECK(ex[3][0] == Rational(11, 12));
    for (int n = 1; n <= 8; ++n) CHECK(ex[n][0] == Rational(1) - Rational(1, 3) * pow2(-(n - 1)));
    for (std::size_t u = 0; u < graph.size(); ++u) CHECK(table.levels[0][u] == eval_v(inst, graph.nodes[u]));
    CHECK(graph.edges[0][table.argmax[1][0]].label == "e2");
    CHECK(graph.edges[0][table.argmax[2][0]].label == "e1");
    for (int n = 0; n < 8; ++n)
        for (std::size_t u = 0; u < graph.size(); ++u) CHECK(ex[n][u] <= ex[n + 1][u]);
}

TEST_CASE("recursion matches exhaustive strategy trees") {
    for (const char* name : {"four_experiments"}) {
        const Instance inst = corpus(name);
        const auto graph = build_graph(inst);
        const auto table = value_recursion(graph, inst, 3);
        for (int n = 0; n <= 3; ++n)
            for (std::size_t u = 0; u < graph.size(); ++u)
                CHECK((*table.exact_levels)[n][u] == oracle::best_tree_value(inst, graph.nodes[u], n).best);
    }
}

TEST_CASE("limit values") {
    const Instance four = corpus("four_experiments");
    const auto g4 = build_graph(four);
    const auto t4 = value_limit(g4, four);
    CHECK(t4.status == ValueStatus::Exact);
    REQUIRE(t4.v_inf_exact.has_value());
    CHECK((*t4.v_inf_exact)[0] == Rational(1));
    CHECK((*t4.v_inf_exact)[*g4.find(bin(1, 2))] == Rational(0));
    CHECK(t4.v_inf[0] == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(t4.cross_check_gap.has_value());
    CHECK(*t4.cross_check_gap <= 1e-9);

    const Instance f1 = corpus("triangle_f1");
    const auto gf1 = build_graph(f1);
    CHECK(value_limit(gf1, f1).v_inf[0] == 0.0);
    const Instance a1 = with_prior(f1, triangle_levels(12)[1][0]);
    const auto ga1 = build_graph(a1);
    CHECK((*value_limit(ga1, a1).v_inf_exact)[0] == Rational(1));
    CHECK((*value_recursion(ga1, a1, 1).exact_levels)[1][0] == Rational(1));

    const Instance f2 = corpus("triangle_f2");
    const auto gf2 = build_graph(f2);
    const auto tf2 = value_limit(gf2, f2);
    const long i = f2.generators[1].resolution;
    const Rational big = Rational(1) * pow2(2 * (i - 1));
    CHECK((*tf2.v_inf_exact)[0] == big / (Rational(1) + big));

    const Instance trivial = load_instance(kTrivialOnly);
    const auto gt = build_graph(trivial);
    CHECK(value_limit(gt, trivial).v_inf[0] == 3.0);
}

TEST_CASE("entropy instance carries an a-priori bound") {
    const Instance inst = corpus("entropy_halving");
    const auto graph = build_graph(inst);
    const auto table = value_limit(graph, inst);
    CHECK_FALSE(table.v_inf_exact.has_value());
    CHECK(table.apriori_error.has_value());
    for (std::size_t n = 0; n + 1 < table.levels.size(); ++n) CHECK(table.levels[n][0] <= table.levels[n + 1][0]);
}

TEST_CASE("exact solve agrees with the limit table") {
    const Instance inst = corpus("four_experiments");
    const auto graph = build_graph(inst);
    std::vector<Rational> v;
    for (const auto& p : graph.nodes) v.push_back(*eval_v_exact(inst, p));
    const auto solved = solve_exact(graph, v);
    CHECK(solved.value == *value_limit(graph, inst).v_inf_exact);
    CHECK(graph.edges[0][solved.policy[0]].label == "e1");
}

TEST_CASE("certificates") {
    const Instance inst = corpus("four_experiments");
    const auto graph = build_graph(inst);
    const auto table = value_limit(graph, inst, {});

    CHECK(check_certificate(std::vector<double>(graph.size(), 1.0), graph, inst).passed);
    CHECK(check_certificate(table.v_inf, graph, inst).passed);

    const auto v1 = value_recursion(graph, inst, 1).levels[1];
    const auto bad = check_certificate(v1, graph, inst);
    CHECK_FALSE(bad.passed);
    REQUIRE_FALSE(bad.violations.empty());
    CHECK(bad.violations[0].kind == "superharmonic");
    CHECK(bad.violations[0].node == 0);
    CHECK(bad.violations[0].edge == "e1");
    CHECK(bad.violations[0].lhs == doctest::Approx(2.0 / 3));
    CHECK(bad.violations[0].rhs == doctest::Approx(0.5 + 0.5 * 2.0 / 3));

    const auto low = check_certificate(std::vector<double>(graph.size(), 0.0), graph, inst);
    CHECK_FALSE(low.passed);
    CHECK(low.violations[0].kind == "dominance");
    CHECK_THROWS_AS(check_certificate({1.0}, graph, inst), StructuralError);
}

TEST_CASE("finite steps") {
    const Instance inst = corpus("four_experiments");
    const auto graph = build_graph(inst);
    const auto table = value_limit(graph, inst);
    const auto three = finite_steps_sufficient(graph, table, 3);
    CHECK_FALSE(three.sufficient);
    CHECK(three.gap == doctest::Approx(1.0 / 12));

    const Instance trivial = load_instance(kTrivialOnly);
    const auto gt = build_graph(trivial);
    const auto zero = finite_steps_sufficient(gt, value_limit(gt, trivial), 0);
    CHECK(zero.sufficient);
    REQUIRE(zero.certificate.has_value());
    CHECK((*zero.certificate)[0] == 3.0);

    const Instance a1 = with_prior(corpus("triangle_f1"), triangle_levels(12)[1][0]);
    const auto ga1 = build_graph(a1);
    CHECK(finite_steps_sufficient(ga1, value_limit(ga1, a1), 1).sufficient);
}

TEST_CASE("bilinear certificates") {
    const char* reveal_x =
        R"([{"label": "x", "atoms": [{"w": "1/2", "p": ["1/2", "1/2", "0", "0"]}, {"w": "1/2", "p": ["0", "0", "1/2", "1/2"]}]}])";
    const Instance zero = product_instance(
        R"({"kind": "finite_action", "actions": ["a"], "receiver": [[0], [0], [0], [0]], "sender": [[0], [0], [0], [0]]})",
        reveal_x);
    const auto z = bilinear_certificate(zero, build_graph(zero));
    CHECK_FALSE(z.refused);
    CHECK(z.bound == Rational(0));

    const Instance corners = product_instance(
        R"({"kind": "point_indicator", "points": [["1","0","0","0"], ["0","1","0","0"], ["0","0","1","0"], ["0","0","0","1"]], "hi": "1", "lo": "0"})",
        reveal_x);
    const auto c = bilinear_certificate(corners, build_graph(corners), 2);
    std::vector<std::array<double, 3>> pts;
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j) pts.push_back({i / 2.0, j / 2.0, (i % 2 == 0 && j % 2 == 0) ? 1.0 : 0.0});
    CHECK(c.bound.to_double() == doctest::Approx(bilinear_brute_force(pts)));
    CHECK(c.bound == Rational(1));

    const Instance caveat = load_instance_file(std::string(TEST_DATA_DIR) + "/bilinear_caveat.json");
    const auto gc = build_graph(caveat);
    const auto bc = bilinear_certificate(caveat, gc);
    REQUIRE_FALSE(bc.refused);
    const auto tc = value_limit(gc, caveat);
    CHECK((*tc.v_inf_exact)[0] == Rational(0));
    CHECK(bc.bound > Rational(0));
    std::vector<std::array<double, 3>> cpts;
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j) cpts.push_back({i / 2.0, j / 2.0, (i == 2 && j == 2) ? 1.0 : 0.0});
    CHECK(bilinear_certificate(caveat, gc, 2).bound.to_double() == doctest::Approx(bilinear_brute_force(cpts)));

    const Instance four = corpus("four_experiments");
    CHECK(bilinear_certificate(four, build_graph(four)).refused);
    const Instance diagonal = product_instance(
        R"({"kind": "point_indicator", "points": [["0","0","0","1"]], "hi": "1", "lo": "0"})",
        R"([{"label": "both", "atoms": [{"w": "1/2", "p": ["1/2", "0", "0", "1/2"]}, {"w": "1/2", "p": ["0", "1/2", "1/2", "0"]}]}])");
    const auto refused = bilinear_certificate(diagonal, build_graph(diagonal));
    CHECK(refused.refused);
}

TEST_CASE("finite-step convergence bound") {
    const Instance inst = corpus("four_experiments");
    const auto graph = build_graph(inst);
    const auto table = value_limit(graph, inst);
    for (int k = 1; k <= 8; ++k) {
        const auto chk = convergence_bound(pow2(-k), k, inst, table);
        REQUIRE(chk.exact_slack.has_value());
        CHECK(*chk.exact_slack == pow2(-k) * Rational(1, 3));
    }
    CHECK(convergence_bound(Rational(1), 0, inst, table).slack >= 0.0);

    const Instance trivial = load_instance(kTrivialOnly);
    const auto gt = build_graph(trivial);
    const auto tt = value_limit(gt, trivial);
    const auto chk = convergence_bound(Rational(1, 10), 0, trivial, tt);
    CHECK(chk.slack == doctest::Approx(0.1 * 2.0));
}
