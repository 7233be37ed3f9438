#include <doctest.h>

#include "persuasion/errors.hpp"
#include "persuasion/generators.hpp"
#include "persuasion/structure.hpp"

#include <algorithm>
#include <random>

using namespace persuasion;

namespace {

Instance corpus(const std::string& name) { return load_instance_file(std::string(CORPUS_DIR) + "/" + name + ".json"); }

Belief bin(long num, long den) { return Belief::binary(Rational(num, den)); }

std::vector<Belief> vertices() { return {Belief::vertex(3, 0), Belief::vertex(3, 1), Belief::vertex(3, 2)}; }

template <class T>
std::vector<T> sorted(std::vector<T> v) {
    std::sort(v.begin(), v.end());
    return v;
}

const char* kAffine = R"({"states": ["x", "y"], "prior": ["1/3", "2/3"],
  "utility": {"kind": "finite_action", "actions": ["a"], "receiver": [[0], [0]], "sender": [[0.25], [0.75]]}})";

// (i)-(iii) checked directly, exactly.
bool decomposition_sound(const Instance& inst, const DFD& dfd, const std::vector<Belief>& O) {
    const auto in = [](const std::vector<Belief>& s, const Belief& p) { return std::find(s.begin(), s.end(), p) != s.end(); };
    if (!in(dfd.D, inst.prior) && !in(O, inst.prior)) return false;
    for (const auto& p : dfd.D) {
        const auto it = dfd.F_D.find(p);
        if (it == dfd.F_D.end() || is_trivial(it->second.experiment)) return false;
        if (expectation(it->second.experiment) != p) return false;
        const auto feas = feasible_at(inst, p);
        if (std::find(feas.begin(), feas.end(), it->second.experiment) == feas.end()) return false;
        for (const auto& a : it->second.experiment.atoms())
            if (!in(dfd.D, a.belief) && !in(O, a.belief)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("concave closure") {
    const Instance four = corpus("four_experiments");
    const auto bin_cl = concave_closure(four, bin(1, 3), 12);
    REQUIRE(bin_cl.exact_value.has_value());
    CHECK(*bin_cl.exact_value == Rational(1));
    CHECK(bin_cl.breakpoint_mode);
    CHECK(bin_cl.spread.size() == 2);
    CHECK(bin_cl.spread.weight_of(bin(0, 1)) == Rational(2, 3));
    CHECK(bin_cl.spread.weight_of(bin(1, 1)) == Rational(1, 3));
    Rational f_mu;
    for (std::size_t w = 0; w < 2; ++w) f_mu += bin_cl.affine[w] * bin(1, 3)[w];
    CHECK(f_mu == Rational(1));

    const Instance tri = corpus("triangle_f1");
    const auto tri_cl = concave_closure(tri, Belief::uniform(3), 12);
    CHECK(tri_cl.value == 1.0);
    CHECK(tri_cl.spread.size() == 3);
    for (const auto& a : tri_cl.spread.atoms()) CHECK(a.weight == Rational(1, 3));
    CHECK(sorted(support(tri_cl.spread)) == sorted(vertices()));
    CHECK(tri_cl.contact_hull_ok);

    const Instance affine = load_instance(kAffine);
    const auto aff = concave_closure(affine, affine.prior, 12);
    CHECK(aff.value == doctest::Approx(eval_v(affine, affine.prior)));
    CHECK(is_trivial(aff.spread));
}

TEST_CASE("closure dominates utility on every candidate") {
    for (const char* name : {"four_experiments", "triangle_f1", "entropy_halving"}) {
        const Instance inst = corpus(name);
        const auto cl = concave_closure(inst, inst.prior, 8);
        CHECK(expectation(cl.spread) == inst.prior);
        for (const auto& q : cl.candidates) {
            Rational f;
            for (std::size_t w = 0; w < q.dim(); ++w) f += cl.affine[w] * q[w];
            CHECK(f.to_double() >= eval_v(inst, q) - 1e-9);
        }
    }
}

TEST_CASE("contact set") {
    CHECK(sorted(contact_set_O(corpus("triangle_f1"), Belief::uniform(3), 12)) == sorted(vertices()));
    const Instance four = corpus("four_experiments");
    CHECK(sorted(contact_set_O(four, bin(1, 3), 12)) == sorted(std::vector<Belief>{bin(0, 1), bin(1, 1)}));
    const Instance affine = load_instance(kAffine);
    const auto cl = concave_closure(affine, affine.prior, 12);
    CHECK(sorted(cl.contact) == sorted(cl.candidates));
}

TEST_CASE("implementability") {
    const Instance four = corpus("four_experiments");
    const auto rep = is_implementable(four, {bin(0, 1), bin(1, 1)}, 1e-3);
    CHECK(rep.implementable);
    REQUIRE(rep.witness.has_value());
    CHECK(rep.witness->rho().size() == 2);
    CHECK(rep.witness->rho().at(bin(1, 3)) == four.experiments[0].experiment);
    CHECK(rep.witness->rho().at(bin(2, 3)) == four.experiments[2].experiment);
    int expected_n = 0;
    while (std::ldexp(1.0, -expected_n) > 1e-3) ++expected_n;
    CHECK(rep.n == expected_n);
    CHECK(sorted(rep.D) == sorted(std::vector<Belief>{bin(1, 3), bin(2, 3)}));

    const Instance tri = corpus("triangle_f1");
    const auto no = is_implementable(tri, vertices(), 1e-3);
    CHECK_FALSE(no.implementable);
    CHECK_FALSE(no.obstruction.empty());

    const auto self = is_implementable(four, {four.prior}, 1e-3);
    CHECK(self.implementable);
    CHECK(self.n == 0);
    CHECK(self.basis == "prior in O");
}

TEST_CASE("implementability needs refinement on the W-spread prefix") {
    const Instance f2 = corpus("triangle_f2");
    const auto rep = is_implementable(f2, vertices(), 1e-2);
    CHECK(rep.implementable);
    CHECK(rep.basis == "refinement");
    for (const auto& row : rep.eps_table) CHECK(row.met);
}

TEST_CASE("D and F_D") {
    const Instance four = corpus("four_experiments");
    const auto graph = build_graph(four);
    const std::vector<Belief> O{bin(0, 1), bin(1, 1)};
    const auto dfd = find_D_FD(graph, O);
    REQUIRE(dfd.has_value());
    CHECK(dfd->D == sorted(std::vector<Belief>{bin(1, 3), bin(2, 3)}));
    CHECK(dfd->F_D.at(bin(1, 3)).label == "e1");
    CHECK(dfd->F_D.at(bin(2, 3)).label == "e3");
    CHECK(decomposition_sound(four, *dfd, O));

    const auto none = find_D_FD(graph, {four.prior});
    REQUIRE(none.has_value());
    CHECK(none->D.empty());

    const Instance deep = with_prior(corpus("triangle_f1"), triangle_levels(12)[5][2]);
    const auto gd = build_graph(deep);
    const auto ladder = find_D_FD(gd, vertices());
    REQUIRE(ladder.has_value());
    CHECK(ladder->D.size() == gd.size() - 3);
    CHECK(decomposition_sound(deep, *ladder, vertices()));

    CHECK_FALSE(find_D_FD(build_graph(corpus("triangle_f1")), vertices()).has_value());
}

TEST_CASE("pruning does not depend on the scan order") {
    std::mt19937_64 rng(17);
    const std::vector<Instance> cases{corpus("four_experiments"), corpus("triangle_f2"),
                                      with_prior(corpus("triangle_f1"), triangle_levels(12)[7][3])};
    for (const auto& inst : cases) {
        const auto graph = build_graph(inst);
        const auto O = inst.dim() == 3 ? vertices() : std::vector<Belief>{bin(0, 1), bin(1, 1)};
        const auto base = find_D_FD(graph, O);
        std::vector<std::size_t> order(graph.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int trial = 0; trial < 20; ++trial) {
            std::shuffle(order.begin(), order.end(), rng);
            const auto again = find_D_FD(graph, O, order);
            REQUIRE(again.has_value() == base.has_value());
            if (base) CHECK(again->D == base->D);
        }
    }
}

TEST_CASE("exact experiments and the coincidence set") {
    const Instance four = corpus("four_experiments");
    const auto graph = build_graph(four);
    const auto table = value_limit(graph, four);
    const auto exact = exact_experiments(graph, table);
    for (std::size_t u = 0; u < graph.size(); ++u)
        for (std::size_t k = 0; k < graph.edges[u].size(); ++k) {
            const auto& e = graph.edges[u][k];
            CHECK(exact[u][k] == (e.trivial || e.label == "e1" || e.label == "e3"));
        }
    std::vector<Belief> N;
    for (auto u : coincidence_set_N(four, graph, table)) N.push_back(graph.nodes[u]);
    CHECK(sorted(N) == sorted(std::vector<Belief>{bin(0, 1), bin(1, 2), bin(1, 1)}));

    const Instance trivial = load_instance(kAffine);
    const auto gt = build_graph(trivial);
    CHECK(coincidence_set_N(trivial, gt, value_limit(gt, trivial)).size() == gt.size());

    const Instance a1 = with_prior(corpus("triangle_f1"), triangle_levels(12)[1][0]);
    const auto ga = build_graph(a1);
    std::vector<Belief> Na;
    for (auto u : coincidence_set_N(a1, ga, value_limit(ga, a1))) Na.push_back(ga.nodes[u]);
    for (const auto& v : vertices())
        if (ga.find(v)) CHECK(std::find(Na.begin(), Na.end(), v) != Na.end());
}

TEST_CASE("existence of an optimal strategy") {
    const Instance four = corpus("four_experiments");
    const auto graph = build_graph(four);
    const auto table = value_limit(graph, four);
    const auto yes = optimal_exists(four, graph, table);
    CHECK(yes.verdict == Existence::Exists);
    REQUIRE(yes.policy.has_value());
    CHECK(yes.policy->rho().at(bin(1, 3)) == four.experiments[0].experiment);
    CHECK(yes.policy->rho().at(bin(2, 3)) == four.experiments[2].experiment);
    CHECK(sorted(yes.policy->Z()) == sorted(std::vector<Belief>{bin(0, 1), bin(1, 1)}));
    REQUIRE(yes.check.has_value());
    CHECK(yes.check->ok());
    REQUIRE(yes.value.has_value());
    CHECK(yes.value->lower <= table.v_inf[0] + 1e-9);
    CHECK(yes.value->upper >= table.v_inf[0] - 1e-9);

    for (const char* name : {"entropy_halving", "triangle_f2"}) {
        const Instance inst = corpus(name);
        const auto g = build_graph(inst);
        const auto verdict = optimal_exists(inst, g, value_limit(g, inst));
        CHECK(verdict.verdict == Existence::DoesNotExist);
        CHECK_FALSE(verdict.policy.has_value());
        CHECK_FALSE(verdict.obstruction.empty());
    }

    const auto cut = build_graph(four, {64, 2});
    CHECK(optimal_exists(four, cut, value_limit(cut, four)).verdict == Existence::Unknown);
}

TEST_CASE("three-way equivalence report") {
    const auto four = theorem2_report(corpus("four_experiments"));
    CHECK(four.implementable);
    CHECK(four.decomposition);
    CHECK(four.attains_closure);
    CHECK(four.agree);
    CHECK(four.stamp.empty());

    const auto f1 = theorem2_report(corpus("triangle_f1"));
    CHECK(sorted(f1.O) == sorted(vertices()));
    CHECK_FALSE(f1.implementable);
    CHECK_FALSE(f1.decomposition);
    CHECK_FALSE(f1.attains_closure);
    CHECK(f1.agree);

    // The four-step prefix still has a gap of about 5e-5; the stamp appears
    // once the floor sits above it.
    const Instance f2 = corpus("triangle_f2");
    const auto plain = theorem2_report(f2);
    CHECK(plain.implementable);
    CHECK_FALSE(plain.attains_closure);
    REQUIRE(plain.gap.delta.has_value());
    CHECK(plain.stamp.empty());
    AnalysisOptions strict;
    strict.tol.delta_floor = 1e-4;
    const auto stamped = theorem2_report(f2, {}, strict);
    CHECK(stamped.implementable);
    CHECK_FALSE(stamped.attains_closure);
    CHECK(stamped.stamp.find("Assumption 2 violated") != std::string::npos);
}

TEST_CASE("termination witness table") {
    const Instance four = corpus("four_experiments");
    const auto graph = build_graph(four);
    const auto verdict = optimal_exists(four, graph, value_limit(graph, four));
    const auto grid = default_eps_grid();
    REQUIRE(grid.size() == 6);
    const auto rows = assumption3_witness(verdict.policy, grid);
    REQUIRE(rows.has_value());
    for (const auto& row : *rows) {
        int n = 0;
        while (pow2(-n) > row.eps) ++n;
        REQUIRE(row.n.has_value());
        CHECK(*row.n == n);
    }

    const MarkovPolicy stay(four.prior, {}, {four.prior});
    for (const auto& row : *assumption3_witness(stay, grid)) CHECK(row.n == 0);

    const Instance ent = corpus("entropy_halving");
    const auto ge = build_graph(ent);
    CHECK_FALSE(assumption3_witness(optimal_exists(ent, ge, value_limit(ge, ent)).policy, grid).has_value());
}

TEST_CASE("almost-sure reachability by pruning") {
    const Instance four = corpus("four_experiments");
    const auto graph = build_graph(four);
    std::vector<bool> target(graph.size(), false);
    target[*graph.find(bin(0, 1))] = target[*graph.find(bin(1, 1))] = true;
    const auto all = almost_sure_reach(graph, target, [](std::size_t, std::size_t) { return true; });
    CHECK(all.win[0]);
    CHECK_FALSE(all.win[*graph.find(bin(1, 2))]);
    const auto policy = policy_from_choice(graph, target, all.choice);
    CHECK(policy.rho().at(bin(1, 3)) == four.experiments[0].experiment);

    // Without e1 the prior can only gamble through 1/2.
    const auto no_e1 = almost_sure_reach(graph, target, [&](std::size_t u, std::size_t k) {
        return graph.edges[u][k].label != "e1";
    });
    CHECK_FALSE(no_e1.win[0]);
}
