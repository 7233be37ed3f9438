#include "persuasion/structure.hpp"

#include "persuasion/errors.hpp"
#include "persuasion/lp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

namespace persuasion {

namespace {

void compositions(int remaining, std::size_t dim, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (cur.size() + 1 == dim) {
        cur.push_back(remaining);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= remaining; ++k) {
        cur.push_back(k);
        compositions(remaining - k, dim, cur, out);
        cur.pop_back();
    }
}

Rational utility_rational(const Instance& inst, const Belief& q) {
    const auto ex = eval_v_exact(inst, q);
    return ex ? *ex : Rational::from_double(eval_v(inst, q));
}

Rational dot(const std::vector<Rational>& y, const Belief& q) {
    Rational s;
    for (std::size_t i = 0; i < q.dim(); ++i) s += y[i] * q[i];
    return s;
}

// Memoryless policy given one edge per node; nontrivial edges form D.
MarkovPolicy policy_from_edges(const BeliefGraph& graph, const std::vector<std::size_t>& edge) {
    std::map<Belief, Experiment> rho;
    std::vector<Belief> Z;
    std::vector<bool> seen(graph.size(), false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        const Edge& e = graph.edges[u][edge[u]];
        if (e.trivial) {
            Z.push_back(graph.nodes[u]);
            continue;
        }
        rho.emplace(graph.nodes[u], e.experiment);
        for (std::size_t t : e.targets)
            if (!seen[t]) seen[t] = true, queue.push_back(t);
    }
    return MarkovPolicy(graph.nodes[0], std::move(rho), std::move(Z));
}

// First n with Pr[terminated in O by n] >= 1 - eps under the indicator utility.
int steps_for(const MarkovPolicy& policy, const Instance& indicator, double eps, int cap = 100'000) {
    const auto curve = termination_curve(policy, indicator, cap, 1e-15);
    for (std::size_t n = 0; n < curve.utility.size(); ++n)
        if (curve.utility[n] >= 1.0 - eps) return static_cast<int>(n);
    return -1;
}

std::map<Belief, LabeledExperiment> labeled_rho(const BeliefGraph& graph, const MarkovPolicy& policy) {
    std::map<Belief, LabeledExperiment> out;
    for (const auto& [p, e] : policy.rho()) {
        const auto idx = graph.find(p);
        std::string label;
        if (idx)
            for (const auto& edge : graph.edges[*idx])
                if (edge.experiment == e) label = edge.label;
        out.emplace(p, LabeledExperiment{label, e});
    }
    return out;
}

std::string value_text(const ValueTable& t, double v) {
    return t.v_inf_exact ? (*t.v_inf_exact)[0].str() : std::to_string(v);
}

} // namespace

std::vector<Belief> special_beliefs(const Instance& inst) {
    std::vector<Belief> out;
    const auto& u = inst.utility;
    switch (u.kind) {
    case UtilitySpec::Kind::PointIndicator:
        out = u.points;
        break;
    case UtilitySpec::Kind::Builtin:
        if (u.name == "binary_two_abs_dist_half") out.push_back(Belief::binary(Rational(1, 2)));
        break;
    case UtilitySpec::Kind::FiniteAction:
        if (inst.dim() == 2) {
            // Receiver indifference points between every pair of actions.
            for (std::size_t a = 0; a < u.actions.size(); ++a)
                for (std::size_t b = a + 1; b < u.actions.size(); ++b) {
                    const Rational d0 = Rational::from_double(u.receiver[0][a] - u.receiver[0][b]);
                    const Rational d1 = Rational::from_double(u.receiver[1][a] - u.receiver[1][b]);
                    if (d0 == d1) continue;
                    const Rational t = d1 / (d1 - d0);
                    if (t.sign() > 0 && t < Rational(1)) out.push_back(Belief::binary(t));
                }
        }
        break;
    }
    return out;
}

ConcaveClosureResult concave_closure(const Instance& inst, const Belief& mu, int grid_resolution,
                                     const std::vector<Belief>& extra, double value_eps) {
    if (grid_resolution < 1) throw StructuralError("grid resolution must be at least 1");
    const std::size_t dim = inst.dim();
    if (mu.dim() != dim) throw StructuralError("belief dimension differs from the instance");
    ConcaveClosureResult res;
    res.grid_resolution = grid_resolution;
    res.breakpoint_mode = dim == 2;
    res.exact = dim == 2 || inst.utility.kind == UtilitySpec::Kind::PointIndicator;

    std::set<Belief> seen;
    auto add = [&](const Belief& b) {
        if (seen.insert(b).second) res.candidates.push_back(b);
    };
    for (std::size_t i = 0; i < dim; ++i) add(Belief::vertex(dim, i));
    for (const auto& b : special_beliefs(inst)) add(b);
    add(mu);
    for (const auto& b : extra) add(b);
    if (!res.breakpoint_mode) {
        std::vector<std::vector<int>> comps;
        std::vector<int> cur;
        compositions(grid_resolution, dim, cur, comps);
        for (const auto& c : comps) {
            std::vector<Rational> coords;
            for (int k : c) coords.emplace_back(k, grid_resolution);
            add(Belief(std::move(coords)));
        }
        if (!res.exact) res.warnings.push_back("utility kinks may lie off the grid; value is grid-relative");
    }

    const std::size_t m = res.candidates.size();
    std::vector<std::vector<Rational>> A(dim, std::vector<Rational>(m));
    std::vector<Rational> c(m);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < dim; ++i) A[i][k] = res.candidates[k][i];
        c[k] = utility_rational(inst, res.candidates[k]);
    }
    std::vector<Rational> b(mu.coords().begin(), mu.coords().end());
    const auto lpres = lp::maximize(A, b, c);
    if (lpres.status != lp::Status::Optimal) throw InternalConsistencyError("concave closure program has no optimum");

    res.affine = lpres.dual;
    const Rational v_mu = utility_rational(inst, mu);
    if (v_mu >= lpres.objective) {
        res.spread = Experiment::trivial(mu);
        res.exact_value = v_mu;
    } else {
        std::vector<Atom> atoms;
        for (std::size_t k = 0; k < m; ++k)
            if (lpres.x[k].sign() > 0) atoms.push_back(Atom{lpres.x[k], res.candidates[k]});
        res.spread = Experiment(std::move(atoms));
        res.exact_value = lpres.objective;
    }
    res.value = res.exact_value->to_double();
    if (!res.exact) res.exact_value.reset();

    for (std::size_t k = 0; k < m; ++k)
        if ((dot(res.affine, res.candidates[k]) - c[k]).to_double() <= value_eps) res.contact.push_back(res.candidates[k]);
    std::vector<std::vector<Rational>> H(dim, std::vector<Rational>(res.contact.size()));
    for (std::size_t k = 0; k < res.contact.size(); ++k)
        for (std::size_t i = 0; i < dim; ++i) H[i][k] = res.contact[k][i];
    res.contact_hull_ok = !res.contact.empty() && lp::feasible(H, b);
    if (!res.contact_hull_ok) res.warnings.push_back("prior is not in the convex hull of the contact set");
    for (const auto& a : res.spread.atoms())
        if (std::find(res.contact.begin(), res.contact.end(), a.belief) == res.contact.end())
            res.warnings.push_back("spread atom " + a.belief.str() + " lies off the contact set");
    return res;
}

std::vector<Belief> contact_set_O(const Instance& inst, const Belief& mu, int grid_resolution,
                                  const std::vector<Belief>& extra, double value_eps) {
    return concave_closure(inst, mu, grid_resolution, extra, value_eps).contact;
}

Instance indicator_instance(const Instance& inst, const std::vector<Belief>& O) {
    Instance out = inst;
    out.utility = UtilitySpec{};
    out.utility.kind = UtilitySpec::Kind::PointIndicator;
    out.utility.points = O;
    out.utility.hi = Rational(1);
    out.utility.lo = Rational(0);
    out.v_bounds.reset();
    out.assume_positive = false;
    return out;
}

Attractor almost_sure_reach(const BeliefGraph& graph, const std::vector<bool>& target,
                            const std::function<bool(std::size_t, std::size_t)>& allowed) {
    const std::size_t n = graph.size();
    Attractor att;
    att.win.assign(n, true);
    for (;;) {
        att.rank.assign(n, -1);
        att.choice.assign(n, std::nullopt);
        for (std::size_t u = 0; u < n; ++u)
            if (target[u] && att.win[u]) att.rank[u] = 0;
        for (int layer = 1;; ++layer) {
            bool changed = false;
            for (std::size_t u = 0; u < n; ++u) {
                if (!att.win[u] || att.rank[u] >= 0) continue;
                for (std::size_t k = 0; k < graph.edges[u].size(); ++k) {
                    const Edge& e = graph.edges[u][k];
                    if (e.trivial || !allowed(u, k)) continue;
                    bool inside = true, closer = false;
                    for (std::size_t t : e.targets) {
                        inside = inside && att.win[t];
                        closer = closer || (att.rank[t] >= 0 && att.rank[t] < layer);
                    }
                    if (inside && closer) {
                        att.rank[u] = layer;
                        att.choice[u] = k;
                        changed = true;
                        break;
                    }
                }
            }
            if (!changed) break;
        }
        bool shrunk = false;
        for (std::size_t u = 0; u < n; ++u)
            if (att.win[u] && att.rank[u] < 0) att.win[u] = false, shrunk = true;
        if (!shrunk) return att;
    }
}

MarkovPolicy policy_from_choice(const BeliefGraph& graph, const std::vector<bool>& target,
                                const std::vector<std::optional<std::size_t>>& choice) {
    std::vector<std::size_t> edge(graph.size());
    for (std::size_t u = 0; u < graph.size(); ++u) {
        if (target[u] || !choice[u]) edge[u] = graph.edges[u].size() - 1;
        else edge[u] = *choice[u];
    }
    auto policy = policy_from_edges(graph, edge);
    for (const auto& z : policy.Z()) {
        const auto idx = graph.find(z);
        if (!idx || !target[*idx]) throw InconsistencyError("policy stops at " + z.str() + " outside the target set");
    }
    return policy;
}

ImplementabilityReport is_implementable(const Instance& inst, const std::vector<Belief>& O, double eps,
                                        const AnalysisOptions& opt) {
    ImplementabilityReport rep;
    rep.eps = eps;
    std::vector<double> grid = opt.eps_grid;
    if (std::find(grid.begin(), grid.end(), eps) == grid.end()) grid.push_back(eps);
    for (double e : grid) rep.eps_table.push_back(EpsWitness{e, false, "", 0.0, -1});

    const Instance indicator = indicator_instance(inst, O);
    const BeliefGraph graph = build_graph(inst, opt.limits);
    std::vector<bool> target(graph.size(), false);
    for (const auto& o : O) {
        if (o.dim() != inst.dim()) throw ValidationError("/O", "belief " + o.str() + " has the wrong dimension");
        if (const auto idx = graph.find(o)) target[*idx] = true;
        else rep.outside_graph.push_back(o);
    }

    auto accept = [&](const MarkovPolicy& policy, const Instance& ind, const std::string& resolution, double prob,
                      const BeliefGraph& g, EpsWitness& w) {
        w.met = true;
        w.resolution = resolution;
        w.probability = prob;
        w.n = steps_for(policy, ind, w.eps);
        if (w.eps == eps) {
            rep.witness = policy;
            rep.n = w.n;
            rep.D = policy.D();
            rep.F_D = labeled_rho(g, policy);
        }
    };

    if (target[0]) {
        rep.implementable = true;
        rep.basis = "prior in O";
        MarkovPolicy stay(graph.nodes[0], {}, {graph.nodes[0]});
        for (auto& w : rep.eps_table) accept(stay, indicator, graph.resolution, 1.0, graph, w);
        return rep;
    }

    const auto all = [](std::size_t, std::size_t) { return true; };
    const Attractor att = almost_sure_reach(graph, target, all);
    if (att.win[0]) {
        rep.implementable = true;
        rep.basis = "finite graph";
        const auto policy = policy_from_choice(graph, target, att.choice);
        for (auto& w : rep.eps_table) accept(policy, indicator, graph.resolution, 1.0, graph, w);
        return rep;
    }
    if (inst.generators.empty()) {
        rep.basis = "finite graph";
        rep.obstruction = "iterated pruning removes the prior: no feasible play reaches O with probability one" +
                          std::string(graph.truncated ? " (graph truncated)" : "");
        return rep;
    }

    rep.basis = "refinement";
    for (int r = 0; r <= opt.refinement_cap; ++r) {
        const Instance inst_r = refined(inst, r);
        const BeliefGraph g = r == 0 ? graph : build_graph(inst_r, opt.limits);
        if (g.truncated) {
            rep.obstruction = "graph truncated at resolution " + g.resolution;
            break;
        }
        std::vector<bool> tgt(g.size(), false);
        for (const auto& o : O)
            if (const auto idx = g.find(o)) tgt[*idx] = true;
        const Instance ind_r = indicator_instance(inst_r, O);
        const Attractor a = almost_sure_reach(g, tgt, all);
        if (a.win[0]) {
            const auto policy = policy_from_choice(g, tgt, a.choice);
            for (auto& w : rep.eps_table)
                if (!w.met) accept(policy, ind_r, g.resolution, 1.0, g, w);
            break;
        }
        std::vector<Rational> v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) v[i] = tgt[i] ? Rational(1) : Rational(0);
        const auto solved = solve_exact(g, v);
        const double prob = solved.value[0].to_double();
        const Rational pexact = solved.value[0];
        std::optional<MarkovPolicy> policy;
        for (auto& w : rep.eps_table) {
            if (w.met || !(pexact > Rational(1) - Rational::from_double(w.eps))) continue;
            if (!policy) policy = policy_from_edges(g, solved.policy);
            accept(*policy, ind_r, g.resolution, prob, g, w);
        }
        if (std::all_of(rep.eps_table.begin(), rep.eps_table.end(), [](const EpsWitness& w) { return w.met; })) break;
    }
    rep.implementable = std::all_of(rep.eps_table.begin(), rep.eps_table.end(), [](const EpsWitness& w) { return w.met; });
    if (!rep.implementable && rep.obstruction.empty())
        rep.obstruction = "no refinement up to " + std::to_string(opt.refinement_cap) +
                          " steps reaches O with the requested probabilities";
    return rep;
}

std::optional<DFD> find_D_FD(const BeliefGraph& graph, const std::vector<Belief>& O, const std::vector<std::size_t>& order) {
    const std::size_t n = graph.size();
    std::vector<bool> inO(n, false);
    for (const auto& o : O)
        if (const auto idx = graph.find(o)) inO[*idx] = true;
    std::vector<std::size_t> scan = order;
    if (scan.empty()) {
        scan.resize(n);
        std::iota(scan.begin(), scan.end(), 0);
    }
    std::vector<bool> inD(n);
    for (std::size_t u = 0; u < n; ++u) inD[u] = !inO[u];
    auto qualifying = [&](std::size_t u) -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < graph.edges[u].size(); ++k) {
            const Edge& e = graph.edges[u][k];
            if (e.trivial) continue;
            if (std::all_of(e.targets.begin(), e.targets.end(), [&](std::size_t t) { return inD[t] || inO[t]; })) return k;
        }
        return std::nullopt;
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t u : scan)
            if (inD[u] && !qualifying(u)) inD[u] = false, changed = true;
    }
    if (!inD[0] && !inO[0]) return std::nullopt;

    DFD out;
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        if (inO[u]) continue;
        const std::size_t k = *qualifying(u);
        out.D.push_back(graph.nodes[u]);
        out.F_D.emplace(graph.nodes[u], LabeledExperiment{graph.edges[u][k].label, graph.edges[u][k].experiment});
        for (std::size_t t : graph.edges[u][k].targets)
            if (!seen[t]) seen[t] = true, queue.push_back(t);
    }
    std::sort(out.D.begin(), out.D.end());
    return out;
}

std::vector<std::vector<bool>> exact_experiments(const BeliefGraph& graph, const ValueTable& table, double value_eps) {
    if (!table.has_limit()) throw StructuralError("limit values are required");
    std::vector<std::vector<bool>> out(graph.size());
    for (std::size_t u = 0; u < graph.size(); ++u)
        for (const auto& e : graph.edges[u]) {
            if (e.trivial) {
                out[u].push_back(true);
                continue;
            }
            const auto atoms = e.experiment.atoms();
            if (table.v_inf_exact) {
                Rational s;
                for (std::size_t j = 0; j < atoms.size(); ++j) s += atoms[j].weight * (*table.v_inf_exact)[e.targets[j]];
                out[u].push_back(s == (*table.v_inf_exact)[u]);
            } else {
                double s = 0.0;
                for (std::size_t j = 0; j < atoms.size(); ++j) s += atoms[j].weight.to_double() * table.v_inf[e.targets[j]];
                out[u].push_back(std::abs(s - table.v_inf[u]) <= value_eps);
            }
        }
    return out;
}

std::vector<std::size_t> coincidence_set_N(const Instance& inst, const BeliefGraph& graph, const ValueTable& table,
                                           double value_eps) {
    if (!table.has_limit()) throw StructuralError("limit values are required");
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < graph.size(); ++u) {
        const bool in = table.v_inf_exact ? (*table.v_inf_exact)[u] == *eval_v_exact(inst, graph.nodes[u])
                                          : std::abs(table.v_inf[u] - eval_v(inst, graph.nodes[u])) <= value_eps;
        if (in) out.push_back(u);
    }
    return out;
}

std::string to_string(Existence e) {
    switch (e) {
    case Existence::Exists: return "exists";
    case Existence::DoesNotExist: return "does not exist";
    case Existence::Unknown: return "unknown";
    }
    return "unknown";
}

OptimalVerdict optimal_exists(const Instance& inst, const BeliefGraph& graph, const ValueTable& table,
                              const AnalysisOptions& opt) {
    OptimalVerdict out;
    if (graph.truncated) {
        out.verdict = Existence::Unknown;
        out.basis = "graph truncated";
        return out;
    }
    const auto exact = exact_experiments(graph, table, opt.tol.value_eps);
    std::vector<bool> inN(graph.size(), false);
    for (std::size_t u : coincidence_set_N(inst, graph, table, opt.tol.value_eps)) inN[u] = true;
    const Attractor att = almost_sure_reach(graph, inN, [&](std::size_t u, std::size_t k) { return exact[u][k]; });

    if (!inst.generators.empty()) {
        const double base = table.v_inf[0];
        out.refinement_values.emplace_back(graph.resolution, base);
        for (int r = 1; r <= opt.probe_steps; ++r) {
            const Instance inst_r = refined(inst, r);
            const BeliefGraph g = build_graph(inst_r, opt.limits);
            if (g.truncated) break;
            const ValueTable t = value_limit(g, inst_r, opt.tol);
            out.refinement_values.emplace_back(g.resolution, t.v_inf[0]);
            const bool rises = table.v_inf_exact && t.v_inf_exact ? (*t.v_inf_exact)[0] > (*table.v_inf_exact)[0]
                                                                  : t.v_inf[0] > base + opt.tol.value_eps;
            if (rises) {
                out.verdict = Existence::DoesNotExist;
                out.basis = "refinement";
                out.obstruction = "v_inf(prior) rises from " + value_text(table, base) + " at " + graph.resolution +
                                  " to " + value_text(t, t.v_inf[0]) + " at " + g.resolution +
                                  "; the supremum over the generated family is not attained at any finite resolution";
                return out;
            }
        }
    }

    if (!att.win[0]) {
        out.verdict = Existence::DoesNotExist;
        out.basis = "finite graph";
        const auto region = std::count(att.win.begin(), att.win.end(), true);
        out.obstruction = "prior lies outside the almost-sure region of N under exact experiments (region has " +
                          std::to_string(region) + " of " + std::to_string(graph.size()) + " nodes)";
        return out;
    }
    out.verdict = Existence::Exists;
    out.basis = "finite graph";
    out.policy = policy_from_choice(graph, inN, att.choice);
    out.check = verify_markov_optimal(*out.policy, inst, graph, table, opt.tol.value_eps);
    EngineOptions eo;
    eo.term_eps = opt.tol.term_eps;
    out.value = expected_utility(*out.policy, inst, eo);
    return out;
}

Theorem2Report theorem2_report(const Instance& inst, std::vector<Belief> O, const AnalysisOptions& opt) {
    Theorem2Report rep;
    const BeliefGraph graph = build_graph(inst, opt.limits);
    const ValueTable table = value_limit(graph, inst, opt.tol);
    const auto closure = concave_closure(inst, inst.prior, opt.grid_resolution, graph.nodes, opt.tol.value_eps);
    rep.closure_value = closure.value;
    rep.O = O.empty() ? closure.contact : std::move(O);

    try {
        rep.support = check_support_bound(inst);
    } catch (const AssumptionError& e) {
        rep.stamp = std::string("equivalence not guaranteed (Assumption 1 violated: ") + e.what() + ")";
    }
    rep.gap = check_entropy_gap(inst, graph.nodes, opt.tol.delta_floor);
    if (!rep.gap.delta && rep.stamp.empty()) rep.stamp = "equivalence not guaranteed (Assumption 2 violated)";

    rep.implement = is_implementable(inst, rep.O, opt.eps_grid.back(), opt);
    rep.implementable = rep.implement.implementable;
    rep.dfd = find_D_FD(graph, rep.O);
    rep.decomposition = rep.dfd.has_value();
    rep.optimal = optimal_exists(inst, graph, table, opt);
    if (rep.optimal.verdict == Existence::Exists && rep.optimal.value) {
        const auto& v = *rep.optimal.value;
        rep.attains_closure = v.lower - opt.tol.value_eps <= rep.closure_value &&
                              rep.closure_value <= v.upper + opt.tol.value_eps;
    }
    rep.agree = rep.implementable == rep.decomposition && rep.decomposition == rep.attains_closure;
    return rep;
}

std::optional<std::vector<Assumption3Row>> assumption3_witness(const std::optional<MarkovPolicy>& policy,
                                                               const std::vector<Rational>& eps_grid, int cap) {
    if (!policy) return std::nullopt;
    std::vector<Assumption3Row> rows;
    for (const auto& e : eps_grid) rows.push_back({e, std::nullopt});
    std::map<Belief, Rational> cur{{policy->prior(), Rational(1)}};
    for (int n = 0; n <= cap; ++n) {
        Rational stopped;
        for (const auto& [b, m] : cur)
            if (policy->in_Z(b)) stopped += m;
        bool pending = false;
        for (auto& row : rows) {
            if (!row.n && stopped >= Rational(1) - row.eps) row.n = n;
            pending = pending || !row.n;
        }
        if (!pending) break;
        std::map<Belief, Rational> next;
        for (const auto& [b, m] : cur) {
            const auto e = policy->choose(b);
            if (!e) {
                next[b] += m;
                continue;
            }
            for (const auto& a : e->atoms()) next[a.belief] += m * a.weight;
        }
        cur = std::move(next);
    }
    return rows;
}

std::vector<Rational> default_eps_grid() {
    std::vector<Rational> out;
    long d = 10;
    for (int k = 1; k <= 6; ++k, d *= 10) out.emplace_back(1, d);
    return out;
}

} // namespace persuasion
