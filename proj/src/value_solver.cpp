#include "persuasion/value_solver.hpp"

#include "persuasion/errors.hpp"
#include "persuasion/lp.hpp"
#include "persuasion/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace persuasion {

std::optional<std::size_t> BeliefGraph::find(const Belief& p) const {
    const auto it = index.find(p);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::string to_string(ValueStatus s) {
    switch (s) {
    case ValueStatus::Exact: return "exact";
    case ValueStatus::Certified: return "certified";
    case ValueStatus::HeuristicFixedPoint: return "heuristic fixed point";
    case ValueStatus::LowerBoundOnly: return "lower bound only (truncated graph)";
    }
    return "unknown";
}

BeliefGraph build_graph(const Instance& inst, GraphLimits limits) {
    if (limits.depth_limit < 0 || limits.node_limit < 1) throw StructuralError("graph limits must be positive");
    BeliefGraph g;
    for (const auto& gen : inst.generators)
        g.resolution += (g.resolution.empty() ? "" : ",") + gen.kind + "=" + std::to_string(gen.resolution);
    auto add = [&](const Belief& b, int depth) {
        g.index.emplace(b, g.nodes.size());
        g.nodes.push_back(b);
        g.edges.emplace_back();
        g.depth.push_back(depth);
        return g.nodes.size() - 1;
    };
    add(inst.prior, 0);
    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        const Belief here = g.nodes[u];
        for (auto& le : feasible_edges(inst, here)) {
            Edge edge{le.label, le.experiment, {}, is_trivial(le.experiment)};
            if (edge.trivial) {
                edge.targets = {u};
                g.edges[u].push_back(std::move(edge));
                continue;
            }
            std::size_t fresh = 0;
            for (const auto& a : edge.experiment.atoms())
                if (!g.index.count(a.belief)) ++fresh;
            if (fresh > 0 && (g.depth[u] + 1 > limits.depth_limit || g.nodes.size() + fresh > limits.node_limit)) {
                g.truncated = true;
                continue;
            }
            for (const auto& a : edge.experiment.atoms()) {
                auto idx = g.find(a.belief);
                if (!idx) {
                    idx = add(a.belief, g.depth[u] + 1);
                    queue.push_back(*idx);
                }
                edge.targets.push_back(*idx);
            }
            g.edges[u].push_back(std::move(edge));
        }
    }
    return g;
}

namespace {

std::vector<double> utility_vector(const BeliefGraph& g, const Instance& inst) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = eval_v(inst, g.nodes[i]);
    return v;
}

std::vector<Rational> exact_utility_vector(const BeliefGraph& g, const Instance& inst) {
    std::vector<Rational> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = *eval_v_exact(inst, g.nodes[i]);
    return v;
}

double edge_mean(const Edge& e, const std::vector<double>& x) {
    double s = 0.0;
    const auto atoms = e.experiment.atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j) s += atoms[j].weight.to_double() * x[e.targets[j]];
    return s;
}

Rational edge_mean(const Edge& e, const std::vector<Rational>& x) {
    Rational s;
    const auto atoms = e.experiment.atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j) s += atoms[j].weight * x[e.targets[j]];
    return s;
}

// One step of the recursion. Ties keep the first edge in list order.
template <class T>
void bellman(const BeliefGraph& g, const std::vector<T>& prev, std::vector<T>& next, std::vector<std::size_t>& arg) {
    next.assign(g.size(), T{});
    arg.assign(g.size(), 0);
    parallel_for(g.size(), [&](std::size_t u) {
        const auto& edges = g.edges[u];
        std::size_t best_idx = 0;
        T best = edge_mean(edges[0], prev);
        for (std::size_t k = 1; k < edges.size(); ++k) {
            T s = edge_mean(edges[k], prev);
            if (s > best) best = std::move(s), best_idx = k;
        }
        next[u] = std::move(best);
        arg[u] = best_idx;
    });
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

constexpr int kExactLevelCap = 64;
constexpr int kIterationCap = 200'000;

} // namespace

ValueTable value_recursion(const BeliefGraph& graph, const Instance& inst, int n) {
    if (n < 0) throw StructuralError("number of levels must be non-negative");
    ValueTable t;
    t.truncated = graph.truncated;
    t.resolution = graph.resolution;
    t.levels.push_back(utility_vector(graph, inst));
    t.argmax.emplace_back(graph.size(), 0);
    const bool exact = has_exact_utility(inst);
    if (exact) t.exact_levels = std::vector<std::vector<Rational>>{exact_utility_vector(graph, inst)};
    for (int k = 1; k <= n; ++k) {
        std::vector<double> next;
        std::vector<std::size_t> arg;
        bellman(graph, t.levels.back(), next, arg);
        if (exact) {
            std::vector<Rational> xn;
            bellman(graph, t.exact_levels->back(), xn, arg);
            for (std::size_t i = 0; i < xn.size(); ++i) next[i] = xn[i].to_double();
            t.exact_levels->push_back(std::move(xn));
        }
        t.levels.push_back(std::move(next));
        t.argmax.push_back(std::move(arg));
    }
    t.iterations = n;
    return t;
}

ExactSolve solve_exact(const BeliefGraph& graph, const std::vector<Rational>& v) {
    const std::size_t n = graph.size();
    ExactSolve res;
    res.value = v;
    res.policy.resize(n);
    for (std::size_t u = 0; u < n; ++u) res.policy[u] = graph.edges[u].size() - 1;
    for (;;) {
        bool improved = false;
        for (std::size_t u = 0; u < n; ++u) {
            Rational best = res.value[u];
            std::optional<std::size_t> choice;
            for (std::size_t k = 0; k < graph.edges[u].size(); ++k) {
                if (graph.edges[u][k].trivial) continue;
                Rational s = edge_mean(graph.edges[u][k], res.value);
                if (s > best) best = std::move(s), choice = k;
            }
            if (choice) res.policy[u] = *choice, improved = true;
        }
        if (!improved) break;
        ++res.rounds;

        std::vector<std::size_t> slot(n, n), active;
        for (std::size_t u = 0; u < n; ++u)
            if (!graph.edges[u][res.policy[u]].trivial) slot[u] = active.size(), active.push_back(u);
        std::vector<std::vector<Rational>> M(active.size(), std::vector<Rational>(active.size()));
        std::vector<Rational> rhs(active.size());
        for (std::size_t r = 0; r < active.size(); ++r) {
            const std::size_t u = active[r];
            M[r][r] += Rational(1);
            const Edge& e = graph.edges[u][res.policy[u]];
            const auto atoms = e.experiment.atoms();
            for (std::size_t j = 0; j < atoms.size(); ++j) {
                const std::size_t t = e.targets[j];
                if (slot[t] < n) M[r][slot[t]] -= atoms[j].weight;
                else rhs[r] += atoms[j].weight * v[t];
            }
        }
        std::vector<Rational> x;
        if (!lp::solve_square(std::move(M), std::move(rhs), x))
            throw InternalConsistencyError("policy iteration produced a non-terminating policy");
        for (std::size_t u = 0; u < n; ++u) res.value[u] = slot[u] < n ? x[slot[u]] : v[u];
    }
    return res;
}

ValueTable value_limit(const BeliefGraph& graph, const Instance& inst, const Tolerances& tol) {
    ValueTable t;
    t.truncated = graph.truncated;
    t.resolution = graph.resolution;
    t.levels.push_back(utility_vector(graph, inst));
    t.argmax.emplace_back(graph.size(), 0);
    int quiet = 0;
    while (quiet < tol.fix_window && t.iterations < kIterationCap) {
        std::vector<double> next;
        std::vector<std::size_t> arg;
        bellman(graph, t.levels.back(), next, arg);
        quiet = sup_diff(next, t.levels.back()) < tol.fix_eps ? quiet + 1 : 0;
        t.levels.push_back(std::move(next));
        t.argmax.push_back(std::move(arg));
        ++t.iterations;
    }
    t.v_inf = t.levels.back();
    t.status = ValueStatus::HeuristicFixedPoint;

    if (has_exact_utility(inst)) {
        const auto v = exact_utility_vector(graph, inst);
        t.exact_levels = std::vector<std::vector<Rational>>{v};
        const int exact_n = std::min(t.iterations, kExactLevelCap);
        for (int k = 1; k <= exact_n; ++k) {
            std::vector<Rational> xn;
            std::vector<std::size_t> arg;
            bellman(graph, t.exact_levels->back(), xn, arg);
            for (std::size_t i = 0; i < xn.size(); ++i) t.levels[k][i] = xn[i].to_double();
            t.argmax[k] = std::move(arg);
            t.exact_levels->push_back(std::move(xn));
        }
        auto solved = solve_exact(graph, v);
        double gap = 0.0;
        for (std::size_t i = 0; i < graph.size(); ++i) gap = std::max(gap, std::abs(solved.value[i].to_double() - t.v_inf[i]));
        t.cross_check_gap = gap;
        for (std::size_t i = 0; i < graph.size(); ++i) t.v_inf[i] = solved.value[i].to_double();
        t.v_inf_exact = std::move(solved.value);
        t.v_inf_policy = std::move(solved.policy);
        t.status = ValueStatus::Exact;
    } else {
        std::vector<Belief> sample = graph.nodes;
        const auto gap = check_entropy_gap(inst, sample, tol.delta_floor);
        const double delta = inst.delta ? *inst.delta : gap.delta.value_or(0.0);
        if (delta > 0.0 && std::isfinite(delta)) {
            const auto [vlo, vhi] = utility_bounds(inst);
            const double scale = std::max(std::abs(vlo), std::abs(vhi));
            t.apriori_error = std::log(static_cast<double>(inst.dim())) * scale /
                              (static_cast<double>(std::max(t.iterations, 1)) * delta);
            if (*t.apriori_error <= tol.value_eps) t.status = ValueStatus::Certified;
        } else if (gap.vacuous) {
            t.apriori_error = 0.0;
            t.status = ValueStatus::Certified;
        }
    }
    if (graph.truncated) t.status = ValueStatus::LowerBoundOnly;
    return t;
}

CertificateVerdict check_certificate(const std::vector<double>& g, const BeliefGraph& graph, const Instance& inst,
                                     double value_eps) {
    if (g.size() != graph.size())
        throw StructuralError("certificate has " + std::to_string(g.size()) + " values for " +
                              std::to_string(graph.size()) + " nodes");
    CertificateVerdict verdict;
    for (std::size_t u = 0; u < graph.size(); ++u) {
        const double v = eval_v(inst, graph.nodes[u]);
        if (g[u] < v - value_eps) verdict.violations.push_back({"dominance", u, "", g[u], v});
        for (const auto& e : graph.edges[u]) {
            if (e.trivial) continue;
            const double mean = edge_mean(e, g);
            if (g[u] < mean - value_eps) verdict.violations.push_back({"superharmonic", u, e.label, g[u], mean});
        }
    }
    verdict.passed = verdict.violations.empty();
    return verdict;
}

FiniteStepsVerdict finite_steps_sufficient(const BeliefGraph& graph, const ValueTable& table, int n, double value_eps) {
    if (!table.has_limit()) throw StructuralError("limit values are required");
    if (n < 0 || static_cast<std::size_t>(n) >= table.levels.size())
        throw StructuralError("level " + std::to_string(n) + " has not been computed");
    (void)graph;
    FiniteStepsVerdict verdict;
    if (table.v_inf_exact && table.exact_levels && static_cast<std::size_t>(n) < table.exact_levels->size()) {
        const Rational gap = (*table.v_inf_exact)[0] - (*table.exact_levels)[n][0];
        verdict.gap = gap.to_double();
        verdict.sufficient = gap.is_zero();
    } else {
        verdict.gap = table.v_inf[0] - table.levels[n][0];
        verdict.sufficient = std::abs(verdict.gap) <= value_eps;
    }
    if (verdict.sufficient) verdict.certificate = table.v_inf;
    return verdict;
}

namespace {

Rational marginal_x(const Belief& p) { return p[2] + p[3]; }
Rational marginal_y(const Belief& p) { return p[1] + p[3]; }

Belief product_belief(const Rational& x, const Rational& y) {
    const Rational one(1);
    return Belief({(one - x) * (one - y), (one - x) * y, x * (one - y), x * y});
}

} // namespace

BilinearResult bilinear_certificate(const Instance& inst, const BeliefGraph& graph, int grid_resolution) {
    BilinearResult res;
    if (!inst.product_structure || inst.dim() != 4) {
        res.refused = true;
        res.reason = "instance does not declare a two-by-two product state space";
        return res;
    }
    if (grid_resolution < 1) throw StructuralError("grid resolution must be positive");
    for (std::size_t u = 0; u < graph.size(); ++u) {
        const Belief& p = graph.nodes[u];
        if (p[0] * p[3] != p[1] * p[2]) {
            res.refused = true;
            res.reason = "belief is not a product of its marginals";
            res.witness = p.str();
            return res;
        }
        for (const auto& e : graph.edges[u]) {
            if (e.trivial) continue;
            bool same_x = true, same_y = true;
            for (const auto& a : e.experiment.atoms()) {
                same_x = same_x && marginal_x(a.belief) == marginal_x(p);
                same_y = same_y && marginal_y(a.belief) == marginal_y(p);
            }
            if (same_x == same_y) {
                res.refused = true;
                res.reason = "experiment does not move exactly one marginal";
                res.witness = e.label + " at " + p.str();
                return res;
            }
        }
    }

    std::vector<std::pair<Rational, Rational>> points;
    for (int i = 0; i <= grid_resolution; ++i)
        for (int j = 0; j <= grid_resolution; ++j)
            points.emplace_back(Rational(i, grid_resolution), Rational(j, grid_resolution));
    for (const auto& p : graph.nodes) points.emplace_back(marginal_x(p), marginal_y(p));
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    std::vector<std::vector<Rational>> A(4, std::vector<Rational>(points.size()));
    std::vector<Rational> c(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& [x, y] = points[k];
        A[0][k] = x * y;
        A[1][k] = x;
        A[2][k] = y;
        A[3][k] = Rational(1);
        const Belief q = product_belief(x, y);
        const auto ex = eval_v_exact(inst, q);
        c[k] = ex ? *ex : Rational::from_double(eval_v(inst, q));
    }
    const Rational mx = marginal_x(inst.prior), my = marginal_y(inst.prior);
    const auto lpres = lp::maximize(A, {mx * my, mx, my, Rational(1)}, c);
    if (lpres.status != lp::Status::Optimal) throw InternalConsistencyError("bilinear program has no optimum");
    res.coefficients = lpres.dual;
    res.bound = lpres.objective;
    res.constraints = points.size();
    return res;
}

ConvergenceCheck convergence_bound(const Rational& eps, int n_eps, const Instance& inst, const ValueTable& table,
                                   double value_eps) {
    if (!table.has_limit()) throw StructuralError("limit values are required");
    if (n_eps < 0 || static_cast<std::size_t>(n_eps) >= table.levels.size())
        throw StructuralError("level " + std::to_string(n_eps) + " has not been computed");
    const auto [vlo, vhi] = utility_bounds(inst);
    ConvergenceCheck out;
    out.lhs = table.levels[n_eps][0];
    out.rhs = table.v_inf[0] - eps.to_double() * (vhi - vlo);
    out.slack = out.lhs - out.rhs;
    if (table.v_inf_exact && table.exact_levels && static_cast<std::size_t>(n_eps) < table.exact_levels->size() &&
        has_exact_utility(inst) && !inst.v_bounds) {
        const Rational range = max(inst.utility.hi, inst.utility.lo) - min(inst.utility.hi, inst.utility.lo);
        out.exact_slack = (*table.exact_levels)[n_eps][0] - ((*table.v_inf_exact)[0] - eps * range);
        if (out.exact_slack->sign() < 0)
            throw InternalConsistencyError("convergence bound violated exactly at n = " + std::to_string(n_eps));
    }
    if (out.slack < -value_eps)
        throw InternalConsistencyError("convergence bound violated at n = " + std::to_string(n_eps));
    return out;
}

} // namespace persuasion
