#include "persuasion/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace persuasion {

using nlohmann::json;

namespace {

json beliefs_json(const std::vector<Belief>& bs) {
    json out = json::array();
    for (const auto& b : bs) out.push_back(belief_to_json(b));
    return out;
}

json finite_or_string(double x) {
    if (std::isfinite(x)) return x;
    return x > 0 ? "inf" : "-inf";
}

json labeled_map(const std::map<Belief, LabeledExperiment>& m) {
    json out = json::array();
    for (const auto& [p, le] : m)
        out.push_back({{"at", belief_to_json(p)}, {"label", le.label}, {"do", experiment_to_json(le.experiment)}});
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

} // namespace

json to_json(const Tolerances& tol) {
    return {{"value_eps", tol.value_eps},
            {"fix_eps", tol.fix_eps},
            {"fix_window", tol.fix_window},
            {"term_eps", tol.term_eps},
            {"delta_floor", tol.delta_floor}};
}

json to_json(const ValueTable& table, const BeliefGraph& graph, bool whole_table) {
    json out;
    json series = json::array();
    for (std::size_t n = 0; n < table.levels.size(); ++n) {
        json row = {{"n", n}, {"value", table.levels[n][0]}};
        if (table.exact_levels) row["exact"] = (*table.exact_levels)[n][0].str();
        if (n >= 1 && n < table.argmax.size()) row["argmax"] = graph.edges[0][table.argmax[n][0]].label;
        series.push_back(row);
    }
    out["series"] = series;
    if (table.has_limit()) {
        out["v_inf"] = table.v_inf[0];
        if (table.v_inf_exact) out["v_inf_exact"] = (*table.v_inf_exact)[0].str();
        out["iterations"] = table.iterations;
    }
    out["status"] = to_string(table.status);
    if (table.apriori_error) out["apriori_error"] = *table.apriori_error;
    if (table.cross_check_gap) out["cross_check_gap"] = *table.cross_check_gap;
    out["truncated"] = table.truncated;
    if (!table.resolution.empty()) out["resolution"] = table.resolution;
    out["nodes"] = graph.size();
    if (whole_table) {
        json nodes = json::array();
        for (std::size_t u = 0; u < graph.size(); ++u) {
            json row = {{"belief", belief_to_json(graph.nodes[u])}};
            json levels = json::array();
            for (const auto& lvl : table.levels) levels.push_back(lvl[u]);
            row["levels"] = levels;
            if (table.has_limit()) row["v_inf"] = table.v_inf[u];
            if (table.v_inf_exact) row["v_inf_exact"] = (*table.v_inf_exact)[u].str();
            nodes.push_back(row);
        }
        out["table"] = nodes;
    }
    return out;
}

json to_json(const CertificateVerdict& verdict) {
    json v = json::array();
    for (const auto& x : verdict.violations)
        v.push_back({{"kind", x.kind}, {"node", x.node}, {"edge", x.edge}, {"lhs", x.lhs}, {"rhs", x.rhs}});
    return {{"passed", verdict.passed}, {"violations", v}};
}

json to_json(const UtilityEstimate& est) {
    json out = {{"value", est.value},
                {"lower", est.lower},
                {"upper", est.upper},
                {"terminated_mass", est.terminated_mass},
                {"depth", est.depth},
                {"converged", est.converged}};
    if (est.exact) out["exact"] = est.exact->str();
    return out;
}

json to_json(const SimulationReport& rep) {
    json hist = json::array();
    for (const auto& [steps, count] : rep.termination_steps) hist.push_back({{"steps", steps}, {"count", count}});
    return {{"runs", rep.runs},
            {"seed", rep.seed},
            {"mean", rep.mean},
            {"std_error", rep.std_error},
            {"ci", {rep.mean - rep.ci_half_width, rep.mean + rep.ci_half_width}},
            {"histogram", hist},
            {"nonterminated", rep.nonterminated},
            {"step_cap", rep.step_cap}};
}

json to_json(const MarkovVerdict& verdict) {
    return {{"ok", verdict.ok()},
            {"z_in_N", verdict.z_in_N},
            {"rho_exact", verdict.rho_exact},
            {"absorbs", verdict.absorbs},
            {"violations", verdict.violations}};
}

json to_json(const EntropyGapReport& gap) {
    json out = {{"vacuous", gap.vacuous}, {"infimum", finite_or_string(gap.infimum)}};
    if (!gap.witness.empty()) out["witness"] = gap.witness;
    if (gap.witness_at) out["witness_at"] = belief_to_json(*gap.witness_at);
    out["delta"] = gap.delta ? finite_or_string(*gap.delta) : json(nullptr);
    return out;
}

json to_json(const ConcaveClosureResult& closure) {
    json out = {{"value", closure.value},
                {"spread", experiment_to_json(closure.spread)},
                {"contact", beliefs_json(closure.contact)},
                {"contact_hull_ok", closure.contact_hull_ok},
                {"grid_resolution", closure.grid_resolution},
                {"breakpoint_mode", closure.breakpoint_mode},
                {"exact", closure.exact},
                {"warnings", closure.warnings}};
    if (closure.exact_value) out["exact_value"] = closure.exact_value->str();
    json affine = json::array();
    for (const auto& a : closure.affine) affine.push_back(a.str());
    out["affine"] = affine;
    return out;
}

json to_json(const ImplementabilityReport& rep) {
    json table = json::array();
    for (const auto& w : rep.eps_table) {
        json row = {{"eps", w.eps}, {"met", w.met}};
        if (w.met) {
            row["probability"] = w.probability;
            row["n"] = w.n;
            if (!w.resolution.empty()) row["resolution"] = w.resolution;
        }
        table.push_back(row);
    }
    json out = {{"implementable", rep.implementable},
                {"basis", rep.basis},
                {"eps", rep.eps},
                {"n", rep.n},
                {"D", beliefs_json(rep.D)},
                {"F_D", labeled_map(rep.F_D)},
                {"eps_table", table}};
    if (!rep.outside_graph.empty()) out["outside_graph"] = beliefs_json(rep.outside_graph);
    if (!rep.obstruction.empty()) out["obstruction"] = rep.obstruction;
    return out;
}

json to_json(const OptimalVerdict& verdict) {
    json out = {{"verdict", to_string(verdict.verdict)}, {"basis", verdict.basis}};
    if (verdict.policy) out["policy"] = policy_to_json(*verdict.policy);
    if (verdict.check) out["check"] = to_json(*verdict.check);
    if (verdict.value) out["value"] = to_json(*verdict.value);
    if (!verdict.obstruction.empty()) out["obstruction"] = verdict.obstruction;
    if (!verdict.refinement_values.empty()) {
        json probes = json::array();
        for (const auto& [res, v] : verdict.refinement_values) probes.push_back({{"resolution", res}, {"v_inf", v}});
        out["refinement_probe"] = probes;
    }
    if (verdict.verdict == Existence::DoesNotExist)
        out["reasoning"] = "an optimal Markov policy uses only exact experiments and stops only where v_inf = v; "
                           "no such policy reaches N almost surely from the prior";
    return out;
}

json to_json(const Theorem2Report& rep) {
    json out = {{"statements",
                 {{"implementable", rep.implementable},
                  {"decomposition", rep.decomposition},
                  {"attains_closure", rep.attains_closure}}},
                {"agree", rep.agree},
                {"closure_value", rep.closure_value},
                {"O", beliefs_json(rep.O)},
                {"implement", to_json(rep.implement)},
                {"optimal", to_json(rep.optimal)},
                {"entropy_gap", to_json(rep.gap)},
                {"support_bound", {{"h", rep.support.h}, {"witness", rep.support.witness}}}};
    if (rep.dfd) out["D_FD"] = {{"D", beliefs_json(rep.dfd->D)}, {"F_D", labeled_map(rep.dfd->F_D)}};
    else out["D_FD"] = nullptr;
    if (!rep.stamp.empty()) out["stamp"] = rep.stamp;
    return out;
}

json analyze_report(const Instance& inst, const AnalysisOptions& opt) {
    const BeliefGraph graph = build_graph(inst, opt.limits);
    const ValueTable table = value_limit(graph, inst, opt.tol);
    const Theorem2Report t2 = theorem2_report(inst, {}, opt);
    json out;
    out["instance"] = inst.name;
    out["tolerances"] = to_json(opt.tol);
    out["grid_resolution"] = opt.grid_resolution;
    out["closure"] = to_json(concave_closure(inst, inst.prior, opt.grid_resolution, graph.nodes, opt.tol.value_eps));
    out["values"] = to_json(table, graph, false);

    json N = json::array();
    for (std::size_t u : coincidence_set_N(inst, graph, table, opt.tol.value_eps)) N.push_back(belief_to_json(graph.nodes[u]));
    out["N"] = N;
    const auto exact = exact_experiments(graph, table, opt.tol.value_eps);
    json edges = json::array();
    for (std::size_t u = 0; u < graph.size(); ++u)
        for (std::size_t k = 0; k < graph.edges[u].size(); ++k)
            if (exact[u][k] && !graph.edges[u][k].trivial)
                edges.push_back({{"at", belief_to_json(graph.nodes[u])}, {"label", graph.edges[u][k].label}});
    out["exact_edges"] = edges;
    out["theorem2"] = to_json(t2);
    if (const auto w = assumption3_witness(t2.optimal.policy, default_eps_grid())) {
        json rows = json::array();
        for (const auto& r : *w) rows.push_back({{"eps", r.eps.str()}, {"n", r.n ? json(*r.n) : json(nullptr)}});
        out["termination_witness"] = rows;
    } else {
        out["termination_witness"] = nullptr;
    }
    return out;
}

std::pair<double, double> simplex_xy(const Belief& p) {
    const double b = p[1].to_double(), c = p[2].to_double();
    return {b + 0.5 * c, c * std::sqrt(3.0) / 2.0};
}

json export_json(const BeliefGraph& graph, const ValueTable& table) {
    json nodes = json::array();
    for (std::size_t u = 0; u < graph.size(); ++u) {
        json row = {{"id", u}, {"belief", belief_to_json(graph.nodes[u])}, {"depth", graph.depth[u]}};
        json levels = json::array();
        for (const auto& lvl : table.levels) levels.push_back(lvl[u]);
        row["levels"] = levels;
        json arg = json::array();
        for (std::size_t n = 1; n < table.argmax.size(); ++n) arg.push_back(graph.edges[u][table.argmax[n][u]].label);
        row["argmax"] = arg;
        if (table.has_limit()) row["v_inf"] = table.v_inf[u];
        if (graph.nodes[u].dim() == 3) {
            const auto [x, y] = simplex_xy(graph.nodes[u]);
            row["xy"] = {x, y};
        }
        nodes.push_back(row);
    }
    json edges = json::array();
    for (std::size_t u = 0; u < graph.size(); ++u)
        for (const auto& e : graph.edges[u]) {
            if (e.trivial) continue;
            json atoms = json::array();
            const auto& as = e.experiment.atoms();
            for (std::size_t j = 0; j < as.size(); ++j) atoms.push_back({{"w", as[j].weight.str()}, {"to", e.targets[j]}});
            edges.push_back({{"from", u}, {"label", e.label}, {"atoms", atoms}});
        }
    return {{"nodes", nodes}, {"edges", edges}, {"truncated", graph.truncated}, {"status", to_string(table.status)}};
}

std::string export_dot(const BeliefGraph& graph, const ValueTable& table) {
    std::ostringstream os;
    os << "digraph beliefs {\n";
    for (std::size_t u = 0; u < graph.size(); ++u) {
        os << "  n" << u << " [label=\"" << graph.nodes[u].str();
        if (table.has_limit()) os << "\\nv_inf=" << fmt(table.v_inf[u]);
        os << "\"";
        if (graph.nodes[u].dim() == 3) {
            const auto [x, y] = simplex_xy(graph.nodes[u]);
            os << ", pos=\"" << fmt(10 * x) << "," << fmt(10 * y) << "!\"";
        }
        os << "];\n";
    }
    for (std::size_t u = 0; u < graph.size(); ++u)
        for (const auto& e : graph.edges[u]) {
            if (e.trivial) continue;
            const auto& as = e.experiment.atoms();
            for (std::size_t j = 0; j < as.size(); ++j)
                os << "  n" << u << " -> n" << e.targets[j] << " [label=\"" << e.label << " " << as[j].weight.str() << "\"];\n";
        }
    os << "}\n";
    return os.str();
}

std::string export_csv(const BeliefGraph& graph, const ValueTable& table) {
    std::ostringstream os;
    const std::size_t dim = graph.nodes.empty() ? 0 : graph.nodes[0].dim();
    os << "id,depth";
    for (std::size_t i = 0; i < dim; ++i) os << ",p" << i;
    if (dim == 3) os << ",x,y";
    for (std::size_t n = 0; n < table.levels.size(); ++n) os << ",v" << n;
    if (table.has_limit()) os << ",v_inf";
    os << "\n";
    for (std::size_t u = 0; u < graph.size(); ++u) {
        os << u << "," << graph.depth[u];
        for (std::size_t i = 0; i < dim; ++i) os << "," << graph.nodes[u][i].str();
        if (dim == 3) {
            const auto [x, y] = simplex_xy(graph.nodes[u]);
            os << "," << fmt(x) << "," << fmt(y);
        }
        for (const auto& lvl : table.levels) os << "," << fmt(lvl[u]);
        if (table.has_limit()) os << "," << fmt(table.v_inf[u]);
        os << "\n";
    }
    return os.str();
}

} // namespace persuasion
