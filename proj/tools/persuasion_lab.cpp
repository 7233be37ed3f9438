#include "acceptance.hpp"

#include "persuasion/engine.hpp"
#include "persuasion/errors.hpp"
#include "persuasion/instance.hpp"
#include "persuasion/report.hpp"
#include "persuasion/structure.hpp"
#include "persuasion/value_solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace persuasion;

namespace {

enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kValidation = 2,
    kTruncated = 3,
    kRejected = 4,
    kNoOptimum = 5,
};

struct RunConfig {
    std::string instance;
    std::string out;
    std::string format = "json";
    std::string g_file;
    std::string policy_file;
    std::string corpus_dir = acceptance::default_corpus_dir();
    int steps = -1;
    int grid = 12;
    int depth_limit = 64;
    std::size_t node_limit = 1'000'000;
    double fix_eps = 1e-12;
    double value_eps = 1e-9;
    double term_eps = 1e-9;
    double tie_eps = 0.0;
    double delta_floor = kDefaultDeltaFloor;
    std::vector<double> eps;
    std::uint64_t seed = 0;
    std::size_t runs = 100'000;
    bool table = false;
    bool certify = false;
};

void write_output(const RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    const fs::path target(cfg.out);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << text;
        if (!os.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
}

void write_json(const RunConfig& cfg, const json& doc) { write_output(cfg, doc.dump(2) + "\n"); }

Instance load(const RunConfig& cfg) {
    Instance inst = load_instance_file(cfg.instance);
    if (cfg.tie_eps > 0.0) inst.utility.tie_eps = cfg.tie_eps;
    return inst;
}

AnalysisOptions analysis_options(const RunConfig& cfg) {
    AnalysisOptions opt;
    opt.tol.fix_eps = cfg.fix_eps;
    opt.tol.value_eps = cfg.value_eps;
    opt.tol.term_eps = cfg.term_eps;
    opt.tol.delta_floor = cfg.delta_floor;
    opt.limits.depth_limit = cfg.depth_limit;
    opt.limits.node_limit = cfg.node_limit;
    opt.grid_resolution = cfg.grid;
    if (!cfg.eps.empty()) opt.eps_grid = cfg.eps;
    return opt;
}

json header(const RunConfig& cfg, const Instance& inst, const AnalysisOptions& opt) {
    json h = {{"instance", inst.name.empty() ? cfg.instance : inst.name}, {"tolerances", to_json(opt.tol)}};
    h["tolerances"]["depth_limit"] = opt.limits.depth_limit;
    h["tolerances"]["node_limit"] = opt.limits.node_limit;
    h["tolerances"]["tie_eps"] = inst.utility.tie_eps;
    return h;
}

int cmd_solve(const RunConfig& cfg) {
    const Instance inst = load(cfg);
    const auto opt = analysis_options(cfg);
    const BeliefGraph graph = build_graph(inst, opt.limits);
    json doc = header(cfg, inst, opt);
    if (cfg.steps >= 0) doc["recursion"] = to_json(value_recursion(graph, inst, cfg.steps), graph, cfg.table);
    doc["limit"] = to_json(value_limit(graph, inst, opt.tol), graph, cfg.table);
    write_json(cfg, doc);
    return cfg.certify && graph.truncated ? kTruncated : kOk;
}

int cmd_analyze(const RunConfig& cfg) {
    const Instance inst = load(cfg);
    const auto opt = analysis_options(cfg);
    json doc = analyze_report(inst, opt);
    doc["tolerances"] = header(cfg, inst, opt)["tolerances"];
    write_json(cfg, doc);
    return kOk;
}

std::vector<double> read_certificate(const std::string& path, const BeliefGraph& graph) {
    std::ifstream is(path);
    if (!is) throw ValidationError(path, "cannot open certificate file");
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ValidationError(path, e.what());
    }
    if (j.is_object() && j.contains("values")) j = j.at("values");
    if (!j.is_array()) throw ValidationError("/", "certificate must be an array");
    std::vector<double> g(graph.size(), 0.0);
    std::vector<bool> set(graph.size(), false);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& row = j[i];
        const std::string p = "/" + std::to_string(i);
        if (row.is_number()) {
            if (i >= graph.size()) throw ValidationError(p, "more values than graph nodes");
            g[i] = row.get<double>();
            set[i] = true;
            continue;
        }
        if (!row.is_object() || !row.contains("belief") || !row.contains("value") || !row.at("value").is_number())
            throw ValidationError(p, "expected a number or {\"belief\", \"value\"}");
        const auto idx = graph.find(belief_from_json(row.at("belief"), p + "/belief"));
        if (!idx) throw ValidationError(p + "/belief", "belief is not a graph node");
        g[*idx] = row.at("value").get<double>();
        set[*idx] = true;
    }
    for (std::size_t u = 0; u < graph.size(); ++u)
        if (!set[u]) throw ValidationError("/", "no value for node " + graph.nodes[u].str());
    return g;
}

int cmd_certify(const RunConfig& cfg) {
    const Instance inst = load(cfg);
    const auto opt = analysis_options(cfg);
    const BeliefGraph graph = build_graph(inst, opt.limits);
    const auto g = read_certificate(cfg.g_file, graph);
    const auto verdict = check_certificate(g, graph, inst, opt.tol.value_eps);
    json doc = header(cfg, inst, opt);
    doc["certificate"] = to_json(verdict);
    doc["bound_at_prior"] = g[0];
    doc["truncated"] = graph.truncated;
    write_json(cfg, doc);
    if (graph.truncated) return kTruncated;
    return verdict.passed ? kOk : kRejected;
}

int cmd_policy(const RunConfig& cfg) {
    const Instance inst = load(cfg);
    const auto opt = analysis_options(cfg);
    const BeliefGraph graph = build_graph(inst, opt.limits);
    const ValueTable table = value_limit(graph, inst, opt.tol);
    const auto verdict = optimal_exists(inst, graph, table, opt);
    json doc = verdict.policy ? policy_to_json(*verdict.policy) : json::object();
    doc["instance"] = header(cfg, inst, opt)["instance"];
    doc["tolerances"] = header(cfg, inst, opt)["tolerances"];
    doc["report"] = to_json(verdict);
    doc["report"].erase("policy");
    write_json(cfg, doc);
    return verdict.verdict == Existence::Exists ? kOk : kNoOptimum;
}

int cmd_simulate(const RunConfig& cfg) {
    const Instance inst = load(cfg);
    const auto opt = analysis_options(cfg);
    std::optional<MarkovPolicy> policy;
    if (!cfg.policy_file.empty()) {
        std::ifstream is(cfg.policy_file);
        if (!is) throw ValidationError(cfg.policy_file, "cannot open policy file");
        json j;
        try {
            j = json::parse(is);
        } catch (const json::parse_error& e) {
            throw ValidationError(cfg.policy_file, e.what());
        }
        policy = policy_from_json(j, inst.prior);
    } else {
        const BeliefGraph graph = build_graph(inst, opt.limits);
        const ValueTable table = value_limit(graph, inst, opt.tol);
        policy = optimal_exists(inst, graph, table, opt).policy;
        if (!policy) {
            std::cerr << "no optimal Markov policy exists; pass --policy to simulate another one\n";
            return kNoOptimum;
        }
    }
    json doc = header(cfg, inst, opt);
    doc["policy"] = policy_to_json(*policy);
    doc["simulation"] = to_json(simulate(*policy, inst, cfg.runs, cfg.seed));
    write_json(cfg, doc);
    return kOk;
}

int cmd_export(const RunConfig& cfg) {
    const Instance inst = load(cfg);
    const auto opt = analysis_options(cfg);
    const BeliefGraph graph = build_graph(inst, opt.limits);
    ValueTable table = cfg.steps >= 0 ? value_recursion(graph, inst, cfg.steps) : ValueTable{};
    const ValueTable limit = value_limit(graph, inst, opt.tol);
    if (cfg.steps < 0) table = limit;
    table.v_inf = limit.v_inf;
    table.status = limit.status;
    if (cfg.format == "dot") write_output(cfg, export_dot(graph, table));
    else if (cfg.format == "csv") write_output(cfg, export_csv(graph, table));
    else write_json(cfg, export_json(graph, table));
    return kOk;
}

int cmd_corpus_list(const RunConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(cfg.corpus_dir))
        if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    std::string text;
    for (const auto& n : names) text += n + "\n";
    write_output(cfg, text);
    return kOk;
}

int cmd_corpus_run_all(const RunConfig& cfg) {
    const auto results = acceptance::run_all(cfg.corpus_dir);
    std::string text;
    bool ok = true;
    for (const auto& r : results) {
        text += acceptance::format_line(r) + "\n";
        ok = ok && r.pass;
    }
    write_output(cfg, text);
    return ok ? kOk : kFailure;
}

void add_tolerances(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--depth-limit", cfg.depth_limit, "BFS depth limit")->check(CLI::PositiveNumber);
    cmd->add_option("--node-limit", cfg.node_limit, "BFS node limit")->check(CLI::PositiveNumber);
    cmd->add_option("--fix-eps", cfg.fix_eps, "value-iteration stabilization tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--value-eps", cfg.value_eps, "value comparison tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--term-eps", cfg.term_eps, "unterminated mass tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--tie-eps", cfg.tie_eps, "receiver tie tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--delta-floor", cfg.delta_floor, "smallest accepted entropy gap")->check(CLI::PositiveNumber);
}

CLI::App* instance_command(CLI::App& app, const std::string& name, const std::string& about, RunConfig& cfg) {
    auto* cmd = app.add_subcommand(name, about);
    cmd->add_option("--instance,-i", cfg.instance, "instance JSON file")->required();
    cmd->add_option("--out,-o", cfg.out, "output file (stdout when omitted)");
    add_tolerances(cmd, cfg);
    return cmd;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential persuasion lab"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* solve = instance_command(app, "solve", "value levels and limit value", cfg);
    solve->add_option("--steps,-n", cfg.steps, "number of recursion levels")->check(CLI::NonNegativeNumber);
    solve->add_flag("--table", cfg.table, "include every node");
    solve->add_flag("--certify", cfg.certify, "exit 3 when the belief graph is truncated");

    auto* analyze = instance_command(app, "analyze", "closure, implementability and optimality report", cfg);
    analyze->add_option("--grid", cfg.grid, "closure grid resolution")->check(CLI::PositiveNumber);
    analyze->add_option("--eps", cfg.eps, "implementability tolerances")->check(CLI::PositiveNumber);

    auto* certify = instance_command(app, "certify", "check a superharmonic certificate", cfg);
    certify->add_option("--g", cfg.g_file, "node-value file")->required();

    instance_command(app, "policy", "optimal Markov policy", cfg);

    auto* sim = instance_command(app, "simulate", "Monte Carlo run of a Markov policy", cfg);
    sim->add_option("--runs", cfg.runs, "number of runs")->check(CLI::PositiveNumber);
    sim->add_option("--seed", cfg.seed, "random seed");
    sim->add_option("--policy", cfg.policy_file, "policy document (optimal policy when omitted)");

    auto* exp = instance_command(app, "export", "belief graph with values", cfg);
    exp->add_option("--format", cfg.format, "json, dot or csv")->check(CLI::IsMember({"json", "dot", "csv"}));
    exp->add_option("--steps,-n", cfg.steps, "number of recursion levels")->check(CLI::NonNegativeNumber);

    auto* corpus = app.add_subcommand("corpus", "bundled example instances");
    corpus->require_subcommand(1);
    corpus->add_option("--corpus", cfg.corpus_dir, "corpus directory");
    auto* list = corpus->add_subcommand("list", "instance names");
    auto* run_all = corpus->add_subcommand("run-all", "acceptance table");
    for (auto* c : {list, run_all}) c->add_option("--out,-o", cfg.out, "output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (*solve) return cmd_solve(cfg);
        if (*analyze) return cmd_analyze(cfg);
        if (*certify) return cmd_certify(cfg);
        if (app.got_subcommand("policy")) return cmd_policy(cfg);
        if (*sim) return cmd_simulate(cfg);
        if (*exp) return cmd_export(cfg);
        if (*list) return cmd_corpus_list(cfg);
        if (*run_all) return cmd_corpus_run_all(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const BayesPlausibilityError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
