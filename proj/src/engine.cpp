#include "persuasion/engine.hpp"

#include "persuasion/errors.hpp"
#include "persuasion/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>

namespace persuasion {

using nlohmann::json;

void History::extend(const Experiment& e, const Belief& next) {
    if (expectation(e) != last())
        throw BayesPlausibilityError("history step " + std::to_string(steps() + 1) + ": experiment averages to " +
                                     expectation(e).str() + ", current belief is " + last().str());
    experiments_.push_back(e);
    beliefs_.push_back(next);
}

// ---------------------------------------------------------------- trees

namespace {

TreeNode grow(History& h, int remaining, const StrategyTree::Chooser& choose) {
    TreeNode node{h.last(), std::nullopt, {}};
    if (remaining == 0) return node;
    Experiment e = choose(h);
    if (expectation(e) != h.last())
        throw BayesPlausibilityError("strategy chose an experiment averaging to " + expectation(e).str() + " at " +
                                     h.last().str());
    node.children.reserve(e.size());
    for (const auto& a : e.atoms()) {
        History next = h;
        next.extend(e, a.belief);
        node.children.push_back(grow(next, remaining - 1, choose));
    }
    node.action = std::move(e);
    return node;
}

std::size_t count_nodes(const TreeNode& n) {
    std::size_t c = 1;
    for (const auto& ch : n.children) c += count_nodes(ch);
    return c;
}

bool all_trivial_below(const TreeNode& n) {
    if (n.action && !is_trivial(*n.action)) return false;
    return std::all_of(n.children.begin(), n.children.end(), all_trivial_below);
}

void collect_level(const TreeNode& n, int level, const Rational& mass, OutcomeDistribution& out) {
    if (level == 0 || n.children.empty()) {
        out.mass[n.belief] += mass;
        if (all_trivial_below(n)) out.terminated[n.belief] += mass;
        return;
    }
    const auto atoms = n.action->atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j) collect_level(n.children[j], level - 1, mass * atoms[j].weight, out);
}

} // namespace

StrategyTree StrategyTree::build(const Belief& prior, int depth, const Chooser& choose) {
    if (depth < 0) throw StructuralError("strategy depth must be non-negative");
    StrategyTree t;
    t.depth_ = depth;
    History h(prior);
    t.root_ = grow(h, depth, choose);
    return t;
}

StrategyTree StrategyTree::all_trivial(const Belief& prior, int depth) {
    return build(prior, depth, [](const History& h) { return Experiment::trivial(h.last()); });
}

std::size_t StrategyTree::node_count() const { return count_nodes(root_); }

void StrategyTree::check_feasible(const Instance& inst) const {
    std::vector<const TreeNode*> stack{&root_};
    while (!stack.empty()) {
        const TreeNode* n = stack.back();
        stack.pop_back();
        if (n->action && !is_trivial(*n->action)) {
            const auto feasible = feasible_at(inst, n->belief);
            if (std::find(feasible.begin(), feasible.end(), *n->action) == feasible.end())
                throw InconsistencyError("experiment chosen at " + n->belief.str() + " is not feasible");
        }
        for (const auto& c : n->children) stack.push_back(&c);
    }
}

// ---------------------------------------------------------------- Markov policies

MarkovPolicy::MarkovPolicy(Belief prior, std::map<Belief, Experiment> rho, std::vector<Belief> Z)
    : prior_(std::move(prior)), rho_(std::move(rho)), Z_(std::move(Z)) {
    std::sort(Z_.begin(), Z_.end());
    Z_.erase(std::unique(Z_.begin(), Z_.end()), Z_.end());
    for (const auto& z : Z_)
        if (rho_.count(z)) throw InconsistencyError("belief " + z.str() + " is in both D and Z");
    if (!in_D(prior_) && !in_Z(prior_)) throw InconsistencyError("prior " + prior_.str() + " is in neither D nor Z");
    for (const auto& [p, e] : rho_) {
        if (is_trivial(e)) throw InconsistencyError("rho assigns a trivial experiment at " + p.str());
        if (expectation(e) != p)
            throw BayesPlausibilityError("rho at " + p.str() + " averages to " + expectation(e).str());
        for (const auto& a : e.atoms())
            if (!in_D(a.belief) && !in_Z(a.belief))
                throw InconsistencyError("rho at " + p.str() + " reaches " + a.belief.str() + " outside D and Z");
    }
}

bool MarkovPolicy::in_Z(const Belief& p) const { return std::binary_search(Z_.begin(), Z_.end(), p); }

std::vector<Belief> MarkovPolicy::D() const {
    std::vector<Belief> out;
    for (const auto& [p, e] : rho_) out.push_back(p);
    return out;
}

std::optional<Experiment> MarkovPolicy::choose(const Belief& p) const {
    const auto it = rho_.find(p);
    if (it != rho_.end()) return it->second;
    if (in_Z(p)) return std::nullopt;
    throw InconsistencyError("policy queried at " + p.str() + " outside D and Z");
}

std::optional<Experiment> LazyMarkovPolicy::choose(const Belief& p) const {
    auto e = rule_(p);
    if (e && is_trivial(*e)) return std::nullopt;
    if (e && expectation(*e) != p)
        throw BayesPlausibilityError("lazy policy at " + p.str() + " averages to " + expectation(*e).str());
    return e;
}

json policy_to_json(const MarkovPolicy& policy) {
    json j;
    j["prior"] = belief_to_json(policy.prior());
    j["D"] = json::array();
    for (const auto& p : policy.D()) j["D"].push_back(belief_to_json(p));
    j["Z"] = json::array();
    for (const auto& z : policy.Z()) j["Z"].push_back(belief_to_json(z));
    j["rho"] = json::array();
    for (const auto& [p, e] : policy.rho()) j["rho"].push_back({{"at", belief_to_json(p)}, {"do", experiment_to_json(e)}});
    return j;
}

MarkovPolicy policy_from_json(const json& j, const Belief& prior) {
    if (!j.is_object()) throw ValidationError("", "policy document must be an object");
    std::map<Belief, Experiment> rho;
    std::vector<Belief> Z;
    std::set<Belief> D;
    if (j.contains("D"))
        for (std::size_t i = 0; i < j.at("D").size(); ++i) D.insert(belief_from_json(j.at("D")[i], "/D/" + std::to_string(i)));
    if (j.contains("Z"))
        for (std::size_t i = 0; i < j.at("Z").size(); ++i) Z.push_back(belief_from_json(j.at("Z")[i], "/Z/" + std::to_string(i)));
    if (j.contains("rho"))
        for (std::size_t i = 0; i < j.at("rho").size(); ++i) {
            const auto path = "/rho/" + std::to_string(i);
            const auto& r = j.at("rho")[i];
            if (!r.contains("at") || !r.contains("do")) throw ValidationError(path, "needs 'at' and 'do'");
            rho.emplace(belief_from_json(r.at("at"), path + "/at"), experiment_from_json(r.at("do"), path + "/do"));
        }
    for (const auto& [p, e] : rho)
        if (!D.empty() && !D.count(p)) throw ValidationError("/rho", "rho defined at " + p.str() + " which is not in D");
    for (const auto& p : D)
        if (!rho.count(p)) throw ValidationError("/D", "belief " + p.str() + " in D has no rho entry");
    const Belief start = j.contains("prior") ? belief_from_json(j.at("prior"), "/prior") : prior;
    return MarkovPolicy(start, std::move(rho), std::move(Z));
}

// ---------------------------------------------------------------- distributions

Rational OutcomeDistribution::total() const {
    Rational s;
    for (const auto& [b, m] : mass) s += m;
    return s;
}

Rational OutcomeDistribution::total_terminated() const {
    Rational s;
    for (const auto& [b, m] : terminated) s += m;
    return s;
}

Rational history_probability(const StrategyTree& tree, const History& xi) {
    if (xi.beliefs().front() != tree.prior()) return Rational(0);
    const TreeNode* node = &tree.root();
    Rational prob(1);
    for (std::size_t i = 0; i < xi.steps(); ++i) {
        const Experiment& e = xi.experiments()[i];
        const Belief& next = xi.beliefs()[i + 1];
        if (node == nullptr || !node->action) {
            if (!is_trivial(e))
                throw InconsistencyError("history continues with a nontrivial experiment after the strategy stopped (step " +
                                         std::to_string(i + 1) + ")");
            if (next != xi.beliefs()[i]) return Rational(0);
            node = nullptr;
            continue;
        }
        if (*node->action != e)
            throw InconsistencyError("history uses a different experiment than the strategy at step " + std::to_string(i + 1));
        const auto atoms = e.atoms();
        std::size_t j = 0;
        while (j < atoms.size() && atoms[j].belief != next) ++j;
        if (j == atoms.size()) return Rational(0);
        prob *= atoms[j].weight;
        node = &node->children[j];
    }
    return prob;
}

OutcomeDistribution belief_distribution(const StrategyTree& tree, int n) {
    if (n < 0) throw StructuralError("number of steps must be non-negative");
    OutcomeDistribution out;
    collect_level(tree.root(), std::min(n, tree.depth()), Rational(1), out);
    return out;
}

OutcomeDistribution belief_distribution(const MarkovStrategy& strategy, int n) {
    if (n < 0) throw StructuralError("number of steps must be non-negative");
    std::map<Belief, std::optional<Experiment>> cache;
    auto choice = [&](const Belief& b) -> const std::optional<Experiment>& {
        auto it = cache.find(b);
        if (it == cache.end()) it = cache.emplace(b, strategy.choose(b)).first;
        return it->second;
    };
    std::map<Belief, Rational> cur{{strategy.prior(), Rational(1)}};
    for (int step = 0; step < n; ++step) {
        std::map<Belief, Rational> next;
        for (const auto& [b, m] : cur) {
            const auto& e = choice(b);
            if (!e) {
                next[b] += m;
                continue;
            }
            for (const auto& a : e->atoms()) next[a.belief] += m * a.weight;
        }
        cur = std::move(next);
    }
    OutcomeDistribution out;
    out.mass = cur;
    for (const auto& [b, m] : cur)
        if (!choice(b)) out.terminated[b] = m;
    return out;
}

Rational termination_probability(const StrategyTree& tree, int n) {
    if (n < 0) throw StructuralError("number of steps must be non-negative");
    if (n >= tree.depth()) return Rational(1);
    return belief_distribution(tree, n).total_terminated();
}

Rational termination_probability(const MarkovStrategy& strategy, int n) {
    return belief_distribution(strategy, n).total_terminated();
}

// ---------------------------------------------------------------- utility

UtilityEstimate expected_utility(const StrategyTree& tree, const Instance& inst, const EngineOptions& opt) {
    UtilityEstimate est;
    est.depth = tree.depth();
    est.terminated_mass = 1.0;
    auto level_value = [&](int k) {
        const auto dist = belief_distribution(tree, k);
        double v = 0.0;
        for (const auto& [b, m] : dist.mass) v += m.to_double() * eval_v(inst, b);
        return v;
    };
    if (opt.without_termination) {
        double best = level_value(0);
        for (int k = 1; k <= tree.depth(); ++k) best = std::max(best, level_value(k));
        est.value = est.lower = est.upper = best;
        return est;
    }
    const auto dist = belief_distribution(tree, tree.depth());
    double v = 0.0;
    std::optional<Rational> exact = has_exact_utility(inst) ? std::optional<Rational>(Rational(0)) : std::nullopt;
    for (const auto& [b, m] : dist.mass) {
        v += m.to_double() * eval_v(inst, b);
        if (exact) *exact += m * *eval_v_exact(inst, b);
    }
    est.value = est.lower = est.upper = exact ? exact->to_double() : v;
    est.exact = exact;
    return est;
}

TerminationCurve termination_curve(const MarkovStrategy& strategy, const Instance& inst, int depth, double term_eps) {
    std::map<Belief, std::optional<Experiment>> choice;
    std::map<Belief, double> value;
    auto lookup = [&](const Belief& b) {
        auto it = choice.find(b);
        if (it == choice.end()) {
            it = choice.emplace(b, strategy.choose(b)).first;
            value.emplace(b, eval_v(inst, b));
        }
        return it;
    };
    TerminationCurve curve;
    std::map<Belief, double> cur{{strategy.prior(), 1.0}};
    for (int n = 0;; ++n) {
        double t = 0.0, w = 0.0, ev = 0.0;
        for (const auto& [b, m] : cur) {
            const auto it = lookup(b);
            const double vb = value.at(b);
            ev += m * vb;
            if (!it->second) t += m, w += m * vb;
        }
        curve.terminated.push_back(t);
        curve.utility.push_back(w);
        curve.expected_v.push_back(ev);
        if (n == depth || (term_eps > 0.0 && 1.0 - t <= term_eps)) break;
        std::map<Belief, double> next;
        for (const auto& [b, m] : cur) {
            const auto& e = lookup(b)->second;
            if (!e) {
                next[b] += m;
                continue;
            }
            for (const auto& a : e->atoms()) next[a.belief] += m * a.weight.to_double();
        }
        cur = std::move(next);
    }
    return curve;
}

UtilityEstimate expected_utility(const MarkovStrategy& strategy, const Instance& inst, const EngineOptions& opt) {
    const auto [vlo, vhi] = utility_bounds(inst);
    const auto curve = termination_curve(strategy, inst, opt.depth_cap, opt.without_termination ? 0.0 : opt.term_eps);
    UtilityEstimate est;
    est.depth = static_cast<int>(curve.terminated.size()) - 1;
    est.terminated_mass = curve.terminated.back();
    if (opt.without_termination) {
        est.value = *std::max_element(curve.expected_v.begin(), curve.expected_v.end());
        est.lower = est.upper = est.value;
        est.converged = false;
        return est;
    }
    const double rest = std::max(0.0, 1.0 - est.terminated_mass);
    est.value = curve.utility.back();
    est.lower = est.value + std::min(vlo, 0.0) * rest;
    est.upper = est.value + std::max(vhi, 0.0) * rest;
    est.converged = rest <= opt.term_eps;
    return est;
}

std::optional<Improvement> truncate_improve(const MarkovStrategy& strategy, const Instance& inst, const EngineOptions& opt) {
    const auto curve = termination_curve(strategy, inst, opt.depth_cap, opt.term_eps);
    const double t_inf = curve.terminated.back();
    if (1.0 - t_inf <= opt.term_eps) return std::nullopt;
    const auto [vlo, vhi] = utility_bounds(inst);
    if (!inst.assume_positive || !(vlo > 0.0))
        throw AssumptionError("truncation improvement needs a declared positive lower utility bound");

    Improvement imp;
    imp.delta_term = 1.0 - t_inf;
    imp.epsilon = imp.delta_term * vlo / (2.0 * vhi);
    int n = 0;
    while (!(curve.terminated[n] > t_inf - imp.epsilon)) ++n;
    imp.n = n;
    imp.strategy_upper = curve.utility[n] + (t_inf - curve.terminated[n]) * vhi;
    imp.tree = unroll(strategy, n);
    imp.tree_value = expected_utility(imp.tree, inst).value;
    if (!(imp.tree_value > imp.strategy_upper))
        throw InternalConsistencyError("truncated strategy does not improve on the original");
    return imp;
}

StrategyTree unroll(const MarkovStrategy& policy, int depth, std::size_t node_limit) {
    std::size_t nodes = 1;
    return StrategyTree::build(policy.prior(), depth, [&](const History& h) {
        std::optional<Experiment> e;
        try {
            e = policy.choose(h.last());
        } catch (const InconsistencyError& err) {
            std::string path;
            for (const auto& b : h.beliefs()) path += (path.empty() ? "" : " -> ") + b.str();
            throw InconsistencyError(std::string(err.what()) + "; reached via " + path);
        }
        Experiment chosen = e ? *e : Experiment::trivial(h.last());
        nodes += chosen.size();
        if (nodes > node_limit) throw StructuralError("unrolled tree exceeds " + std::to_string(node_limit) + " nodes");
        return chosen;
    });
}

// ---------------------------------------------------------------- branching form

BranchingTree to_branching(const StrategyTree& tree, int h) {
    if (h < 1) throw StructuralError("branching factor must be positive");
    BranchingTree bt;
    bt.h = h;
    bt.depth = tree.depth();
    std::vector<const TreeNode*> src{&tree.root()};
    bt.levels.push_back({BranchingNode{Rational(1), tree.root().belief, tree.root().action, false}});
    for (int k = 0; k < tree.depth(); ++k) {
        std::vector<BranchingNode> next;
        std::vector<const TreeNode*> next_src;
        const bool leaf_level = k + 1 == tree.depth();
        for (std::size_t c = 0; c < bt.levels[k].size(); ++c) {
            const BranchingNode& parent = bt.levels[k][c];
            const TreeNode* node = src[c];
            const Experiment action = parent.action ? *parent.action : Experiment::trivial(parent.belief);
            const auto atoms = action.atoms();
            if (atoms.size() > static_cast<std::size_t>(h))
                throw AssumptionError("experiment with " + std::to_string(atoms.size()) + " atoms exceeds h = " +
                                      std::to_string(h) + " at " + parent.belief.str());
            for (int j = 0; j < h; ++j) {
                const bool real = node != nullptr && static_cast<std::size_t>(j) < atoms.size();
                BranchingNode child;
                child.padding = !real;
                if (real) {
                    const TreeNode& tc = node->children[j];
                    child.mass = parent.mass * atoms[j].weight;
                    child.belief = tc.belief;
                    child.action = tc.action;
                    next_src.push_back(&tc);
                } else {
                    child.mass = Rational(0);
                    child.belief = atoms.front().belief;
                    if (!leaf_level) child.action = Experiment::trivial(child.belief);
                    next_src.push_back(nullptr);
                }
                next.push_back(std::move(child));
            }
        }
        bt.levels.push_back(std::move(next));
        src = std::move(next_src);
    }
    return bt;
}

namespace {

void add_history(std::vector<std::pair<History, Rational>>& out, History h, const Rational& p) {
    for (auto& [hist, mass] : out)
        if (hist == h) {
            mass += p;
            return;
        }
    out.emplace_back(std::move(h), p);
}

void walk_histories(const TreeNode& n, History h, const Rational& p, std::vector<std::pair<History, Rational>>& out) {
    if (n.children.empty()) {
        add_history(out, std::move(h), p);
        return;
    }
    const auto atoms = n.action->atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        History next = h;
        next.extend(*n.action, atoms[j].belief);
        walk_histories(n.children[j], std::move(next), p * atoms[j].weight, out);
    }
}

} // namespace

std::vector<std::pair<History, Rational>> collapse(const BranchingTree& tree) {
    std::vector<std::pair<History, Rational>> out;
    const auto& last = tree.levels.back();
    for (std::size_t c = 0; c < last.size(); ++c) {
        if (last[c].mass.is_zero()) continue;
        std::vector<std::size_t> path(tree.depth + 1);
        std::size_t idx = c;
        for (int k = tree.depth; k >= 0; --k) {
            path[k] = idx;
            idx /= static_cast<std::size_t>(tree.h);
        }
        History h(tree.levels[0][0].belief);
        for (int k = 1; k <= tree.depth; ++k) {
            const auto& parent = tree.levels[k - 1][path[k - 1]];
            h.extend(*parent.action, tree.levels[k][path[k]].belief);
        }
        add_history(out, std::move(h), last[c].mass);
    }
    return out;
}

std::vector<std::pair<History, Rational>> enumerate_histories(const StrategyTree& tree) {
    std::vector<std::pair<History, Rational>> out;
    walk_histories(tree.root(), History(tree.prior()), Rational(1), out);
    return out;
}

// ---------------------------------------------------------------- simulation

namespace {

std::mt19937_64 run_engine(std::uint64_t seed, std::size_t run) {
    const auto r = static_cast<std::uint64_t>(run);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
    return std::mt19937_64(seq);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_atom(const Experiment& e, std::mt19937_64& rng) {
    const double u = unit(rng);
    double acc = 0.0;
    const auto atoms = e.atoms();
    for (std::size_t j = 0; j + 1 < atoms.size(); ++j) {
        acc += atoms[j].weight.to_double();
        if (u < acc) return j;
    }
    return atoms.size() - 1;
}

SimulationReport summarize(const std::vector<double>& value, const std::vector<int>& steps, std::uint64_t seed, int cap) {
    SimulationReport rep;
    rep.runs = value.size();
    rep.seed = seed;
    rep.step_cap = cap;
    double sum = 0.0;
    for (double v : value) sum += v;
    rep.mean = sum / static_cast<double>(rep.runs);
    double ss = 0.0;
    for (double v : value) ss += (v - rep.mean) * (v - rep.mean);
    const double var = rep.runs > 1 ? ss / static_cast<double>(rep.runs - 1) : 0.0;
    rep.std_error = std::sqrt(var / static_cast<double>(rep.runs));
    rep.ci_half_width = 1.96 * rep.std_error;
    for (int s : steps) {
        if (s < 0) ++rep.nonterminated;
        else ++rep.termination_steps[s];
    }
    return rep;
}

} // namespace

SimulationReport simulate(const MarkovStrategy& strategy, const Instance& inst, std::size_t runs, std::uint64_t seed,
                          int step_cap) {
    if (runs < 1) throw StructuralError("simulation needs at least one run");
    std::vector<double> value(runs, 0.0);
    std::vector<int> steps(runs, -1);
    parallel_for(runs, [&](std::size_t r) {
        auto rng = run_engine(seed, r);
        Belief b = strategy.prior();
        for (int s = 0;; ++s) {
            const auto e = strategy.choose(b);
            if (!e) {
                value[r] = eval_v(inst, b);
                steps[r] = s;
                return;
            }
            if (s == step_cap) return;
            b = e->atoms()[sample_atom(*e, rng)].belief;
        }
    }, 256);
    return summarize(value, steps, seed, step_cap);
}

SimulationReport simulate(const StrategyTree& tree, const Instance& inst, std::size_t runs, std::uint64_t seed) {
    if (runs < 1) throw StructuralError("simulation needs at least one run");
    std::unordered_map<const TreeNode*, bool> stopped;
    std::vector<const TreeNode*> stack{&tree.root()};
    while (!stack.empty()) {
        const TreeNode* n = stack.back();
        stack.pop_back();
        stopped[n] = all_trivial_below(*n);
        for (const auto& c : n->children) stack.push_back(&c);
    }
    std::vector<double> value(runs, 0.0);
    std::vector<int> steps(runs, -1);
    parallel_for(runs, [&](std::size_t r) {
        auto rng = run_engine(seed, r);
        const TreeNode* n = &tree.root();
        int s = 0, stop_at = -1;
        for (;;) {
            if (stop_at < 0 && stopped.at(n)) stop_at = s;
            if (n->children.empty()) break;
            n = &n->children[sample_atom(*n->action, rng)];
            ++s;
        }
        value[r] = eval_v(inst, n->belief);
        steps[r] = stop_at;
    }, 256);
    return summarize(value, steps, seed, tree.depth());
}

// ---------------------------------------------------------------- optimality check

MarkovVerdict verify_markov_optimal(const MarkovPolicy& policy, const Instance& inst, const BeliefGraph& graph,
                                    const ValueTable& table, double value_eps) {
    MarkovVerdict verdict;
    const bool exact = table.v_inf_exact.has_value();
    auto node_of = [&](const Belief& b) -> std::optional<std::size_t> {
        auto idx = graph.find(b);
        if (!idx) verdict.violations.push_back("no limit value for " + b.str());
        return idx;
    };

    for (const auto& z : policy.Z()) {
        const auto idx = node_of(z);
        if (!idx) {
            verdict.z_in_N = false;
            continue;
        }
        const bool in_N = exact ? (*table.v_inf_exact)[*idx] == *eval_v_exact(inst, z)
                                : std::abs(table.v_inf[*idx] - eval_v(inst, z)) <= value_eps;
        if (!in_N) {
            verdict.z_in_N = false;
            verdict.violations.push_back("terminal belief " + z.str() + " has v_inf above v");
        }
    }

    for (const auto& [p, e] : policy.rho()) {
        const auto ip = node_of(p);
        bool ok = ip.has_value();
        Rational sx;
        double sd = 0.0;
        for (const auto& a : e.atoms()) {
            const auto ia = node_of(a.belief);
            if (!ia) {
                ok = false;
                continue;
            }
            if (exact) sx += a.weight * (*table.v_inf_exact)[*ia];
            sd += a.weight.to_double() * table.v_inf[*ia];
        }
        if (!ok) {
            verdict.rho_exact = false;
            continue;
        }
        const bool is_exact = exact ? (*table.v_inf_exact)[*ip] == sx : std::abs(table.v_inf[*ip] - sd) <= value_eps;
        if (!is_exact) {
            verdict.rho_exact = false;
            const double lhs = exact ? (*table.v_inf_exact)[*ip].to_double() : table.v_inf[*ip];
            const double rhs = exact ? sx.to_double() : sd;
            verdict.violations.push_back("experiment at " + p.str() + " is not exact (v_inf " + std::to_string(lhs) +
                                         " vs mean " + std::to_string(rhs) + ")");
        }
    }

    // Absorption on the finite policy graph: every reachable belief must be
    // able to reach Z.
    std::set<Belief> reach{policy.prior()};
    std::vector<Belief> frontier{policy.prior()};
    std::map<Belief, std::vector<Belief>> preds;
    while (!frontier.empty()) {
        const Belief b = frontier.back();
        frontier.pop_back();
        const auto it = policy.rho().find(b);
        if (it == policy.rho().end()) continue;
        for (const auto& a : it->second.atoms()) {
            preds[a.belief].push_back(b);
            if (reach.insert(a.belief).second) frontier.push_back(a.belief);
        }
    }
    std::set<Belief> good;
    for (const auto& b : reach)
        if (policy.in_Z(b)) good.insert(b), frontier.push_back(b);
    while (!frontier.empty()) {
        const Belief b = frontier.back();
        frontier.pop_back();
        for (const auto& q : preds[b])
            if (good.insert(q).second) frontier.push_back(q);
    }
    for (const auto& b : reach)
        if (!good.count(b)) {
            verdict.absorbs = false;
            verdict.violations.push_back("belief " + b.str() + " cannot reach Z under the policy");
        }
    return verdict;
}

} // namespace persuasion
