#pragma once

#include "persuasion/instance.hpp"
#include "persuasion/value_solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace persuasion {

/// (p0, e1, p1, ..., en, pn) with expectation(e_i) == p_{i-1}.
class History {
public:
    explicit History(Belief start) { beliefs_.push_back(std::move(start)); }

    /// Throws BayesPlausibilityError when e is not centred at last().
    void extend(const Experiment& e, const Belief& next);

    std::size_t steps() const { return experiments_.size(); }
    const Belief& last() const { return beliefs_.back(); }
    const std::vector<Belief>& beliefs() const { return beliefs_; }
    const std::vector<Experiment>& experiments() const { return experiments_; }

    friend bool operator==(const History&, const History&) = default;

private:
    std::vector<Belief> beliefs_;
    std::vector<Experiment> experiments_;
};

/// One node per history. Internal nodes carry the experiment chosen after
/// that history (possibly trivial); children follow the experiment's atom order.
struct TreeNode {
    Belief belief;
    std::optional<Experiment> action;
    std::vector<TreeNode> children;
};

class StrategyTree {
public:
    using Chooser = std::function<Experiment(const History&)>;

    /// Builds the depth-n tree by asking `choose` at every reachable history.
    /// Throws BayesPlausibilityError when a choice is not centred at last(history).
    static StrategyTree build(const Belief& prior, int depth, const Chooser& choose);
    static StrategyTree all_trivial(const Belief& prior, int depth);

    int depth() const { return depth_; }
    const TreeNode& root() const { return root_; }
    const Belief& prior() const { return root_.belief; }
    std::size_t node_count() const;

    /// Throws InconsistencyError when a chosen experiment is not feasible.
    void check_feasible(const Instance& inst) const;

private:
    int depth_ = 0;
    TreeNode root_;
};

/// Experiment choice that depends only on the current belief; nullopt stops.
class MarkovStrategy {
public:
    virtual ~MarkovStrategy() = default;
    virtual const Belief& prior() const = 0;
    virtual std::optional<Experiment> choose(const Belief& p) const = 0;
};

/// (mu, D, Z, rho): D intermediate beliefs, Z terminal beliefs, rho maps D to
/// nontrivial experiments whose supports stay in D ∪ Z.
class MarkovPolicy final : public MarkovStrategy {
public:
    MarkovPolicy(Belief prior, std::map<Belief, Experiment> rho, std::vector<Belief> Z);

    const Belief& prior() const override { return prior_; }
    std::optional<Experiment> choose(const Belief& p) const override;

    std::vector<Belief> D() const;
    const std::vector<Belief>& Z() const { return Z_; }
    const std::map<Belief, Experiment>& rho() const { return rho_; }
    bool in_D(const Belief& p) const { return rho_.count(p) != 0; }
    bool in_Z(const Belief& p) const;

    friend bool operator==(const MarkovPolicy& a, const MarkovPolicy& b) {
        return a.prior_ == b.prior_ && a.rho_ == b.rho_ && a.Z_ == b.Z_;
    }

private:
    Belief prior_;
    std::map<Belief, Experiment> rho_;
    std::vector<Belief> Z_;
};

/// Markov strategy given by a function, for policies with infinitely many
/// intermediate beliefs.
class LazyMarkovPolicy final : public MarkovStrategy {
public:
    using Rule = std::function<std::optional<Experiment>(const Belief&)>;
    LazyMarkovPolicy(Belief prior, Rule rule) : prior_(std::move(prior)), rule_(std::move(rule)) {}

    const Belief& prior() const override { return prior_; }
    std::optional<Experiment> choose(const Belief& p) const override;

private:
    Belief prior_;
    Rule rule_;
};

nlohmann::json policy_to_json(const MarkovPolicy& policy);
MarkovPolicy policy_from_json(const nlohmann::json& j, const Belief& prior);

struct OutcomeDistribution {
    std::map<Belief, Rational> mass;
    std::map<Belief, Rational> terminated;

    Rational total() const;
    Rational total_terminated() const;
};

/// Pr[xi] as the product of atom weights along xi.
Rational history_probability(const StrategyTree& tree, const History& xi);

OutcomeDistribution belief_distribution(const StrategyTree& tree, int n);
OutcomeDistribution belief_distribution(const MarkovStrategy& strategy, int n);

Rational termination_probability(const StrategyTree& tree, int n);
Rational termination_probability(const MarkovStrategy& strategy, int n);

struct UtilityEstimate {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double terminated_mass = 0.0;
    int depth = 0;
    bool converged = true;
    std::optional<Rational> exact;
};

struct EngineOptions {
    double term_eps = 1e-9;
    int depth_cap = 10'000;
    bool without_termination = false;  // E[v(b_n)] instead of terminated-mass utility
};

UtilityEstimate expected_utility(const StrategyTree& tree, const Instance& inst, const EngineOptions& opt = {});
UtilityEstimate expected_utility(const MarkovStrategy& strategy, const Instance& inst, const EngineOptions& opt = {});

/// Termination law T_n and terminated utility W_n for n = 0..depth (doubles).
struct TerminationCurve {
    std::vector<double> terminated;
    std::vector<double> utility;
    std::vector<double> expected_v;  // E[v(b_n)] ignoring termination
};
TerminationCurve termination_curve(const MarkovStrategy& strategy, const Instance& inst, int depth,
                                   double term_eps = 0.0);

struct Improvement {
    int n = 0;
    StrategyTree tree;
    double tree_value = 0.0;
    double strategy_upper = 0.0;
    double epsilon = 0.0;
    double delta_term = 0.0;
};

/// Finite truncation strictly better than a strategy that fails to terminate
/// with positive probability. Nullopt when the strategy terminates a.s.;
/// AssumptionError when the instance does not declare positive utility.
std::optional<Improvement> truncate_improve(const MarkovStrategy& strategy, const Instance& inst,
                                            const EngineOptions& opt = {});

/// Throws InconsistencyError naming the path when a reachable belief lies outside D ∪ Z.
StrategyTree unroll(const MarkovStrategy& policy, int depth, std::size_t node_limit = 2'000'000);

struct BranchingNode {
    Rational mass;
    Belief belief;
    std::optional<Experiment> action;
    bool padding = false;
};

/// Depth-n h-ary tree; level k has h^k nodes, node c's children are h*c .. h*c+h-1.
struct BranchingTree {
    int h = 1;
    int depth = 0;
    std::vector<std::vector<BranchingNode>> levels;
};

BranchingTree to_branching(const StrategyTree& tree, int h);

/// Histories of positive mass at the final depth with their probabilities.
std::vector<std::pair<History, Rational>> collapse(const BranchingTree& tree);
std::vector<std::pair<History, Rational>> enumerate_histories(const StrategyTree& tree);

struct SimulationReport {
    std::size_t runs = 0;
    std::uint64_t seed = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double ci_half_width = 0.0;  // 95% normal interval
    std::map<int, std::size_t> termination_steps;
    std::size_t nonterminated = 0;
    int step_cap = 0;
};

SimulationReport simulate(const MarkovStrategy& strategy, const Instance& inst, std::size_t runs,
                          std::uint64_t seed, int step_cap = 10'000);
SimulationReport simulate(const StrategyTree& tree, const Instance& inst, std::size_t runs, std::uint64_t seed);

struct MarkovVerdict {
    bool z_in_N = true;
    bool rho_exact = true;
    bool absorbs = true;
    std::vector<std::string> violations;

    bool ok() const { return z_in_N && rho_exact && absorbs; }
};

MarkovVerdict verify_markov_optimal(const MarkovPolicy& policy, const Instance& inst, const BeliefGraph& graph,
                                    const ValueTable& table, double value_eps = 1e-9);

} // namespace persuasion
