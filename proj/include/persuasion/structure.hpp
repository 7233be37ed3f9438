#pragma once

#include "persuasion/engine.hpp"
#include "persuasion/instance.hpp"
#include "persuasion/value_solver.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace persuasion {

struct AnalysisOptions {
    Tolerances tol;
    GraphLimits limits;
    int grid_resolution = 12;
    std::vector<double> eps_grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    int refinement_cap = 16;
    int probe_steps = 2;
};

struct ConcaveClosureResult {
    double value = 0.0;
    std::optional<Rational> exact_value;
    Experiment spread;
    std::vector<Rational> affine;  // f_mu(q) = sum_w affine[w] q[w]
    std::vector<Belief> candidates;
    std::vector<Belief> contact;   // candidates where f_mu touches v
    bool contact_hull_ok = true;   // mu in conv(contact)
    int grid_resolution = 0;
    bool breakpoint_mode = false;  // two states: breakpoints instead of a grid
    bool exact = false;
    std::vector<std::string> warnings;
};

/// Beliefs where the utility has kinks or isolated values.
std::vector<Belief> special_beliefs(const Instance& inst);

ConcaveClosureResult concave_closure(const Instance& inst, const Belief& mu, int grid_resolution,
                                     const std::vector<Belief>& extra = {}, double value_eps = 1e-9);

std::vector<Belief> contact_set_O(const Instance& inst, const Belief& mu, int grid_resolution,
                                  const std::vector<Belief>& extra = {}, double value_eps = 1e-9);

/// The indicator instance: utility 1 on O and 0 elsewhere.
Instance indicator_instance(const Instance& inst, const std::vector<Belief>& O);

/// Almost-sure reachability of `target` using edges accepted by `allowed`
/// (nontrivial edges only), by iterated pruning.
struct Attractor {
    std::vector<bool> win;
    std::vector<int> rank;                      // -1 outside win
    std::vector<std::optional<std::size_t>> choice;  // edge decreasing rank
};

Attractor almost_sure_reach(const BeliefGraph& graph, const std::vector<bool>& target,
                            const std::function<bool(std::size_t, std::size_t)>& allowed);

/// Memoryless policy following `choice` from the prior; stops on target nodes.
MarkovPolicy policy_from_choice(const BeliefGraph& graph, const std::vector<bool>& target,
                                const std::vector<std::optional<std::size_t>>& choice);

struct EpsWitness {
    double eps = 0.0;
    bool met = false;
    std::string resolution;
    double probability = 0.0;  // Pr[reach O] of the witness policy
    int n = -1;                // steps after which Pr[b_n in O] >= 1 - eps
};

struct ImplementabilityReport {
    bool implementable = false;
    std::string basis;  // "prior in O", "finite graph", "refinement", "finite graph (no generators)"
    std::vector<Belief> D;
    std::map<Belief, LabeledExperiment> F_D;
    std::optional<MarkovPolicy> witness;
    double eps = 0.0;
    int n = -1;
    std::vector<Belief> outside_graph;  // members of O that are not graph nodes
    std::vector<EpsWitness> eps_table;
    std::string obstruction;
};

ImplementabilityReport is_implementable(const Instance& inst, const std::vector<Belief>& O, double eps,
                                        const AnalysisOptions& opt = {});

struct DFD {
    std::vector<Belief> D;
    std::map<Belief, LabeledExperiment> F_D;
};

/// Greatest fixed point of the pruning; `order` optionally fixes the scan order
/// of nodes within each sweep.
std::optional<DFD> find_D_FD(const BeliefGraph& graph, const std::vector<Belief>& O,
                             const std::vector<std::size_t>& order = {});

/// exact[u][k] for edge k of node u.
std::vector<std::vector<bool>> exact_experiments(const BeliefGraph& graph, const ValueTable& table,
                                                 double value_eps = 1e-9);

std::vector<std::size_t> coincidence_set_N(const Instance& inst, const BeliefGraph& graph, const ValueTable& table,
                                           double value_eps = 1e-9);

enum class Existence { Exists, DoesNotExist, Unknown };
std::string to_string(Existence e);

struct OptimalVerdict {
    Existence verdict = Existence::Unknown;
    std::string basis;
    std::optional<MarkovPolicy> policy;
    std::optional<MarkovVerdict> check;
    std::optional<UtilityEstimate> value;
    std::string obstruction;
    std::vector<std::pair<std::string, double>> refinement_values;  // resolution -> v_inf(mu)
};

OptimalVerdict optimal_exists(const Instance& inst, const BeliefGraph& graph, const ValueTable& table,
                              const AnalysisOptions& opt = {});

struct Theorem2Report {
    bool implementable = false;
    bool decomposition = false;
    bool attains_closure = false;
    bool agree = false;
    std::string stamp;
    double closure_value = 0.0;
    std::vector<Belief> O;
    ImplementabilityReport implement;
    std::optional<DFD> dfd;
    OptimalVerdict optimal;
    EntropyGapReport gap;
    SupportBoundReport support;
};

/// O defaults to the contact set at the prior when empty.
Theorem2Report theorem2_report(const Instance& inst, std::vector<Belief> O = {}, const AnalysisOptions& opt = {});

struct Assumption3Row {
    Rational eps;
    std::optional<int> n;  // nullopt when not reached within the cap
};

std::optional<std::vector<Assumption3Row>> assumption3_witness(const std::optional<MarkovPolicy>& policy,
                                                               const std::vector<Rational>& eps_grid,
                                                               int cap = 4096);

std::vector<Rational> default_eps_grid();

} // namespace persuasion
