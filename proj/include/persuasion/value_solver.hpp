#pragma once

#include "persuasion/instance.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace persuasion {

struct Tolerances {
    double value_eps = 1e-9;
    double fix_eps = 1e-12;
    int fix_window = 20;
    double term_eps = 1e-9;
    double delta_floor = kDefaultDeltaFloor;
};

struct GraphLimits {
    int depth_limit = 64;
    std::size_t node_limit = 1'000'000;
};

struct Edge {
    std::string label;
    Experiment experiment;
    std::vector<std::size_t> targets;  // node index of each atom, in atom order
    bool trivial = false;
};

/// Beliefs reachable from the prior. Node 0 is the prior; every node's edge
/// list follows feasible_edges order, so the trivial edge is always last.
struct BeliefGraph {
    std::vector<Belief> nodes;
    std::vector<std::vector<Edge>> edges;
    std::vector<int> depth;
    std::map<Belief, std::size_t> index;
    bool truncated = false;
    std::string resolution;  // generator resolutions, empty without generators

    std::size_t size() const { return nodes.size(); }
    std::optional<std::size_t> find(const Belief& p) const;
};

BeliefGraph build_graph(const Instance& inst, GraphLimits limits = {});

enum class ValueStatus {
    Exact,               // rational policy-iteration solve
    Certified,           // a-priori entropy bound available
    HeuristicFixedPoint, // stabilization window only
    LowerBoundOnly,      // truncated graph
};

std::string to_string(ValueStatus s);

struct ValueTable {
    std::vector<std::vector<double>> levels;                      // levels[n][node]
    std::vector<std::vector<std::size_t>> argmax;                 // argmax[n][node], n >= 1
    std::optional<std::vector<std::vector<Rational>>> exact_levels;

    std::vector<double> v_inf;
    std::optional<std::vector<Rational>> v_inf_exact;
    std::optional<std::vector<std::size_t>> v_inf_policy;         // optimal edge per node (exact solve)
    ValueStatus status = ValueStatus::HeuristicFixedPoint;
    int iterations = 0;
    std::optional<double> apriori_error;   // log|Omega| * Vmax / (n * delta)
    std::optional<double> cross_check_gap; // |float VI - exact| sup over nodes
    bool truncated = false;
    std::string resolution;

    bool has_limit() const { return !v_inf.empty(); }
};

/// Dynamic program over graph edges for levels 0..n. Exact rational
/// levels are filled in as well when the utility is point-valued.
ValueTable value_recursion(const BeliefGraph& graph, const Instance& inst, int n);

/// Iterates the recursion to its limit and attaches v_inf.
ValueTable value_limit(const BeliefGraph& graph, const Instance& inst, const Tolerances& tol = {});

/// Optimal value of stopping anywhere in the graph, exactly, with the
/// maximizing stationary policy; requires exact node utilities.
struct ExactSolve {
    std::vector<Rational> value;
    std::vector<std::size_t> policy;  // chosen edge per node
    int rounds = 0;
};
ExactSolve solve_exact(const BeliefGraph& graph, const std::vector<Rational>& v);

struct CertificateViolation {
    std::string kind;  // "dominance" or "superharmonic"
    std::size_t node = 0;
    std::string edge;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct CertificateVerdict {
    bool passed = true;
    std::vector<CertificateViolation> violations;
};

/// g must give one value per node. Throws StructuralError when it does not.
CertificateVerdict check_certificate(const std::vector<double>& g, const BeliefGraph& graph, const Instance& inst,
                                     double value_eps = 1e-9);

struct FiniteStepsVerdict {
    bool sufficient = false;
    double gap = 0.0;
    std::optional<std::vector<double>> certificate;
};

FiniteStepsVerdict finite_steps_sufficient(const BeliefGraph& graph, const ValueTable& table, int n,
                                           double value_eps = 1e-9);

struct BilinearResult {
    bool refused = false;
    std::string reason;
    std::string witness;
    std::vector<Rational> coefficients;  // c1 (xy), c2 (x), c3 (y), c4 (1)
    Rational bound;
    std::size_t constraints = 0;
};

/// States are ordered 00, 01, 10, 11 with first marginal x = p(10) + p(11)
/// and second marginal y = p(01) + p(11).
BilinearResult bilinear_certificate(const Instance& inst, const BeliefGraph& graph, int grid_resolution = 8);

struct ConvergenceCheck {
    double lhs = 0.0;  // v_{n_eps}(mu)
    double rhs = 0.0;  // v_inf(mu) - eps (Vmax - Vmin)
    double slack = 0.0;
    std::optional<Rational> exact_slack;
};

/// Throws InternalConsistencyError when the bound fails beyond value_eps.
ConvergenceCheck convergence_bound(const Rational& eps, int n_eps, const Instance& inst, const ValueTable& table,
                                   double value_eps = 1e-9);

} // namespace persuasion
