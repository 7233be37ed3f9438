#pragma once

#include "persuasion/belief.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace persuasion {

struct UtilitySpec {
    enum class Kind { FiniteAction, PointIndicator, Builtin };
    Kind kind = Kind::PointIndicator;

    // finite_action
    std::vector<std::string> actions;
    std::vector<std::vector<double>> receiver;  // [state][action]
    std::vector<std::vector<double>> sender;    // [state][action]
    double tie_eps = 1e-12;

    // point_indicator
    std::vector<Belief> points;
    Rational hi{1};
    Rational lo{0};

    // builtin
    std::string name;

    friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;
};

struct GeneratorSpec {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();
    int resolution = 1;

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct LabeledExperiment {
    std::string label;
    Experiment experiment;

    friend bool operator==(const LabeledExperiment&, const LabeledExperiment&) = default;
};

struct Instance {
    std::string name;
    std::string notes;
    std::vector<std::string> states;
    Belief prior;
    UtilitySpec utility;
    std::vector<LabeledExperiment> experiments;
    std::vector<GeneratorSpec> generators;
    std::optional<int> h;
    std::optional<double> delta;
    std::optional<std::pair<double, double>> v_bounds;
    bool assume_positive = false;
    bool product_structure = false;

    std::size_t dim() const { return states.size(); }

    friend bool operator==(const Instance&, const Instance&) = default;
};

nlohmann::json rational_to_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json belief_to_json(const Belief& p);
Belief belief_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json experiment_to_json(const Experiment& e);
Experiment experiment_from_json(const nlohmann::json& j, const std::string& path);

/// Parses and validates an instance document. Every failure is a
/// ValidationError whose path points into the document.
Instance load_instance(const std::string& text);
Instance load_instance_file(const std::string& path);
std::string save_instance(const Instance& inst);
nlohmann::json instance_to_json(const Instance& inst);

/// Re-runs all document-level validation on an in-memory instance.
void validate_instance(const Instance& inst);

/// Explicit experiments with expectation p (list order), then generator
/// output at p (generator order), then the trivial experiment.
std::vector<LabeledExperiment> feasible_edges(const Instance& inst, const Belief& p);
std::vector<Experiment> feasible_at(const Instance& inst, const Belief& p);

double eval_v(const Instance& inst, const Belief& p);

/// Exact utility value; available only for point_indicator utilities.
std::optional<Rational> eval_v_exact(const Instance& inst, const Belief& p);
bool has_exact_utility(const Instance& inst);

/// [V_lower, V_upper], declared or derived from the utility.
std::pair<double, double> utility_bounds(const Instance& inst);

struct SupportBoundReport {
    std::size_t h = 1;
    std::string witness;  // label of an experiment attaining h
};

/// Throws AssumptionError naming the experiment when a declared h is exceeded.
SupportBoundReport check_support_bound(const Instance& inst);

struct EntropyGapReport {
    bool vacuous = true;            // no nontrivial experiment inspected
    double infimum = std::numeric_limits<double>::infinity();
    std::string witness;            // label of the minimizing experiment
    std::optional<Belief> witness_at;
    std::optional<double> delta;    // infimum when it clears delta_floor
};

inline constexpr double kDefaultDeltaFloor = 1e-9;

/// Infimum entropy gap over explicit experiments and over generator output at
/// each belief of `sample` (the prior when empty).
EntropyGapReport check_entropy_gap(const Instance& inst, const std::vector<Belief>& sample = {},
                                   double delta_floor = kDefaultDeltaFloor);

/// Same instance with every generator refined by `steps` of its own refinement unit.
Instance refined(const Instance& inst, int steps);

/// Same instance with a different prior.
Instance with_prior(const Instance& inst, const Belief& prior);

} // namespace persuasion
