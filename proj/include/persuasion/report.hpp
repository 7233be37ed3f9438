#pragma once

#include "persuasion/engine.hpp"
#include "persuasion/structure.hpp"
#include "persuasion/value_solver.hpp"

#include <json.hpp>

#include <string>

namespace persuasion {

nlohmann::json to_json(const Tolerances& tol);
nlohmann::json to_json(const ValueTable& table, const BeliefGraph& graph, bool whole_table);
nlohmann::json to_json(const CertificateVerdict& verdict);
nlohmann::json to_json(const UtilityEstimate& est);
nlohmann::json to_json(const SimulationReport& rep);
nlohmann::json to_json(const MarkovVerdict& verdict);
nlohmann::json to_json(const EntropyGapReport& gap);
nlohmann::json to_json(const ConcaveClosureResult& closure);
nlohmann::json to_json(const ImplementabilityReport& rep);
nlohmann::json to_json(const OptimalVerdict& verdict);
nlohmann::json to_json(const Theorem2Report& rep);

/// Self-contained `analyze` record for one instance.
nlohmann::json analyze_report(const Instance& inst, const AnalysisOptions& opt);

/// Planar coordinates of a point of the 2-simplex: vertex 0 at (0,0), vertex 1
/// at (1,0), vertex 2 at (1/2, sqrt(3)/2).
std::pair<double, double> simplex_xy(const Belief& p);

nlohmann::json export_json(const BeliefGraph& graph, const ValueTable& table);
std::string export_dot(const BeliefGraph& graph, const ValueTable& table);
std::string export_csv(const BeliefGraph& graph, const ValueTable& table);

} // namespace persuasion
