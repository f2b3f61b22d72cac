#pragma once

#include <json.hpp>
#include <string>

#include "ltvpc/analysis.hpp"
#include "ltvpc/controllers.hpp"
#include "ltvpc/system.hpp"

namespace ltvpc {

inline constexpr const char* kLibraryVersion = "0.1.0";

nlohmann::json system_to_json(const LtvSystem& sys);
LtvSystem system_from_json(const nlohmann::json& j);

nlohmann::json solve_result_to_json(const SolveResult& res);
nlohmann::json run_record_to_json(const RunRecord& rec);
nlohmann::json theory_constants_to_json(const TheoryConstants& tc);
nlohmann::json thresholds_to_json(const WindowThresholds& th);
nlohmann::json sensitivity_to_json(const SensitivityReport& rep);
nlohmann::json check_to_json(const CheckReport& rep);
nlohmann::json banded_to_json(const BandedDecayReport& rep);
nlohmann::json regret_sweep_to_json(const RegretSweep& sweep);
nlohmann::json iss_to_json(const IssReport& rep);
nlohmann::json competitive_to_json(const CompetitiveReport& rep);

/// Round-trip-exact decimal rendering (17 significant digits).
std::string format_double(double v);

/// Stage-cost table for a run: header t,x_norm,u_norm,step_cost and one row
/// per charged step t = 1..T.
std::string run_record_csv(const RunRecord& rec);

/// Sweep table with header k,cost_alg,cost_opt,regret,bound_shape.
std::string regret_sweep_csv(const RegretSweep& sweep);

/// FNV-1a content hash, rendered as 16 hex digits.
std::string content_digest(const std::string& bytes);

}  // namespace ltvpc
