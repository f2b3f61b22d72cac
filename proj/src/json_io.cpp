#include "ltvpc/json_io.hpp"

#include <cinttypes>
#include <cstdio>

#include "ltvpc/errors.hpp"

namespace ltvpc {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& mat) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix_from_json: expected nested arrays");
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd mat(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw ConfigError("matrix_from_json: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) mat(i, c) = j[i][c].get<double>();
  }
  return mat;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

json system_to_json(const LtvSystem& sys) {
  json j;
  j["T"] = sys.T;
  j["n"] = sys.n;
  j["m"] = sys.m;
  j["A"] = json::array();
  j["B"] = json::array();
  j["w"] = json::array();
  for (int t = 0; t < sys.T; ++t) {
    j["A"].push_back(matrix_to_json(sys.A[t]));
    j["B"].push_back(matrix_to_json(sys.B[t]));
    j["w"].push_back(vector_to_json(sys.w[t]));
  }
  j["x0"] = vector_to_json(sys.x0);
  return j;
}

LtvSystem system_from_json(const json& j) {
  LtvSystem sys;
  sys.T = j.at("T").get<int>();
  sys.n = j.at("n").get<int>();
  sys.m = j.at("m").get<int>();
  for (const auto& a : j.at("A")) sys.A.push_back(matrix_from_json(a));
  for (const auto& b : j.at("B")) sys.B.push_back(matrix_from_json(b));
  for (const auto& w : j.at("w")) sys.w.push_back(vector_from_json(w));
  sys.x0 = vector_from_json(j.at("x0"));
  sys.validate();
  return sys;
}

json solve_result_to_json(const SolveResult& res) {
  json j;
  j["value"] = res.value;
  j["grad_norm"] = res.grad_norm;
  j["iterations"] = res.iterations;
  j["states"] = json::array();
  for (const auto& s : res.states) j["states"].push_back(vector_to_json(s));
  j["controls"] = json::array();
  for (const auto& c : res.controls) j["controls"].push_back(vector_to_json(c));
  return j;
}

json run_record_to_json(const RunRecord& rec) {
  json j;
  j["controller"] = rec.tag.label();
  j["total_cost"] = rec.total_cost;
  j["dyn_residual"] = rec.trajectory.dyn_residual;
  j["per_step_cost"] = rec.per_step_cost;
  j["solver_iterations"] = rec.solver_iterations;
  j["max_terminal_gap"] = rec.max_terminal_gap;
  return j;
}

json theory_constants_to_json(const TheoryConstants& tc) {
  json j;
  j["a"] = tc.a;
  j["b"] = tc.b;
  j["b_prime"] = tc.b_prime;
  j["sigma"] = tc.sigma;
  j["d"] = tc.d;
  j["m_f"] = tc.m_f;
  j["l_f"] = tc.l_f;
  j["m_c"] = tc.m_c;
  j["l_c"] = tc.l_c;
  j["ell"] = tc.ell;
  j["L0"] = tc.L0;
  j["lambda0"] = tc.lambda0;
  j["lambda"] = tc.lambda;
  j["C0"] = tc.C0;
  j["C"] = tc.C;
  j["L4"] = tc.L4;
  j["C_below_one"] = tc.c_below_one;
  json per_p = json::array();
  for (int p = tc.d; p <= 2 * tc.d - 1; ++p) {
    json row;
    row["p"] = p;
    row["C_of_p"] = tc.C_of_p(p);
    row["L1_of_p"] = tc.L1_of_p(p);
    row["L1_appendix_of_p"] = tc.L1_appendix_of_p(p);
    row["L2_of_p"] = tc.L2_of_p(p);
    per_p.push_back(std::move(row));
  }
  j["window_constants"] = std::move(per_p);
  return j;
}

json thresholds_to_json(const WindowThresholds& th) {
  json j;
  j["k_regret"] = th.k_regret;
  j["k_competitive"] = th.k_competitive;
  j["h_replan"] = th.h_replan;
  j["cr_coefficient"] = th.cr_coefficient;
  j["delta"] = th.delta;
  j["epsilon"] = th.epsilon;
  return j;
}

json sensitivity_to_json(const SensitivityReport& rep) {
  json j;
  j["trials"] = rep.trials;
  j["violations"] = rep.violations;
  j["max_violation_ratio"] = rep.max_violation_ratio;
  j["deviation"] = rep.deviation;
  j["envelope"] = rep.envelope;
  j["lambda_fit"] = finite_or_null(rep.lambda_fit);
  j["lambda_theory"] = rep.lambda_theory;
  return j;
}

json check_to_json(const CheckReport& rep) {
  json j;
  j["trials"] = rep.trials;
  j["violations"] = rep.violations;
  j["max_ratio"] = rep.max_ratio;
  if (!rep.per_h_ratio.empty()) j["per_h_ratio"] = rep.per_h_ratio;
  return j;
}

json banded_to_json(const BandedDecayReport& rep) {
  json j;
  j["samples"] = rep.samples;
  j["violations"] = rep.violations;
  j["max_excess"] = rep.max_excess;
  j["a0"] = rep.a0;
  j["b0"] = rep.b0;
  j["gamma"] = rep.gamma;
  return j;
}

json regret_sweep_to_json(const RegretSweep& sweep) {
  json j;
  j["lambda_theory"] = sweep.lambda_theory;
  j["fit_slope"] = finite_or_null(sweep.fit_slope);
  j["fit_r2"] = finite_or_null(sweep.fit_r2);
  j["fit_points"] = sweep.fit_points;
  json rows = json::array();
  for (const auto& row : sweep.rows) {
    json r;
    r["k"] = row.k;
    r["cost_alg"] = row.cost_alg;
    r["cost_opt"] = row.cost_opt;
    r["regret"] = row.regret;
    r["bound_shape"] = row.bound_shape;
    r["failed"] = row.failed;
    if (row.failed) r["error"] = row.error;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

json iss_to_json(const IssReport& rep) {
  json j;
  j["k"] = rep.k;
  j["k_threshold"] = rep.k_threshold;
  j["checked"] = rep.checked;
  j["violations"] = rep.violations;
  j["max_ratio"] = rep.max_ratio;
  return j;
}

json competitive_to_json(const CompetitiveReport& rep) {
  json j;
  j["k"] = rep.k;
  j["k_threshold"] = rep.k_threshold;
  j["cost_alg"] = rep.cost_alg;
  j["cost_opt"] = rep.cost_opt;
  j["ratio"] = rep.ratio;
  j["bound"] = rep.bound;
  j["potential_sum"] = rep.potential_sum;
  j["potential_bound"] = rep.potential_bound;
  j["ratio_ok"] = rep.ratio_ok;
  j["potential_ok"] = rep.potential_ok;
  j["lambda"] = rep.lambda;
  j["C"] = rep.C;
  return j;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string run_record_csv(const RunRecord& rec) {
  std::string out = "t,x_norm,u_norm,step_cost\n";
  const int T = static_cast<int>(rec.per_step_cost.size());
  for (int t = 1; t <= T; ++t) {
    out += std::to_string(t);
    out += ',';
    out += format_double(rec.trajectory.states[t].norm());
    out += ',';
    out += format_double(rec.trajectory.controls[t - 1].norm());
    out += ',';
    out += format_double(rec.per_step_cost[t - 1]);
    out += '\n';
  }
  return out;
}

std::string regret_sweep_csv(const RegretSweep& sweep) {
  std::string out = "k,cost_alg,cost_opt,regret,bound_shape\n";
  for (const auto& row : sweep.rows) {
    if (row.failed) continue;
    out += std::to_string(row.k);
    out += ',';
    out += format_double(row.cost_alg);
    out += ',';
    out += format_double(row.cost_opt);
    out += ',';
    out += format_double(row.regret);
    out += ',';
    out += format_double(row.bound_shape);
    out += '\n';
  }
  return out;
}

std::string content_digest(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
  return buf;
}

}  // namespace ltvpc
