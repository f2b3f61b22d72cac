#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ltvpc/analysis.hpp"
#include "ltvpc/controllers.hpp"
#include "ltvpc/errors.hpp"
#include "ltvpc/json_io.hpp"
#include "ltvpc/parallel.hpp"
#include "ltvpc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ltvpc;

namespace {

struct ControllerSpec {
  std::string type;  // PCk | PCkh | OPT
  int k = 0;
  int h = 0;
  std::string terminal = "zero";
};

struct VerificationSpec {
  int trials = 50;
  double delta = 0.5;
  double epsilon = 0.5;
  double eta = 1.0;
  int t = 0;
  int p = 4;
  int h = 1;
  int k = 0;  // 0 means "use the computed threshold"
  int samples = 20;
  int matrices = 100;
  int blocks = 8;
  int block_dim = 2;
  int segments = 3;
  int soco_n = 2;
  int soco_p = 8;
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::uint64_t seed = 0;
  json cost_spec;
  std::vector<ControllerSpec> controllers;
  VerificationSpec verification;
  std::string output_dir = "out";
  std::string digest;  // of the raw config bytes
};

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }

  ExperimentConfig cfg;
  cfg.digest = content_digest(bytes);
  if (!j.contains("instance")) throw ConfigError("config: missing 'instance' section");
  const json& inst = j.at("instance");
  if (!inst.contains("seed")) throw ConfigError("config: instance.seed is required");
  cfg.seed = inst.at("seed").get<std::uint64_t>();
  read_into(inst, "family", cfg.instance.family);
  read_into(inst, "n", cfg.instance.n);
  read_into(inst, "m", cfg.instance.m);
  read_into(inst, "T", cfg.instance.T);
  read_into(inst, "a_max", cfg.instance.a_max);
  read_into(inst, "b_scale", cfg.instance.b_scale);
  read_into(inst, "disturbance_bound", cfg.instance.disturbance_bound);
  read_into(inst, "x0_scale", cfg.instance.x0_scale);
  read_into(inst, "tracking_amplitude", cfg.instance.tracking_amplitude);
  read_into(inst, "inertia_base", cfg.instance.inertia_base);
  read_into(inst, "inertia_amplitude", cfg.instance.inertia_amplitude);
  read_into(inst, "damping", cfg.instance.damping);
  read_into(inst, "euler_step", cfg.instance.euler_step);

  cfg.cost_spec = j.contains("costs") ? j.at("costs") : json{{"family", "quadratic_iso"}};

  if (j.contains("controllers")) {
    for (const auto& c : j.at("controllers")) {
      ControllerSpec spec;
      spec.type = c.at("type").get<std::string>();
      read_into(c, "k", spec.k);
      read_into(c, "h", spec.h);
      read_into(c, "terminal", spec.terminal);
      if (spec.type != "PCk" && spec.type != "PCkh" && spec.type != "OPT")
        throw ConfigError("config: unknown controller type '" + spec.type + "'");
      if (spec.type != "OPT" && (spec.k < 1 || spec.k > cfg.instance.T))
        throw ConfigError("config: controller window k out of [1, T]");
      if (spec.type == "PCkh" && (spec.h < 1 || spec.h > cfg.instance.T))
        throw ConfigError("config: replan window h out of [1, T]");
      cfg.controllers.push_back(spec);
    }
  }

  if (j.contains("verification")) {
    const json& v = j.at("verification");
    read_into(v, "trials", cfg.verification.trials);
    read_into(v, "delta", cfg.verification.delta);
    read_into(v, "epsilon", cfg.verification.epsilon);
    read_into(v, "eta", cfg.verification.eta);
    read_into(v, "t", cfg.verification.t);
    read_into(v, "p", cfg.verification.p);
    read_into(v, "h", cfg.verification.h);
    read_into(v, "k", cfg.verification.k);
    read_into(v, "samples", cfg.verification.samples);
    read_into(v, "matrices", cfg.verification.matrices);
    read_into(v, "blocks", cfg.verification.blocks);
    read_into(v, "block_dim", cfg.verification.block_dim);
    read_into(v, "segments", cfg.verification.segments);
    read_into(v, "soco_n", cfg.verification.soco_n);
    read_into(v, "soco_p", cfg.verification.soco_p);
  }
  read_into(j, "output_dir", cfg.output_dir);
  return cfg;
}

CostModel build_costs(const ExperimentConfig& cfg, const LtvSystem& sys) {
  std::string family = cfg.cost_spec.value("family", std::string("quadratic_iso"));
  Rng rng(mix_seed(cfg.seed, 0xC057));
  if (family == "quadratic_iso") {
    double q = cfg.cost_spec.value("q", 1.0);
    double r = cfg.cost_spec.value("r", 1.0);
    std::vector<Eigen::MatrixXd> Q(sys.T, q * Eigen::MatrixXd::Identity(sys.n, sys.n));
    std::vector<Eigen::MatrixXd> R(sys.T, r * Eigen::MatrixXd::Identity(sys.m, sys.m));
    return quadratic_family(Q, R);
  }
  if (family == "quadratic_random") {
    double q_min = cfg.cost_spec.value("q_min", 1.0);
    double q_max = cfg.cost_spec.value("q_max", 2.0);
    double r_min = cfg.cost_spec.value("r_min", 1.0);
    double r_max = cfg.cost_spec.value("r_max", 2.0);
    std::vector<Eigen::MatrixXd> Q, R;
    for (int t = 0; t < sys.T; ++t) {
      Q.push_back(rng.spd(sys.n, q_min, q_max));
      R.push_back(rng.spd(sys.m, r_min, r_max));
    }
    return quadratic_family(Q, R);
  }
  if (family == "pseudo_huber") {
    double m = cfg.cost_spec.value("m", 1.0);
    double alpha = cfg.cost_spec.value("alpha", 1.0);
    return pseudo_huber_family(m, alpha, sys.n, sys.m, sys.T);
  }
  throw ConfigError("config: unknown cost family '" + family + "'");
}

TerminalCost terminal_from_name(const std::string& name, int n) {
  if (name == "zero") return TerminalCost::zero();
  if (name == "indicator") return TerminalCost::indicator();
  if (name == "smooth_quadratic") {
    CostFn fn;
    fn.dim = n;
    fn.strong_convexity = 1.0;
    fn.smoothness = 1.0;
    fn.value = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); };
    fn.gradient = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
    fn.hessian = [](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
      return Eigen::MatrixXd::Identity(x.size(), x.size());
    };
    return TerminalCost::smooth(fn);
  }
  throw ConfigError("config: unknown terminal cost '" + name + "'");
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

json stamp(const ExperimentConfig& cfg, json payload) {
  payload["config_digest"] = cfg.digest;
  payload["version"] = kLibraryVersion;
  return payload;
}

int cmd_simulate(const ExperimentConfig& cfg) {
  LtvSystem sys = generate_instance(cfg.instance, cfg.seed);
  CostModel model = build_costs(cfg, sys);
  if (cfg.controllers.empty()) throw ConfigError("simulate: no controllers declared");

  json summary;
  summary["runs"] = json::array();
  double opt_cost = -1.0;
  std::vector<RunRecord> records;
  for (const auto& spec : cfg.controllers) {
    RunRecord rec;
    if (spec.type == "OPT") {
      rec = run_opt(sys, model);
      opt_cost = rec.total_cost;
    } else if (spec.type == "PCk") {
      rec = run_pc_k(sys, model, spec.k, terminal_from_name(spec.terminal, sys.n));
    } else {
      rec = run_pc_kh(sys, model, spec.k, spec.h, terminal_from_name(spec.terminal, sys.n));
    }
    records.push_back(std::move(rec));
  }
  for (const auto& rec : records) {
    json entry = run_record_to_json(rec);
    if (opt_cost >= 0.0 && rec.tag.kind != ControllerKind::Opt)
      entry["regret"] = rec.total_cost - opt_cost;
    summary["runs"].push_back(std::move(entry));
    write_file(fs::path(cfg.output_dir) / ("trajectory_" + rec.tag.label() + ".csv"),
               run_record_csv(rec));
  }
  write_file(fs::path(cfg.output_dir) / "summary.json", stamp(cfg, summary).dump(2) + "\n");
  std::cout << "simulate: wrote " << records.size() << " run(s) to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_regret_sweep(const ExperimentConfig& cfg, int k_min, int k_max) {
  if (k_min < 1 || k_max > cfg.instance.T || k_min > k_max)
    throw ConfigError("regret-sweep: need 1 <= k_min <= k_max <= T");
  LtvSystem sys = generate_instance(cfg.instance, cfg.seed);
  CostModel model = build_costs(cfg, sys);
  std::vector<int> ks;
  for (int k = k_min; k <= k_max; ++k) ks.push_back(k);
  RegretSweep sweep = regret_sweep(sys, model, ks, TerminalCost::zero());
  write_file(fs::path(cfg.output_dir) / "regret_sweep.csv", regret_sweep_csv(sweep));
  write_file(fs::path(cfg.output_dir) / "regret_fit.json",
             stamp(cfg, regret_sweep_to_json(sweep)).dump(2) + "\n");
  std::cout << "regret-sweep: " << sweep.rows.size() << " rows, fit slope "
            << format_double(sweep.fit_slope) << ", r2 " << format_double(sweep.fit_r2) << "\n";
  return 0;
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& suite) {
  const VerificationSpec& v = cfg.verification;
  json payload;
  int violations = 0;

  if (suite == "banded") {
    int total_violations = 0;
    double max_excess = 0.0;
    std::vector<BandedDecayReport> reports(v.matrices);
    parallel_for(v.matrices, [&](int i) {
      auto [A, D] = random_block_tridiagonal(v.blocks, v.block_dim,
                                             mix_seed(cfg.seed, 0xAB00 + i));
      reports[i] = verify_banded_decay(A, D, v.block_dim, 2, v.samples,
                                       mix_seed(cfg.seed, 0xCD00 + i));
    });
    for (const auto& rep : reports) {
      total_violations += rep.violations;
      max_excess = std::max(max_excess, rep.max_excess);
    }
    payload["matrices"] = v.matrices;
    payload["samples_per_matrix"] = v.samples;
    payload["violations"] = total_violations;
    payload["max_excess"] = max_excess;
    violations = total_violations;
  } else if (suite == "sensitivity-soco") {
    int total_violations = 0;
    double max_ratio = 0.0;
    std::vector<SensitivityReport> reports(v.trials);
    parallel_for(v.trials, [&](int i) {
      SocoProblem pb = make_quadratic_soco(v.soco_n, v.soco_p, mix_seed(cfg.seed, 0x5A00 + i));
      reports[i] = verify_soco_sensitivity(pb, 1, 1, mix_seed(cfg.seed, 0x5B00 + i));
    });
    for (const auto& rep : reports) {
      total_violations += rep.violations;
      max_ratio = std::max(max_ratio, rep.max_violation_ratio);
    }
    LtvSystem sys = generate_instance(cfg.instance, cfg.seed);
    CostModel model = build_costs(cfg, sys);
    double mismatch = verify_soco_reduction(sys, model, v.t, v.segments, cfg.seed);
    payload["instances"] = v.trials;
    payload["violations"] = total_violations;
    payload["max_violation_ratio"] = max_ratio;
    payload["reduction_mismatch"] = mismatch;
    violations = total_violations + (mismatch > 1e-6 ? 1 : 0);
  } else if (suite == "constants" || suite == "sensitivity-ltv" || suite == "stability" ||
             suite == "smoothness" || suite == "iss" || suite == "competitive" ||
             suite == "potential") {
    LtvSystem sys = generate_instance(cfg.instance, cfg.seed);
    CostModel model = build_costs(cfg, sys);
    if (suite == "constants") {
      TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
      payload["constants"] = theory_constants_to_json(tc);
      payload["thresholds"] = thresholds_to_json(window_thresholds(tc, v.delta, v.epsilon));
    } else if (suite == "sensitivity-ltv") {
      SensitivityReport rep =
          verify_ltv_sensitivity(sys, model, v.t, v.p, v.h, v.trials, cfg.seed);
      payload = sensitivity_to_json(rep);
      violations = rep.violations;
    } else if (suite == "stability") {
      CheckReport rep =
          verify_opt_stability(sys, model, TerminalCost::zero(), v.t, v.p, v.trials, cfg.seed);
      payload = check_to_json(rep);
      violations = rep.violations;
    } else if (suite == "smoothness") {
      CheckReport value_rep =
          verify_cost_smoothness(sys, model, v.t, v.p, v.eta, v.trials, cfg.seed);
      TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
      CheckReport hess_rep = verify_switching_smoothness(
          sys, model, v.t, tc.d, std::max(1, v.trials / 10), mix_seed(cfg.seed, 0x51D0));
      payload["optimal_value"] = check_to_json(value_rep);
      payload["switching_hessian"] = check_to_json(hess_rep);
      violations = value_rep.violations + hess_rep.violations;
    } else if (suite == "iss") {
      TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
      long long threshold = k_regret_threshold(tc, v.delta);
      if (v.k <= 0 && threshold > sys.T)
        throw PreconditionError("iss: window threshold " + std::to_string(threshold) +
                                " exceeds the horizon T=" + std::to_string(sys.T));
      int k = v.k > 0 ? v.k : static_cast<int>(threshold);
      RunRecord rec = run_pc_k(sys, model, k, TerminalCost::zero());
      IssReport rep = verify_iss(rec, tc, v.delta, cfg.instance.disturbance_bound);
      payload = iss_to_json(rep);
      violations = rep.violations;
    } else if (suite == "competitive") {
      TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
      long long threshold = k_competitive_threshold(tc, v.epsilon);
      if (v.k <= 0 && threshold > sys.T)
        throw PreconditionError("competitive: window threshold " + std::to_string(threshold) +
                                " exceeds the horizon T=" + std::to_string(sys.T));
      int k = v.k > 0 ? v.k : static_cast<int>(threshold);
      CompetitiveReport rep = competitive_report(sys, model, k, v.epsilon);
      payload = competitive_to_json(rep);
      violations = (rep.ratio_ok ? 0 : 1) + (rep.potential_ok ? 0 : 1) +
                   (rep.ratio >= 1.0 - 1e-8 ? 0 : 1);
    } else {  // potential
      TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
      long long threshold = k_competitive_threshold(tc, v.epsilon);
      if (v.k <= 0 && threshold > sys.T)
        throw PreconditionError("potential: window threshold " + std::to_string(threshold) +
                                " exceeds the horizon T=" + std::to_string(sys.T));
      int k = v.k > 0 ? v.k : static_cast<int>(threshold);
      CompetitiveReport rep = competitive_report(sys, model, k, v.epsilon);
      RunRecord alg = run_pc_k(sys, model, k, TerminalCost::indicator());
      RunRecord opt = run_opt(sys, model);
      std::vector<double> phi = potential_series(alg, opt);
      payload["phi"] = phi;
      payload["phi0"] = phi.front();
      payload["potential_sum"] = rep.potential_sum;
      payload["potential_bound"] = rep.potential_bound;
      violations = (rep.potential_ok ? 0 : 1) + (phi.front() == 0.0 ? 0 : 1);
    }
  } else {
    throw ConfigError("verify: unknown suite '" + suite + "'");
  }

  write_file(fs::path(cfg.output_dir) / ("verify_" + suite + ".json"),
             stamp(cfg, payload).dump(2) + "\n");
  std::cout << "verify " << suite << ": " << (violations == 0 ? "ok" : "VIOLATIONS") << " ("
            << violations << " violation(s))\n";
  return violations == 0 ? 0 : 1;
}

int cmd_constants(const ExperimentConfig& cfg) {
  LtvSystem sys = generate_instance(cfg.instance, cfg.seed);
  CostModel model = build_costs(cfg, sys);
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  json payload;
  payload["constants"] = theory_constants_to_json(tc);
  payload["thresholds"] = thresholds_to_json(
      window_thresholds(tc, cfg.verification.delta, cfg.verification.epsilon));
  json stamped = stamp(cfg, payload);
  std::cout << stamped.dump(2) << "\n";
  write_file(fs::path(cfg.output_dir) / "constants.json", stamped.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive control on linear time-varying systems: simulation, "
               "sweeps, and bound verification"};
  app.require_subcommand(1);

  std::string config_path, suite;
  int k_min = 1, k_max = 1;

  CLI::App* simulate = app.add_subcommand("simulate", "run declared controllers");
  simulate->add_option("config", config_path, "experiment config (JSON)")->required();

  CLI::App* sweep = app.add_subcommand("regret-sweep", "regret over a window grid");
  sweep->add_option("config", config_path, "experiment config (JSON)")->required();
  sweep->add_option("--k-min", k_min, "smallest window")->required();
  sweep->add_option("--k-max", k_max, "largest window")->required();

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("config", config_path, "experiment config (JSON)")->required();
  verify->add_option("--suite", suite, "suite name")->required();

  CLI::App* constants = app.add_subcommand("constants", "print derived constants");
  constants->add_option("config", config_path, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (sweep->parsed()) return cmd_regret_sweep(cfg, k_min, k_max);
    if (verify->parsed()) return cmd_verify(cfg, suite);
    if (constants->parsed()) return cmd_constants(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
