#include "ltvpc/controllers.hpp"

#include <cmath>

#include "ltvpc/errors.hpp"

namespace ltvpc {

namespace {

std::vector<Eigen::VectorXd> window(const std::vector<Eigen::VectorXd>& w, int from, int len) {
  return {w.begin() + from, w.begin() + from + len};
}

/// Fills costs and residual certification from the realized sequences.
RunRecord finalize(const LtvSystem& sys, const CostModel& model, Trajectory traj,
                   ControllerTag tag, std::vector<int> iterations, double max_terminal_gap) {
  RunRecord rec;
  rec.per_step_cost.resize(sys.T);
  double total = 0.0;
  for (int t = 1; t <= sys.T; ++t) {
    double step =
        model.f[t - 1].value(traj.states[t]) + model.c[t - 1].value(traj.controls[t - 1]);
    rec.per_step_cost[t - 1] = step;
    total += step;
  }
  rec.total_cost = total;
  rec.trajectory = std::move(traj);
  rec.tag = tag;
  rec.solver_iterations = std::move(iterations);
  rec.max_terminal_gap = max_terminal_gap;
  return rec;
}

}  // namespace

std::string ControllerTag::label() const {
  switch (kind) {
    case ControllerKind::Opt:
      return "OPT";
    case ControllerKind::PCk: {
      std::string f = terminal == TerminalKind::Zero
                          ? "zero"
                          : (terminal == TerminalKind::IndicatorOrigin ? "indicator" : "smooth");
      return "PC_k" + std::to_string(k) + "_" + f;
    }
    case ControllerKind::PCkh:
      return "PC_k" + std::to_string(k) + "_h" + std::to_string(h);
  }
  return "unknown";
}

RunRecord run_pc_k(const LtvSystem& sys, const CostModel& model, int k, const TerminalCost& F,
                   const SolverOptions& opts) {
  if (k < 1 || k > sys.T) throw RangeError("run_pc_k: need 1 <= k <= T");
  if (model.horizon() != sys.T) throw ValidationError("run_pc_k: cost horizon mismatch");

  std::vector<Eigen::VectorXd> states(sys.T + 1), controls(sys.T);
  std::vector<int> iterations;
  double max_gap = 0.0;
  states[0] = sys.x0;
  for (int t = 0; t < sys.T - k; ++t) {
    SolveResult res = solve_terminal_cost(sys, model, F, t, k, states[t], window(sys.w, t, k), opts);
    iterations.push_back(res.iterations);
    if (F.kind == TerminalKind::IndicatorOrigin)
      max_gap = std::max(max_gap, res.states.back().norm());
    controls[t] = res.controls[0];
    states[t + 1] = sys.A[t] * states[t] + sys.B[t] * controls[t] + sys.w[t];
  }
  const int tail = sys.T - k;
  SolveResult res = solve_terminal_cost(sys, model, TerminalCost::zero(), tail, k, states[tail],
                                        window(sys.w, tail, k), opts);
  iterations.push_back(res.iterations);
  for (int j = 0; j < k; ++j) {
    controls[tail + j] = res.controls[j];
    states[tail + j + 1] =
        sys.A[tail + j] * states[tail + j] + sys.B[tail + j] * controls[tail + j] + sys.w[tail + j];
  }

  Trajectory traj;
  traj.states = std::move(states);
  traj.controls = std::move(controls);
  traj.dyn_residual = dynamics_residual(sys, traj.states, traj.controls);
  return finalize(sys, model, std::move(traj),
                  ControllerTag{ControllerKind::PCk, k, 0, F.kind}, std::move(iterations),
                  max_gap);
}

RunRecord run_pc_kh(const LtvSystem& sys, const CostModel& model, int k, int h,
                    const TerminalCost& F, const SolverOptions& opts) {
  if (h < 1 || h > k || k > sys.T) throw ConfigError("run_pc_kh: need 1 <= h <= k <= T");
  if (model.horizon() != sys.T) throw ValidationError("run_pc_kh: cost horizon mismatch");

  // T = n0 h + m0 with k - h + 1 <= m0 <= k; take the largest feasible m0.
  int m0 = -1;
  for (int cand = std::min(k, sys.T); cand >= std::max(1, k - h + 1); --cand) {
    if ((sys.T - cand) >= 0 && (sys.T - cand) % h == 0) {
      m0 = cand;
      break;
    }
  }
  if (m0 < 0)
    throw ConfigError("run_pc_kh: no horizon decomposition for T=" + std::to_string(sys.T) +
                      ", k=" + std::to_string(k) + ", h=" + std::to_string(h));
  const int n0 = (sys.T - m0) / h;

  std::vector<Eigen::VectorXd> states(sys.T + 1), controls(sys.T);
  std::vector<int> iterations;
  double max_gap = 0.0;
  states[0] = sys.x0;
  for (int q = 0; q < n0; ++q) {
    const int t = q * h;
    SolveResult res = solve_terminal_cost(sys, model, F, t, k, states[t], window(sys.w, t, k), opts);
    iterations.push_back(res.iterations);
    if (F.kind == TerminalKind::IndicatorOrigin)
      max_gap = std::max(max_gap, res.states.back().norm());
    for (int j = 0; j < h; ++j) {
      controls[t + j] = res.controls[j];
      states[t + j + 1] =
          sys.A[t + j] * states[t + j] + sys.B[t + j] * controls[t + j] + sys.w[t + j];
    }
  }
  const int tail = n0 * h;
  SolveResult res = solve_terminal_cost(sys, model, TerminalCost::zero(), tail, m0, states[tail],
                                        window(sys.w, tail, m0), opts);
  iterations.push_back(res.iterations);
  for (int j = 0; j < m0; ++j) {
    controls[tail + j] = res.controls[j];
    states[tail + j + 1] =
        sys.A[tail + j] * states[tail + j] + sys.B[tail + j] * controls[tail + j] + sys.w[tail + j];
  }

  Trajectory traj;
  traj.states = std::move(states);
  traj.controls = std::move(controls);
  traj.dyn_residual = dynamics_residual(sys, traj.states, traj.controls);
  return finalize(sys, model, std::move(traj), ControllerTag{ControllerKind::PCkh, k, h, F.kind},
                  std::move(iterations), max_gap);
}

RunRecord run_opt(const LtvSystem& sys, const CostModel& model, const SolverOptions& opts) {
  SolveResult res = offline_optimal(sys, model, opts);
  Trajectory traj = simulate(sys, res.controls);
  return finalize(sys, model, std::move(traj), ControllerTag{ControllerKind::Opt, 0, 0,
                                                             TerminalKind::Zero},
                  {res.iterations}, 0.0);
}

}  // namespace ltvpc
