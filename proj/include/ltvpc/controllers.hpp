#pragma once

#include <string>
#include <vector>

#include "ltvpc/costs.hpp"
#include "ltvpc/solver.hpp"
#include "ltvpc/system.hpp"

namespace ltvpc {

enum class ControllerKind { PCk, PCkh, Opt };

struct ControllerTag {
  ControllerKind kind = ControllerKind::Opt;
  int k = 0;
  int h = 0;
  TerminalKind terminal = TerminalKind::Zero;

  std::string label() const;
};

/// Certified closed-loop run: realized trajectory, the per-step stage costs
/// f_t(x_t) + c_t(u_{t-1}) for t = 1..T, and per-decision solver statistics.
struct RunRecord {
  Trajectory trajectory;
  std::vector<double> per_step_cost;
  double total_cost = 0.0;
  ControllerTag tag;
  std::vector<int> solver_iterations;
  // Largest |y_p| over the zero-targeting decision solves; diagnostic only.
  double max_terminal_gap = 0.0;
};

/// Receding-horizon controller: commits the first planned control of a
/// k-step solve at t = 0..T-k-1, then commits the whole final k-step plan
/// (solved with zero terminal cost) at t = T-k.
RunRecord run_pc_k(const LtvSystem& sys, const CostModel& model, int k, const TerminalCost& F,
                   const SolverOptions& opts = {});

/// Variant committing h planned controls per solve. The horizon splits as
/// T = n0 h + m0 with k - h + 1 <= m0 <= k (the largest feasible m0 is
/// chosen); the final segment of length m0 is solved once with zero terminal
/// cost and committed wholesale.
RunRecord run_pc_kh(const LtvSystem& sys, const CostModel& model, int k, int h,
                    const TerminalCost& F = TerminalCost::zero(),
                    const SolverOptions& opts = {});

/// Full-horizon benchmark.
RunRecord run_opt(const LtvSystem& sys, const CostModel& model, const SolverOptions& opts = {});

}  // namespace ltvpc
