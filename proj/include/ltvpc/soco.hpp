#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "ltvpc/costs.hpp"
#include "ltvpc/solver.hpp"
#include "ltvpc/system.hpp"

namespace ltvpc {

/// Transition cost between consecutive decision points: c(cur, prev, w).
/// Gradients and Hessian blocks are taken with respect to (cur, prev).
struct SocoSwitchingCost {
  int exo_dim = 0;  // dimension of w
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      value;
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::VectorXd&, Eigen::VectorXd&)>
      gradient;
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::MatrixXd&, Eigen::MatrixXd&, Eigen::MatrixXd&)>
      hessian;  // fills H_cc, H_cp, H_pp
};

/// Fully actuated online-optimization instance over p periods: decision
/// points x_1..x_{p-1} between fixed endpoints, hitting costs on the interior
/// points, switching costs on every consecutive pair.
struct SocoProblem {
  int n = 0;
  int p = 0;
  std::vector<CostFn> hitting;              // p-1 entries
  std::vector<SocoSwitchingCost> switching;  // p entries
  std::vector<Eigen::VectorXd> exo;          // p entries, w_0..w_{p-1}
  double mu = 0.0;   // strong convexity of the hitting costs
  double ell = 0.0;  // smoothness of the switching costs in all arguments
};

struct SocoSolution {
  std::vector<Eigen::VectorXd> interior;  // x_1..x_{p-1}
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Damped Newton on the stacked interior points (the objective is
/// mu-strongly convex, so the factorization never degenerates).
SocoSolution solve_soco(const SocoProblem& problem, const Eigen::VectorXd& x_first,
                        const Eigen::VectorXd& x_last, const SolverOptions& opts = {});

/// Random instance with SPD quadratic hitting costs and convex quadratic
/// switching costs c(cur, prev, w) = |cur - G prev - w|^2_S / 2.
SocoProblem make_quadratic_soco(int n, int p, std::uint64_t seed);

/// Reduction of a dynamics-constrained segment to a fully actuated problem:
/// one decision point every d steps of the segment starting at time t, with
/// the segment's optimal transition cost as the switching cost. The returned
/// oracles hold references to sys and model.
SocoProblem make_reduction_soco(const LtvSystem& sys, const CostModel& model, int t, int d,
                                int segments);

}  // namespace ltvpc
