#pragma once

#include <Eigen/Core>
#include <vector>

#include "ltvpc/costs.hpp"
#include "ltvpc/system.hpp"

namespace ltvpc {

/// Dense affine maps expressing a p-step segment rollout,
///   y = S_x x + S_v v + S_zeta zeta,
/// together with the window controllability matrix M (the last block row of
/// S_v), its pseudo-inverse, an orthonormal nullspace basis V, and the last
/// block row R_zeta of S_zeta. All feasible controls hitting a terminal state
/// z are v = M_dagger (z - Phi x - R_zeta zeta) + V r with r free.
struct StackedMaps {
  int t = 0;
  int p = 0;
  int n = 0;
  int m = 0;
  Eigen::MatrixXd S_x;       // (p+1)n x n
  Eigen::MatrixXd S_v;       // (p+1)n x mp
  Eigen::MatrixXd S_zeta;    // (p+1)n x np
  Eigen::MatrixXd M;         // n x mp
  Eigen::MatrixXd M_dagger;  // mp x n
  Eigen::MatrixXd V;         // mp x (mp - n)
  Eigen::MatrixXd R_zeta;    // n x np
};

struct SolveResult {
  std::vector<Eigen::VectorXd> states;    // y_0..y_p
  std::vector<Eigen::VectorXd> controls;  // v_0..v_{p-1}
  double value = 0.0;
  double grad_norm = 0.0;  // first-order residual in the reduced variable
  int iterations = 0;
};

struct SolverOptions {
  double grad_tol = 1e-9;  // scaled by 1 + |value|
  double eps_dyn = 1e-8;
  int max_iter = 200;
};

/// Builds the full stacked maps including M_dagger and the nullspace basis.
/// Throws RankError when M is row-rank deficient.
StackedMaps build_stacked_maps(const LtvSystem& sys, int t, int p);

/// Minimizes the p-step segment cost from state x under disturbances zeta
/// with terminal cost F, by damped Newton over the stacked controls.
/// IndicatorOrigin dispatches to solve_terminal_constraint with z = 0.
SolveResult solve_terminal_cost(const LtvSystem& sys, const CostModel& model,
                                const TerminalCost& F, int t, int p, const Eigen::VectorXd& x,
                                const std::vector<Eigen::VectorXd>& zeta,
                                const SolverOptions& opts = {});

/// Minimizes the p-step segment cost subject to the strict terminal
/// constraint y_p = z, via the nullspace parameterization of the feasible
/// controls. Requires a window long enough for z to be reachable.
SolveResult solve_terminal_constraint(const LtvSystem& sys, const CostModel& model, int t, int p,
                                      const Eigen::VectorXd& x,
                                      const std::vector<Eigen::VectorXd>& zeta,
                                      const Eigen::VectorXd& z, const SolverOptions& opts = {});

/// Optimal value of the terminal-constrained segment problem.
double optimal_value(const LtvSystem& sys, const CostModel& model, int t, int p,
                     const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& zeta,
                     const Eigen::VectorXd& z, const SolverOptions& opts = {});

/// Optimal value minus the terminal hitting cost f_{t+p}(z).
double switching_cost(const LtvSystem& sys, const CostModel& model, int t, int p,
                      const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& zeta,
                      const Eigen::VectorXd& z, const SolverOptions& opts = {});

/// Value, exact gradient, and exact Hessian of the switching cost in the
/// stacked argument (x, zeta, z); the Hessian is the Schur complement of the
/// reduced-variable block. Intended for short windows.
struct SwitchingCostDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;  // ordered (x, zeta, z)
  Eigen::MatrixXd hessian;
};
SwitchingCostDerivatives switching_cost_derivatives(const LtvSystem& sys, const CostModel& model,
                                                    int t, int p, const Eigen::VectorXd& x,
                                                    const std::vector<Eigen::VectorXd>& zeta,
                                                    const Eigen::VectorXd& z,
                                                    const SolverOptions& opts = {});

/// Full-horizon solve from x0 under the recorded disturbances, zero terminal
/// cost.
SolveResult offline_optimal(const LtvSystem& sys, const CostModel& model,
                            const SolverOptions& opts = {});

/// Worst dynamics defect of a solved segment starting at time t under the
/// disturbances the segment was solved with.
double segment_residual(const LtvSystem& sys, int t, const SolveResult& res,
                        const std::vector<Eigen::VectorXd>& zeta);

/// Concatenates a sequence of vectors.
Eigen::VectorXd stack_vectors(const std::vector<Eigen::VectorXd>& seq);

}  // namespace ltvpc
