#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ltvpc/costs.hpp"
#include "ltvpc/system.hpp"

// Reference solvers used to cross-check the production path. They share no
// code with the Newton solver: the quadratic oracle assembles the full
// first-order system over stacked states, controls, and multipliers; the
// first-order oracle evaluates everything through step-by-step rollouts and
// adjoint recursions.
namespace ltvpc::testing {

struct OracleResult {
  std::vector<Eigen::VectorXd> states;    // y_0..y_p
  std::vector<Eigen::VectorXd> controls;  // v_0..v_{p-1}
  double value = 0.0;
  int iterations = 0;
};

/// Direct linear solve of the stationarity system for quadratic costs.
/// Pass terminal_state to pin y_p; pass terminal_weight to add a quadratic
/// terminal cost y_p' P y_p / 2.
OracleResult solve_quadratic_stationarity(const LtvSystem& sys,
                                          const std::vector<Eigen::MatrixXd>& Q,
                                          const std::vector<Eigen::MatrixXd>& R, int t, int p,
                                          const Eigen::VectorXd& x,
                                          const std::vector<Eigen::VectorXd>& zeta,
                                          const std::optional<Eigen::VectorXd>& terminal_state,
                                          const std::optional<Eigen::MatrixXd>& terminal_weight);

/// Projected gradient descent with step 1/L, run to first-order stationarity
/// (or the iteration cap). Handles any twice-differentiable cost model.
OracleResult solve_projected_gradient(const LtvSystem& sys, const CostModel& model, int t, int p,
                                      const Eigen::VectorXd& x,
                                      const std::vector<Eigen::VectorXd>& zeta,
                                      const std::optional<Eigen::VectorXd>& terminal_state,
                                      int max_iter = 100000);

}  // namespace ltvpc::testing
