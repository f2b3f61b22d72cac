#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "ltvpc/system.hpp"

namespace ltvpc {

/// Twice-differentiable cost oracle, minimized at the origin with value zero,
/// carrying its declared strong-convexity and smoothness constants.
struct CostFn {
  int dim = 0;
  double strong_convexity = 0.0;  // m
  double smoothness = 0.0;        // l
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

/// Per-step state costs f_1..f_T and control costs c_1..c_T (stored 0-based:
/// f[t-1] is the cost charged to x_t, c[t-1] the cost charged to u_{t-1}).
struct CostModel {
  std::vector<CostFn> f;
  std::vector<CostFn> c;
  double m_f = 0.0;
  double l_f = 0.0;  // max over t <= T-1; the final state cost is exempt
  double m_c = 0.0;
  double l_c = 0.0;

  int horizon() const { return static_cast<int>(f.size()); }
};

enum class TerminalKind { Zero, IndicatorOrigin, Smooth };

/// Terminal cost attached to the last predictive state. IndicatorOrigin is a
/// structural variant (solvers treat it as the constraint y_p = 0); its value
/// oracle is never called.
struct TerminalCost {
  TerminalKind kind = TerminalKind::Zero;
  CostFn fn;  // Smooth only

  static TerminalCost zero() { return TerminalCost{}; }
  static TerminalCost indicator() { return TerminalCost{TerminalKind::IndicatorOrigin, {}}; }
  static TerminalCost smooth(CostFn fn);
};

/// f_t(x) = x'Q_t x / 2, c_t(u) = u'R_t u / 2. Constants are the extreme
/// eigenvalues across the sequences. Throws ValidationError on non-SPD input.
CostModel quadratic_family(const std::vector<Eigen::MatrixXd>& Q,
                           const std::vector<Eigen::MatrixXd>& R);

/// f(x) = (m/2)|x|^2 + alpha * sum_i (sqrt(1 + x_i^2) - 1), strongly convex
/// with modulus m and (m + alpha)-smooth; the same template on control space.
CostModel pseudo_huber_family(double m, double alpha, int state_dim, int control_dim, int T);

/// Shifts cost minimizers to the origin and folds the shifts into the
/// disturbances so that trajectories and total costs correspond exactly.
/// f_min[t-1] minimizes the original f_t (t = 1..T); c_min[t] minimizes
/// c_{t+1} (t = 0..T-1).
std::pair<CostModel, LtvSystem> recenter_costs(const CostModel& model, const LtvSystem& sys,
                                               const std::vector<Eigen::VectorXd>& f_min,
                                               const std::vector<Eigen::VectorXd>& c_min);

}  // namespace ltvpc
