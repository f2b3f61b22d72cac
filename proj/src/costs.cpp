#include "ltvpc/costs.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ltvpc/errors.hpp"

namespace ltvpc {

TerminalCost TerminalCost::smooth(CostFn fn) {
  if (!fn.value || !fn.gradient || !fn.hessian)
    throw ValidationError("TerminalCost::smooth: all oracles must be set");
  if (std::abs(fn.value(Eigen::VectorXd::Zero(fn.dim))) > 1e-12)
    throw ValidationError("TerminalCost::smooth: value at the origin must be zero");
  return TerminalCost{TerminalKind::Smooth, std::move(fn)};
}

namespace {

CostFn make_quadratic(const Eigen::MatrixXd& Q, double eig_min, double eig_max) {
  CostFn fn;
  fn.dim = static_cast<int>(Q.rows());
  fn.strong_convexity = eig_min;
  fn.smoothness = eig_max;
  fn.value = [Q](const Eigen::VectorXd& x) { return 0.5 * x.dot(Q * x); };
  fn.gradient = [Q](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Q * x; };
  fn.hessian = [Q](const Eigen::VectorXd&) { return Q; };
  return fn;
}

CostFn make_pseudo_huber(double m, double alpha, int dim) {
  CostFn fn;
  fn.dim = dim;
  fn.strong_convexity = m;
  fn.smoothness = m + alpha;
  fn.value = [m, alpha](const Eigen::VectorXd& x) {
    double s = 0.5 * m * x.squaredNorm();
    for (Eigen::Index i = 0; i < x.size(); ++i) s += alpha * (std::sqrt(1.0 + x(i) * x(i)) - 1.0);
    return s;
  };
  fn.gradient = [m, alpha](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd g = m * x;
    for (Eigen::Index i = 0; i < x.size(); ++i) g(i) += alpha * x(i) / std::sqrt(1.0 + x(i) * x(i));
    return g;
  };
  fn.hessian = [m, alpha](const Eigen::VectorXd& x) {
    Eigen::MatrixXd h = m * Eigen::MatrixXd::Identity(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      h(i, i) += alpha * std::pow(1.0 + x(i) * x(i), -1.5);
    return h;
  };
  return fn;
}

/// Minimum and maximum eigenvalues of a symmetric matrix; rejects asymmetric
/// or non-positive-definite input.
std::pair<double, double> spd_eigen_range(const Eigen::MatrixXd& mat, const char* what) {
  if (mat.rows() != mat.cols()) throw ValidationError(std::string(what) + ": not square");
  double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, mat.cwiseAbs().maxCoeff()))
    throw ValidationError(std::string(what) + ": not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0.0) throw ValidationError(std::string(what) + ": not positive definite");
  return {lo, hi};
}

CostFn shifted(const CostFn& fn, const Eigen::VectorXd& shift) {
  CostFn out = fn;
  out.value = [fn, shift](const Eigen::VectorXd& x) { return fn.value(x + shift); };
  out.gradient = [fn, shift](const Eigen::VectorXd& x) { return fn.gradient(x + shift); };
  out.hessian = [fn, shift](const Eigen::VectorXd& x) { return fn.hessian(x + shift); };
  return out;
}

}  // namespace

CostModel quadratic_family(const std::vector<Eigen::MatrixXd>& Q,
                           const std::vector<Eigen::MatrixXd>& R) {
  if (Q.empty() || Q.size() != R.size())
    throw ValidationError("quadratic_family: Q and R must be non-empty and equally long");
  const int T = static_cast<int>(Q.size());
  CostModel model;
  model.f.reserve(T);
  model.c.reserve(T);
  model.m_f = model.m_c = std::numeric_limits<double>::infinity();
  model.l_f = model.l_c = 0.0;
  for (int t = 0; t < T; ++t) {
    auto [qlo, qhi] = spd_eigen_range(Q[t], "quadratic_family: Q");
    auto [rlo, rhi] = spd_eigen_range(R[t], "quadratic_family: R");
    model.f.push_back(make_quadratic(Q[t], qlo, qhi));
    model.c.push_back(make_quadratic(R[t], rlo, rhi));
    model.m_f = std::min(model.m_f, qlo);
    model.m_c = std::min(model.m_c, rlo);
    if (t < T - 1 || T == 1) model.l_f = std::max(model.l_f, qhi);
    model.l_c = std::max(model.l_c, rhi);
  }
  return model;
}

CostModel pseudo_huber_family(double m, double alpha, int state_dim, int control_dim, int T) {
  if (m <= 0.0) throw ValidationError("pseudo_huber_family: m must be > 0");
  if (alpha < 0.0) throw ValidationError("pseudo_huber_family: alpha must be >= 0");
  if (state_dim <= 0 || control_dim <= 0 || T <= 0)
    throw ValidationError("pseudo_huber_family: dimensions must be positive");
  CostModel model;
  model.f.assign(T, make_pseudo_huber(m, alpha, state_dim));
  model.c.assign(T, make_pseudo_huber(m, alpha, control_dim));
  model.m_f = model.m_c = m;
  model.l_f = model.l_c = m + alpha;
  return model;
}

std::pair<CostModel, LtvSystem> recenter_costs(const CostModel& model, const LtvSystem& sys,
                                               const std::vector<Eigen::VectorXd>& f_min,
                                               const std::vector<Eigen::VectorXd>& c_min) {
  const int T = sys.T;
  if (model.horizon() != T) throw ValidationError("recenter_costs: model horizon mismatch");
  if (static_cast<int>(f_min.size()) != T || static_cast<int>(c_min.size()) != T)
    throw ValidationError("recenter_costs: f_min and c_min must each have T entries");

  CostModel out = model;
  for (int t = 0; t < T; ++t) {
    if (f_min[t].size() != sys.n || c_min[t].size() != sys.m)
      throw ValidationError("recenter_costs: shift dimension mismatch");
    out.f[t] = shifted(model.f[t], f_min[t]);
    out.c[t] = shifted(model.c[t], c_min[t]);
  }

  // New coordinates: x'_t = x_t - theta_t with theta_t the minimizer of f_t
  // (theta_0 = 0, the initial state carries no cost), u'_t = u_t - phi_{t+1}
  // with phi_{t+1} the minimizer of c_{t+1}. Consistency of the shifted
  // dynamics forces w'_t = w_t + A_t theta_t + B_t phi_{t+1} - theta_{t+1}.
  LtvSystem shifted_sys = sys;
  auto theta = [&](int t) -> Eigen::VectorXd {
    return t == 0 ? Eigen::VectorXd::Zero(sys.n).eval() : f_min[t - 1];
  };
  for (int t = 0; t < T; ++t)
    shifted_sys.w[t] = sys.w[t] + sys.A[t] * theta(t) + sys.B[t] * c_min[t] - theta(t + 1);
  shifted_sys.x0 = sys.x0;  // theta_0 = 0
  return {out, shifted_sys};
}

}  // namespace ltvpc
