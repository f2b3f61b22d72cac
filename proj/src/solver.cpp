#include "ltvpc/solver.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ltvpc/errors.hpp"

namespace ltvpc {

namespace {

constexpr double kSvCutoffRel = 1e-12;   // singular values below this (relative) count as zero
constexpr double kTerminalGapTol = 1e-10;
constexpr double kArmijoSlope = 1e-4;

/// Factor W with W'W equal to the symmetric PSD input (negative eigenvalues
/// from roundoff are clamped).
Eigen::MatrixXd psd_sqrt_factor(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return d.asDiagonal() * es.eigenvectors().transpose();
}

struct SegmentMaps {
  Eigen::MatrixXd S_x;
  Eigen::MatrixXd S_v;
  Eigen::MatrixXd S_zeta;
};

/// Row-block recurrence: row i of the maps is A_{t+i-1} times row i-1 plus a
/// fresh identity (or B) block on the diagonal.
SegmentMaps build_segment_maps(const LtvSystem& sys, int t, int p) {
  const int n = sys.n;
  const int m = sys.m;
  SegmentMaps maps;
  maps.S_x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p + 1) * n, n);
  maps.S_zeta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p + 1) * n,
                                      static_cast<Eigen::Index>(p) * n);
  maps.S_v = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p + 1) * n,
                                   static_cast<Eigen::Index>(p) * m);
  maps.S_x.topRows(n).setIdentity();
  for (int i = 1; i <= p; ++i) {
    const auto& At = sys.A[t + i - 1];
    maps.S_x.middleRows(static_cast<Eigen::Index>(i) * n, n) =
        At * maps.S_x.middleRows(static_cast<Eigen::Index>(i - 1) * n, n);
    if (i > 1) {
      maps.S_zeta.block(static_cast<Eigen::Index>(i) * n, 0, n,
                        static_cast<Eigen::Index>(i - 1) * n) =
          At * maps.S_zeta.block(static_cast<Eigen::Index>(i - 1) * n, 0, n,
                                 static_cast<Eigen::Index>(i - 1) * n);
    }
    maps.S_zeta.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(i - 1) * n, n,
                      n) = Eigen::MatrixXd::Identity(n, n);
  }
  for (int j = 0; j < p; ++j)
    maps.S_v.middleCols(static_cast<Eigen::Index>(j) * m, m) =
        maps.S_zeta.middleCols(static_cast<Eigen::Index>(j) * n, n) * sys.B[t + j];
  return maps;
}

void check_segment_args(const LtvSystem& sys, const CostModel& model, int t, int p,
                        const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& zeta) {
  if (p <= 0) throw ValidationError("segment solve: horizon p must be >= 1");
  if (t < 0 || t + p > sys.T) throw RangeError("segment solve: window t+p exceeds T");
  if (model.horizon() != sys.T) throw ValidationError("segment solve: cost horizon mismatch");
  if (x.size() != sys.n) throw ValidationError("segment solve: state dimension mismatch");
  if (static_cast<int>(zeta.size()) != p)
    throw ValidationError("segment solve: need exactly p disturbances");
  for (const auto& z : zeta)
    if (z.size() != sys.n) throw ValidationError("segment solve: disturbance dimension mismatch");
}

struct NewtonCallbacks {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

struct NewtonOutcome {
  Eigen::VectorXd x;
  double value;
  double grad_norm;
  int iterations;
};

NewtonOutcome damped_newton(const NewtonCallbacks& cb, Eigen::VectorXd x,
                            const SolverOptions& opts) {
  double val = cb.value(x);
  if (x.size() == 0) return {std::move(x), val, 0.0, 0};
  int iter = 0;
  for (;;) {
    Eigen::VectorXd g = cb.gradient(x);
    double gn = g.norm();
    if (gn <= opts.grad_tol * (1.0 + std::abs(val))) return {std::move(x), val, gn, iter};
    if (iter >= opts.max_iter)
      throw ConvergenceError("damped_newton: no convergence in " + std::to_string(opts.max_iter) +
                                 " iterations, grad norm " + std::to_string(gn),
                             gn);
    Eigen::MatrixXd h = cb.hessian(x);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("damped_newton: Hessian factorization failed", gn);
    Eigen::VectorXd step = llt.solve(-g);
    double slope = g.dot(step);
    double alpha = 1.0;
    // Sufficient-decrease margins below the evaluation roundoff cannot be
    // certified; allow that much slack so full steps survive near the
    // optimum (the gradient check still gates convergence).
    double noise = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(val));
    for (int bt = 0;; ++bt) {
      Eigen::VectorXd cand = x + alpha * step;
      double cval = cb.value(cand);
      if (cval <= val + kArmijoSlope * alpha * slope + noise) {
        x = std::move(cand);
        val = cval;
        break;
      }
      if (bt >= 60) throw ConvergenceError("damped_newton: line search stalled", gn);
      alpha *= 0.5;
    }
    ++iter;
  }
}

std::vector<Eigen::VectorXd> split(const Eigen::VectorXd& v, int count, int dim) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(v.segment(static_cast<Eigen::Index>(i) * dim, dim));
  return out;
}

struct NullspaceFactors {
  Eigen::MatrixXd pinv;       // mp x n
  Eigen::MatrixXd nullbasis;  // mp x (mp - n)
};

/// SVD-backed pseudo-inverse and orthonormal kernel basis of the window
/// controllability matrix. Throws RankError on row-rank deficiency.
NullspaceFactors nullspace_factors(const Eigen::MatrixXd& M, int t, int p) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Eigen::Index n = M.rows();
  double cutoff = sv.size() > 0 ? kSvCutoffRel * sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  if (rank < n)
    throw RankError("controllability window matrix at t=" + std::to_string(t) +
                    ", p=" + std::to_string(p) +
                    " is row-rank deficient; the terminal state is not reachable "
                    "(p may be below the controllability index)");
  NullspaceFactors out;
  out.pinv = svd.matrixV().leftCols(rank) * sv.head(rank).cwiseInverse().asDiagonal() *
             svd.matrixU().leftCols(rank).transpose();
  out.nullbasis = svd.matrixV().rightCols(M.cols() - rank);
  return out;
}

}  // namespace

StackedMaps build_stacked_maps(const LtvSystem& sys, int t, int p) {
  if (p <= 0) throw ValidationError("build_stacked_maps: p must be >= 1");
  if (t < 0 || t + p > sys.T) throw RangeError("build_stacked_maps: window t+p exceeds T");
  SegmentMaps seg = build_segment_maps(sys, t, p);
  StackedMaps maps;
  maps.t = t;
  maps.p = p;
  maps.n = sys.n;
  maps.m = sys.m;
  maps.M = seg.S_v.bottomRows(sys.n);
  maps.R_zeta = seg.S_zeta.bottomRows(sys.n);
  NullspaceFactors nf = nullspace_factors(maps.M, t, p);
  maps.M_dagger = std::move(nf.pinv);
  maps.V = std::move(nf.nullbasis);
  maps.S_x = std::move(seg.S_x);
  maps.S_v = std::move(seg.S_v);
  maps.S_zeta = std::move(seg.S_zeta);
  return maps;
}

SolveResult solve_terminal_cost(const LtvSystem& sys, const CostModel& model,
                                const TerminalCost& F, int t, int p, const Eigen::VectorXd& x,
                                const std::vector<Eigen::VectorXd>& zeta,
                                const SolverOptions& opts) {
  if (F.kind == TerminalKind::IndicatorOrigin)
    return solve_terminal_constraint(sys, model, t, p, x, zeta, Eigen::VectorXd::Zero(sys.n),
                                     opts);
  check_segment_args(sys, model, t, p, x, zeta);

  const int n = sys.n;
  const int m = sys.m;
  const bool smooth_terminal = (F.kind == TerminalKind::Smooth);
  SegmentMaps maps = build_segment_maps(sys, t, p);
  Eigen::VectorXd y_affine = maps.S_x * x + maps.S_zeta * stack_vectors(zeta);

  auto states_of = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return y_affine + maps.S_v * v;
  };

  NewtonCallbacks cb;
  cb.value = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd y = states_of(v);
    double val = 0.0;
    for (int tau = 1; tau <= p; ++tau) {
      val += model.f[t + tau - 1].value(y.segment(static_cast<Eigen::Index>(tau) * n, n));
      val += model.c[t + tau - 1].value(v.segment(static_cast<Eigen::Index>(tau - 1) * m, m));
    }
    if (smooth_terminal) val += F.fn.value(y.tail(n));
    return val;
  };
  cb.gradient = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd y = states_of(v);
    Eigen::VectorXd gy = Eigen::VectorXd::Zero(y.size());
    Eigen::VectorXd g(v.size());
    for (int tau = 1; tau <= p; ++tau) {
      gy.segment(static_cast<Eigen::Index>(tau) * n, n) =
          model.f[t + tau - 1].gradient(y.segment(static_cast<Eigen::Index>(tau) * n, n));
      g.segment(static_cast<Eigen::Index>(tau - 1) * m, m) =
          model.c[t + tau - 1].gradient(v.segment(static_cast<Eigen::Index>(tau - 1) * m, m));
    }
    if (smooth_terminal) gy.tail(n) += F.fn.gradient(y.tail(n));
    g.noalias() += maps.S_v.transpose() * gy;
    return g;
  };
  cb.hessian = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd y = states_of(v);
    const int extra = smooth_terminal ? 1 : 0;
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(p + extra) * n, v.size());
    for (int tau = 1; tau <= p; ++tau) {
      Eigen::MatrixXd hf =
          model.f[t + tau - 1].hessian(y.segment(static_cast<Eigen::Index>(tau) * n, n));
      Z.middleRows(static_cast<Eigen::Index>(tau - 1) * n, n).noalias() =
          psd_sqrt_factor(hf) * maps.S_v.middleRows(static_cast<Eigen::Index>(tau) * n, n);
    }
    if (smooth_terminal) {
      Z.bottomRows(n).noalias() =
          psd_sqrt_factor(F.fn.hessian(y.tail(n))) * maps.S_v.bottomRows(n);
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(v.size(), v.size());
    H.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
    for (int tau = 1; tau <= p; ++tau) {
      H.block(static_cast<Eigen::Index>(tau - 1) * m, static_cast<Eigen::Index>(tau - 1) * m, m,
              m) += model.c[t + tau - 1].hessian(
          v.segment(static_cast<Eigen::Index>(tau - 1) * m, m));
    }
    return H;
  };

  NewtonOutcome outcome =
      damped_newton(cb, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p) * m), opts);

  SolveResult res;
  res.states = split(states_of(outcome.x), p + 1, n);
  res.controls = split(outcome.x, p, m);
  res.value = outcome.value;
  res.grad_norm = outcome.grad_norm;
  res.iterations = outcome.iterations;
  double defect = segment_residual(sys, t, res, zeta);
  if (defect > opts.eps_dyn)
    throw ConvergenceError("solve_terminal_cost: dynamics defect above tolerance", defect);
  return res;
}

namespace {

struct ConstrainedSetup {
  SegmentMaps maps;
  NullspaceFactors nf;
  Eigen::MatrixXd P;          // S_v * V
  Eigen::VectorXd v_base;     // particular feasible control vector
  Eigen::VectorXd y_base;     // rollout of v_base
  double terminal_hit = 0.0;  // f_{t+p}(z)
};

ConstrainedSetup constrained_setup(const LtvSystem& sys, const CostModel& model, int t, int p,
                                   const Eigen::VectorXd& x,
                                   const std::vector<Eigen::VectorXd>& zeta,
                                   const Eigen::VectorXd& z) {
  check_segment_args(sys, model, t, p, x, zeta);
  if (z.size() != sys.n)
    throw ValidationError("solve_terminal_constraint: terminal state dimension mismatch");
  ConstrainedSetup s;
  s.maps = build_segment_maps(sys, t, p);
  Eigen::MatrixXd M = s.maps.S_v.bottomRows(sys.n);
  s.nf = nullspace_factors(M, t, p);
  Eigen::VectorXd zstk = stack_vectors(zeta);
  Eigen::VectorXd rhs = z - s.maps.S_x.bottomRows(sys.n) * x - s.maps.S_zeta.bottomRows(sys.n) * zstk;
  s.v_base = s.nf.pinv * rhs;
  s.y_base = s.maps.S_x * x + s.maps.S_v * s.v_base + s.maps.S_zeta * zstk;
  s.P = s.maps.S_v * s.nf.nullbasis;
  s.terminal_hit = model.f[t + p - 1].value(z);
  return s;
}

}  // namespace

SolveResult solve_terminal_constraint(const LtvSystem& sys, const CostModel& model, int t, int p,
                                      const Eigen::VectorXd& x,
                                      const std::vector<Eigen::VectorXd>& zeta,
                                      const Eigen::VectorXd& z, const SolverOptions& opts) {
  ConstrainedSetup s = constrained_setup(sys, model, t, p, x, zeta, z);
  const int n = sys.n;
  const int m = sys.m;
  const Eigen::Index nr = s.nf.nullbasis.cols();

  auto states_of = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    return s.y_base + s.P * r;
  };
  auto controls_of = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    return s.v_base + s.nf.nullbasis * r;
  };

  // Objective over the free variable; the terminal hitting cost is a constant
  // added back at the end.
  NewtonCallbacks cb;
  cb.value = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd y = states_of(r);
    Eigen::VectorXd v = controls_of(r);
    double val = 0.0;
    for (int tau = 1; tau < p; ++tau)
      val += model.f[t + tau - 1].value(y.segment(static_cast<Eigen::Index>(tau) * n, n));
    for (int tau = 1; tau <= p; ++tau)
      val += model.c[t + tau - 1].value(v.segment(static_cast<Eigen::Index>(tau - 1) * m, m));
    return val;
  };
  cb.gradient = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    Eigen::VectorXd y = states_of(r);
    Eigen::VectorXd v = controls_of(r);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nr);
    for (int tau = 1; tau < p; ++tau) {
      g.noalias() += s.P.middleRows(static_cast<Eigen::Index>(tau) * n, n).transpose() *
                     model.f[t + tau - 1].gradient(
                         y.segment(static_cast<Eigen::Index>(tau) * n, n));
    }
    for (int tau = 1; tau <= p; ++tau) {
      g.noalias() +=
          s.nf.nullbasis.middleRows(static_cast<Eigen::Index>(tau - 1) * m, m).transpose() *
          model.c[t + tau - 1].gradient(v.segment(static_cast<Eigen::Index>(tau - 1) * m, m));
    }
    return g;
  };
  cb.hessian = [&](const Eigen::VectorXd& r) {
    Eigen::VectorXd y = states_of(r);
    Eigen::VectorXd v = controls_of(r);
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(p - 1) * n + static_cast<Eigen::Index>(p) * m, nr);
    for (int tau = 1; tau < p; ++tau) {
      Eigen::MatrixXd hf =
          model.f[t + tau - 1].hessian(y.segment(static_cast<Eigen::Index>(tau) * n, n));
      Z.middleRows(static_cast<Eigen::Index>(tau - 1) * n, n).noalias() =
          psd_sqrt_factor(hf) * s.P.middleRows(static_cast<Eigen::Index>(tau) * n, n);
    }
    const Eigen::Index coff = static_cast<Eigen::Index>(p - 1) * n;
    for (int tau = 1; tau <= p; ++tau) {
      Eigen::MatrixXd hc =
          model.c[t + tau - 1].hessian(v.segment(static_cast<Eigen::Index>(tau - 1) * m, m));
      Z.middleRows(coff + static_cast<Eigen::Index>(tau - 1) * m, m).noalias() =
          psd_sqrt_factor(hc) * s.nf.nullbasis.middleRows(static_cast<Eigen::Index>(tau - 1) * m, m);
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nr, nr);
    H.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
    return H;
  };

  NewtonOutcome outcome = damped_newton(cb, Eigen::VectorXd::Zero(nr), opts);

  SolveResult res;
  Eigen::VectorXd y = states_of(outcome.x);
  res.states = split(y, p + 1, n);
  res.controls = split(controls_of(outcome.x), p, m);
  res.value = outcome.value + s.terminal_hit;
  res.grad_norm = outcome.grad_norm;
  res.iterations = outcome.iterations;
  double gap = (res.states.back() - z).norm();
  if (gap > kTerminalGapTol)
    throw ConvergenceError("solve_terminal_constraint: terminal state missed the target", gap);
  double defect = segment_residual(sys, t, res, zeta);
  if (defect > opts.eps_dyn)
    throw ConvergenceError("solve_terminal_constraint: dynamics defect above tolerance", defect);
  return res;
}

double optimal_value(const LtvSystem& sys, const CostModel& model, int t, int p,
                     const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& zeta,
                     const Eigen::VectorXd& z, const SolverOptions& opts) {
  return solve_terminal_constraint(sys, model, t, p, x, zeta, z, opts).value;
}

double switching_cost(const LtvSystem& sys, const CostModel& model, int t, int p,
                      const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& zeta,
                      const Eigen::VectorXd& z, const SolverOptions& opts) {
  return optimal_value(sys, model, t, p, x, zeta, z, opts) - model.f[t + p - 1].value(z);
}

SwitchingCostDerivatives switching_cost_derivatives(const LtvSystem& sys, const CostModel& model,
                                                    int t, int p, const Eigen::VectorXd& x,
                                                    const std::vector<Eigen::VectorXd>& zeta,
                                                    const Eigen::VectorXd& z,
                                                    const SolverOptions& opts) {
  SolverOptions tight = opts;
  tight.grad_tol = std::min(opts.grad_tol, 1e-12);
  SolveResult sol = solve_terminal_constraint(sys, model, t, p, x, zeta, z, tight);
  ConstrainedSetup s = constrained_setup(sys, model, t, p, x, zeta, z);

  const int n = sys.n;
  const int m = sys.m;
  const Eigen::Index rows_y = static_cast<Eigen::Index>(p + 1) * n;
  const Eigen::Index rows_v = static_cast<Eigen::Index>(p) * m;
  const Eigen::Index nr = s.nf.nullbasis.cols();
  const Eigen::Index dim_theta = static_cast<Eigen::Index>(p + 2) * n;  // (x, zeta, z)

  // Affine sensitivity of the stacked (y, v) pair to (x, zeta, z, r).
  Eigen::MatrixXd W(rows_y + rows_v, dim_theta + nr);
  Eigen::MatrixXd phi = s.maps.S_x.bottomRows(n);  // transition over the whole window
  Eigen::MatrixXd pinv_phi = s.nf.pinv * phi;
  Eigen::MatrixXd pinv_r = s.nf.pinv * s.maps.S_zeta.bottomRows(n);
  W.block(0, 0, rows_y, n) = s.maps.S_x - s.maps.S_v * pinv_phi;
  W.block(0, n, rows_y, static_cast<Eigen::Index>(p) * n) = s.maps.S_zeta - s.maps.S_v * pinv_r;
  W.block(0, n + static_cast<Eigen::Index>(p) * n, rows_y, n) = s.maps.S_v * s.nf.pinv;
  W.block(0, dim_theta, rows_y, nr) = s.P;
  W.block(rows_y, 0, rows_v, n) = -pinv_phi;
  W.block(rows_y, n, rows_v, static_cast<Eigen::Index>(p) * n) = -pinv_r;
  W.block(rows_y, n + static_cast<Eigen::Index>(p) * n, rows_v, n) = s.nf.pinv;
  W.block(rows_y, dim_theta, rows_v, nr) = s.nf.nullbasis;

  // Gradient and Hessian of the segment cost (without the terminal hitting
  // cost) in the stacked (y, v) pair, at the optimum.
  Eigen::VectorXd grad_yv = Eigen::VectorXd::Zero(rows_y + rows_v);
  Eigen::MatrixXd hess_yv = Eigen::MatrixXd::Zero(rows_y + rows_v, rows_y + rows_v);
  for (int tau = 1; tau < p; ++tau) {
    grad_yv.segment(static_cast<Eigen::Index>(tau) * n, n) =
        model.f[t + tau - 1].gradient(sol.states[tau]);
    hess_yv.block(static_cast<Eigen::Index>(tau) * n, static_cast<Eigen::Index>(tau) * n, n, n) =
        model.f[t + tau - 1].hessian(sol.states[tau]);
  }
  for (int tau = 1; tau <= p; ++tau) {
    Eigen::Index at = rows_y + static_cast<Eigen::Index>(tau - 1) * m;
    grad_yv.segment(at, m) = model.c[t + tau - 1].gradient(sol.controls[tau - 1]);
    hess_yv.block(at, at, m, m) = model.c[t + tau - 1].hessian(sol.controls[tau - 1]);
  }

  Eigen::VectorXd grad_full = W.transpose() * grad_yv;
  Eigen::MatrixXd hess_full = W.transpose() * hess_yv * W;

  SwitchingCostDerivatives out;
  out.value = sol.value - s.terminal_hit;
  out.gradient = grad_full.head(dim_theta);
  out.hessian = hess_full.topLeftCorner(dim_theta, dim_theta);
  if (nr > 0) {
    Eigen::MatrixXd h_tr = hess_full.topRightCorner(dim_theta, nr);
    Eigen::LLT<Eigen::MatrixXd> llt(hess_full.bottomRightCorner(nr, nr));
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("switching_cost_derivatives: reduced Hessian not positive definite",
                             0.0);
    out.hessian -= h_tr * llt.solve(h_tr.transpose());
  }
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

SolveResult offline_optimal(const LtvSystem& sys, const CostModel& model,
                            const SolverOptions& opts) {
  return solve_terminal_cost(sys, model, TerminalCost::zero(), 0, sys.T, sys.x0, sys.w, opts);
}

Eigen::VectorXd stack_vectors(const std::vector<Eigen::VectorXd>& seq) {
  Eigen::Index total = 0;
  for (const auto& v : seq) total += v.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& v : seq) {
    out.segment(at, v.size()) = v;
    at += v.size();
  }
  return out;
}

double segment_residual(const LtvSystem& sys, int t, const SolveResult& res,
                        const std::vector<Eigen::VectorXd>& zeta) {
  double worst = 0.0;
  const int p = static_cast<int>(res.controls.size());
  for (int tau = 0; tau < p; ++tau) {
    double r = (res.states[tau + 1] - sys.A[t + tau] * res.states[tau] -
                sys.B[t + tau] * res.controls[tau] - zeta[tau])
                   .norm();
    worst = std::max(worst, r);
  }
  return worst;
}

}  // namespace ltvpc
