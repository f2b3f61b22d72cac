#include "ltvpc/soco.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ltvpc/errors.hpp"
#include "ltvpc/rng.hpp"

namespace ltvpc {

namespace {

void check_problem(const SocoProblem& pb) {
  if (pb.n <= 0 || pb.p < 2) throw ValidationError("solve_soco: need n >= 1 and p >= 2");
  if (static_cast<int>(pb.hitting.size()) != pb.p - 1 ||
      static_cast<int>(pb.switching.size()) != pb.p ||
      static_cast<int>(pb.exo.size()) != pb.p)
    throw ValidationError("solve_soco: sequence lengths must be p-1 hitting, p switching, p exo");
}

}  // namespace

SocoSolution solve_soco(const SocoProblem& pb, const Eigen::VectorXd& x_first,
                        const Eigen::VectorXd& x_last, const SolverOptions& opts) {
  check_problem(pb);
  if (x_first.size() != pb.n || x_last.size() != pb.n)
    throw ValidationError("solve_soco: endpoint dimension mismatch");
  const int n = pb.n;
  const int p = pb.p;
  const Eigen::Index dim = static_cast<Eigen::Index>(p - 1) * n;

  auto point = [&](const Eigen::VectorXd& X, int tau) -> Eigen::VectorXd {
    if (tau == 0) return x_first;
    if (tau == p) return x_last;
    return X.segment(static_cast<Eigen::Index>(tau - 1) * n, n);
  };

  auto value = [&](const Eigen::VectorXd& X) {
    double val = 0.0;
    for (int tau = 1; tau < p; ++tau) val += pb.hitting[tau - 1].value(point(X, tau));
    for (int tau = 1; tau <= p; ++tau)
      val += pb.switching[tau - 1].value(point(X, tau), point(X, tau - 1), pb.exo[tau - 1]);
    return val;
  };
  auto gradient = [&](const Eigen::VectorXd& X) -> Eigen::VectorXd {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (int tau = 1; tau < p; ++tau)
      g.segment(static_cast<Eigen::Index>(tau - 1) * n, n) +=
          pb.hitting[tau - 1].gradient(point(X, tau));
    Eigen::VectorXd gc(n), gp(n);
    for (int tau = 1; tau <= p; ++tau) {
      pb.switching[tau - 1].gradient(point(X, tau), point(X, tau - 1), pb.exo[tau - 1], gc, gp);
      if (tau < p) g.segment(static_cast<Eigen::Index>(tau - 1) * n, n) += gc;
      if (tau > 1) g.segment(static_cast<Eigen::Index>(tau - 2) * n, n) += gp;
    }
    return g;
  };
  auto hessian = [&](const Eigen::VectorXd& X) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int tau = 1; tau < p; ++tau) {
      Eigen::Index at = static_cast<Eigen::Index>(tau - 1) * n;
      H.block(at, at, n, n) += pb.hitting[tau - 1].hessian(point(X, tau));
    }
    Eigen::MatrixXd hcc(n, n), hcp(n, n), hpp(n, n);
    for (int tau = 1; tau <= p; ++tau) {
      pb.switching[tau - 1].hessian(point(X, tau), point(X, tau - 1), pb.exo[tau - 1], hcc, hcp,
                                    hpp);
      Eigen::Index cur = static_cast<Eigen::Index>(tau - 1) * n;
      Eigen::Index prev = static_cast<Eigen::Index>(tau - 2) * n;
      if (tau < p) H.block(cur, cur, n, n) += hcc;
      if (tau > 1) H.block(prev, prev, n, n) += hpp;
      if (tau > 1 && tau < p) {
        H.block(cur, prev, n, n) += hcp;
        H.block(prev, cur, n, n) += hcp.transpose();
      }
    }
    return H;
  };

  Eigen::VectorXd X = Eigen::VectorXd::Zero(dim);
  double val = value(X);
  int iter = 0;
  for (;;) {
    Eigen::VectorXd g = gradient(X);
    double gn = g.norm();
    if (gn <= opts.grad_tol * (1.0 + std::abs(val))) {
      SocoSolution sol;
      sol.interior.reserve(p - 1);
      for (int tau = 1; tau < p; ++tau) sol.interior.push_back(point(X, tau));
      sol.value = val;
      sol.grad_norm = gn;
      sol.iterations = iter;
      return sol;
    }
    if (iter >= opts.max_iter)
      throw ConvergenceError("solve_soco: no convergence, grad norm " + std::to_string(gn), gn);
    Eigen::LLT<Eigen::MatrixXd> llt(hessian(X));
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("solve_soco: Hessian factorization failed", gn);
    Eigen::VectorXd step = llt.solve(-g);
    double slope = g.dot(step);
    double alpha = 1.0;
    double noise = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(val));
    for (int bt = 0;; ++bt) {
      Eigen::VectorXd cand = X + alpha * step;
      double cval = value(cand);
      if (cval <= val + 1e-4 * alpha * slope + noise) {
        X = std::move(cand);
        val = cval;
        break;
      }
      if (bt >= 60) throw ConvergenceError("solve_soco: line search stalled", gn);
      alpha *= 0.5;
    }
    ++iter;
  }
}

SocoProblem make_quadratic_soco(int n, int p, std::uint64_t seed) {
  if (n <= 0 || p < 2) throw ValidationError("make_quadratic_soco: need n >= 1 and p >= 2");
  Rng rng(mix_seed(seed, 0x50C0));
  SocoProblem pb;
  pb.n = n;
  pb.p = p;
  pb.mu = std::numeric_limits<double>::infinity();
  pb.ell = 0.0;
  for (int tau = 1; tau < p; ++tau) {
    Eigen::MatrixXd Q = rng.spd(n, 0.5, 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
    CostFn fn;
    fn.dim = n;
    fn.strong_convexity = es.eigenvalues().minCoeff();
    fn.smoothness = es.eigenvalues().maxCoeff();
    fn.value = [Q](const Eigen::VectorXd& x) { return 0.5 * x.dot(Q * x); };
    fn.gradient = [Q](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Q * x; };
    fn.hessian = [Q](const Eigen::VectorXd&) { return Q; };
    pb.hitting.push_back(std::move(fn));
    pb.mu = std::min(pb.mu, es.eigenvalues().minCoeff());
  }
  for (int tau = 1; tau <= p; ++tau) {
    Eigen::MatrixXd S = rng.spd(n, 0.3, 1.5);
    Eigen::MatrixXd G = 0.8 * rng.normal_matrix(n, n) / std::sqrt(static_cast<double>(n));
    SocoSwitchingCost sc;
    sc.exo_dim = n;
    sc.value = [S, G](const Eigen::VectorXd& cur, const Eigen::VectorXd& prev,
                      const Eigen::VectorXd& w) {
      Eigen::VectorXd e = cur - G * prev - w;
      return 0.5 * e.dot(S * e);
    };
    sc.gradient = [S, G](const Eigen::VectorXd& cur, const Eigen::VectorXd& prev,
                         const Eigen::VectorXd& w, Eigen::VectorXd& gc, Eigen::VectorXd& gp) {
      Eigen::VectorXd se = S * (cur - G * prev - w);
      gc = se;
      gp = -G.transpose() * se;
    };
    sc.hessian = [S, G](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&,
                        Eigen::MatrixXd& hcc, Eigen::MatrixXd& hcp, Eigen::MatrixXd& hpp) {
      hcc = S;
      hcp = -S * G;
      hpp = G.transpose() * S * G;
    };
    // Smoothness over the joint arguments (cur, prev, w): largest eigenvalue
    // of J' S J with J = [I, -G, -I].
    Eigen::MatrixXd J(n, 3 * n);
    J << Eigen::MatrixXd::Identity(n, n), -G, -Eigen::MatrixXd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J.transpose() * S * J,
                                                      Eigen::EigenvaluesOnly);
    pb.ell = std::max(pb.ell, es.eigenvalues().maxCoeff());
    pb.switching.push_back(std::move(sc));
    pb.exo.push_back(rng.ball(n, 0.5));
  }
  return pb;
}

SocoProblem make_reduction_soco(const LtvSystem& sys, const CostModel& model, int t, int d,
                                int segments) {
  if (segments < 2) throw ValidationError("make_reduction_soco: need at least two segments");
  if (d <= 0 || t < 0 || t + segments * d > sys.T)
    throw RangeError("make_reduction_soco: window exceeds the horizon");
  SocoProblem pb;
  pb.n = sys.n;
  pb.p = segments;
  for (int j = 1; j < segments; ++j) pb.hitting.push_back(model.f[t + j * d - 1]);
  pb.mu = model.m_f;
  pb.ell = 0.0;  // callers wanting an envelope take it from the theory constants
  for (int j = 0; j < segments; ++j) {
    int seg_start = t + j * d;
    SocoSwitchingCost sc;
    sc.exo_dim = sys.n * d;
    auto unstack = [n = sys.n, d](const Eigen::VectorXd& w) {
      std::vector<Eigen::VectorXd> out;
      out.reserve(d);
      for (int i = 0; i < d; ++i) out.push_back(w.segment(static_cast<Eigen::Index>(i) * n, n));
      return out;
    };
    sc.value = [&sys, &model, seg_start, d, unstack](const Eigen::VectorXd& cur,
                                                     const Eigen::VectorXd& prev,
                                                     const Eigen::VectorXd& w) {
      return switching_cost(sys, model, seg_start, d, prev, unstack(w), cur);
    };
    sc.gradient = [&sys, &model, seg_start, d, unstack, n = sys.n](
                      const Eigen::VectorXd& cur, const Eigen::VectorXd& prev,
                      const Eigen::VectorXd& w, Eigen::VectorXd& gc, Eigen::VectorXd& gp) {
      auto der = switching_cost_derivatives(sys, model, seg_start, d, prev, unstack(w), cur);
      gp = der.gradient.head(n);
      gc = der.gradient.tail(n);
    };
    sc.hessian = [&sys, &model, seg_start, d, unstack, n = sys.n](
                     const Eigen::VectorXd& cur, const Eigen::VectorXd& prev,
                     const Eigen::VectorXd& w, Eigen::MatrixXd& hcc, Eigen::MatrixXd& hcp,
                     Eigen::MatrixXd& hpp) {
      auto der = switching_cost_derivatives(sys, model, seg_start, d, prev, unstack(w), cur);
      Eigen::Index zoff = der.hessian.rows() - n;
      hpp = der.hessian.topLeftCorner(n, n);
      hcc = der.hessian.bottomRightCorner(n, n);
      hcp = der.hessian.block(zoff, 0, n, n);
    };
    std::vector<Eigen::VectorXd> wseg(sys.w.begin() + seg_start, sys.w.begin() + seg_start + d);
    pb.exo.push_back(stack_vectors(wseg));
    pb.switching.push_back(std::move(sc));
  }
  return pb;
}

}  // namespace ltvpc
