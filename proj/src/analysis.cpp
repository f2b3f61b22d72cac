#include "ltvpc/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>

#include "ltvpc/errors.hpp"
#include "ltvpc/parallel.hpp"
#include "ltvpc/rng.hpp"

namespace ltvpc {

namespace {

constexpr double kEnvelopeSlack = 1.0 + 1e-6;  // absorbs solver tolerance only
constexpr double kBranchTol = 1e-12;           // |a - 1| below this uses the a = 1 regime
constexpr double kFitFloor = 1e-12;            // deviations below this are numerical noise

}  // namespace

double TheoryConstants::C_of_p(int p) const {
  if (p <= 0) throw ValidationError("C_of_p: p must be >= 1");
  const double pd = static_cast<double>(p);
  if (std::abs(a - 1.0) <= kBranchTol) {
    double sp = std::sqrt(pd);
    return (b * sp / (sigma * sigma) * (sp + 2.0) + 1.0) *
               (1.0 + b * std::sqrt(pd * (pd + 1.0) / 2.0)) +
           std::sqrt(pd + 1.0) * (1.0 + std::sqrt(pd / 2.0));
  }
  const double a2 = a * a;
  double pinv_bound = b * (std::pow(a, p + 1) + a - 2.0) / (sigma * sigma * (a - 1.0)) *
                      std::sqrt(std::max(0.0, (std::pow(a, 2 * p) - 1.0) / (a2 - 1.0)));
  double szeta_bound =
      b * std::sqrt(std::max(0.0, std::pow(a, 2 * p + 2) - (pd + 1.0) * a2 + pd)) /
          std::abs(a2 - 1.0) +
      1.0;
  double sx_bound = std::sqrt(std::max(0.0, (std::pow(a, 2 * p + 2) - 1.0) / (a2 - 1.0)));
  return (pinv_bound + (1.0 + b) / b) * szeta_bound + sx_bound - 1.0 / b;
}

double TheoryConstants::L2_of_p(int p) const {
  double c = C_of_p(p);
  return ell * c * c + ell * ell * c * c * c * c / m_c;
}

double TheoryConstants::L1_of_p(int p) const {
  double c = C_of_p(p);
  return c * (1.0 + ell * c / m_c);
}

double TheoryConstants::L1_appendix_of_p(int p) const {
  double c = C_of_p(p);
  return c * (1.0 + ell * c * c / m_c);
}

TheoryConstants theory_constants(const ControllabilityReport& report, const CostModel& model) {
  if (report.sigma <= 0.0) throw ValidationError("theory_constants: sigma must be > 0");
  TheoryConstants tc;
  tc.a = report.a;
  tc.b = report.b;
  tc.b_prime = report.b_prime;
  tc.sigma = report.sigma;
  tc.d = report.d;
  tc.m_f = model.m_f;
  tc.l_f = model.l_f;
  tc.m_c = model.m_c;
  tc.l_c = model.l_c;
  tc.ell = std::max(model.l_f, model.l_c);

  tc.L0 = 0.0;
  for (int p = tc.d; p <= 2 * tc.d - 1; ++p) tc.L0 = std::max(tc.L0, tc.L2_of_p(p));
  tc.lambda0 = 1.0 - 2.0 / (std::sqrt(1.0 + 2.0 * tc.L0 / tc.m_c) + 1.0);
  tc.lambda = std::pow(tc.lambda0, 1.0 / (2.0 * tc.d - 1.0));
  tc.C0 = 2.0 * tc.L0 / tc.m_c;
  tc.C = tc.C0 / tc.lambda0;
  tc.L4 = tc.l_f + 2.0 * tc.b_prime * tc.b_prime * tc.l_c +
          2.0 * tc.a * tc.a * tc.b_prime * tc.b_prime * tc.l_c;
  tc.c_below_one = tc.C < 1.0;
  if (!(tc.lambda > 0.0 && tc.lambda < 1.0))
    throw ValidationError("theory_constants: decay rate fell outside (0, 1)");
  return tc;
}

namespace {

/// Least integer k with k >= lower and k >= rhs.
long long minimal_window(double rhs, int lower) {
  constexpr long long kCeiling = 4000000000000000000LL;
  if (!(rhs < static_cast<double>(kCeiling))) return kCeiling;
  long long k = std::max<long long>(lower, static_cast<long long>(std::ceil(rhs)));
  while (k - 1 >= lower && static_cast<double>(k - 1) >= rhs) --k;
  while (static_cast<double>(k) < rhs) ++k;
  return k;
}

}  // namespace

long long k_regret_threshold(const TheoryConstants& tc, double delta) {
  if (delta <= 0.0 || delta >= 1.0) throw ValidationError("k_regret_threshold: delta in (0,1)");
  if (tc.lambda >= 1.0) throw ValidationError("k_regret_threshold: decay rate must be < 1");
  double rhs = 1.0 + std::log(tc.C * (2.0 * tc.C / (1.0 - tc.lambda) + tc.lambda) / (1.0 - delta)) /
                         std::log(1.0 / tc.lambda);
  return minimal_window(rhs, tc.d);
}

long long k_competitive_threshold(const TheoryConstants& tc, double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw ValidationError("k_competitive_threshold: epsilon in (0,1)");
  if (tc.lambda >= 1.0) throw ValidationError("k_competitive_threshold: decay rate must be < 1");
  double l = tc.lambda;
  double num = 6.0 * std::pow(tc.C, 6.0);
  double den = (1.0 - epsilon) * l * l * (1.0 - l) * (1.0 - l) * (1.0 - l * l) * (1.0 - l * l);
  double rhs = std::log(num / den) / (4.0 * std::log(1.0 / l));
  return minimal_window(rhs, tc.d);
}

long long h_replan_threshold(const TheoryConstants& tc, double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw ValidationError("h_replan_threshold: epsilon in (0,1)");
  double rhs = std::log((1.0 + epsilon) * tc.C) / std::log(1.0 / tc.lambda);
  return minimal_window(rhs, tc.d);
}

double cr_coefficient(const TheoryConstants& tc, double epsilon) {
  if (epsilon <= 0.0 || epsilon >= 1.0) throw ValidationError("cr_coefficient: epsilon in (0,1)");
  double l = tc.lambda;
  double c4 = std::pow(tc.C, 4.0);
  double cp1 = (tc.C + 1.0) * (tc.C + 1.0);
  double numer = 24.0 * c4 * cp1 * (2.0 * tc.L4 + tc.L0 + tc.l_f);
  double denom = epsilon * std::pow(l, 4.0) * (1.0 - l) * (1.0 - l) * (1.0 - l * l) *
                 (1.0 - l * l) * tc.m_f;
  return 1.0 + numer / denom;
}

WindowThresholds window_thresholds(const TheoryConstants& tc, double delta, double epsilon) {
  WindowThresholds out;
  out.k_regret = k_regret_threshold(tc, delta);
  out.k_competitive = k_competitive_threshold(tc, epsilon);
  out.h_replan = h_replan_threshold(tc, epsilon);
  out.cr_coefficient = cr_coefficient(tc, epsilon);
  out.delta = delta;
  out.epsilon = epsilon;
  return out;
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit fit;
  fit.points = static_cast<int>(xs.size());
  if (xs.size() != ys.size() || xs.size() < 2) return fit;
  double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  double mean_y = sy / n;
  for (size_t i = 0; i < xs.size(); ++i) {
    double pred = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

namespace {

struct TrialStats {
  int violations = 0;
  double max_ratio = 0.0;
};

/// lambda^h |dx| + sum_tau lambda^{|h-tau|} |dzeta_tau| (+ lambda^{p-h} |dz|),
/// scaled by C.
double ltv_envelope(const TheoryConstants& tc, int p, int h, double dx,
                    const std::vector<double>& dzeta, double dz, bool with_terminal) {
  double e = std::pow(tc.lambda, h) * dx;
  for (int tau = 0; tau < p; ++tau) e += std::pow(tc.lambda, std::abs(h - tau)) * dzeta[tau];
  if (with_terminal) e += std::pow(tc.lambda, p - h) * dz;
  return tc.C * e;
}

void envelope_check(TrialStats& stats, double dev, double env) {
  if (env <= 0.0) {
    // Identical inputs: the solves are deterministic, so any deviation is a
    // genuine violation.
    if (dev > 0.0) ++stats.violations;
    return;
  }
  double ratio = dev / env;
  stats.max_ratio = std::max(stats.max_ratio, ratio);
  if (ratio > kEnvelopeSlack) ++stats.violations;
}

}  // namespace

SensitivityReport verify_ltv_sensitivity(const LtvSystem& sys, const CostModel& model, int t,
                                         int p, int h, int trials, std::uint64_t seed) {
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  if (p < tc.d) throw PreconditionError("verify_ltv_sensitivity: p must be >= d");
  if (h < 1 || h > p) throw ValidationError("verify_ltv_sensitivity: h in [1, p]");
  if (t < 0 || t + p > sys.T) throw RangeError("verify_ltv_sensitivity: window exceeds T");

  SensitivityReport report;
  report.trials = trials;
  report.lambda_theory = tc.lambda;

  std::vector<TrialStats> stats(trials);
  parallel_for(trials, [&](int i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const int n = sys.n;
    Eigen::VectorXd x = rng.ball(n, 1.0);
    Eigen::VectorXd xp = x + rng.ball(n, 0.5);
    Eigen::VectorXd z = rng.ball(n, 0.5);
    Eigen::VectorXd zp = z + rng.ball(n, 0.5);
    std::vector<Eigen::VectorXd> zeta(p), zetap(p);
    std::vector<double> dzeta(p);
    for (int tau = 0; tau < p; ++tau) {
      zeta[tau] = rng.ball(n, 0.5);
      zetap[tau] = zeta[tau] + rng.ball(n, 0.25);
      dzeta[tau] = (zetap[tau] - zeta[tau]).norm();
    }
    double dx = (xp - x).norm();
    double dz = (zp - z).norm();

    TrialStats& st = stats[i];
    SolveResult base = solve_terminal_cost(sys, model, TerminalCost::zero(), t, p, x, zeta);
    SolveResult pert = solve_terminal_cost(sys, model, TerminalCost::zero(), t, p, xp, zetap);
    for (int hh = 1; hh <= p; ++hh) {
      double dev = (base.states[hh] - pert.states[hh]).norm();
      envelope_check(st, dev, ltv_envelope(tc, p, hh, dx, dzeta, 0.0, false));
    }
    SolveResult cbase = solve_terminal_constraint(sys, model, t, p, x, zeta, z);
    SolveResult cpert = solve_terminal_constraint(sys, model, t, p, xp, zetap, zp);
    for (int hh = 1; hh < p; ++hh) {
      double dev = (cbase.states[hh] - cpert.states[hh]).norm();
      envelope_check(st, dev, ltv_envelope(tc, p, hh, dx, dzeta, dz, true));
    }
  });
  for (const auto& st : stats) {
    report.violations += st.violations;
    report.max_violation_ratio = std::max(report.max_violation_ratio, st.max_ratio);
  }

  // Decay fit: perturb the initial state only and sweep the state index.
  {
    Rng rng(mix_seed(seed, 0xF17));
    const int n = sys.n;
    Eigen::VectorXd x = rng.ball(n, 1.0);
    std::vector<Eigen::VectorXd> zeta(p);
    for (int tau = 0; tau < p; ++tau) zeta[tau] = rng.ball(n, 0.5);
    double delta = 1e-3 * (1.0 + x.norm());
    Eigen::VectorXd dir = rng.ball(n, 1.0);
    if (dir.norm() == 0.0) dir = Eigen::VectorXd::Unit(n, 0);
    dir *= delta / dir.norm();
    SolveResult base = solve_terminal_cost(sys, model, TerminalCost::zero(), t, p, x, zeta);
    SolveResult pert = solve_terminal_cost(sys, model, TerminalCost::zero(), t, p,
                                           Eigen::VectorXd(x + dir), zeta);
    std::vector<double> hs, logs;
    report.deviation.resize(p);
    report.envelope.resize(p);
    for (int hh = 1; hh <= p; ++hh) {
      double dev = (base.states[hh] - pert.states[hh]).norm();
      report.deviation[hh - 1] = dev;
      report.envelope[hh - 1] = tc.C * std::pow(tc.lambda, hh) * delta;
      if (dev > kFitFloor) {
        hs.push_back(static_cast<double>(hh));
        logs.push_back(std::log(dev));
      }
    }
    LineFit fit = fit_line(hs, logs);
    if (fit.points >= 2 && std::isfinite(fit.slope)) report.lambda_fit = std::exp(fit.slope);
  }
  return report;
}

SensitivityReport verify_soco_sensitivity(const SocoProblem& pb, int h, int trials,
                                          std::uint64_t seed) {
  if (h < 1 || h > pb.p - 1) throw ValidationError("verify_soco_sensitivity: h in [1, p-1]");
  if (pb.mu <= 0.0 || pb.ell <= 0.0)
    throw ValidationError("verify_soco_sensitivity: instance must declare mu and ell");
  SensitivityReport report;
  report.trials = trials;
  const double c0 = 2.0 * pb.ell / pb.mu;
  const double lam0 = 1.0 - 2.0 / (std::sqrt(1.0 + 2.0 * pb.ell / pb.mu) + 1.0);
  report.lambda_theory = lam0;

  std::vector<TrialStats> stats(trials);
  parallel_for(trials, [&](int i) {
    Rng rng(mix_seed(seed, 0x50C0 + static_cast<std::uint64_t>(i)));
    const int n = pb.n;
    Eigen::VectorXd x0 = rng.ball(n, 1.0);
    Eigen::VectorXd x0p = x0 + rng.ball(n, 0.5);
    Eigen::VectorXd xp = rng.ball(n, 1.0);
    Eigen::VectorXd xpp = xp + rng.ball(n, 0.5);
    std::vector<double> dw(pb.p);
    SocoProblem pert = pb;
    for (int tau = 0; tau < pb.p; ++tau) {
      Eigen::VectorXd bump = rng.ball(pb.switching[tau].exo_dim, 0.25);
      pert.exo[tau] = pb.exo[tau] + bump;
      dw[tau] = bump.norm();
    }
    SocoSolution base = solve_soco(pb, x0, xp);
    SocoSolution moved = solve_soco(pert, x0p, xpp);
    double dx0 = (x0p - x0).norm();
    double dxp = (xpp - xp).norm();
    TrialStats& st = stats[i];
    for (int hh = 1; hh <= pb.p - 1; ++hh) {
      double dev = (base.interior[hh - 1] - moved.interior[hh - 1]).norm();
      double env = std::pow(lam0, hh - 1) * dx0 + std::pow(lam0, pb.p - hh - 1) * dxp;
      for (int tau = 0; tau < pb.p; ++tau)
        env += std::pow(lam0, std::abs(hh - tau) - 1) * dw[tau];
      envelope_check(st, dev, c0 * env);
    }
  });
  for (const auto& st : stats) {
    report.violations += st.violations;
    report.max_violation_ratio = std::max(report.max_violation_ratio, st.max_ratio);
  }

  // Decay fit from an endpoint-only perturbation.
  {
    Rng rng(mix_seed(seed, 0x50C0F17));
    const int n = pb.n;
    Eigen::VectorXd x0 = rng.ball(n, 1.0);
    Eigen::VectorXd xp = rng.ball(n, 1.0);
    double delta = 1e-3;
    Eigen::VectorXd dir = rng.ball(n, 1.0);
    if (dir.norm() == 0.0) dir = Eigen::VectorXd::Unit(n, 0);
    dir *= delta / dir.norm();
    SocoSolution base = solve_soco(pb, x0, xp);
    SocoSolution moved = solve_soco(pb, Eigen::VectorXd(x0 + dir), xp);
    std::vector<double> hs, logs;
    report.deviation.resize(pb.p - 1);
    report.envelope.resize(pb.p - 1);
    for (int hh = 1; hh <= pb.p - 1; ++hh) {
      double dev = (base.interior[hh - 1] - moved.interior[hh - 1]).norm();
      report.deviation[hh - 1] = dev;
      report.envelope[hh - 1] = c0 * std::pow(lam0, hh - 1) * delta;
      if (dev > kFitFloor) {
        hs.push_back(static_cast<double>(hh));
        logs.push_back(std::log(dev));
      }
    }
    LineFit fit = fit_line(hs, logs);
    if (fit.points >= 2 && std::isfinite(fit.slope)) report.lambda_fit = std::exp(fit.slope);
  }
  return report;
}

double verify_soco_reduction(const LtvSystem& sys, const CostModel& model, int t, int segments,
                             std::uint64_t seed) {
  ControllabilityReport rep = analyze_controllability(sys);
  const int d = rep.d;
  const int p = segments * d;
  if (t < 0 || t + p > sys.T) throw RangeError("verify_soco_reduction: window exceeds T");
  Rng rng(mix_seed(seed, 0x2ED));
  Eigen::VectorXd x = rng.ball(sys.n, 1.0);
  Eigen::VectorXd z = rng.ball(sys.n, 0.5);
  std::vector<Eigen::VectorXd> zeta(sys.w.begin() + t, sys.w.begin() + t + p);

  SolveResult direct = solve_terminal_constraint(sys, model, t, p, x, zeta, z);
  SocoProblem pb = make_reduction_soco(sys, model, t, d, segments);
  SolverOptions tight;
  tight.grad_tol = 1e-11;
  SocoSolution reduced = solve_soco(pb, x, z, tight);

  double worst = 0.0;
  for (int j = 1; j < segments; ++j)
    worst = std::max(worst, (reduced.interior[j - 1] - direct.states[j * d]).norm());
  return worst;
}

BandedDecayReport verify_banded_decay(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D,
                                      int block_dim, int q, int samples, std::uint64_t seed) {
  if (block_dim <= 0 || A.rows() != A.cols() || A.rows() % block_dim != 0)
    throw ValidationError("verify_banded_decay: matrix must be square with whole blocks");
  if (q <= 0 || q % 2 != 0) throw ValidationError("verify_banded_decay: q must be even positive");
  if (D.rows() != A.rows() || D.cols() != A.cols())
    throw ValidationError("verify_banded_decay: shift dimension mismatch");
  const int blocks = static_cast<int>(A.rows()) / block_dim;

  auto block = [&](const Eigen::MatrixXd& mat, int i, int j) {
    return mat.block(static_cast<Eigen::Index>(i) * block_dim,
                     static_cast<Eigen::Index>(j) * block_dim, block_dim, block_dim);
  };
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ValidationError("verify_banded_decay: matrix must be symmetric");
  for (int i = 0; i < blocks; ++i)
    for (int j = 0; j < blocks; ++j) {
      if (std::abs(i - j) > q / 2 && block(A, i, j).cwiseAbs().maxCoeff() > 0.0)
        throw ValidationError("verify_banded_decay: matrix is not q-banded");
      if (i != j && block(D, i, j).cwiseAbs().maxCoeff() > 0.0)
        throw ValidationError("verify_banded_decay: shift must be block diagonal");
    }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esA(A, Eigen::EigenvaluesOnly);
  double a0 = esA.eigenvalues().minCoeff();
  double b0 = esA.eigenvalues().maxCoeff();
  if (a0 <= 0.0) throw ValidationError("verify_banded_decay: matrix must be positive definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esD(D, Eigen::EigenvaluesOnly);
  if (esD.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, b0))
    throw ValidationError("verify_banded_decay: shift must be positive semi-definite");

  double cond = b0 / a0;
  double gamma = std::pow((std::sqrt(cond) - 1.0) / (std::sqrt(cond) + 1.0), 2.0 / q);
  Eigen::MatrixXd inv = (A + D).llt().solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));

  BandedDecayReport report;
  report.samples = samples;
  report.a0 = a0;
  report.b0 = b0;
  report.gamma = gamma;

  Rng rng(mix_seed(seed, 0xBA4D));
  auto sample_set = [&](int count) {
    std::vector<int> all(blocks);
    for (int i = 0; i < blocks; ++i) all[i] = i;
    for (int i = blocks - 1; i > 0; --i) std::swap(all[i], all[rng.uniform_int(0, i)]);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  };
  for (int s = 0; s < samples; ++s) {
    std::vector<int> rows = sample_set(rng.uniform_int(1, std::max(1, blocks / 2)));
    std::vector<int> cols = sample_set(rng.uniform_int(1, std::max(1, blocks / 2)));
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()) * block_dim,
                        static_cast<Eigen::Index>(cols.size()) * block_dim);
    int dhat = blocks;
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < cols.size(); ++j) {
        sub.block(static_cast<Eigen::Index>(i) * block_dim,
                  static_cast<Eigen::Index>(j) * block_dim, block_dim, block_dim) =
            block(inv, rows[i], cols[j]);
        dhat = std::min(dhat, std::abs(rows[i] - cols[j]));
      }
    double measured = sub.jacobiSvd().singularValues()(0);
    double allowed = (2.0 / a0) * std::pow(gamma, dhat);
    report.max_excess = std::max(report.max_excess, measured - allowed);
    if (measured > allowed + 1e-10) ++report.violations;
  }
  return report;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_block_tridiagonal(int blocks, int block_dim,
                                                                     std::uint64_t seed) {
  if (blocks <= 0 || block_dim <= 0)
    throw ValidationError("random_block_tridiagonal: sizes must be positive");
  Rng rng(mix_seed(seed, 0x7121));
  const Eigen::Index dim = static_cast<Eigen::Index>(blocks) * block_dim;
  // L L' keeps the block-tridiagonal profile when L is block lower
  // bidiagonal; a diagonal shift controls the smallest eigenvalue.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < blocks; ++i) {
    Eigen::MatrixXd diag = rng.normal_matrix(block_dim, block_dim);
    diag += (1.0 + block_dim) * Eigen::MatrixXd::Identity(block_dim, block_dim);
    L.block(static_cast<Eigen::Index>(i) * block_dim, static_cast<Eigen::Index>(i) * block_dim,
            block_dim, block_dim) = diag;
    if (i > 0)
      L.block(static_cast<Eigen::Index>(i) * block_dim,
              static_cast<Eigen::Index>(i - 1) * block_dim, block_dim, block_dim) =
          0.7 * rng.normal_matrix(block_dim, block_dim);
  }
  Eigen::MatrixXd A = L * L.transpose();
  A += 0.1 * Eigen::MatrixXd::Identity(dim, dim);
  A = 0.5 * (A + A.transpose()).eval();

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < blocks; ++i) {
    if (rng.uniform() < 0.3) continue;  // leave some blocks exactly zero
    Eigen::MatrixXd g = rng.normal_matrix(block_dim, block_dim);
    D.block(static_cast<Eigen::Index>(i) * block_dim, static_cast<Eigen::Index>(i) * block_dim,
            block_dim, block_dim) = g * g.transpose();
  }
  return {A, D};
}

CheckReport verify_opt_stability(const LtvSystem& sys, const CostModel& model,
                                 const TerminalCost& F, int t, int p, int trials,
                                 std::uint64_t seed) {
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  if (p < tc.d) throw PreconditionError("verify_opt_stability: p must be >= d");
  if (t < 0 || t + p > sys.T) throw RangeError("verify_opt_stability: window exceeds T");
  CheckReport report;
  report.trials = trials;
  std::vector<TrialStats> stats(trials);
  std::vector<std::vector<double>> per_h(trials, std::vector<double>(p, 0.0));
  parallel_for(trials, [&](int i) {
    Rng rng(mix_seed(seed, 0x57AB + static_cast<std::uint64_t>(i)));
    Eigen::VectorXd x = rng.ball(sys.n, 1.5);
    std::vector<Eigen::VectorXd> zeta(p);
    double sup = 0.0;
    for (int tau = 0; tau < p; ++tau) {
      zeta[tau] = rng.ball(sys.n, 0.5);
      sup = std::max(sup, zeta[tau].norm());
    }
    SolveResult res = solve_terminal_cost(sys, model, F, t, p, x, zeta);
    TrialStats& st = stats[i];
    for (int hh = 1; hh <= p; ++hh) {
      double allowed = tc.C * std::pow(tc.lambda, hh) * x.norm() +
                       2.0 * tc.C / (1.0 - tc.lambda) * sup;
      envelope_check(st, res.states[hh].norm(), allowed);
      if (allowed > 0.0) per_h[i][hh - 1] = res.states[hh].norm() / allowed;
    }
  });
  report.per_h_ratio.assign(p, 0.0);
  for (int i = 0; i < trials; ++i) {
    report.violations += stats[i].violations;
    report.max_ratio = std::max(report.max_ratio, stats[i].max_ratio);
    for (int hh = 0; hh < p; ++hh)
      report.per_h_ratio[hh] = std::max(report.per_h_ratio[hh], per_h[i][hh]);
  }
  return report;
}

CheckReport verify_cost_smoothness(const LtvSystem& sys, const CostModel& model, int t, int p,
                                   double eta, int trials, std::uint64_t seed) {
  if (eta <= 0.0) throw ValidationError("verify_cost_smoothness: eta must be > 0");
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  if (p < tc.d) throw PreconditionError("verify_cost_smoothness: p must be >= d");
  if (t < 0 || t + p > sys.T) throw RangeError("verify_cost_smoothness: window exceeds T");
  CheckReport report;
  report.trials = trials;
  std::vector<TrialStats> stats(trials);
  parallel_for(trials, [&](int i) {
    Rng rng(mix_seed(seed, 0x5E00 + static_cast<std::uint64_t>(i)));
    Eigen::VectorXd x = rng.ball(sys.n, 1.0);
    Eigen::VectorXd xp = x + rng.ball(sys.n, 0.75);
    Eigen::VectorXd z = rng.ball(sys.n, 1.0);
    Eigen::VectorXd zp = z + rng.ball(sys.n, 0.75);
    std::vector<Eigen::VectorXd> zeta(p);
    for (int tau = 0; tau < p; ++tau) zeta[tau] = rng.ball(sys.n, 0.5);
    double lhs = optimal_value(sys, model, t, p, x, zeta, z);
    double base = optimal_value(sys, model, t, p, xp, zeta, zp);
    double rhs = (1.0 + eta) * base + 0.5 * (tc.L0 + tc.l_f) * (1.0 + 1.0 / eta) *
                                          ((xp - x).squaredNorm() + (zp - z).squaredNorm());
    envelope_check(stats[i], lhs, rhs);
  });
  for (const auto& st : stats) {
    report.violations += st.violations;
    report.max_ratio = std::max(report.max_ratio, st.max_ratio);
  }
  return report;
}

CheckReport verify_switching_smoothness(const LtvSystem& sys, const CostModel& model, int t,
                                        int p, int trials, std::uint64_t seed) {
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  if (p < tc.d || p > 2 * tc.d - 1)
    throw PreconditionError("verify_switching_smoothness: need d <= p <= 2d-1");
  if (t < 0 || t + p > sys.T) throw RangeError("verify_switching_smoothness: window exceeds T");
  const double l2 = tc.L2_of_p(p);
  CheckReport report;
  report.trials = trials;
  std::vector<TrialStats> stats(trials);
  parallel_for(trials, [&](int i) {
    Rng rng(mix_seed(seed, 0x51 + static_cast<std::uint64_t>(i)));
    const int n = sys.n;
    Eigen::VectorXd x = rng.ball(n, 1.0);
    Eigen::VectorXd z = rng.ball(n, 1.0);
    std::vector<Eigen::VectorXd> zeta(p);
    for (int tau = 0; tau < p; ++tau) zeta[tau] = rng.ball(n, 0.5);

    // Central differences of the exact gradient in the stacked (x, zeta, z).
    const Eigen::Index dim = static_cast<Eigen::Index>(p + 2) * n;
    Eigen::VectorXd point(dim);
    point << x, stack_vectors(zeta), z;
    double step = 1e-4 * (1.0 + point.norm());
    auto grad_at = [&](const Eigen::VectorXd& q) {
      Eigen::VectorXd qx = q.head(n);
      Eigen::VectorXd qz = q.tail(n);
      std::vector<Eigen::VectorXd> qzeta(p);
      for (int tau = 0; tau < p; ++tau)
        qzeta[tau] = q.segment(n + static_cast<Eigen::Index>(tau) * n, n);
      return switching_cost_derivatives(sys, model, t, p, qx, qzeta, qz).gradient;
    };
    Eigen::MatrixXd H(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      Eigen::VectorXd lo = point, hi = point;
      lo(j) -= step;
      hi(j) += step;
      H.col(j) = (grad_at(hi) - grad_at(lo)) / (2.0 * step);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    TrialStats& st = stats[i];
    if (lo < -1e-6 || hi > l2 + 1e-6) ++st.violations;
    st.max_ratio = std::max(st.max_ratio, hi / l2);
  });
  for (const auto& st : stats) {
    report.violations += st.violations;
    report.max_ratio = std::max(report.max_ratio, st.max_ratio);
  }
  return report;
}

RegretSweep regret_sweep(const LtvSystem& sys, const CostModel& model,
                         const std::vector<int>& k_values, const TerminalCost& F) {
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  RegretSweep sweep;
  sweep.lambda_theory = tc.lambda;
  RunRecord opt = run_opt(sys, model);
  sweep.rows.resize(k_values.size());
  parallel_for(static_cast<int>(k_values.size()), [&](int i) {
    RegretRow& row = sweep.rows[i];
    row.k = k_values[i];
    row.cost_opt = opt.total_cost;
    row.bound_shape = std::pow(tc.lambda, row.k) * sys.T;
    try {
      RunRecord rec = run_pc_k(sys, model, row.k, F);
      row.cost_alg = rec.total_cost;
      row.regret = rec.total_cost - opt.total_cost;
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  });
  std::vector<double> xs, ys;
  for (const auto& row : sweep.rows) {
    if (!row.failed && row.regret > 1e-10) {
      xs.push_back(static_cast<double>(row.k));
      ys.push_back(std::log(row.regret));
    }
  }
  LineFit fit = fit_line(xs, ys);
  sweep.fit_slope = fit.slope;
  sweep.fit_r2 = fit.r2;
  sweep.fit_points = fit.points;
  return sweep;
}

IssReport verify_iss(const RunRecord& record, const TheoryConstants& tc, double delta, double D) {
  if (record.tag.kind != ControllerKind::PCk)
    throw ValidationError("verify_iss: record must come from the receding-horizon controller");
  IssReport report;
  report.k = record.tag.k;
  report.k_threshold = k_regret_threshold(tc, delta);
  if (record.tag.k < report.k_threshold)
    throw PreconditionError("verify_iss: window k=" + std::to_string(record.tag.k) +
                            " is below the threshold " + std::to_string(report.k_threshold));
  const int T = static_cast<int>(record.trajectory.states.size()) - 1;
  const int k = record.tag.k;
  const double x0n = record.trajectory.states[0].norm();
  const double lam = tc.lambda;
  const double C = tc.C;
  double tail_gain = 2.0 * C / (delta * (1.0 - lam)) * (1.0 + 2.0 * C / (1.0 - lam));
  for (int t = 1; t <= T; ++t) {
    double bound;
    if (t <= T - k) {
      bound = C / delta * std::pow(1.0 - delta, std::max(0, t - k)) * x0n + tail_gain * D;
    } else {
      bound = C * C / delta * std::pow(1.0 - delta, T - 2 * k) * std::pow(lam, t + k - T) * x0n +
              (C * tail_gain + 2.0 * C / (1.0 - lam)) * D;
    }
    double measured = record.trajectory.states[t].norm();
    ++report.checked;
    if (bound > 0.0) report.max_ratio = std::max(report.max_ratio, measured / bound);
    if (measured > bound * kEnvelopeSlack) ++report.violations;
  }
  return report;
}

CompetitiveReport competitive_report(const LtvSystem& sys, const CostModel& model, int k,
                                     double epsilon, const SolverOptions& opts) {
  TheoryConstants tc = theory_constants(analyze_controllability(sys), model);
  CompetitiveReport report;
  report.k = k;
  report.k_threshold = k_competitive_threshold(tc, epsilon);
  report.lambda = tc.lambda;
  report.C = tc.C;
  if (k < report.k_threshold)
    throw PreconditionError("competitive_report: window k=" + std::to_string(k) +
                            " is below the threshold " + std::to_string(report.k_threshold));
  RunRecord opt = run_opt(sys, model, opts);
  if (opt.total_cost <= 1e-12)
    throw DegenerateInstanceError("competitive_report: benchmark cost is numerically zero");
  RunRecord alg = run_pc_k(sys, model, k, TerminalCost::indicator(), opts);
  report.cost_alg = alg.total_cost;
  report.cost_opt = opt.total_cost;
  report.ratio = alg.total_cost / opt.total_cost;
  report.bound = 1.0 + std::pow(tc.lambda, k) * cr_coefficient(tc, epsilon);
  report.ratio_ok = report.ratio <= report.bound * kEnvelopeSlack;

  std::vector<double> phi = potential_series(alg, opt);
  const int T = sys.T;
  double sum = 0.0;
  for (int t = 1; t <= T - k; ++t) sum += phi[t];
  report.potential_sum = sum;
  double l = tc.lambda;
  double coeff = 24.0 * std::pow(tc.C, 4.0) * (tc.C + 1.0) * (tc.C + 1.0) /
                 (epsilon * std::pow(l, 4.0) * (1.0 - l) * (1.0 - l) * (1.0 - l * l) *
                  (1.0 - l * l) * tc.m_f);
  report.potential_bound = coeff * std::pow(l, 2.0 * k) * opt.total_cost;
  report.potential_ok = sum <= report.potential_bound * kEnvelopeSlack + 1e-18;
  return report;
}

std::vector<double> potential_series(const RunRecord& record, const RunRecord& opt) {
  if (record.trajectory.states.size() != opt.trajectory.states.size())
    throw ValidationError("potential_series: horizon mismatch");
  std::vector<double> phi(record.trajectory.states.size());
  for (size_t t = 0; t < phi.size(); ++t)
    phi[t] = (record.trajectory.states[t] - opt.trajectory.states[t]).squaredNorm();
  return phi;
}

}  // namespace ltvpc
