#include "ltvpc/system.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ltvpc/errors.hpp"
#include "ltvpc/rng.hpp"

namespace ltvpc {

namespace {

double spectral_norm(const Eigen::MatrixXd& mat) {
  if (mat.size() == 0) return 0.0;
  return mat.jacobiSvd().singularValues()(0);
}

double min_singular_value(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 1);
}

/// Largest singular value of the Moore-Penrose inverse, i.e. the reciprocal
/// of the smallest singular value above the rank cutoff. Zero matrix maps to 0.
double pinv_norm(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0.0;
  double cutoff = 1e-12 * sv(0);
  double smallest = 0.0;
  for (Eigen::Index i = sv.size() - 1; i >= 0; --i) {
    if (sv(i) > cutoff) {
      smallest = sv(i);
      break;
    }
  }
  return smallest > 0.0 ? 1.0 / smallest : 0.0;
}

}  // namespace

void LtvSystem::validate() const {
  if (T <= 0 || n <= 0 || m <= 0) throw ValidationError("LtvSystem: T, n, m must be positive");
  if (static_cast<int>(A.size()) != T || static_cast<int>(B.size()) != T ||
      static_cast<int>(w.size()) != T)
    throw ValidationError("LtvSystem: A, B, w must each have T entries");
  if (x0.size() != n) throw ValidationError("LtvSystem: x0 dimension mismatch");
  if (!x0.allFinite()) throw ValidationError("LtvSystem: x0 has non-finite entries");
  for (int t = 0; t < T; ++t) {
    if (A[t].rows() != n || A[t].cols() != n)
      throw ValidationError("LtvSystem: A[" + std::to_string(t) + "] dimension mismatch");
    if (B[t].rows() != n || B[t].cols() != m)
      throw ValidationError("LtvSystem: B[" + std::to_string(t) + "] dimension mismatch");
    if (w[t].size() != n)
      throw ValidationError("LtvSystem: w[" + std::to_string(t) + "] dimension mismatch");
    if (!A[t].allFinite() || !B[t].allFinite() || !w[t].allFinite())
      throw ValidationError("LtvSystem: non-finite entry at t=" + std::to_string(t));
  }
}

Eigen::MatrixXd transition_matrix(const LtvSystem& sys, int t2, int t1) {
  if (t1 < 0 || t1 > sys.T || t2 < 0 || t2 > sys.T)
    throw RangeError("transition_matrix: time index out of [0, T]");
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(sys.n, sys.n);
  for (int s = t1; s < t2; ++s) phi = sys.A[s] * phi;
  return phi;
}

Eigen::MatrixXd controllability_matrix(const LtvSystem& sys, int t, int p) {
  if (p <= 0) throw RangeError("controllability_matrix: p must be positive");
  if (t < 0 || t + p > sys.T) throw RangeError("controllability_matrix: window t+p exceeds T");
  Eigen::MatrixXd M(sys.n, sys.m * p);
  // Accumulate the trailing transition products right to left:
  // block j is transition(t+p, t+j+1) * B_{t+j}.
  Eigen::MatrixXd tail = Eigen::MatrixXd::Identity(sys.n, sys.n);
  for (int j = p - 1; j >= 0; --j) {
    M.middleCols(static_cast<Eigen::Index>(j) * sys.m, sys.m) = tail * sys.B[t + j];
    if (j > 0) tail = tail * sys.A[t + j];
  }
  return M;
}

ControllabilityReport analyze_controllability(const LtvSystem& sys, double rank_tol) {
  sys.validate();
  if (rank_tol < 0.0) throw ValidationError("analyze_controllability: rank_tol must be >= 0");

  ControllabilityReport report;
  report.a = 0.0;
  report.b = 0.0;
  report.b_prime = 0.0;
  for (int t = 0; t < sys.T; ++t) {
    report.a = std::max(report.a, spectral_norm(sys.A[t]));
    report.b = std::max(report.b, spectral_norm(sys.B[t]));
    report.b_prime = std::max(report.b_prime, pinv_norm(sys.B[t]));
  }

  int first_failing_t = -1;
  for (int d = 1; d <= sys.T; ++d) {
    bool ok = true;
    std::vector<double> sigmas;
    sigmas.reserve(sys.T - d + 1);
    for (int t = 0; t + d <= sys.T; ++t) {
      Eigen::MatrixXd M = controllability_matrix(sys, t, d);
      if (M.cols() < M.rows()) {
        ok = false;
        first_failing_t = t;
        break;
      }
      double smin = min_singular_value(M);
      double smax = spectral_norm(M);
      if (smin <= rank_tol * std::max(smax, 1e-300)) {
        ok = false;
        first_failing_t = t;
        break;
      }
      sigmas.push_back(smin);
    }
    if (ok) {
      report.d = d;
      report.per_t_sigma = std::move(sigmas);
      report.sigma = *std::min_element(report.per_t_sigma.begin(), report.per_t_sigma.end());
      return report;
    }
  }
  throw UncontrollableError("analyze_controllability: no window up to T=" + std::to_string(sys.T) +
                            " reaches full row rank; first failing t=" +
                            std::to_string(first_failing_t));
}

Trajectory simulate(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& controls) {
  if (static_cast<int>(controls.size()) != sys.T)
    throw ValidationError("simulate: need exactly T controls");
  Trajectory traj;
  traj.states.resize(sys.T + 1);
  traj.controls = controls;
  traj.states[0] = sys.x0;
  for (int t = 0; t < sys.T; ++t) {
    if (controls[t].size() != sys.m) throw ValidationError("simulate: control dimension mismatch");
    traj.states[t + 1] = sys.A[t] * traj.states[t] + sys.B[t] * controls[t] + sys.w[t];
  }
  traj.dyn_residual = dynamics_residual(sys, traj.states, traj.controls);
  return traj;
}

double dynamics_residual(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& states,
                         const std::vector<Eigen::VectorXd>& controls) {
  if (static_cast<int>(states.size()) != sys.T + 1 ||
      static_cast<int>(controls.size()) != sys.T)
    throw ValidationError("dynamics_residual: sequence length mismatch");
  double worst = 0.0;
  for (int t = 0; t < sys.T; ++t) {
    double r = (states[t + 1] - sys.A[t] * states[t] - sys.B[t] * controls[t] - sys.w[t]).norm();
    worst = std::max(worst, r);
  }
  return worst;
}

namespace {

Eigen::MatrixXd random_matrix_with_norm(Rng& rng, int rows, int cols, double norm) {
  Eigen::MatrixXd g = rng.normal_matrix(rows, cols);
  double cur = spectral_norm(g);
  if (cur == 0.0) return Eigen::MatrixXd::Zero(rows, cols);
  return (norm / cur) * g;
}

LtvSystem generate_random(const InstanceSpec& spec, std::uint64_t seed, bool stable) {
  LtvSystem sys;
  sys.T = spec.T;
  sys.n = spec.n;
  sys.m = spec.m;
  Rng rng(mix_seed(seed, 0x11));
  sys.A.reserve(spec.T);
  sys.B.reserve(spec.T);
  sys.w.reserve(spec.T);
  for (int t = 0; t < spec.T; ++t) {
    double lo = stable ? 0.3 * spec.a_max : 0.0;
    double target = rng.uniform(lo, spec.a_max);
    sys.A.push_back(random_matrix_with_norm(rng, spec.n, spec.n, target));
    sys.B.push_back(random_matrix_with_norm(rng, spec.n, spec.m, spec.b_scale));
    sys.w.push_back(rng.ball(spec.n, spec.disturbance_bound));
  }
  sys.x0 = rng.ball(spec.n, spec.x0_scale);
  return sys;
}

LtvSystem generate_gridfreq(const InstanceSpec& spec, std::uint64_t seed) {
  if (spec.n % 2 != 0 || spec.n < 2)
    throw ValidationError("gridfreq_toy: state dimension must be even");
  int g = spec.n / 2;
  if (spec.m != g) throw ValidationError("gridfreq_toy: control dimension must be n/2");
  if (spec.inertia_base <= 0.0) throw ValidationError("gridfreq_toy: inertia_base must be > 0");
  if (spec.inertia_amplitude < 0.0 || spec.inertia_amplitude >= 1.0)
    throw ValidationError("gridfreq_toy: inertia_amplitude must lie in [0, 1)");
  if (spec.euler_step <= 0.0) throw ValidationError("gridfreq_toy: euler_step must be > 0");

  // Path-graph Laplacian couples neighboring generators.
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g, g);
  for (int i = 0; i + 1 < g; ++i) {
    L(i, i) += 1.0;
    L(i + 1, i + 1) += 1.0;
    L(i, i + 1) -= 1.0;
    L(i + 1, i) -= 1.0;
  }
  Eigen::MatrixXd D = spec.damping * Eigen::MatrixXd::Identity(g, g);

  LtvSystem sys;
  sys.T = spec.T;
  sys.n = spec.n;
  sys.m = g;
  Rng rng(mix_seed(seed, 0x12));
  const double dt = spec.euler_step;
  const double period = 10.0;
  for (int t = 0; t < spec.T; ++t) {
    Eigen::VectorXd inv_inertia(g);
    for (int i = 0; i < g; ++i) {
      double phase = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(g);
      double inertia = spec.inertia_base *
                       (1.0 + spec.inertia_amplitude * std::sin(2.0 * M_PI * t * dt / period + phase));
      inv_inertia(i) = 1.0 / inertia;
    }
    Eigen::MatrixXd At = Eigen::MatrixXd::Identity(sys.n, sys.n);
    At.topRightCorner(g, g) += dt * Eigen::MatrixXd::Identity(g, g);
    At.bottomLeftCorner(g, g) = -dt * inv_inertia.asDiagonal() * L;
    At.bottomRightCorner(g, g) -= dt * inv_inertia.asDiagonal() * D;
    Eigen::MatrixXd Bt = Eigen::MatrixXd::Zero(sys.n, g);
    Bt.bottomRows(g) = dt * inv_inertia.asDiagonal() * Eigen::MatrixXd::Identity(g, g);
    sys.A.push_back(At);
    sys.B.push_back(Bt);
    sys.w.push_back(rng.ball(sys.n, spec.disturbance_bound));
  }
  sys.x0 = rng.ball(sys.n, spec.x0_scale);
  return sys;
}

}  // namespace

LtvSystem generate_instance(const InstanceSpec& spec, std::uint64_t seed) {
  if (spec.T <= 0 || spec.n <= 0 || spec.m <= 0)
    throw ValidationError("generate_instance: T, n, m must be positive");
  if (spec.b_scale <= 0.0 && spec.family != "gridfreq_toy")
    throw ValidationError("generate_instance: b_scale must be > 0");
  if (spec.disturbance_bound < 0.0)
    throw ValidationError("generate_instance: disturbance_bound must be >= 0");

  LtvSystem sys;
  if (spec.family == "random_stable") {
    sys = generate_random(spec, seed, true);
  } else if (spec.family == "random_general") {
    sys = generate_random(spec, seed, false);
  } else if (spec.family == "tracking") {
    sys = generate_random(spec, seed, true);
    // Reference folded into the disturbances: new state is x_t - ref_t, so
    // w_t picks up A_t ref_t - ref_{t+1} and x0 shifts by ref_0.
    Rng rng(mix_seed(seed, 0x13));
    std::vector<double> phases(spec.n);
    for (int i = 0; i < spec.n; ++i) phases[i] = rng.uniform(0.0, 2.0 * M_PI);
    auto ref = [&](int t) {
      Eigen::VectorXd r(spec.n);
      for (int i = 0; i < spec.n; ++i)
        r(i) = spec.tracking_amplitude * std::sin(2.0 * M_PI * t / 20.0 + phases[i]);
      return r;
    };
    for (int t = 0; t < spec.T; ++t) sys.w[t] += sys.A[t] * ref(t) - ref(t + 1);
    sys.x0 -= ref(0);
  } else if (spec.family == "gridfreq_toy") {
    sys = generate_gridfreq(spec, seed);
  } else {
    throw ValidationError("generate_instance: unknown family '" + spec.family + "'");
  }
  sys.validate();
  analyze_controllability(sys);
  return sys;
}

}  // namespace ltvpc
