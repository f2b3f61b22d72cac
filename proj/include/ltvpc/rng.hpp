#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace ltvpc {

/// Derives independent sub-streams from a master seed. splitmix64 step.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random source. Distributions are implemented here rather than
/// taken from <random> so that streams are pinned by this code, not the
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  /// Standard normal via Box-Muller (no cached spare).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  /// Uniform on the closed ball of the given radius.
  Eigen::VectorXd ball(Eigen::Index n, double radius) {
    Eigen::VectorXd dir = normal_vector(n);
    double nrm = dir.norm();
    if (nrm == 0.0) return Eigen::VectorXd::Zero(n);
    double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return (r / nrm) * dir;
  }

  /// Random symmetric matrix with eigenvalues uniform in [lo, hi].
  Eigen::MatrixXd spd(Eigen::Index n, double lo, double hi) {
    Eigen::MatrixXd g = normal_matrix(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd eigs(n);
    for (Eigen::Index i = 0; i < n; ++i) eigs(i) = uniform(lo, hi);
    return q * eigs.asDiagonal() * q.transpose();
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ltvpc
