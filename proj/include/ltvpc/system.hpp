#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace ltvpc {

/// Discrete-time linear time-varying dynamics
///   x_{t+1} = A_t x_t + B_t u_t + w_t,  t = 0..T-1,
/// with a fixed initial state.
struct LtvSystem {
  int T = 0;  // number of time steps
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  std::vector<Eigen::MatrixXd> A;  // T matrices, n x n
  std::vector<Eigen::MatrixXd> B;  // T matrices, n x m
  std::vector<Eigen::VectorXd> w;  // T disturbance vectors
  Eigen::VectorXd x0;

  /// Throws ValidationError on dimension mismatch or non-finite entries.
  void validate() const;
};

/// Uniform controllability data: the index d, the singular-value floor sigma,
/// and the norm bounds a, b, b' computed from the instance.
struct ControllabilityReport {
  int d = 0;
  double sigma = 0.0;
  double a = 0.0;
  double b = 0.0;
  double b_prime = 0.0;
  std::vector<double> per_t_sigma;  // sigma_min(M(t, d)) for t = 0..T-d
};

/// State/control sequences plus the worst dynamics defect over the horizon.
struct Trajectory {
  std::vector<Eigen::VectorXd> states;    // x_0..x_T
  std::vector<Eigen::VectorXd> controls;  // u_0..u_{T-1}
  double dyn_residual = 0.0;
};

/// Product A_{t2-1} ... A_{t1}; identity when t2 <= t1.
Eigen::MatrixXd transition_matrix(const LtvSystem& sys, int t2, int t1);

/// n x (m p) matrix whose j-th block is transition(t+p, t+j+1) * B_{t+j}.
Eigen::MatrixXd controllability_matrix(const LtvSystem& sys, int t, int p);

/// Finds the minimal window d giving every M(t, d) full row rank, and the
/// uniform constants over the horizon. Throws UncontrollableError if no
/// window up to T works.
ControllabilityReport analyze_controllability(const LtvSystem& sys, double rank_tol = 1e-10);

/// Rolls the dynamics forward from x0 under the given controls.
Trajectory simulate(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& controls);

/// Recomputes the dynamics defect of an arbitrary state/control pairing.
double dynamics_residual(const LtvSystem& sys, const std::vector<Eigen::VectorXd>& states,
                         const std::vector<Eigen::VectorXd>& controls);

/// Instance generator parameters. Family selects the construction:
///  - random_stable:  random A_t rescaled to norms below a_max (default < 1)
///  - random_general: random A_t rescaled to norms up to a_max, possibly > 1
///  - tracking:       random_stable base with a sinusoidal reference folded
///                    into the disturbances (amplitude 0 keeps the base)
///  - gridfreq_toy:   forward-Euler discretized two-block oscillator network
///                    with sinusoidally varying inertia
struct InstanceSpec {
  std::string family = "random_stable";
  int n = 2;
  int m = 2;
  int T = 40;
  double a_max = 0.8;
  double b_scale = 1.0;
  double disturbance_bound = 0.5;  // w_t uniform on a ball of this radius
  double x0_scale = 1.0;
  // tracking
  double tracking_amplitude = 1.0;
  // gridfreq_toy
  double inertia_base = 1.0;
  double inertia_amplitude = 0.5;
  double damping = 0.5;
  double euler_step = 0.1;
};

/// Deterministic under (spec, seed). The returned system is validated and
/// passes analyze_controllability.
LtvSystem generate_instance(const InstanceSpec& spec, std::uint64_t seed);

}  // namespace ltvpc
