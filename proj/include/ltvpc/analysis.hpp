#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ltvpc/controllers.hpp"
#include "ltvpc/soco.hpp"

namespace ltvpc {

/// Closed-form constants derived from the controllability report and the
/// cost conditioning. C_of_p switches between the contraction-rate regimes
/// at |a - 1| <= 1e-12.
struct TheoryConstants {
  double a = 0.0;
  double b = 0.0;
  double b_prime = 0.0;
  double sigma = 0.0;
  int d = 0;
  double m_f = 0.0;
  double l_f = 0.0;
  double m_c = 0.0;
  double l_c = 0.0;
  double ell = 0.0;  // max(l_f, l_c)

  double L0 = 0.0;
  double lambda0 = 0.0;
  double lambda = 0.0;
  double C0 = 0.0;
  double C = 0.0;
  double L4 = 0.0;
  bool c_below_one = false;  // recorded, never asserted

  double C_of_p(int p) const;
  double L2_of_p(int p) const;
  double L1_of_p(int p) const;           // C(p) (1 + ell C(p) / m_c)
  double L1_appendix_of_p(int p) const;  // C(p) (1 + ell C(p)^2 / m_c)
};

TheoryConstants theory_constants(const ControllabilityReport& report, const CostModel& model);

/// Least prediction window making the geometric coefficient sum contract by
/// the margin delta. Thresholds can be astronomically large on badly
/// conditioned instances, hence the wide type.
long long k_regret_threshold(const TheoryConstants& tc, double delta);
/// Least prediction window admitted by the competitive-ratio guarantee.
long long k_competitive_threshold(const TheoryConstants& tc, double epsilon);
/// Least replan window; at least d.
long long h_replan_threshold(const TheoryConstants& tc, double epsilon);
/// Full coefficient multiplying lambda^k in the competitive-ratio bound.
double cr_coefficient(const TheoryConstants& tc, double epsilon);

struct WindowThresholds {
  long long k_regret = 0;
  long long k_competitive = 0;
  long long h_replan = 0;
  double cr_coefficient = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
};

WindowThresholds window_thresholds(const TheoryConstants& tc, double delta, double epsilon);

/// Measured perturbation decays against the theoretical envelope. The per-h
/// arrays come from the single-coordinate sweep used for the decay fit;
/// max_violation_ratio covers every checked deviation.
struct SensitivityReport {
  int trials = 0;
  int violations = 0;
  double max_violation_ratio = 0.0;
  std::vector<double> deviation;
  std::vector<double> envelope;
  double lambda_fit = std::numeric_limits<double>::quiet_NaN();
  double lambda_theory = 0.0;
};

/// Solve-and-compare harness for the segment perturbation envelopes (both
/// the terminal-cost and terminal-constrained variants). h selects the row
/// highlighted in the report; every h is checked.
SensitivityReport verify_ltv_sensitivity(const LtvSystem& sys, const CostModel& model, int t,
                                         int p, int h, int trials, std::uint64_t seed);

/// Envelope check for a fully actuated instance with declared (mu, ell).
SensitivityReport verify_soco_sensitivity(const SocoProblem& pb, int h, int trials,
                                          std::uint64_t seed);

/// Solves the reduction of a segment (one decision point every d steps) and
/// compares the decision-point states against the direct segment solve.
/// Returns the largest mismatch.
double verify_soco_reduction(const LtvSystem& sys, const CostModel& model, int t, int segments,
                             std::uint64_t seed);

struct CheckReport {
  int trials = 0;
  int violations = 0;
  double max_ratio = 0.0;  // worst measured / allowed
  // Worst measured/allowed per state index, when the check is index-wise
  // (diagnostic only).
  std::vector<double> per_h_ratio;
};

struct BandedDecayReport {
  int samples = 0;
  int violations = 0;
  double max_excess = 0.0;  // worst measured - allowed
  double a0 = 0.0;
  double b0 = 0.0;
  double gamma = 0.0;
};

/// Checks the off-band decay of the inverse of a banded PD matrix plus a PSD
/// block-diagonal shift on randomly sampled block index sets.
BandedDecayReport verify_banded_decay(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D,
                                      int block_dim, int q, int samples, std::uint64_t seed);

/// Random block-tridiagonal PD matrix (first) and random PSD block-diagonal
/// shift (second), for decay-check harnesses.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_block_tridiagonal(int blocks, int block_dim,
                                                                     std::uint64_t seed);

/// Decay bound on the norm of each predictive state.
CheckReport verify_opt_stability(const LtvSystem& sys, const CostModel& model,
                                 const TerminalCost& F, int t, int p, int trials,
                                 std::uint64_t seed);

/// Relaxed-smoothness bound on the optimal segment value in its endpoints.
CheckReport verify_cost_smoothness(const LtvSystem& sys, const CostModel& model, int t, int p,
                                   double eta, int trials, std::uint64_t seed);

/// Eigenvalue range of the switching cost's finite-difference Hessian at
/// random points: convexity from below, L2(p) from above.
CheckReport verify_switching_smoothness(const LtvSystem& sys, const CostModel& model, int t,
                                        int p, int trials, std::uint64_t seed);

struct RegretRow {
  int k = 0;
  double cost_alg = 0.0;
  double cost_opt = 0.0;
  double regret = 0.0;
  double bound_shape = 0.0;  // lambda^k T
  bool failed = false;
  std::string error;
};

struct RegretSweep {
  std::vector<RegretRow> rows;
  double fit_slope = std::numeric_limits<double>::quiet_NaN();
  double fit_r2 = std::numeric_limits<double>::quiet_NaN();
  int fit_points = 0;
  double lambda_theory = 0.0;
};

RegretSweep regret_sweep(const LtvSystem& sys, const CostModel& model,
                         const std::vector<int>& k_values, const TerminalCost& F);

struct IssReport {
  int k = 0;
  long long k_threshold = 0;
  int checked = 0;
  int violations = 0;
  double max_ratio = 0.0;
};

/// Pointwise state-norm bound for a recorded receding-horizon run; requires
/// the window to meet the regret-condition threshold.
IssReport verify_iss(const RunRecord& record, const TheoryConstants& tc, double delta, double D);

struct CompetitiveReport {
  int k = 0;
  long long k_threshold = 0;
  double cost_alg = 0.0;
  double cost_opt = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  double potential_sum = 0.0;
  double potential_bound = 0.0;
  bool ratio_ok = false;
  bool potential_ok = false;
  double lambda = 0.0;
  double C = 0.0;
};

/// Runs the zero-targeting controller against the benchmark and compares the
/// measured ratio and potential sum with their closed-form bounds.
CompetitiveReport competitive_report(const LtvSystem& sys, const CostModel& model, int k,
                                     double epsilon, const SolverOptions& opts = {});

/// Squared distance between the run's states and the benchmark's states.
std::vector<double> potential_series(const RunRecord& record, const RunRecord& opt);

/// Least-squares line fit; returns (slope, intercept, r_squared).
struct LineFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace ltvpc
