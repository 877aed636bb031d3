#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rdbench {

/// Residuals of a no-intercept weighted regression of `expected` on the
/// benchmark weights; `v` defaults to unit weights.
Eigen::VectorXd residualize(const Eigen::VectorXd& expected, const Eigen::VectorXd& w_star,
                            const std::optional<Eigen::VectorXd>& v = std::nullopt);

enum class ConstraintMode { DollarNeutral, ZeroExpectedCorrelation, OrthogonalToBenchmark };

/// Homogeneous constraint columns Q (N x p): the unit vector, Gp w* for
/// zero expected correlation, and w* itself for orthogonality, in that order.
Eigen::MatrixXd build_constraints(const std::set<ConstraintMode>& modes, const Eigen::MatrixXd& gp,
                                  const Eigen::VectorXd& w_star);

/// Dollar-neutral sleeve problem. Bounds may be infinite.
struct OverlayProblem {
  Eigen::VectorXd expected;  // E, used in the mean-variance objective
  Eigen::MatrixXd gp;        // Gamma', symmetric positive definite
  Eigen::VectorXd w_star;    // benchmark, all > 0
  Eigen::VectorXd lower;     // w_min, with -w* <= lower <= 0
  Eigen::VectorXd upper;     // w_max >= 0
  Eigen::MatrixXd q;         // N x p, full column rank; Q' w' = 0
  /// Returns the Sharpe ratio is measured with; defaults to `expected`.
  /// Set when `expected` has been residualized.
  std::optional<Eigen::VectorXd> sharpe_returns;

  Eigen::Index size() const { return expected.size(); }
  const Eigen::VectorXd& sharpe_vector() const { return sharpe_returns ? *sharpe_returns : expected; }
  void validate() const;
};

/// Percentage band bounds: w' in [-z w*, z w*].
std::pair<Eigen::VectorXd, Eigen::VectorXd> band_bounds(const Eigen::VectorXd& w_star, double z);

enum class BoundState { Free, AtLower, AtUpper, Fixed };

struct MvoSolution {
  Eigen::VectorXd w;
  std::vector<BoundState> state;
  Eigen::VectorXd multipliers;  // for the constraint columns of Q
  double objective = 0.0;       // E'w - (1/gamma') w' Gp w
  int iterations = 0;
};

struct MvoOptions {
  int max_iterations = 0;  // 0 picks 10 N + 100
};

/// Maximizes E'w - (1/gamma') w' Gp w subject to lower <= w <= upper and
/// Q'w = 0 with a primal active-set method started from w = 0.
MvoSolution optimize_mvo(const OverlayProblem& problem, double gamma_prime, const MvoOptions& options = {});

double mvo_objective(const OverlayProblem& problem, double gamma_prime, const Eigen::VectorXd& w);

/// Post-hoc first-order optimality check computed from scratch.
struct KktReport {
  bool ok = false;
  double stationarity = 0.0;     // largest free-coordinate residual
  double sign_violation = 0.0;   // largest wrong-sign residual at an active bound
  double equality_residual = 0.0;
  double bound_violation = 0.0;
  int active_bounds = 0;
};

KktReport verify_kkt(const OverlayProblem& problem, double gamma_prime, const Eigen::VectorXd& w,
                     double tol = 1e-8);

/// Expected Sharpe ratio of w* + w'.
double combined_sharpe(const OverlayProblem& problem, const Eigen::VectorXd& w_prime);

enum class TuneStatus { Interior, BracketSaturated, ZeroOptimal, NoSignal };

struct CombineResult {
  Eigen::VectorXd weights;
  std::optional<double> rho;  // absent when the sleeve has zero risk
  double sigma_star = 0.0;
  double sigma_prime = 0.0;
};

/// w = w* + w', with the expected correlation between the two legs.
CombineResult combine(const Eigen::VectorXd& w_star, const Eigen::VectorXd& w_prime, const Eigen::MatrixXd& gp);

struct OverlayResult {
  Eigen::VectorXd w_prime;
  double gamma_prime = 0.0;
  Eigen::VectorXd combined;
  std::vector<std::pair<double, double>> sharpe_curve;  // (gamma', S) probes, sorted by gamma'
  TuneStatus status = TuneStatus::Interior;
  double sharpe_zero = 0.0;  // S(0) = E*/sigma*
  double sharpe_opt = 0.0;
  std::optional<double> rho;
  int active_bounds = 0;
  double constraint_residual = 0.0;
  int evaluations = 0;
};

/// Default upper end of the gamma' bracket: 100 times the scale at which the
/// equality-constrained sleeve first touches a bound. Falls back to 1 when
/// no bound can ever bind.
double default_gamma_max(const OverlayProblem& problem);

/// Golden-section search for the gamma' in (0, gamma_max] maximizing the
/// combined Sharpe ratio. The bracket shrinks until its width is below `tol`
/// times its midpoint.
OverlayResult tune_gamma(const OverlayProblem& problem, double gamma_max, double tol = 1e-6,
                         const MvoOptions& options = {});

}  // namespace rdbench
