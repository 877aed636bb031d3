#include "rdbench/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "rdbench/errors.hpp"

namespace rdbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Orthonormal basis for the column space of `m`.
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& m) {
  if (m.cols() == 0 || m.rows() == 0) return Eigen::MatrixXd(m.rows(), 0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd full_q = qr.householderQ();
  return full_q.leftCols(rank);
}

/// Orthonormal basis for the orthogonal complement of the columns of `m`.
Eigen::MatrixXd null_basis(const Eigen::MatrixXd& m) {
  const Eigen::Index rows = m.rows();
  if (m.cols() == 0) return Eigen::MatrixXd::Identity(rows, rows);
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd full_q = qr.householderQ();
  return full_q.rightCols(rows - rank);
}

Eigen::Index column_rank(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) return 0;
  Eigen::MatrixXd normalized = m;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double norm = m.col(c).norm();
    if (norm > 0.0) normalized.col(c) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normalized);
  qr.setThreshold(1e-10);
  return qr.rank();
}

}  // namespace

Eigen::VectorXd residualize(const Eigen::VectorXd& expected, const Eigen::VectorXd& w_star,
                            const std::optional<Eigen::VectorXd>& v) {
  if (expected.size() != w_star.size() || (v && v->size() != w_star.size())) {
    throw Error(ErrorCode::InvalidArgument, "residualize inputs have different lengths");
  }
  const Eigen::VectorXd weights = v ? *v : Eigen::VectorXd::Ones(w_star.size());
  const double denominator = weights.dot(w_star.cwiseAbs2());
  if (!(denominator > 0.0)) {
    throw Error(ErrorCode::DegenerateRegression, "sum v w*^2 is not positive");
  }
  const double coefficient = weights.dot(expected.cwiseProduct(w_star)) / denominator;
  return weights.cwiseProduct(expected - coefficient * w_star);
}

Eigen::MatrixXd build_constraints(const std::set<ConstraintMode>& modes, const Eigen::MatrixXd& gp,
                                  const Eigen::VectorXd& w_star) {
  const Eigen::Index n = w_star.size();
  if (gp.rows() != n || gp.cols() != n) {
    throw Error(ErrorCode::InvalidArgument, "constraint inputs have inconsistent shapes");
  }
  std::vector<Eigen::VectorXd> columns{Eigen::VectorXd::Ones(n)};
  if (modes.contains(ConstraintMode::ZeroExpectedCorrelation)) columns.push_back(gp * w_star);
  if (modes.contains(ConstraintMode::OrthogonalToBenchmark)) columns.push_back(w_star);

  Eigen::MatrixXd q(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = columns[c];
  if (column_rank(q) < q.cols()) {
    throw Error(ErrorCode::DegenerateConstraints, "requested constraint columns are linearly dependent");
  }
  return q;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> band_bounds(const Eigen::VectorXd& w_star, double z) {
  if (!(z >= 0.0) || !std::isfinite(z)) {
    throw Error(ErrorCode::InvalidArgument, "band width z must be finite and nonnegative");
  }
  return {-z * w_star, z * w_star};
}

void OverlayProblem::validate() const {
  const Eigen::Index n = expected.size();
  if (n == 0 || gp.rows() != n || gp.cols() != n || w_star.size() != n || lower.size() != n ||
      upper.size() != n || q.rows() != n || (sharpe_returns && sharpe_returns->size() != n)) {
    throw Error(ErrorCode::InvalidArgument, "overlay problem inputs have inconsistent shapes");
  }
  if (!expected.allFinite() || !w_star.allFinite() || !gp.allFinite() || !q.allFinite()) {
    throw Error(ErrorCode::NonFiniteValue, "overlay problem contains non-finite values");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    std::ostringstream msg;
    if (!(w_star(i) > 0.0)) {
      msg << "benchmark weight " << i << " is not positive";
    } else if (!(upper(i) >= lower(i))) {
      msg << "bounds for asset " << i << " are infeasible: upper " << upper(i) << " < lower " << lower(i);
    } else if (!(lower(i) <= 0.0 && upper(i) >= 0.0) || !std::isfinite(lower(i)) || std::isnan(upper(i))) {
      msg << "bounds for asset " << i << " must bracket zero with a finite lower bound";
    } else if (lower(i) < -w_star(i) * (1.0 + 1e-12)) {
      msg << "lower bound for asset " << i << " allows a short combined position";
    }
    if (!msg.str().empty()) throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  if (column_rank(q) < q.cols()) {
    throw Error(ErrorCode::DegenerateConstraints, "constraint matrix Q is not of full column rank");
  }
  if ((gp - gp.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, gp.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::SingularCovariance, "overlay covariance is not symmetric");
  }
  if (Eigen::LLT<Eigen::MatrixXd>(gp).info() != Eigen::Success) {
    throw Error(ErrorCode::SingularCovariance, "overlay covariance is not positive definite");
  }
}

double mvo_objective(const OverlayProblem& problem, double gamma_prime, const Eigen::VectorXd& w) {
  return problem.expected.dot(w) - w.dot(problem.gp * w) / gamma_prime;
}

MvoSolution optimize_mvo(const OverlayProblem& problem, double gamma_prime, const MvoOptions& options) {
  problem.validate();
  if (!(gamma_prime > 0.0) || !std::isfinite(gamma_prime)) {
    throw Error(ErrorCode::InvalidArgument, "gamma' must be positive and finite");
  }
  const Eigen::Index n = problem.size();

  MvoSolution out;
  out.w = Eigen::VectorXd::Zero(n);
  out.state.assign(static_cast<std::size_t>(n), BoundState::Free);

  // Coordinates pinned by lower == upper (necessarily at zero) leave the problem.
  std::vector<Eigen::Index> movable;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (problem.lower(i) == problem.upper(i)) {
      out.state[i] = BoundState::Fixed;
    } else {
      movable.push_back(i);
    }
  }
  const auto m = static_cast<Eigen::Index>(movable.size());
  const Eigen::MatrixXd q_reduced = problem.q(movable, Eigen::all);
  const Eigen::MatrixXd basis = range_basis(q_reduced);  // independent constraint rows on movable coords
  const Eigen::Index r = basis.cols();

  auto finish = [&]() {
    out.objective = mvo_objective(problem, gamma_prime, out.w);
    if (problem.q.cols() > 0) {
      const Eigen::VectorXd grad = problem.expected - (2.0 / gamma_prime) * (problem.gp * out.w);
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (out.state[i] == BoundState::Free) free.push_back(i);
      }
      const Eigen::MatrixXd q_free = problem.q(free, Eigen::all);
      out.multipliers = q_free.completeOrthogonalDecomposition().solve(grad(free));
    }
    return out;
  };

  if (m == 0 || r == m) return finish();  // only w = 0 is feasible

  const Eigen::MatrixXd h = (2.0 / gamma_prime) * problem.gp(movable, movable);
  const Eigen::VectorXd e = problem.expected(movable);
  const Eigen::VectorXd lo = problem.lower(movable);
  const Eigen::VectorXd up = problem.upper(movable);

  double bound_scale = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    bound_scale = std::max(bound_scale, std::abs(lo(i)));
    if (std::isfinite(up(i))) bound_scale = std::max(bound_scale, up(i));
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  std::vector<BoundState> state(static_cast<std::size_t>(m), BoundState::Free);
  const int max_iterations = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n + 100);
  const double multiplier_tol = 1e-13 * std::max(1.0, inf_norm(e));

  bool at_subproblem_min = false;
  int iteration = 0;
  for (;; ++iteration) {
    if (iteration >= max_iterations) {
      std::ostringstream msg;
      msg << "active-set solver hit its cap of " << max_iterations << " iterations (gamma'=" << gamma_prime
          << ", last objective " << mvo_objective(problem, gamma_prime, Eigen::VectorXd::Zero(n)) << ")";
      throw Error(ErrorCode::NoConvergence, msg.str());
    }
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (state[i] == BoundState::Free) free.push_back(i);
    }
    const Eigen::VectorXd g = h * w - e;  // gradient of the minimized form

    if (!at_subproblem_min) {
      // Equality-constrained Newton step on the free coordinates, in the
      // null space of the constraint rows.
      Eigen::VectorXd step = Eigen::VectorXd::Zero(m);
      if (!free.empty()) {
        const Eigen::MatrixXd z = null_basis(basis(free, Eigen::all));
        if (z.cols() > 0) {
          const Eigen::MatrixXd reduced_h = z.transpose() * h(free, free) * z;
          const Eigen::VectorXd y = reduced_h.llt().solve(-(z.transpose() * g(free)));
          step(free) = z * y;
        }
      }
      const double step_norm = inf_norm(step);
      if (step_norm <= 1e-15 * std::max(bound_scale, inf_norm(w))) {
        at_subproblem_min = true;
      } else {
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        BoundState blocking_state = BoundState::Free;
        for (Eigen::Index i : free) {
          if (step(i) < 0.0) {
            const double t = (lo(i) - w(i)) / step(i);
            if (t < alpha) alpha = t, blocking = i, blocking_state = BoundState::AtLower;
          } else if (step(i) > 0.0 && std::isfinite(up(i))) {
            const double t = (up(i) - w(i)) / step(i);
            if (t < alpha) alpha = t, blocking = i, blocking_state = BoundState::AtUpper;
          }
        }
        alpha = std::max(alpha, 0.0);
        for (Eigen::Index i : free) w(i) += alpha * step(i);
        if (blocking >= 0) {
          w(blocking) = blocking_state == BoundState::AtLower ? lo(blocking) : up(blocking);
          state[blocking] = blocking_state;
        } else {
          at_subproblem_min = true;
        }
        continue;
      }
    }

    // Stationary on the current working set: check the bound multipliers.
    Eigen::VectorXd residual = g;
    if (r > 0 && !free.empty()) {
      const Eigen::MatrixXd basis_free = basis(free, Eigen::all);
      const Eigen::VectorXd lambda = basis_free.colPivHouseholderQr().solve(-g(free));
      residual += basis * lambda;
    }
    Eigen::Index release = -1;
    double worst = -multiplier_tol;
    for (Eigen::Index i = 0; i < m; ++i) {
      double mu = 0.0;
      if (state[i] == BoundState::AtLower) {
        mu = residual(i);
      } else if (state[i] == BoundState::AtUpper) {
        mu = -residual(i);
      } else {
        continue;
      }
      if (mu < worst) worst = mu, release = i;
    }
    if (release < 0) break;
    state[release] = BoundState::Free;
    at_subproblem_min = false;
  }

  out.iterations = iteration;
  for (Eigen::Index k = 0; k < m; ++k) {
    out.w(movable[k]) = w(k);
    out.state[movable[k]] = state[k];
  }
  return finish();
}

KktReport verify_kkt(const OverlayProblem& problem, double gamma_prime, const Eigen::VectorXd& w, double tol) {
  const Eigen::Index n = problem.size();
  KktReport report;

  for (Eigen::Index i = 0; i < n; ++i) {
    report.bound_violation = std::max({report.bound_violation, problem.lower(i) - w(i), w(i) - problem.upper(i)});
  }
  report.equality_residual = problem.q.cols() > 0 ? inf_norm(problem.q.transpose() * w) : 0.0;

  const Eigen::VectorXd curvature = (2.0 / gamma_prime) * (problem.gp * w);
  const Eigen::VectorXd grad = problem.expected - curvature;
  double scale = std::max(inf_norm(problem.expected), inf_norm(curvature));
  if (!(scale > 0.0)) scale = 1.0;

  std::vector<Eigen::Index> free;
  std::vector<int> side(static_cast<std::size_t>(n), 0);  // -1 lower, +1 upper, 2 pinned
  for (Eigen::Index i = 0; i < n; ++i) {
    const double snap = 1e-12 * std::max(1.0, std::abs(problem.lower(i)));
    const bool at_lower = w(i) - problem.lower(i) <= snap;
    const bool at_upper = std::isfinite(problem.upper(i)) && problem.upper(i) - w(i) <= snap;
    if (at_lower && at_upper) {
      side[i] = 2;
    } else if (at_lower) {
      side[i] = -1;
    } else if (at_upper) {
      side[i] = 1;
    } else {
      free.push_back(i);
    }
    if (side[i] != 0) ++report.active_bounds;
  }

  Eigen::VectorXd residual = grad;
  if (problem.q.cols() > 0 && !free.empty()) {
    const Eigen::MatrixXd q_free = problem.q(free, Eigen::all);
    const Eigen::VectorXd lambda = q_free.completeOrthogonalDecomposition().solve(grad(free));
    residual -= problem.q * lambda;
  }
  for (Eigen::Index i : free) report.stationarity = std::max(report.stationarity, std::abs(residual(i)) / scale);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Maximization: at an upper bound the objective must still want to go up,
    // at a lower bound it must want to go down.
    if (side[i] == 1) report.sign_violation = std::max(report.sign_violation, -residual(i) / scale);
    if (side[i] == -1) report.sign_violation = std::max(report.sign_violation, residual(i) / scale);
  }

  const double weight_scale = std::max(1e-300, inf_norm(problem.w_star));
  report.ok = report.stationarity <= tol && report.sign_violation <= tol &&
              report.bound_violation <= tol * weight_scale && report.equality_residual <= tol * weight_scale;
  return report;
}

double combined_sharpe(const OverlayProblem& problem, const Eigen::VectorXd& w_prime) {
  const Eigen::VectorXd w = problem.w_star + w_prime;
  const double variance = w.dot(problem.gp * w);
  if (!(variance > 0.0)) {
    throw Error(ErrorCode::DegeneratePortfolioVariance, "combined portfolio has no variance");
  }
  return problem.sharpe_vector().dot(w) / std::sqrt(variance);
}

CombineResult combine(const Eigen::VectorXd& w_star, const Eigen::VectorXd& w_prime, const Eigen::MatrixXd& gp) {
  if (w_star.size() != w_prime.size() || gp.rows() != w_star.size() || gp.cols() != w_star.size()) {
    throw Error(ErrorCode::InvalidArgument, "combine inputs have inconsistent shapes");
  }
  CombineResult out;
  out.weights = w_star + w_prime;
  for (Eigen::Index i = 0; i < out.weights.size(); ++i) {
    if (out.weights(i) < -1e-12) {
      std::ostringstream msg;
      msg << "combined weight " << i << " = " << out.weights(i) << " is negative; check the sleeve bounds";
      throw Error(ErrorCode::LongOnlyViolation, msg.str());
    }
  }
  const double drift = std::abs(out.weights.sum() - w_star.sum());
  if (drift > 1e-10 * std::max(1.0, std::abs(w_star.sum()))) {
    throw Error(ErrorCode::InvalidArgument, "sleeve is not dollar-neutral: total weight moved by " +
                                                std::to_string(drift));
  }
  out.sigma_star = std::sqrt(std::max(0.0, w_star.dot(gp * w_star)));
  out.sigma_prime = std::sqrt(std::max(0.0, w_prime.dot(gp * w_prime)));
  if (out.sigma_prime > 0.0 && out.sigma_star > 0.0) {
    out.rho = w_star.dot(gp * w_prime) / (out.sigma_star * out.sigma_prime);
  }
  return out;
}

double default_gamma_max(const OverlayProblem& problem) {
  problem.validate();
  // Equality-constrained maximizer at gamma' = 1; the sleeve is linear in gamma'.
  const Eigen::LLT<Eigen::MatrixXd> llt(problem.gp);
  const Eigen::VectorXd inv_e = llt.solve(problem.expected);
  Eigen::VectorXd direction = inv_e;
  if (problem.q.cols() > 0) {
    const Eigen::MatrixXd inv_q = llt.solve(problem.q);
    const Eigen::MatrixXd qgq = problem.q.transpose() * inv_q;
    direction -= inv_q * qgq.ldlt().solve(problem.q.transpose() * inv_e);
  }
  direction *= 0.5;

  double first_bind = kInf;
  for (Eigen::Index i = 0; i < direction.size(); ++i) {
    if (problem.lower(i) == problem.upper(i)) continue;
    if (direction(i) > 0.0 && std::isfinite(problem.upper(i))) {
      first_bind = std::min(first_bind, problem.upper(i) / direction(i));
    } else if (direction(i) < 0.0) {
      first_bind = std::min(first_bind, problem.lower(i) / direction(i));
    }
  }
  if (!std::isfinite(first_bind) || !(first_bind > 0.0)) return 1.0;
  return 100.0 * first_bind;
}

OverlayResult tune_gamma(const OverlayProblem& problem, double gamma_max, double tol, const MvoOptions& options) {
  problem.validate();
  if (!(gamma_max > 0.0) || !std::isfinite(gamma_max)) {
    throw Error(ErrorCode::InvalidArgument, "gamma_max must be positive and finite");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");

  OverlayResult result;
  const Eigen::Index n = problem.size();
  result.sharpe_zero = combined_sharpe(problem, Eigen::VectorXd::Zero(n));

  std::map<double, std::pair<double, MvoSolution>> probes;
  auto evaluate = [&](double gamma) -> double {
    if (auto it = probes.find(gamma); it != probes.end()) return it->second.first;
    MvoSolution solution = optimize_mvo(problem, gamma, options);
    const double sharpe = combined_sharpe(problem, solution.w);
    probes.emplace(gamma, std::make_pair(sharpe, std::move(solution)));
    return sharpe;
  };

  double chosen = 0.0;
  if (inf_norm(problem.expected) == 0.0) {
    // Zero signal: the sleeve is zero for every gamma' and S is flat.
    chosen = 0.5 * gamma_max;
    evaluate(chosen);
    result.status = TuneStatus::NoSignal;
  } else {
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0;
    double b = gamma_max;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double sc = evaluate(c);
    double sd = evaluate(d);
    for (int iter = 0; iter < 500; ++iter) {
      if (b - a <= tol * std::max(0.5 * (a + b), 1e-9 * gamma_max)) break;
      if (sc >= sd) {  // ties keep the lower probe
        b = d, d = c, sd = sc;
        c = b - inv_phi * (b - a);
        sc = evaluate(c);
      } else {
        a = c, c = d, sc = sd;
        d = a + inv_phi * (b - a);
        sd = evaluate(d);
      }
    }
    chosen = sc >= sd ? c : d;
    double best = std::max(sc, sd);

    const double at_max = evaluate(gamma_max);
    if (at_max >= best) {
      chosen = gamma_max;
      best = at_max;
      result.status = TuneStatus::BracketSaturated;
    } else {
      result.status = TuneStatus::Interior;
    }
    // Gains at the rounding level of S(0) are not an improvement.
    if (best <= result.sharpe_zero + 1e-12 * std::abs(result.sharpe_zero)) {
      chosen = 0.0;
      result.status = TuneStatus::ZeroOptimal;
    }
  }

  for (const auto& [gamma, entry] : probes) result.sharpe_curve.emplace_back(gamma, entry.first);
  result.evaluations = static_cast<int>(probes.size());

  result.gamma_prime = chosen;
  if (chosen > 0.0) {
    const auto& solution = probes.at(chosen).second;
    result.w_prime = solution.w;
    result.sharpe_opt = probes.at(chosen).first;
    result.active_bounds = static_cast<int>(std::count_if(solution.state.begin(), solution.state.end(),
                                                          [](BoundState s) { return s != BoundState::Free; }));
  } else {
    result.w_prime = Eigen::VectorXd::Zero(n);
    result.sharpe_opt = result.sharpe_zero;
  }
  result.constraint_residual = problem.q.cols() > 0 ? inf_norm(problem.q.transpose() * result.w_prime) : 0.0;

  const CombineResult combined = combine(problem.w_star, result.w_prime, problem.gp);
  result.combined = combined.weights;
  result.rho = combined.rho;
  return result;
}

}  // namespace rdbench
