#include "fordn/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace fordn {

Eigen::VectorXd hard_threshold(const Eigen::VectorXd& a, double lambda) {
  return (a.array() >= lambda).select(a, 0.0);
}

Eigen::VectorXd soft_threshold_nonneg(const Eigen::VectorXd& a, double lambda) {
  return (a.array() - lambda).max(0.0).matrix();
}

Eigen::VectorXd iterative_step(const Eigen::VectorXd& f, const Eigen::VectorXd& y, const Eigen::MatrixXd& W,
                               const Eigen::MatrixXd& S, double lambda, ThresholdMode mode) {
  if (W.cols() != y.size() || S.cols() != f.size() || W.rows() != S.rows()) {
    throw std::invalid_argument("iterative_step: dimension mismatch");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("iterative_step: lambda must be >= 0");
  const Eigen::VectorXd a = W * y + S * f;
  return mode == ThresholdMode::Hard ? hard_threshold(a, lambda) : soft_threshold_nonneg(a, lambda);
}

double largest_gram_eigenvalue(const Eigen::MatrixXd& A, double tolerance, int max_iterations) {
  const Eigen::MatrixXd M = A.rows() <= A.cols() ? Eigen::MatrixXd(A * A.transpose())
                                                 : Eigen::MatrixXd(A.transpose() * A);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(M.rows()).normalized();
  double lambda = v.dot(M * v);
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd w = M * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double next = v.dot(M * v);
    if (std::abs(next - lambda) <= tolerance * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

namespace {

void check_finite(const Eigen::VectorXd& y, double beta) {
  if (!y.allFinite() || !std::isfinite(beta)) throw std::invalid_argument("solver: non-finite input");
  if (beta < 0.0) throw std::invalid_argument("solver: beta must be >= 0");
}

}  // namespace

L1Solver::L1Solver(Eigen::MatrixXd dictionary, SolverOptions options) : G_(std::move(dictionary)), options_(options) {
  if (G_.size() == 0 || !G_.allFinite()) throw std::invalid_argument("L1Solver: empty or non-finite dictionary");
  lipschitz_ = 2.0 * largest_gram_eigenvalue(G_);
  gram_ = G_.transpose() * G_;
  if (!(lipschitz_ > 0.0)) throw std::invalid_argument("L1Solver: zero dictionary");
}

double L1Solver::objective(const Eigen::VectorXd& f, const Eigen::VectorXd& y, double beta,
                           const Eigen::VectorXd& weights) const {
  return (G_ * f - y).squaredNorm() + beta * weights.dot(f);
}

double L1Solver::kkt_residual(const Eigen::VectorXd& f, const Eigen::VectorXd& y, double beta,
                              const Eigen::VectorXd& weights) const {
  const Eigen::VectorXd g = 2.0 * (G_.transpose() * (G_ * f - y)) + beta * weights;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    worst = std::max(worst, f[i] > 0.0 ? std::abs(g[i]) : std::max(0.0, -g[i]));
  }
  return worst;
}

SolverReport L1Solver::solve(const Eigen::VectorXd& y, double beta, const Eigen::VectorXd& weights_in,
                             const Eigen::VectorXd& warm_start) const {
  check_finite(y, beta);
  const Eigen::Index n = G_.cols();
  if (y.size() != G_.rows()) throw std::invalid_argument("solver: observation length does not match dictionary");
  const Eigen::VectorXd weights = weights_in.size() == 0 ? Eigen::VectorXd::Ones(n) : weights_in;
  if (weights.size() != n || !weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("solver: weights must be finite, nonnegative and of length N");
  }
  const auto start = std::chrono::steady_clock::now();
  SolverReport report = options_.algorithm == SolverAlgorithm::ActiveSet ? solve_active_set(y, beta, weights, warm_start)
                                                                         : solve_proximal(y, beta, weights, warm_start);
  report.kkt_residual = kkt_residual(report.solution, y, beta, weights);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SolverReport L1Solver::solve_active_set(const Eigen::VectorXd& y, double beta, const Eigen::VectorXd& weights,
                                        const Eigen::VectorXd& warm_start) const {
  const Eigen::Index n = G_.cols();
  // Stationarity on the passive set P reads (G_P^T G_P) f_P = b_P.
  const Eigen::VectorXd b = G_.transpose() * y - 0.5 * beta * weights;
  const double tol = 1e-13 * std::max(1.0, b.cwiseAbs().maxCoeff());
  const int max_outer = options_.max_iterations;

  SolverReport report;
  Eigen::VectorXd f = warm_start.size() == n ? Eigen::VectorXd(warm_start.cwiseMax(0.0)) : Eigen::VectorXd::Zero(n);
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) passive[static_cast<std::size_t>(i)] = f[i] > 0.0;
  report.objective_history.push_back(objective(f, y, beta, weights));

  auto least_squares = [&](const std::vector<Eigen::Index>& P) {
    const auto m = static_cast<Eigen::Index>(P.size());
    Eigen::MatrixXd Q(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      rhs[r] = b[P[static_cast<std::size_t>(r)]];
      for (Eigen::Index c = 0; c < m; ++c) Q(r, c) = gram_(P[static_cast<std::size_t>(r)], P[static_cast<std::size_t>(c)]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) {
      // Dependent columns: a tiny ridge keeps the step well defined.
      Q.diagonal().array() += 1e-12 * std::max(1.0, Q.diagonal().maxCoeff());
      llt.compute(Q);
    }
    return Eigen::VectorXd(llt.solve(rhs));
  };

  // Restores optimality on the current passive set, stepping back to the
  // feasible region and dropping variables that reach zero.
  auto settle = [&]() {
    for (int guard = 0; guard <= n; ++guard) {
      std::vector<Eigen::Index> P;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)]) P.push_back(i);
      }
      if (P.empty()) return;
      const Eigen::VectorXd z = least_squares(P);
      double alpha = 1.0;
      bool feasible = true;
      for (std::size_t k = 0; k < P.size(); ++k) {
        const auto zk = z[static_cast<Eigen::Index>(k)];
        if (zk <= 0.0) {
          feasible = false;
          const double fk = f[P[k]];
          alpha = std::min(alpha, fk / (fk - zk));
        }
      }
      if (feasible) {
        for (std::size_t k = 0; k < P.size(); ++k) f[P[k]] = z[static_cast<Eigen::Index>(k)];
        return;
      }
      for (std::size_t k = 0; k < P.size(); ++k) {
        const Eigen::Index i = P[k];
        f[i] += alpha * (z[static_cast<Eigen::Index>(k)] - f[i]);
        if (f[i] <= 1e-15 * std::max(1.0, std::abs(z[static_cast<Eigen::Index>(k)]))) {
          f[i] = 0.0;
          passive[static_cast<std::size_t>(i)] = 0;
        }
      }
    }
  };

  settle();
  int it = 0;
  while (it < max_outer) {
    const Eigen::VectorXd w = b - gram_ * f;  // half the negative gradient
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w[i] > best_w) {
        best_w = w[i];
        best = i;
      }
    }
    if (best < 0) {
      report.converged = true;
      break;
    }
    ++it;
    passive[static_cast<std::size_t>(best)] = 1;
    const Eigen::VectorXd before = f;
    settle();
    const double value = objective(f, y, beta, weights);
    if (value > report.objective_history.back()) {
      // Rounding in a nearly dependent passive set; keep the better iterate.
      f = before;
      report.objective_history.push_back(report.objective_history.back());
      break;
    }
    report.objective_history.push_back(value);
  }

  report.solution = std::move(f);
  report.iterations = it;
  report.objective = report.objective_history.back();
  return report;
}

SolverReport L1Solver::solve_proximal(const Eigen::VectorXd& y, double beta, const Eigen::VectorXd& weights,
                                      const Eigen::VectorXd& warm_start) const {
  const Eigen::Index n = G_.cols();
  const double step = 1.0 / lipschitz_;
  const Eigen::VectorXd shrink = step * beta * weights;
  const Eigen::VectorXd Gty = G_.transpose() * y;

  SolverReport report;
  Eigen::VectorXd x = warm_start.size() == n ? Eigen::VectorXd(warm_start.cwiseMax(0.0)) : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd Gx = G_ * x;
  auto value = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& Gf) {
    return (Gf - y).squaredNorm() + beta * weights.dot(f);
  };
  double fx = value(x, Gx);
  report.objective_history.push_back(fx);
  Eigen::VectorXd extrapolated = x;
  Eigen::VectorXd Ge = Gx;
  double t = 1.0;

  // Exact refit on the support of `f`; accepted when feasible and not worse.
  auto polish = [&](const Eigen::VectorXd& f, Eigen::VectorXd& out, double& f_out) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (f[i] > 0.0) support.push_back(i);
    }
    if (support.empty() || static_cast<Eigen::Index>(support.size()) > G_.rows()) return false;
    const auto m = static_cast<Eigen::Index>(support.size());
    Eigen::MatrixXd Gs(G_.rows(), m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index s = 0; s < m; ++s) {
      const Eigen::Index i = support[static_cast<std::size_t>(s)];
      Gs.col(s) = G_.col(i);
      rhs[s] = Gty[i] - 0.5 * beta * weights[i];
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(Gs.transpose() * Gs);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd fs = ldlt.solve(rhs);
    if (!fs.allFinite() || !(fs.array() > 0.0).all()) return false;
    out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index s = 0; s < m; ++s) out[support[static_cast<std::size_t>(s)]] = fs[s];
    f_out = objective(out, y, beta, weights);
    return true;
  };

  const double scale = std::max(1.0, 2.0 * Gty.cwiseAbs().maxCoeff() + beta * weights.maxCoeff());
  int it = 0;
  while (it < options_.max_iterations) {
    ++it;
    const Eigen::VectorXd grad = 2.0 * (G_.transpose() * Ge - Gty);
    const Eigen::VectorXd z = (extrapolated - step * grad - shrink).cwiseMax(0.0);
    const Eigen::VectorXd Gz = G_ * z;
    const double fz = value(z, Gz);

    if (fz > fx) {
      // Reject and restart momentum: the next iteration is a plain proximal
      // gradient step from x, which cannot increase the objective.
      extrapolated = x;
      Ge = Gx;
      t = 1.0;
      report.objective_history.push_back(fx);
      continue;
    }

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Eigen::VectorXd delta = z - x;
    if ((extrapolated - z).dot(delta) > 0.0) {
      extrapolated = z;
      Ge = Gz;
      t = 1.0;
    } else {
      const double c = (t - 1.0) / t_next;
      extrapolated = z + c * delta;
      Ge = Gz + c * (Gz - Gx);
      t = t_next;
    }
    const double rel = delta.norm() / std::max(z.norm(), 1e-12);
    x = z;
    Gx = Gz;
    fx = fz;
    report.objective_history.push_back(fx);
    if (rel < options_.tolerance) {
      report.converged = true;
      break;
    }
    // Once the support has settled the refit is the exact minimizer; stop
    // when it satisfies the optimality conditions.
    if (options_.polish && options_.certify_every > 0 && it % options_.certify_every == 0) {
      Eigen::VectorXd candidate;
      double fc = 0.0;
      if (polish(x, candidate, fc) && fc <= fx &&
          kkt_residual(candidate, y, beta, weights) <= options_.certify_tolerance * scale) {
        x = candidate;
        Gx = G_ * x;
        fx = fc;
        report.objective_history.push_back(fx);
        report.converged = true;
        break;
      }
    }
  }

  if (options_.polish) {
    Eigen::VectorXd candidate;
    double fc = 0.0;
    if (polish(x, candidate, fc) && fc <= fx) {
      x = candidate;
      fx = fc;
      report.objective_history.push_back(fx);
    }
  }

  report.solution = std::move(x);
  report.iterations = it;
  report.objective = fx;
  return report;
}

SolverReport L1Solver::solve_reweighted(const Eigen::VectorXd& y, double beta, int rounds, double eps) const {
  if (rounds < 1) throw std::invalid_argument("solve_reweighted: rounds must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("solve_reweighted: eps must be > 0");
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(G_.cols());
  SolverReport report = solve(y, beta, weights);
  int total_iterations = report.iterations;
  double seconds = report.seconds;
  for (int r = 2; r <= rounds; ++r) {
    weights = (report.solution.array() + eps).inverse().matrix();
    report = solve(y, beta, weights, report.solution);
    total_iterations += report.iterations;
    seconds += report.seconds;
  }
  report.iterations = total_iterations;
  report.seconds = seconds;
  return report;
}

SolverReport solve_nn_l1(const SparseProblem& problem, const SolverOptions& options) {
  return L1Solver(problem.dictionary, options).solve(problem.observation, problem.beta);
}

SolverReport solve_reweighted_l1(const SparseProblem& problem, int rounds, double eps, const SolverOptions& options) {
  return L1Solver(problem.dictionary, options).solve_reweighted(problem.observation, problem.beta, rounds, eps);
}

SolverReport solve_weighted_l1(const SparseProblem& problem, const GuidanceWeights& weights,
                               const SolverOptions& options) {
  return L1Solver(problem.dictionary, options).solve(problem.observation, problem.beta, weights.weights);
}

GuidanceWeights compute_guidance_weights(const DirectionSet& basis, const std::vector<Direction>& guides, double alpha) {
  if (guides.empty()) throw std::invalid_argument("compute_guidance_weights: no guiding directions");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("compute_guidance_weights: alpha must be in [0, 1)");
  GuidanceWeights out;
  out.guides = guides;
  out.alpha = alpha;
  out.weights.resize(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double closest = 0.0;
    for (const auto& u : guides) closest = std::max(closest, std::abs(basis[i].dot(u)));
    out.weights[static_cast<Eigen::Index>(i)] = 1.0 - alpha * closest;
  }
  out.weights /= out.weights.minCoeff();
  return out;
}

GuidanceWeights unit_guidance_weights(std::size_t n) {
  GuidanceWeights out;
  out.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  return out;
}

}  // namespace fordn
