#pragma once

#include <vector>

#include <Eigen/Core>

#include "fordn/geometry.hpp"

namespace fordn {

enum class ThresholdMode { Hard, Soft };

/// Thresholded ReLU: a_i if a_i >= lambda, else 0.
Eigen::VectorXd hard_threshold(const Eigen::VectorXd& a, double lambda);
/// max(a_i - lambda, 0).
Eigen::VectorXd soft_threshold_nonneg(const Eigen::VectorXd& a, double lambda);

/// One unrolled update h_lambda(W y + S f).
Eigen::VectorXd iterative_step(const Eigen::VectorXd& f, const Eigen::VectorXd& y, const Eigen::MatrixXd& W,
                               const Eigen::MatrixXd& S, double lambda, ThresholdMode mode);

/// Largest eigenvalue of A^T A by power iteration on the smaller Gram matrix.
double largest_gram_eigenvalue(const Eigen::MatrixXd& A, double tolerance = 1e-8, int max_iterations = 10000);

struct SparseProblem {
  const Eigen::MatrixXd& dictionary;  // K x N
  Eigen::VectorXd observation;        // length K
  double beta = 0.0;
};

struct GuidanceWeights {
  Eigen::VectorXd weights;  // C_i >= 1, min exactly 1
  std::vector<Direction> guides;
  double alpha = 0.0;
};

enum class SolverAlgorithm { ActiveSet, ProximalGradient };

struct SolverOptions {
  SolverAlgorithm algorithm = SolverAlgorithm::ActiveSet;
  int max_iterations = 2000;
  double tolerance = 1e-6;  // relative change of the iterate
  bool polish = true;       // exact least-squares refit on the identified support
  int certify_every = 25;   // try the refit this often; stop if it is optimal (0 disables)
  double certify_tolerance = 1e-10;  // KKT residual relative to the problem scale
};

struct SolverReport {
  Eigen::VectorXd solution;
  int iterations = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  double seconds = 0.0;
  std::vector<double> objective_history;  // accepted iterates, nonincreasing
};

/// Solves
///   min_{f >= 0} ||G f - y||^2 + beta * sum_i w_i f_i
/// either exactly by a Lawson-Hanson style active-set method, or by monotone
/// accelerated proximal gradient with step 1/L, L = 2 lambda_max(G^T G).
class L1Solver {
 public:
  explicit L1Solver(Eigen::MatrixXd dictionary, SolverOptions options = {});

  const Eigen::MatrixXd& dictionary() const { return G_; }
  double lipschitz() const { return lipschitz_; }
  const SolverOptions& options() const { return options_; }

  /// Empty `weights` means unit weights.
  SolverReport solve(const Eigen::VectorXd& y, double beta, const Eigen::VectorXd& weights = {},
                     const Eigen::VectorXd& warm_start = {}) const;

  /// Iteratively reweighted l1: round r uses w_i = 1/(f_i^(r-1) + eps), round 1 unit weights.
  SolverReport solve_reweighted(const Eigen::VectorXd& y, double beta, int rounds, double eps) const;

  double objective(const Eigen::VectorXd& f, const Eigen::VectorXd& y, double beta,
                   const Eigen::VectorXd& weights) const;
  /// Largest violation of the nonnegative weighted-l1 stationarity conditions.
  double kkt_residual(const Eigen::VectorXd& f, const Eigen::VectorXd& y, double beta,
                      const Eigen::VectorXd& weights) const;

 private:
  SolverReport solve_active_set(const Eigen::VectorXd& y, double beta, const Eigen::VectorXd& weights,
                                const Eigen::VectorXd& warm_start) const;
  SolverReport solve_proximal(const Eigen::VectorXd& y, double beta, const Eigen::VectorXd& weights,
                              const Eigen::VectorXd& warm_start) const;

  Eigen::MatrixXd G_;
  Eigen::MatrixXd gram_;
  SolverOptions options_;
  double lipschitz_ = 0.0;
};

SolverReport solve_nn_l1(const SparseProblem& problem, const SolverOptions& options = {});
SolverReport solve_reweighted_l1(const SparseProblem& problem, int rounds, double eps,
                                 const SolverOptions& options = {});
SolverReport solve_weighted_l1(const SparseProblem& problem, const GuidanceWeights& weights,
                               const SolverOptions& options = {});

/// C_i = (1 - alpha max_p |v_i . u_p|) / min_q (1 - alpha max_p |v_q . u_p|).
GuidanceWeights compute_guidance_weights(const DirectionSet& basis, const std::vector<Direction>& guides,
                                         double alpha);
GuidanceWeights unit_guidance_weights(std::size_t n);

}  // namespace fordn
