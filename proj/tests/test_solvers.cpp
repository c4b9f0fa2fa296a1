#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "fordn/geometry.hpp"
#include "fordn/signal.hpp"
#include "fordn/solvers.hpp"

using namespace fordn;

namespace {

const Dictionary& coarse_dictionary() {
  static const Dictionary d = build_dictionary(generate_gradient_scheme(30, 1000.0, 7),
                                               make_basis_tensors(tessellate_hemisphere(6), Eigenvalues{}));
  return d;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Best single-atom fit: f_j = max(0, (g_j.y - beta/2) / |g_j|^2).
std::pair<Eigen::Index, double> best_single_atom(const Eigen::MatrixXd& G, const Eigen::VectorXd& y, double beta) {
  Eigen::Index best = -1;
  double best_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < G.cols(); ++j) {
    const double f = std::max(0.0, (G.col(j).dot(y) - 0.5 * beta) / G.col(j).squaredNorm());
    const double value = (G.col(j) * f - y).squaredNorm() + beta * f;
    if (value < best_value) {
      best_value = value;
      best = j;
    }
  }
  return {best, best_value};
}

}  // namespace

TEST_CASE("iterative step") {
  const Eigen::MatrixXd G = coarse_dictionary().matrix;
  const Eigen::MatrixXd W = G.transpose();
  const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(G.cols(), G.cols()) - G.transpose() * G;
  const Eigen::VectorXd y = G.col(3);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(G.cols());
  CHECK((iterative_step(zero, y, W, S, 0.01, ThresholdMode::Hard) - hard_threshold(G.transpose() * y, 0.01))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  Eigen::VectorXd a(2);
  a << 0.005, 0.02;
  const auto h = hard_threshold(a, 0.01);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == 0.02);
  CHECK(hard_threshold(a, 0.0) == a);
  Eigen::VectorXd mixed(3);
  mixed << -0.5, 0.3, 0.05;
  CHECK(hard_threshold(mixed, 0.0)[0] == 0.0);
  const auto soft = soft_threshold_nonneg(mixed, 0.1);
  CHECK(soft[0] == 0.0);
  CHECK(soft[1] == doctest::Approx(0.2));
  CHECK(soft[2] == 0.0);
  CHECK_THROWS_AS(iterative_step(zero, y, W, S, -1.0, ThresholdMode::Hard), std::invalid_argument);
  CHECK_THROWS_AS(iterative_step(zero, Eigen::VectorXd::Zero(3), W, S, 0.01, ThresholdMode::Hard), std::invalid_argument);
}

TEST_CASE("largest Gram eigenvalue") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd A = random_matrix(12, 30, rng);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A);
  CHECK(largest_gram_eigenvalue(A) == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-7));
}

TEST_CASE("trivial nonnegative l1 cases") {
  for (auto algorithm : {SolverAlgorithm::ActiveSet, SolverAlgorithm::ProximalGradient}) {
    SolverOptions o;
    o.algorithm = algorithm;
    const L1Solver solver(coarse_dictionary().matrix, o);
    const auto r = solver.solve(Eigen::VectorXd::Zero(30), 0.1);
    CHECK(r.solution.isZero(0.0));

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1.0, 0.2, -0.5;
    const auto p = L1Solver(I, o).solve(y, 0.0);
    CHECK(p.solution[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.solution[1] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(p.solution[2] == 0.0);
  }
}

TEST_CASE("input validation") {
  const L1Solver solver(coarse_dictionary().matrix);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(30);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solver.solve(bad, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(solver.solve(Eigen::VectorXd::Ones(30), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(solver.solve(Eigen::VectorXd::Ones(29), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(solver.solve(Eigen::VectorXd::Ones(30), std::numeric_limits<double>::infinity()), std::invalid_argument);
  CHECK_THROWS_AS(solver.solve_reweighted(Eigen::VectorXd::Ones(30), 0.1, 0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(solver.solve_reweighted(Eigen::VectorXd::Ones(30), 0.1, 2, 0.0), std::invalid_argument);
}

TEST_CASE("single basis fiber is recovered") {
  const auto& dict = coarse_dictionary();
  const L1Solver solver(dict.matrix);
  for (Eigen::Index j : {0, 17, 36, 72}) {
    const Eigen::VectorXd y = dict.matrix.col(j);
    const auto r = solver.solve(y, 0.01);
    const auto [oracle, oracle_value] = best_single_atom(dict.matrix, y, 0.01);
    CHECK(oracle == j);
    CHECK(r.objective <= oracle_value + 1e-12);
    const Eigen::VectorXd f = r.solution / r.solution.sum();
    for (Eigen::Index i = 0; i < f.size(); ++i) CHECK((f[i] > 0.1) == (i == j));
  }
}

TEST_CASE("reweighting") {
  const auto& dict = coarse_dictionary();
  const L1Solver solver(dict.matrix);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.03);
  Eigen::VectorXd y = 0.6 * dict.matrix.col(5) + 0.4 * dict.matrix.col(40);
  for (Eigen::Index k = 0; k < y.size(); ++k) y[k] += n(rng);

  const auto one = solver.solve_reweighted(y, 0.05, 1, 1e-3);
  const auto plain = solver.solve(y, 0.05);
  CHECK(one.solution == plain.solution);

  // Round-2 weights 1/(f + eps) are bounded below by 1/(max f + eps).
  const Eigen::VectorXd w = (plain.solution.array() + 1e-3).inverse().matrix();
  CHECK(w.minCoeff() >= 1.0 / (plain.solution.maxCoeff() + 1e-3));
  const auto two = solver.solve(y, 0.05, w, plain.solution);
  const auto via = solver.solve_reweighted(y, 0.05, 2, 1e-3);
  CHECK((two.solution - via.solution).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reweighted l1 finds the two-atom support on a small instance") {
  const auto basis = tessellate_hemisphere(3);
  std::vector<Direction> ten(basis.begin(), basis.begin() + 10);
  const auto dict =
      build_dictionary(generate_gradient_scheme(30, 1000.0, 7), make_basis_tensors(DirectionSet(ten), Eigenvalues{}));
  const Eigen::MatrixXd& G = dict.matrix;
  const L1Solver solver(G);
  for (auto [a, b] : {std::pair{1, 6}, std::pair{0, 9}, std::pair{3, 4}}) {
    const Eigen::VectorXd y = 0.5 * G.col(a) + 0.5 * G.col(b);
    // Exhaustive two-atom least squares: only the true pair fits exactly.
    int exact = 0;
    for (int i = 0; i < 10; ++i) {
      for (int j = i + 1; j < 10; ++j) {
        Eigen::MatrixXd P(G.rows(), 2);
        P << G.col(i), G.col(j);
        const Eigen::VectorXd c = P.colPivHouseholderQr().solve(y);
        if ((P * c - y).norm() < 1e-10 && (c.array() > 0).all()) {
          ++exact;
          CHECK(i == a);
          CHECK(j == b);
        }
      }
    }
    CHECK(exact == 1);
    const auto r = solver.solve_reweighted(y, 1e-3, 5, 1e-3);
    const Eigen::VectorXd f = r.solution / r.solution.sum();
    int support = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) support += f[i] > 1e-3;
    CHECK(support == 2);
    CHECK(f[a] > 0.4);
    CHECK(f[b] > 0.4);
  }
}

TEST_CASE("guidance weights") {
  const auto basis = tessellate_hemisphere(6);
  const auto z = Direction::from_xyz(0, 0, 1);

  const auto flat = compute_guidance_weights(basis, {z}, 0.0);
  CHECK(flat.weights.isOnes(0.0));

  const auto w = compute_guidance_weights(basis, {z}, 0.8);
  CHECK(w.weights.minCoeff() == 1.0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& v = basis[i].vec();
    if (basis[i] == z) CHECK(w.weights[static_cast<Eigen::Index>(i)] == doctest::Approx(1.0).epsilon(1e-12));
    if (std::abs(v.z()) < 1e-15) CHECK(w.weights[static_cast<Eigen::Index>(i)] == doctest::Approx(5.0).epsilon(1e-12));
    const double direct = (1.0 - 0.8 * std::abs(v.z())) / 0.2;
    CHECK(w.weights[static_cast<Eigen::Index>(i)] == doctest::Approx(direct).epsilon(1e-12));
  }

  const auto two = compute_guidance_weights(basis, {z, Direction::from_xyz(1, 1, 0.3)}, 0.8);
  CHECK(two.weights.minCoeff() == 1.0);
  CHECK(two.weights.allFinite());
  CHECK((two.weights.array() >= 1.0).all());

  CHECK_THROWS_AS(compute_guidance_weights(basis, {}, 0.8), std::invalid_argument);
  CHECK_THROWS_AS(compute_guidance_weights(basis, {z}, 1.0), std::invalid_argument);
  CHECK(unit_guidance_weights(7).weights.isOnes(0.0));
}

TEST_CASE("weighted l1") {
  const auto& dict = coarse_dictionary();
  const auto basis = tessellate_hemisphere(6);
  const Eigen::VectorXd y = 0.5 * dict.matrix.col(10) + 0.5 * dict.matrix.col(50);

  SUBCASE("unit weights are the plain problem, bit for bit") {
    for (auto algorithm : {SolverAlgorithm::ActiveSet, SolverAlgorithm::ProximalGradient}) {
      SolverOptions o;
      o.algorithm = algorithm;
      const SparseProblem problem{dict.matrix, y, 0.25};
      const auto a = solve_weighted_l1(problem, unit_guidance_weights(73), o);
      const auto b = solve_nn_l1(problem, o);
      CHECK(a.solution == b.solution);
      CHECK(a.iterations == b.iterations);
    }
  }

  SUBCASE("guide on the true fiber keeps the peak there") {
    for (Eigen::Index j : {2, 33, 70}) {
      const SparseProblem problem{dict.matrix, dict.matrix.col(j), 0.25};
      const auto r = solve_weighted_l1(problem, compute_guidance_weights(basis, {basis[static_cast<std::size_t>(j)]}, 0.8));
      const auto [oracle, value] = best_single_atom(dict.matrix, problem.observation, 0.25);
      CHECK(oracle == j);
      Eigen::Index peak;
      r.solution.maxCoeff(&peak);
      CHECK(peak == j);
    }
  }

  SUBCASE("stronger guidance never moves mass away from the guides") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 0.05);
    const std::vector<Direction> guides = {basis[10], basis[50]};
    Eigen::VectorXd noisy = y;
    for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy[k] += n(rng);
    double previous = std::numeric_limits<double>::infinity();
    for (double alpha = 0.0; alpha <= 0.8 + 1e-9; alpha += 0.1) {
      const auto r = solve_weighted_l1({dict.matrix, noisy, 0.25}, compute_guidance_weights(basis, guides, alpha));
      double far = 0.0;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        const double angle = std::min(angle_deg(basis[i], guides[0]), angle_deg(basis[i], guides[1]));
        if (angle > 20.0) far += r.solution[static_cast<Eigen::Index>(i)];
      }
      far /= r.solution.sum();
      CHECK(far <= previous + 1e-9);
      previous = far;
    }
  }
}

TEST_CASE("optimality and monotonicity on random problems") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd G = random_matrix(20, 12, rng);
    Eigen::VectorXd y = random_matrix(20, 1, rng);
    const double beta = 0.5 * u(rng);
    Eigen::VectorXd weights(12);
    for (Eigen::Index i = 0; i < 12; ++i) weights[i] = 1.0 + 4.0 * u(rng);
    for (auto algorithm : {SolverAlgorithm::ActiveSet, SolverAlgorithm::ProximalGradient}) {
      SolverOptions o;
      o.algorithm = algorithm;
      const L1Solver solver(G, o);
      const auto r = solver.solve(y, beta, weights);
      CHECK(r.kkt_residual <= 1e-4);
      CHECK((r.solution.array() >= 0.0).all());
      for (std::size_t k = 1; k < r.objective_history.size(); ++k) {
        CHECK(r.objective_history[k] <= r.objective_history[k - 1] + 1e-10);
      }
      CHECK(r.objective == doctest::Approx(solver.objective(r.solution, y, beta, weights)).epsilon(1e-12));
    }
  }
}

TEST_CASE("both algorithms agree on the phantom dictionary") {
  const auto dense = tessellate_hemisphere(12);
  const auto dict = build_dictionary(generate_gradient_scheme(30, 1000.0, 7), make_basis_tensors(dense, Eigenvalues{}));
  const Eigen::VectorXd y = synthesize_signal(
      FOSet({{Direction::from_xyz(1, 0.2, 0.1), 0.5}, {Direction::from_xyz(-0.1, 1, 0.3), 0.5}}), Eigenvalues{},
      dict.scheme);
  const L1Solver exact(dict.matrix);
  SolverOptions o;
  o.algorithm = SolverAlgorithm::ProximalGradient;
  o.max_iterations = 20000;
  o.tolerance = 1e-12;
  const L1Solver pg(dict.matrix, o);
  const auto a = exact.solve(y, 0.1);
  const auto b = pg.solve(y, 0.1);
  CHECK(a.converged);
  CHECK(a.kkt_residual < 1e-10);
  CHECK(a.objective <= b.objective + 1e-12);
  // The first-order method only gets close on this ill-conditioned dictionary.
  CHECK(b.objective - a.objective < 1e-3 * a.objective);
}
