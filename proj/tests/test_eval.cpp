#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "fordn/eval.hpp"

using namespace fordn;

namespace {

// P(|T| < t) for integer dof from the finite trigonometric series
// (Abramowitz and Stegun 26.7.3 and 26.7.4), theta = atan(t / sqrt(nu)).
double t_cdf_series(double t, int nu) {
  const double theta = std::atan(std::abs(t) / std::sqrt(static_cast<double>(nu)));
  const double s = std::sin(theta), c = std::cos(theta);
  double a;
  if (nu % 2 == 1) {
    double sum = 0.0;
    if (nu > 1) {
      double term = c;
      sum = term;
      for (int k = 3; k <= nu - 2; k += 2) {
        term *= c * c * (k - 1) / static_cast<double>(k);
        sum += term;
      }
    }
    a = 2.0 / std::numbers::pi * (theta + s * sum);
  } else {
    double term = 1.0, sum = 1.0;
    for (int k = 2; k <= nu - 2; k += 2) {
      term *= c * c * (k - 1) / static_cast<double>(k);
      sum += term;
    }
    a = s * sum;
  }
  return t >= 0.0 ? 0.5 + 0.5 * a : 0.5 - 0.5 * a;
}

Direction dir(double x, double y, double z) { return Direction::from_xyz(x, y, z); }

}  // namespace

TEST_CASE("fo_error") {
  const FOSet z({{dir(0, 0, 1), 1.0}});
  const FOSet x({{dir(1, 0, 0), 1.0}});
  const FOSet xz({{dir(1, 0, 0), 0.5}, {dir(0, 0, 1), 0.5}});
  CHECK(fo_error(z, z) == 0.0);
  CHECK(fo_error(xz, xz) == 0.0);
  CHECK(fo_error(x, z) == doctest::Approx(90.0));
  CHECK(fo_error(FOSet(), z) == 90.0);
  // Missing one of two fibers: truth side 45, estimate side 0.
  CHECK(fo_error(z, xz) == doctest::Approx(22.5));
  // Spurious extra fiber is penalized the same way.
  CHECK(fo_error(xz, z) == doctest::Approx(22.5));
  CHECK_THROWS_AS(fo_error(z, FOSet()), std::invalid_argument);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 200; ++trial) {
    const FOSet a({{dir(n(rng), n(rng), n(rng)), 0.6}, {dir(n(rng), n(rng), n(rng)), 0.4}});
    const FOSet b({{dir(n(rng), n(rng), n(rng)), 1.0}});
    CHECK(fo_error(a, b) == doctest::Approx(fo_error(b, a)).epsilon(1e-12));
    CHECK(fo_error(a, b) > 0.0);
    CHECK(fo_error(a, b) <= 90.0);
  }
}

TEST_CASE("evaluate_volume splits by class") {
  FoVolume truth, est;
  truth.dims = est.dims = {4, 1, 1};
  const FOSet z({{dir(0, 0, 1), 1.0}});
  const FOSet x({{dir(1, 0, 0), 1.0}});
  const FOSet xz({{dir(1, 0, 0), 0.5}, {dir(0, 0, 1), 0.5}});
  truth.voxels = {FOSet(), z, xz, z};
  est.voxels = {x, z, z, x};
  const auto summary = evaluate_volume(est, truth, {0, 1, 2, 1});
  CHECK(std::isnan(summary.voxel_errors[0]));
  CHECK(summary.regions.at(Region::All).count == 3);
  CHECK(summary.regions.at(Region::Noncrossing).mean == doctest::Approx(45.0));
  CHECK(summary.regions.at(Region::Noncrossing).std == doctest::Approx(std::sqrt(2.0) * 45.0));
  CHECK(summary.regions.at(Region::TwoCrossing).mean == doctest::Approx(22.5));
  CHECK(summary.regions.at(Region::ThreeCrossing).count == 0);
  CHECK(summary.errors_in(Region::Noncrossing) == std::vector<double>{0.0, 90.0});
  CHECK_THROWS_AS(evaluate_volume(est, truth, {0, 1}), std::invalid_argument);
  CHECK(std::string(region_name(Region::ThreeCrossing)) == "three_crossing");
}

TEST_CASE("t distribution matches the finite series") {
  const double points[] = {-8.0, -4.0, -2.5, -1.96, -1.0, -0.5, -0.1, 0.0, 0.05, 0.3,
                           0.7,  1.0,  1.5,  2.0,   2.6,  3.3,  4.5,  6.0, 10.0, 30.0};
  double worst = 0.0;
  for (int nu = 1; nu <= 1000; ++nu) {
    for (double t : points) worst = std::max(worst, std::abs(student_t_cdf(t, nu) - t_cdf_series(t, nu)));
  }
  CHECK(worst < 1e-10);
  CHECK(student_t_two_sided_p(0.0, 5) == doctest::Approx(1.0));
  CHECK(student_t_two_sided_p(-2.0, 7) == doctest::Approx(2.0 * (1.0 - t_cdf_series(2.0, 7))).epsilon(1e-12));
  // Large dof approaches the normal.
  boost::math::normal_distribution<double> z;
  CHECK(student_t_cdf(1.3, 1e7) == doctest::Approx(boost::math::cdf(z, 1.3)).epsilon(1e-6));
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("paired statistics") {
  const std::vector<double> a{3.0, 4.0, 6.0, 7.0};
  const std::vector<double> b{1.0, 3.0, 3.0, 5.0};
  // Differences 2, 1, 3, 2: mean 2, sd sqrt(2/3).
  const auto s = paired_stats(a, b);
  const double sd = std::sqrt(2.0 / 3.0);
  CHECK(s.n == 4);
  CHECK(s.d == doctest::Approx(2.0 / sd));
  CHECK(s.t == doctest::Approx(2.0 / (sd / 2.0)));
  CHECK(s.p == doctest::Approx(2.0 * (1.0 - t_cdf_series(s.t, 3))).epsilon(1e-10));
  CHECK_FALSE(s.degenerate);

  const auto flipped = paired_stats(b, a);
  CHECK(flipped.t == doctest::Approx(-s.t));
  CHECK(flipped.d == doctest::Approx(-s.d));
  CHECK(flipped.p == doctest::Approx(s.p));

  const auto same = paired_stats(a, a);
  CHECK(same.degenerate);
  CHECK(same.p == 1.0);
  CHECK(same.t == 0.0);

  const auto shifted = paired_stats({2.0, 3.0, 4.0}, {1.0, 2.0, 3.0});
  CHECK(shifted.degenerate);
  CHECK(shifted.p == 0.0);
  CHECK(std::isinf(shifted.t));
  CHECK(shifted.t > 0.0);

  CHECK_THROWS_AS(paired_stats({1.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(paired_stats({1.0, 2.0}, {2.0}), std::invalid_argument);
}
