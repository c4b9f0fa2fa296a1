#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "fordn/geometry.hpp"
#include "fordn/signal.hpp"

using namespace fordn;

TEST_CASE("single fiber along the gradient") {
  const Eigenvalues ev;
  const auto z = Direction::from_xyz(0, 0, 1);
  const GradientScheme scheme({{z, 1000.0}, {z, 0.0}});
  const auto y = synthesize_signal(FOSet({{z, 1.0}}), ev, scheme);
  CHECK(y[0] == doctest::Approx(std::exp(-1000.0 * ev.axial)).epsilon(1e-14));
  CHECK(y[1] == 1.0);
}

TEST_CASE("two orthogonal fibers") {
  const Eigenvalues ev;
  const auto x = Direction::from_xyz(1, 0, 0);
  const auto y_axis = Direction::from_xyz(0, 1, 0);
  const GradientScheme scheme({{x, 1000.0}});
  const auto y = synthesize_signal(FOSet({{x, 0.5}, {y_axis, 0.5}}), ev, scheme);
  CHECK(y[0] == doctest::Approx(0.5 * std::exp(-1000.0 * ev.axial) + 0.5 * std::exp(-1000.0 * ev.transverse)).epsilon(1e-14));
}

TEST_CASE("b=0 gives unit signal for any fiber set") {
  const GradientScheme scheme({{Direction::from_xyz(0.2, 0.3, 0.9), 0.0}});
  const auto y = synthesize_signal(FOSet({{Direction::from_xyz(1, 1, 0), 0.3}, {Direction::from_xyz(0, 1, 1), 0.3},
                                          {Direction::from_xyz(1, 0, 1), 0.4}}),
                                   Eigenvalues{}, scheme);
  CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("synthesis validation") {
  const GradientScheme scheme({{Direction::from_xyz(0, 0, 1), 1000.0}});
  const auto z = Direction::from_xyz(0, 0, 1);
  CHECK_THROWS_AS(synthesize_signal(FOSet({{z, 0.9}}), Eigenvalues{}, scheme), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_signal(FOSet(), Eigenvalues{}, scheme), std::invalid_argument);
  const auto x = Direction::from_xyz(1, 0, 0);
  CHECK_THROWS_AS(synthesize_signal(FOSet({{x, 0.25}, {z, 0.25}, {Direction::from_xyz(0, 1, 0), 0.25},
                                           {Direction::from_xyz(1, 1, 0), 0.25}}),
                                    Eigenvalues{}, scheme),
                  std::invalid_argument);
}

TEST_CASE("noiseless synthesis on basis directions equals G f") {
  const Eigenvalues ev;
  const auto scheme = generate_gradient_scheme(30, 1000.0, 7);
  const auto basis = tessellate_hemisphere(6);
  const auto dict = build_dictionary(scheme, make_basis_tensors(basis, ev));
  const std::size_t a = 4, b = 31, c = 60;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(73);
  f[a] = 0.2;
  f[b] = 0.3;
  f[c] = 0.5;
  const auto y = synthesize_signal(FOSet({{basis[a], 0.2}, {basis[b], 0.3}, {basis[c], 0.5}}), ev, scheme);
  CHECK((y - dict.matrix * f).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("FOSet ordering and normalization") {
  const FOSet s({{Direction::from_xyz(1, 0, 0), 0.2}, {Direction::from_xyz(0, 1, 0), 0.6}});
  CHECK(s[0].fraction == 0.6);
  CHECK(s.fraction_sum() == doctest::Approx(0.8));
  CHECK(s.normalized().fraction_sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(FOSet().normalized().empty());
}

TEST_CASE("Rician noise") {
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0.2, 1.0);
  std::mt19937_64 rng(1);

  SUBCASE("infinite snr is the identity") {
    NoiseModel clean;
    clean.snr = std::numeric_limits<double>::infinity();
    CHECK(add_rician_noise(y, clean, rng) == y);
  }

  SUBCASE("second moment matches S^2 + 2 sigma^2") {
    const NoiseModel noise;  // snr 20 on s0 = 1
    const double sigma = noise.s0 / noise.snr;
    CHECK(sigma == doctest::Approx(0.05));
    const int draws = 200000;
    Eigen::VectorXd second = Eigen::VectorXd::Zero(y.size());
    for (int i = 0; i < draws; ++i) second += add_rician_noise(y, noise, rng).array().square().matrix();
    second /= draws;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
      const double expected = y[k] * y[k] + 2 * sigma * sigma;
      CHECK(std::abs(second[k] - expected) / expected < 0.01);
    }
  }

  SUBCASE("same seed reproduces bit for bit") {
    std::mt19937_64 a(99), b(99);
    const NoiseModel noise;
    CHECK(add_rician_noise(y, noise, a) == add_rician_noise(y, noise, b));
  }

  SUBCASE("noisy baseline renormalization") {
    NoiseModel noise;
    noise.baseline = BaselineNormalization::Noisy;
    noise.s0 = 3.0;
    const auto out = add_rician_noise(y, noise, rng);
    CHECK(out.allFinite());
    CHECK((out.array() >= 0.0).all());
  }
}
