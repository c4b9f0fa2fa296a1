#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "fordn/geometry.hpp"

using namespace fordn;

namespace {

double exhaustive_min_angle(const GradientScheme& s) {
  double best = 180.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double c = std::min(1.0, std::abs(s[i].direction.vec().dot(s[j].direction.vec())));
      best = std::min(best, std::acos(c) * 180.0 / M_PI);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("tessellation counts") {
  CHECK(tessellate_hemisphere(1).size() == 3);
  CHECK(tessellate_hemisphere(6).size() == 73);
  CHECK(tessellate_hemisphere(12).size() == 289);
  for (int n = 1; n <= 8; ++n) CHECK(tessellate_hemisphere(n).size() == static_cast<std::size_t>(2 * n * n + 1));
  CHECK_THROWS_AS(tessellate_hemisphere(0), std::invalid_argument);
}

TEST_CASE("n=1 gives the coordinate axes") {
  const auto set = tessellate_hemisphere(1);
  for (const auto& d : set) {
    CHECK(d.vec().cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(d.vec().cwiseAbs().sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("tessellation members are unit, canonical and distinct") {
  for (int n : {3, 6, 12}) {
    const auto set = tessellate_hemisphere(n);
    for (const auto& d : set) {
      CHECK(d.vec().norm() == doctest::Approx(1.0).epsilon(1e-14));
      const auto& v = d.vec();
      const double lead = std::abs(v.z()) > 1e-12 ? v.z() : (std::abs(v.y()) > 1e-12 ? v.y() : v.x());
      CHECK(lead > 0.0);
    }
    CHECK(set.min_pairwise_angle_deg() > 0.0);
    for (std::size_t i = 1; i < set.size(); ++i) {
      const auto& a = set[i - 1].vec();
      const auto& b = set[i].vec();
      CHECK(std::tie(a.x(), a.y(), a.z()) <= std::tie(b.x(), b.y(), b.z()));
    }
  }
}

TEST_CASE("nearest neighbor angle of the coarse set") {
  const auto coarse = tessellate_hemisphere(6);
  double brute = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    double best = 90.0;
    for (std::size_t j = 0; j < coarse.size(); ++j) {
      if (i != j) best = std::min(best, angle_deg(coarse[i], coarse[j]));
    }
    brute = std::max(brute, best);
  }
  CHECK(coarse.max_nearest_neighbor_angle_deg() == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("angle_deg") {
  const auto x = Direction::from_xyz(1, 0, 0);
  const auto y = Direction::from_xyz(0, 1, 0);
  CHECK(angle_deg(x, x) == doctest::Approx(0.0));
  CHECK(angle_deg(x, Direction::from_xyz(-1, 0, 0)) == doctest::Approx(0.0));
  CHECK(angle_deg(x, y) == doctest::Approx(90.0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d a(n(rng), n(rng), n(rng));
    const Eigen::Vector3d b(n(rng), n(rng), n(rng));
    const auto u = Direction::from_vector(a);
    const auto v = Direction::from_vector(b);
    CHECK(angle_deg(u, v) == doctest::Approx(angle_deg(v, u)));
    CHECK(angle_deg(u, v) == doctest::Approx(angle_deg(u, Direction::from_vector(-b))));
  }
  CHECK_THROWS_AS(Direction::from_xyz(0, 0, 0), std::invalid_argument);
}

TEST_CASE("prolate tensor") {
  const Eigenvalues ev;
  auto t = make_prolate_tensor(Direction::from_xyz(0, 0, 1), ev.axial, ev.transverse);
  CHECK((t.tensor - Eigen::Vector3d(3e-4, 3e-4, 1.5e-3).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-18);
  t = make_prolate_tensor(Direction::from_xyz(1, 0, 0), ev.axial, ev.transverse);
  CHECK((t.tensor - Eigen::Vector3d(1.5e-3, 3e-4, 3e-4).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-18);
  t = make_prolate_tensor(Direction::from_xyz(0.3, -0.4, 0.8), ev.axial, ev.transverse);
  CHECK(t.tensor.trace() == doctest::Approx(ev.axial + 2 * ev.transverse).epsilon(1e-14));
  CHECK((t.tensor - t.tensor.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(make_prolate_tensor(Direction::from_xyz(0, 0, 1), 1e-4, 3e-4), std::invalid_argument);
}

TEST_CASE("dictionary entries") {
  const Eigenvalues ev;
  const auto z = Direction::from_xyz(0, 0, 1);
  const auto x = Direction::from_xyz(1, 0, 0);
  const GradientScheme scheme({{z, 1000.0}, {x, 1000.0}, {z, 0.0}});
  const auto dict = build_dictionary(scheme, {make_prolate_tensor(z, ev.axial, ev.transverse)});
  CHECK(dict.matrix(0, 0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-14));
  CHECK(dict.matrix(0, 0) == doctest::Approx(0.22313).epsilon(1e-5));
  CHECK(dict.matrix(1, 0) == doctest::Approx(std::exp(-0.3)).epsilon(1e-14));
  CHECK(dict.matrix(1, 0) == doctest::Approx(0.74082).epsilon(1e-5));
  CHECK(dict.matrix(2, 0) == 1.0);
}

TEST_CASE("dictionary is invariant to a joint rotation") {
  const Eigenvalues ev;
  const auto scheme = generate_gradient_scheme(30, 1000.0, 7);
  const auto basis = tessellate_hemisphere(6);
  const auto G = build_dictionary(scheme, make_basis_tensors(basis, ev)).matrix;
  CHECK(G.minCoeff() > 0.0);
  CHECK(G.maxCoeff() <= 1.0);

  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, -2, 0.5).normalized()).toRotationMatrix();
  std::vector<Gradient> rotated;
  for (const auto& g : scheme.gradients()) rotated.push_back({Direction::from_vector(R * g.direction.vec()), g.b});
  std::vector<ProlateTensor> tensors;
  for (const auto& d : basis) tensors.push_back(make_prolate_tensor(Direction::from_vector(R * d.vec()), ev.axial, ev.transverse));
  const auto G2 = build_dictionary(GradientScheme(rotated), tensors).matrix;
  CHECK((G - G2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("electrostatic gradient scheme") {
  const auto six = generate_gradient_scheme_report(6, 1000.0, 42);
  CHECK(six.scheme.size() == 6);
  CHECK(exhaustive_min_angle(six.scheme) >= 60.0 - 1e-6);
  CHECK(six.final_energy <= six.initial_energy);

  const auto thirty = generate_gradient_scheme_report(30, 1000.0, 7);
  CHECK(thirty.scheme.size() == 30);
  CHECK(thirty.final_energy <= thirty.initial_energy);
  for (const auto& g : thirty.scheme.gradients()) {
    CHECK(g.b == 1000.0);
    CHECK(g.direction.vec().norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(exhaustive_min_angle(thirty.scheme) > 15.0);

  std::vector<Eigen::Vector3d> dirs;
  for (const auto& g : thirty.scheme.gradients()) dirs.push_back(g.direction.vec());
  double brute = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs.size(); ++j) brute += 1.0 / (dirs[i] - dirs[j]).norm() + 1.0 / (dirs[i] + dirs[j]).norm();
  }
  CHECK(electrostatic_energy(dirs) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(thirty.final_energy == doctest::Approx(brute).epsilon(1e-12));

  const auto again = generate_gradient_scheme(30, 1000.0, 7);
  for (std::size_t k = 0; k < 30; ++k) CHECK(again[k].direction == thirty.scheme[k].direction);
  CHECK_THROWS_AS(generate_gradient_scheme(5, 1000.0, 1), std::invalid_argument);
}

TEST_CASE("gradient scheme validation") {
  CHECK_THROWS_AS(GradientScheme(std::vector<Gradient>{}), std::invalid_argument);
  CHECK_THROWS_AS(GradientScheme({{Direction::from_xyz(0, 0, 1), -1.0}}), std::invalid_argument);
}
