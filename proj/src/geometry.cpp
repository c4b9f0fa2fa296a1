#include "fordn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace fordn {

namespace {

constexpr double kZeroTol = 1e-12;

Eigen::Vector3d canonicalize(Eigen::Vector3d v) {
  double lead = 0.0;
  if (std::abs(v.z()) > kZeroTol) {
    lead = v.z();
  } else if (std::abs(v.y()) > kZeroTol) {
    lead = v.y();
  } else {
    lead = v.x();
  }
  if (lead < 0.0) v = -v;
  return v;
}

bool canonical_less(const Direction& a, const Direction& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

}  // namespace

Direction Direction::from_vector(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw std::invalid_argument("direction: zero or non-finite vector");
  }
  return Direction(canonicalize(v / n));
}

double angle_deg(const Direction& u, const Direction& v) {
  // atan2 keeps full precision near 0 where acos of a rounded cosine does not.
  return std::atan2(u.vec().cross(v.vec()).norm(), std::abs(u.dot(v))) * 180.0 / std::numbers::pi;
}

DirectionSet::DirectionSet(std::vector<Direction> dirs, std::optional<int> level)
    : dirs_(std::move(dirs)), level_(level) {}

Eigen::Matrix3Xd DirectionSet::as_matrix() const {
  Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(dirs_.size()));
  for (std::size_t i = 0; i < dirs_.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = dirs_[i].vec();
  return m;
}

std::size_t DirectionSet::nearest(const Direction& d) const {
  if (dirs_.empty()) throw std::invalid_argument("nearest: empty direction set");
  std::size_t best = 0;
  double best_dot = -1.0;
  for (std::size_t i = 0; i < dirs_.size(); ++i) {
    const double c = std::abs(dirs_[i].dot(d));
    // Strict comparison keeps the lowest index among (near-)ties.
    if (c > best_dot + 1e-12) {
      best_dot = c;
      best = i;
    }
  }
  return best;
}

double DirectionSet::max_nearest_neighbor_angle_deg() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < dirs_.size(); ++i) {
    double nearest_angle = 90.0;
    for (std::size_t j = 0; j < dirs_.size(); ++j) {
      if (i != j) nearest_angle = std::min(nearest_angle, angle_deg(dirs_[i], dirs_[j]));
    }
    worst = std::max(worst, nearest_angle);
  }
  return worst;
}

double DirectionSet::min_pairwise_angle_deg() const {
  double best = 90.0;
  for (std::size_t i = 0; i < dirs_.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs_.size(); ++j) best = std::min(best, angle_deg(dirs_[i], dirs_[j]));
  }
  return best;
}

DirectionSet tessellate_hemisphere(int n) {
  if (n < 1) throw std::invalid_argument("tessellate_hemisphere: n must be >= 1, got " + std::to_string(n));
  // Face grids of the octahedron |x|+|y|+|z| = 1 are exactly the integer
  // points with |a|+|b|+|c| = n. Keep the canonical half of each antipodal pair.
  std::vector<Direction> dirs;
  dirs.reserve(static_cast<std::size_t>(2 * n * n + 1));
  for (int c = 0; c <= n; ++c) {
    for (int b = -(n - c); b <= n - c; ++b) {
      const int rest = n - c - std::abs(b);
      for (int a : {-rest, rest}) {
        if (rest == 0 && a < 0) continue;
        const bool canonical = c > 0 || (c == 0 && b > 0) || (c == 0 && b == 0 && a > 0);
        if (!canonical) continue;
        dirs.push_back(Direction::from_xyz(a, b, c));
        if (rest == 0) break;
      }
    }
  }
  std::sort(dirs.begin(), dirs.end(), canonical_less);
  return DirectionSet(std::move(dirs), n);
}

ProlateTensor make_prolate_tensor(const Direction& pev, double lambda1, double lambda2) {
  if (!(lambda1 > lambda2 && lambda2 > 0.0)) {
    throw std::invalid_argument("make_prolate_tensor: requires lambda1 > lambda2 > 0");
  }
  ProlateTensor t;
  t.tensor = lambda2 * Eigen::Matrix3d::Identity() + (lambda1 - lambda2) * pev.vec() * pev.vec().transpose();
  t.lambda1 = lambda1;
  t.lambda2 = lambda2;
  t.pev = pev;
  return t;
}

std::vector<ProlateTensor> make_basis_tensors(const DirectionSet& basis, const Eigenvalues& ev) {
  std::vector<ProlateTensor> out;
  out.reserve(basis.size());
  for (const auto& d : basis) out.push_back(make_prolate_tensor(d, ev.axial, ev.transverse));
  return out;
}

GradientScheme::GradientScheme(std::vector<Gradient> gradients) : gradients_(std::move(gradients)) {
  if (gradients_.empty()) throw std::invalid_argument("gradient scheme: at least one gradient required");
  for (const auto& g : gradients_) {
    if (!(g.b >= 0.0) || !std::isfinite(g.b)) throw std::invalid_argument("gradient scheme: b-values must be >= 0");
  }
}

double electrostatic_energy(const std::vector<Eigen::Vector3d>& dirs) {
  double e = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      e += 1.0 / (dirs[i] - dirs[j]).norm() + 1.0 / (dirs[i] + dirs[j]).norm();
    }
  }
  return e;
}

namespace {

std::vector<Eigen::Vector3d> energy_gradient(const std::vector<Eigen::Vector3d>& dirs) {
  std::vector<Eigen::Vector3d> grad(dirs.size(), Eigen::Vector3d::Zero());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      const Eigen::Vector3d dm = dirs[i] - dirs[j];
      const Eigen::Vector3d dp = dirs[i] + dirs[j];
      const Eigen::Vector3d gm = -dm / std::pow(dm.norm(), 3);
      const Eigen::Vector3d gp = -dp / std::pow(dp.norm(), 3);
      grad[i] += gm + gp;
      grad[j] += -gm + gp;
    }
  }
  // Tangential part only; radial motion is undone by renormalization.
  for (std::size_t i = 0; i < dirs.size(); ++i) grad[i] -= grad[i].dot(dirs[i]) * dirs[i];
  return grad;
}

}  // namespace

GradientSchemeReport generate_gradient_scheme_report(int count, double b, std::uint64_t seed) {
  if (count < 6) throw std::invalid_argument("generate_gradient_scheme: need at least 6 directions");
  if (!(b >= 0.0)) throw std::invalid_argument("generate_gradient_scheme: b must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::Vector3d> dirs(static_cast<std::size_t>(count));
  for (auto& d : dirs) {
    do {
      d = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    } while (d.norm() < 1e-6);
    d.normalize();
  }

  GradientSchemeReport report;
  double energy = electrostatic_energy(dirs);
  report.initial_energy = energy;
  double step = 1e-2;
  int it = 0;
  for (; it < 20000; ++it) {
    const auto grad = energy_gradient(dirs);
    double gmax = 0.0;
    for (const auto& g : grad) gmax = std::max(gmax, g.norm());
    if (gmax < 1e-9) break;

    bool accepted = false;
    while (!accepted && step > 1e-14) {
      std::vector<Eigen::Vector3d> trial(dirs.size());
      for (std::size_t i = 0; i < dirs.size(); ++i) trial[i] = (dirs[i] - step * grad[i]).normalized();
      const double e = electrostatic_energy(trial);
      if (e < energy) {
        dirs = std::move(trial);
        energy = e;
        step *= 1.2;
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;
  }
  report.final_energy = energy;
  report.iterations = it;

  std::vector<Gradient> gradients;
  gradients.reserve(dirs.size());
  for (const auto& d : dirs) gradients.push_back({Direction::from_vector(d), b});
  report.scheme = GradientScheme(std::move(gradients));
  return report;
}

GradientScheme generate_gradient_scheme(int count, double b, std::uint64_t seed) {
  return generate_gradient_scheme_report(count, b, seed).scheme;
}

Dictionary build_dictionary(const GradientScheme& scheme, std::vector<ProlateTensor> basis) {
  if (scheme.size() == 0 || basis.empty()) throw std::invalid_argument("build_dictionary: empty scheme or basis");
  Dictionary dict;
  dict.matrix.resize(static_cast<Eigen::Index>(scheme.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < scheme.size(); ++k) {
    const Eigen::Vector3d& g = scheme[k].direction.vec();
    for (std::size_t i = 0; i < basis.size(); ++i) {
      dict.matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          std::exp(-scheme[k].b * g.dot(basis[i].tensor * g));
    }
  }
  dict.scheme = scheme;
  dict.tensors = std::move(basis);
  return dict;
}

}  // namespace fordn
