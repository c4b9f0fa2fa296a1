#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace fordn {

/// Unit vector with a unique antipodal representative: the first nonzero
/// component among (z, y, x) is positive.
class Direction {
 public:
  Direction() = default;

  /// Normalizes and canonicalizes `v`. Throws std::invalid_argument for a
  /// zero or non-finite vector.
  static Direction from_vector(const Eigen::Vector3d& v);
  static Direction from_xyz(double x, double y, double z) {
    return from_vector(Eigen::Vector3d(x, y, z));
  }

  const Eigen::Vector3d& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double dot(const Direction& other) const { return v_.dot(other.v_); }

  friend bool operator==(const Direction& a, const Direction& b) { return a.v_ == b.v_; }

 private:
  explicit Direction(const Eigen::Vector3d& v) : v_(v) {}
  Eigen::Vector3d v_{0.0, 0.0, 1.0};
};

/// Angle between two axes in degrees, in [0, 90].
double angle_deg(const Direction& u, const Direction& v);

/// Ordered set of directions, pairwise distinct up to sign.
class DirectionSet {
 public:
  DirectionSet() = default;
  explicit DirectionSet(std::vector<Direction> dirs, std::optional<int> level = std::nullopt);

  std::size_t size() const { return dirs_.size(); }
  bool empty() const { return dirs_.empty(); }
  const Direction& operator[](std::size_t i) const { return dirs_[i]; }
  const std::vector<Direction>& directions() const { return dirs_; }
  std::optional<int> tessellation_level() const { return level_; }

  auto begin() const { return dirs_.begin(); }
  auto end() const { return dirs_.end(); }

  /// 3 x N matrix with one direction per column.
  Eigen::Matrix3Xd as_matrix() const;

  /// Index of the member with the largest |v . d|; ties go to the lowest index.
  std::size_t nearest(const Direction& d) const;

  /// Largest angle from any member to its nearest other member.
  double max_nearest_neighbor_angle_deg() const;
  double min_pairwise_angle_deg() const;

 private:
  std::vector<Direction> dirs_;
  std::optional<int> level_;
};

/// Hemisphere directions from an octahedron whose edges are split into `n`
/// segments, projected to the sphere. Yields exactly 2n^2+1 directions sorted
/// by their canonical (x, y, z) components.
DirectionSet tessellate_hemisphere(int n);

struct Eigenvalues {
  double axial = 1.5e-3;       // mm^2/s
  double transverse = 3.0e-4;  // mm^2/s
};

struct ProlateTensor {
  Eigen::Matrix3d tensor;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Direction pev;
};

/// lambda2 * I + (lambda1 - lambda2) * pev pev^T. Requires lambda1 > lambda2 > 0.
ProlateTensor make_prolate_tensor(const Direction& pev, double lambda1, double lambda2);
std::vector<ProlateTensor> make_basis_tensors(const DirectionSet& basis, const Eigenvalues& ev);

struct Gradient {
  Direction direction;
  double b = 0.0;  // s/mm^2
};

class GradientScheme {
 public:
  GradientScheme() = default;
  explicit GradientScheme(std::vector<Gradient> gradients);

  std::size_t size() const { return gradients_.size(); }
  const Gradient& operator[](std::size_t k) const { return gradients_[k]; }
  const std::vector<Gradient>& gradients() const { return gradients_; }

 private:
  std::vector<Gradient> gradients_;
};

/// Electrostatic energy of the antipodally symmetric point set
/// sum_{i<j} 1/|d_i - d_j| + 1/|d_i + d_j|.
double electrostatic_energy(const std::vector<Eigen::Vector3d>& dirs);

struct GradientSchemeReport {
  GradientScheme scheme;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  int iterations = 0;
};

/// `count` directions spread by antipodally symmetric repulsion, starting from
/// a seeded random configuration. All share the b-value `b`. Requires count >= 6.
GradientSchemeReport generate_gradient_scheme_report(int count, double b, std::uint64_t seed);
GradientScheme generate_gradient_scheme(int count, double b, std::uint64_t seed);

/// K x N attenuation matrix G_ki = exp(-b_k g_k^T D_i g_k).
struct Dictionary {
  Eigen::MatrixXd matrix;
  GradientScheme scheme;
  std::vector<ProlateTensor> tensors;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

Dictionary build_dictionary(const GradientScheme& scheme, std::vector<ProlateTensor> basis);

}  // namespace fordn
