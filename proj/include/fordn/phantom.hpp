#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fordn/geometry.hpp"
#include "fordn/signal.hpp"
#include "fordn/volume.hpp"

namespace fordn {

/// A tube of constant radius around a straight line or a circle.
struct TractSpec {
  enum class Kind { Line, Ring };
  Kind kind = Kind::Line;
  std::string name;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // mm from the grid center
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();   // line direction, or ring normal
  double ring_radius = 0.0;                          // mm, rings only
  double tube_radius = 4.0;                          // mm

  /// Distance from p to the centre curve; `tangent` receives the local fiber direction.
  double distance(const Eigen::Vector3d& p, Eigen::Vector3d& tangent) const;
};

struct PhantomSpec {
  Dims dims{40, 40, 40};
  double voxel_size_mm = 1.0;
  std::vector<TractSpec> tracts;
  int expected_pair_locations = 6;
  int expected_triple_locations = 1;

  /// Three mutually orthogonal straight tracts meeting at the centre and two
  /// rings on the sphere of radius `ring_offset` that each cross all three
  /// lines, one ring per hemisphere. The whole layout is rotated so that no
  /// tract is aligned with the coordinate axes.
  static PhantomSpec standard(int size = 40, double tube_radius = 4.0, double ring_offset = 14.0);
};

struct RegionCensus {
  int pair_locations = 0;    // connected crossing components whose max overlap is 2
  int triple_locations = 0;  // connected crossing components containing a 3-tract voxel
  std::size_t voxels[4] = {0, 0, 0, 0};  // per TissueClass
};

struct PhantomVolume {
  Dims dims;
  double voxel_size_mm = 1.0;
  std::vector<FOSet> truth;
  SignalVolume signals;
  std::vector<std::uint8_t> labels;      // TissueClass per voxel
  std::vector<std::uint8_t> tract_mask;  // bit t set when tract t covers the voxel
  RegionCensus census;
};

/// Connected components (6-connectivity) of voxels covered by two or more tracts.
RegionCensus compute_census(const Dims& dims, const std::vector<std::uint8_t>& tract_mask);

/// Ground truth, labels and Rician-noised signals. Throws ValidationError if
/// the realized census differs from the expected crossing counts.
PhantomVolume build_crossing_phantom(const PhantomSpec& spec, const GradientScheme& scheme, const Eigenvalues& ev,
                                     const NoiseModel& noise, std::uint64_t seed, int jobs = 1);

}  // namespace fordn
