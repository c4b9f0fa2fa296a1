#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fordn/geometry.hpp"
#include "fordn/network.hpp"
#include "fordn/signal.hpp"
#include "fordn/solvers.hpp"
#include "fordn/volume.hpp"

namespace fordn {

struct FoExtractionConfig {
  double threshold = 0.1;       // keep atoms with fraction above this
  double refine_angle_deg = 20.0;

  void validate() const;
};

/// Basis directions whose fractions exceed the threshold, renormalized. When
/// nothing exceeds it the single largest atom (lowest index on ties) is kept.
FOSet extract_fos(const Eigen::VectorXd& fractions, const DirectionSet& basis, const FoExtractionConfig& cfg);

/// Keeps w_j iff every other FO within `angle_deg` of it has a fraction no
/// larger than h_j (equal fractions keep both); renormalizes.
FOSet refine_fos(const FOSet& fos, double angle_deg);

/// Closest coarse atom (largest |v . w|, lowest index on ties) for each FO,
/// duplicates collapsed, in order of first appearance.
std::vector<std::size_t> map_to_coarse(const FOSet& fos, const DirectionSet& coarse);

/// Per-voxel estimates. Background voxels hold empty sets.
struct FoVolume {
  Dims dims;
  std::vector<FOSet> voxels;
  std::string provenance;  // cfari | l2l0 | dn | fordn | truth
};

struct EstimationDiagnostics {
  std::size_t voxels = 0;
  std::size_t unit_weight_fallbacks = 0;  // guided solve ran with no guiding FO
  std::size_t guidance_inconsistent = 0;  // FO far from both guides and the unguided support
  std::size_t solver_not_converged = 0;
};

/// Region id per voxel; 0 means not estimated.
using RegionMap = std::vector<int>;

/// Single region 1 on every voxel with a nonzero tissue label.
RegionMap single_region(const std::vector<std::uint8_t>& labels);

FoVolume coarse_estimate(const SignalVolume& signals, const RegionMap& regions, const ModelStore& models,
                         const DirectionSet& coarse, const FoExtractionConfig& cfg, int jobs = 1);

struct GuidedSolveConfig {
  double alpha = 0.8;
  double beta = 0.25;
  FoExtractionConfig extraction;
};

/// Coarse network FOs weight a nonnegative weighted-l1 solve on the dense basis.
FoVolume fordn_estimate(const SignalVolume& signals, const RegionMap& regions, const ModelStore& models,
                        const DirectionSet& coarse, const DirectionSet& dense, const L1Solver& dense_solver,
                        const GuidedSolveConfig& cfg, int jobs = 1, EstimationDiagnostics* diagnostics = nullptr);

/// Guided solve given precomputed guiding FOs (one FOSet per voxel).
FoVolume guided_estimate(const SignalVolume& signals, const RegionMap& regions, const FoVolume& guides,
                         const DirectionSet& coarse, const DirectionSet& dense, const L1Solver& dense_solver,
                         const GuidedSolveConfig& cfg, int jobs = 1, EstimationDiagnostics* diagnostics = nullptr);

enum class BaselineMethod { Cfari, L2l0 };
BaselineMethod parse_baseline_method(const std::string& name);

struct BaselineConfig {
  double beta = 0.1;
  int reweight_rounds = 5;
  double reweight_eps = 1e-3;
  FoExtractionConfig extraction;
};

FoVolume run_baseline(const SignalVolume& signals, const RegionMap& regions, const L1Solver& solver,
                      const DirectionSet& basis, BaselineMethod method, const BaselineConfig& cfg, int jobs = 1,
                      EstimationDiagnostics* diagnostics = nullptr);

/// Coarse FO configurations (sorted coarse atom indices, at most three, the
/// largest-fraction FOs first) seen in `estimates` per region, with counts.
using ConfigurationCounts = std::map<std::vector<std::size_t>, std::size_t>;
std::map<int, ConfigurationCounts> collect_configurations(const FoVolume& estimates, const RegionMap& regions,
                                                          const DirectionSet& coarse);

/// Configurations seen at least `min_count` times, in key order.
std::vector<std::vector<std::size_t>> frequent_configurations(const ConfigurationCounts& counts, std::size_t min_count);

}  // namespace fordn
