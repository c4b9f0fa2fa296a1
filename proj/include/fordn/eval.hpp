#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fordn/pipeline.hpp"
#include "fordn/signal.hpp"

namespace fordn {

inline constexpr const char* kErrorMetricName = "symmetric_mean_min_angle_deg(empty=90)";

/// 0.5 * [mean over truth of the angle to the closest estimate
///        + mean over estimates of the angle to the closest truth];
/// 90 degrees when the estimate is empty.
double fo_error(const FOSet& estimated, const FOSet& truth);

enum class Region { All = 0, Noncrossing = 1, TwoCrossing = 2, ThreeCrossing = 3 };
inline constexpr Region kRegions[] = {Region::All, Region::Noncrossing, Region::TwoCrossing, Region::ThreeCrossing};
const char* region_name(Region r);

struct RegionStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::size_t count = 0;
};

struct ErrorSummary {
  std::map<Region, RegionStats> regions;
  std::vector<double> voxel_errors;     // per voxel; NaN outside tissue
  std::vector<std::uint8_t> voxel_class;

  /// Errors of the voxels in `r`, in voxel order.
  std::vector<double> errors_in(Region r) const;
};

ErrorSummary evaluate_volume(const FoVolume& estimated, const FoVolume& truth, const std::vector<std::uint8_t>& labels);

struct PairedStats {
  double t = 0.0;
  double p = 1.0;
  double d = 0.0;       // mean(a - b) / sd(a - b); positive when a is larger
  std::size_t n = 0;
  bool degenerate = false;  // zero-variance differences
};

/// Two-sided P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);
double student_t_cdf(double t, double dof);

/// Paired t-test and Cohen's d on a - b.
PairedStats paired_stats(const std::vector<double>& a, const std::vector<double>& b);

struct ComparisonRow {
  std::string pair;  // "<a>-<b>", statistics on a - b
  Region region = Region::All;
  PairedStats stats;
};

}  // namespace fordn
