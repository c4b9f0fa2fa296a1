#include "fordn/eval.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace fordn {

double fo_error(const FOSet& estimated, const FOSet& truth) {
  if (truth.empty()) throw std::invalid_argument("fo_error: empty truth");
  if (estimated.empty()) return 90.0;
  auto directed = [](const FOSet& from, const FOSet& to) {
    double sum = 0.0;
    for (const auto& a : from) {
      double best = 90.0;
      for (const auto& b : to) best = std::min(best, angle_deg(a.direction, b.direction));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(truth, estimated) + directed(estimated, truth));
}

const char* region_name(Region r) {
  switch (r) {
    case Region::All:
      return "all";
    case Region::Noncrossing:
      return "noncrossing";
    case Region::TwoCrossing:
      return "two_crossing";
    case Region::ThreeCrossing:
      return "three_crossing";
  }
  return "unknown";
}

std::vector<double> ErrorSummary::errors_in(Region r) const {
  std::vector<double> out;
  for (std::size_t v = 0; v < voxel_errors.size(); ++v) {
    if (voxel_class[v] == 0) continue;
    if (r == Region::All || voxel_class[v] == static_cast<std::uint8_t>(r)) out.push_back(voxel_errors[v]);
  }
  return out;
}

namespace {

RegionStats summarize(const std::vector<double>& xs) {
  RegionStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

ErrorSummary evaluate_volume(const FoVolume& estimated, const FoVolume& truth, const std::vector<std::uint8_t>& labels) {
  if (!(estimated.dims == truth.dims) || estimated.voxels.size() != truth.voxels.size() ||
      labels.size() != truth.voxels.size()) {
    throw std::invalid_argument("evaluate_volume: dimension mismatch between estimate, truth and labels");
  }
  ErrorSummary out;
  out.voxel_class = labels;
  out.voxel_errors.assign(labels.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] == 0) continue;
    if (labels[v] > 3) throw std::invalid_argument("evaluate_volume: unknown tissue label");
    out.voxel_errors[v] = fo_error(estimated.voxels[v], truth.voxels[v]);
  }
  for (Region r : kRegions) out.regions[r] = summarize(out.errors_in(r));
  return out;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_cdf: dof must be > 0");
  boost::math::students_t_distribution<double> dist(dof);
  return boost::math::cdf(dist, t);
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_two_sided_p: dof must be > 0");
  if (std::isinf(t)) return 0.0;
  boost::math::students_t_distribution<double> dist(dof);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

PairedStats paired_stats(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_stats: need aligned samples, n >= 2");
  PairedStats s;
  s.n = a.size();
  const double n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    s.degenerate = true;
    if (mean == 0.0) {
      s.t = 0.0;
      s.d = 0.0;
      s.p = 1.0;
    } else {
      const double inf = std::numeric_limits<double>::infinity();
      s.t = mean > 0.0 ? inf : -inf;
      s.d = s.t;
      s.p = 0.0;
    }
    return s;
  }
  s.d = mean / sd;
  s.t = mean / (sd / std::sqrt(n));
  s.p = student_t_two_sided_p(s.t, n - 1.0);
  return s;
}

}  // namespace fordn
