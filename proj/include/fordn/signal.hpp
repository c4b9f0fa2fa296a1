#pragma once

#include <random>
#include <vector>

#include <Eigen/Core>

#include "fordn/geometry.hpp"

namespace fordn {

struct FiberOrientation {
  Direction direction;
  double fraction = 0.0;
};

/// Fiber orientations at one voxel, sorted by descending fraction.
class FOSet {
 public:
  FOSet() = default;
  explicit FOSet(std::vector<FiberOrientation> fos);

  std::size_t size() const { return fos_.size(); }
  bool empty() const { return fos_.empty(); }
  const FiberOrientation& operator[](std::size_t i) const { return fos_[i]; }
  const std::vector<FiberOrientation>& orientations() const { return fos_; }
  auto begin() const { return fos_.begin(); }
  auto end() const { return fos_.end(); }

  double fraction_sum() const;
  /// Copy with fractions rescaled to sum to one. Empty sets stay empty.
  FOSet normalized() const;

 private:
  std::vector<FiberOrientation> fos_;
};

/// y_k = sum_i f_i exp(-b_k g_k^T D_i g_k) with D_i prolate along each FO.
/// Requires 1-3 FOs whose fractions sum to one within 1e-9.
Eigen::VectorXd synthesize_signal(const FOSet& fos, const Eigenvalues& ev, const GradientScheme& scheme);

enum class BaselineNormalization { Clean, Noisy };

struct NoiseModel {
  double snr = 20.0;  // s0 / sigma; infinity disables noise
  double s0 = 1.0;
  BaselineNormalization baseline = BaselineNormalization::Clean;
};

/// Rician magnitude noise on S = s0 * y, sigma = s0 / snr, then renormalized
/// by the clean (default) or a noisy baseline.
Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& y, const NoiseModel& noise, std::mt19937_64& rng);

}  // namespace fordn
