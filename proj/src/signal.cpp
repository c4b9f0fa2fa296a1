#include "fordn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fordn {

FOSet::FOSet(std::vector<FiberOrientation> fos) : fos_(std::move(fos)) {
  for (const auto& fo : fos_) {
    if (!(fo.fraction >= 0.0) || !std::isfinite(fo.fraction)) {
      throw std::invalid_argument("FOSet: fractions must be finite and nonnegative");
    }
  }
  std::stable_sort(fos_.begin(), fos_.end(),
                   [](const FiberOrientation& a, const FiberOrientation& b) { return a.fraction > b.fraction; });
}

double FOSet::fraction_sum() const {
  double s = 0.0;
  for (const auto& fo : fos_) s += fo.fraction;
  return s;
}

FOSet FOSet::normalized() const {
  const double s = fraction_sum();
  if (fos_.empty() || s <= 0.0) return *this;
  std::vector<FiberOrientation> out = fos_;
  for (auto& fo : out) fo.fraction /= s;
  return FOSet(std::move(out));
}

Eigen::VectorXd synthesize_signal(const FOSet& fos, const Eigenvalues& ev, const GradientScheme& scheme) {
  if (fos.empty() || fos.size() > 3) throw std::invalid_argument("synthesize_signal: expected 1-3 fiber orientations");
  if (std::abs(fos.fraction_sum() - 1.0) > 1e-9) throw std::invalid_argument("synthesize_signal: fractions must sum to 1");

  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(scheme.size()));
  for (const auto& fo : fos) {
    const auto tensor = make_prolate_tensor(fo.direction, ev.axial, ev.transverse);
    for (std::size_t k = 0; k < scheme.size(); ++k) {
      const Eigen::Vector3d& g = scheme[k].direction.vec();
      y[static_cast<Eigen::Index>(k)] += fo.fraction * std::exp(-scheme[k].b * g.dot(tensor.tensor * g));
    }
  }
  return y;
}

Eigen::VectorXd add_rician_noise(const Eigen::VectorXd& y, const NoiseModel& noise, std::mt19937_64& rng) {
  if (!(noise.snr > 0.0)) throw std::invalid_argument("add_rician_noise: snr must be > 0");
  if (std::isinf(noise.snr)) return y;

  const double sigma = noise.s0 / noise.snr;
  std::normal_distribution<double> normal(0.0, sigma);
  Eigen::VectorXd out(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double s = noise.s0 * y[k];
    const double n1 = normal(rng);
    const double n2 = normal(rng);
    out[k] = std::sqrt((s + n1) * (s + n1) + n2 * n2);
  }
  double baseline = noise.s0;
  if (noise.baseline == BaselineNormalization::Noisy) {
    const double n1 = normal(rng);
    const double n2 = normal(rng);
    baseline = std::sqrt((noise.s0 + n1) * (noise.s0 + n1) + n2 * n2);
  }
  return out / baseline;
}

}  // namespace fordn
