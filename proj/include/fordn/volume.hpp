#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace fordn {

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const { return static_cast<std::size_t>(nx) * ny * nz; }
  /// x-fastest linear index.
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  void coords(std::size_t idx, int& i, int& j, int& k) const {
    i = static_cast<int>(idx % nx);
    j = static_cast<int>((idx / nx) % ny);
    k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

enum class TissueClass : std::uint8_t { Background = 0, Noncrossing = 1, TwoCrossing = 2, ThreeCrossing = 3 };

/// Normalized signals, one column per voxel.
struct SignalVolume {
  Dims dims;
  double voxel_size_mm = 1.0;
  Eigen::MatrixXd data;  // K x count()

  Eigen::Index channels() const { return data.rows(); }
};

/// Runs fn(i) for i in [0, n) on `jobs` workers over contiguous chunks.
/// Each index is visited exactly once, so per-index outputs do not depend on
/// the worker count.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace fordn
