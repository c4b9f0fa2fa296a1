#include "fordn/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

#include <Eigen/Geometry>

#include "fordn/errors.hpp"
#include "fordn/random.hpp"

namespace fordn {

double TractSpec::distance(const Eigen::Vector3d& p, Eigen::Vector3d& tangent) const {
  const Eigen::Vector3d q = p - center;
  const Eigen::Vector3d a = axis.normalized();
  if (kind == Kind::Line) {
    tangent = a;
    return (q - q.dot(a) * a).norm();
  }
  const double h = q.dot(a);
  const Eigen::Vector3d in_plane = q - h * a;
  const double rho = in_plane.norm();
  if (rho < 1e-12) {
    // On the ring axis every point of the circle is equidistant; no fiber passes here.
    tangent = a.unitOrthogonal();
    return std::hypot(h, ring_radius);
  }
  tangent = a.cross(in_plane / rho);
  return std::hypot(h, rho - ring_radius);
}

PhantomSpec PhantomSpec::standard(int size, double tube_radius, double ring_offset) {
  PhantomSpec spec;
  spec.dims = {size, size, size};
  const Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(0.45, Eigen::Vector3d(1.0, 2.0, 3.0).normalized()) *
       Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitZ()))
          .toRotationMatrix();

  const char* line_names[] = {"line_a", "line_b", "line_c"};
  for (int t = 0; t < 3; ++t) {
    TractSpec line;
    line.kind = TractSpec::Kind::Line;
    line.name = line_names[t];
    line.axis = rot.col(t);
    line.tube_radius = tube_radius;
    spec.tracts.push_back(line);
  }
  // The circle through s*e_x, s*e_y, s*e_z lies in the plane x+y+z = s with
  // centre (s/3)(1,1,1) and radius s*sqrt(6)/3; it meets each axis at 90 degrees.
  const Eigen::Vector3d diag = Eigen::Vector3d::Ones().normalized();
  for (int sign : {1, -1}) {
    TractSpec ring;
    ring.kind = TractSpec::Kind::Ring;
    ring.name = sign > 0 ? "ring_upper" : "ring_lower";
    ring.axis = rot * diag;
    ring.center = rot * (sign * ring_offset / 3.0 * Eigen::Vector3d::Ones());
    ring.ring_radius = ring_offset * std::sqrt(6.0) / 3.0;
    ring.tube_radius = tube_radius;
    spec.tracts.push_back(ring);
  }
  return spec;
}

RegionCensus compute_census(const Dims& dims, const std::vector<std::uint8_t>& tract_mask) {
  RegionCensus census;
  const std::size_t n = dims.count();
  std::vector<int> multiplicity(n);
  for (std::size_t v = 0; v < n; ++v) {
    multiplicity[v] = std::popcount(static_cast<unsigned>(tract_mask[v]));
    census.voxels[std::min(multiplicity[v], 3)]++;
  }

  std::vector<char> visited(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (visited[start] || multiplicity[start] < 2) continue;
    int peak = 0;
    std::queue<std::size_t> queue;
    queue.push(start);
    visited[start] = 1;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop();
      peak = std::max(peak, multiplicity[v]);
      int i, j, k;
      dims.coords(v, i, j, k);
      const int offsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& o : offsets) {
        const int a = i + o[0], b = j + o[1], c = k + o[2];
        if (a < 0 || b < 0 || c < 0 || a >= dims.nx || b >= dims.ny || c >= dims.nz) continue;
        const std::size_t w = dims.index(a, b, c);
        if (!visited[w] && multiplicity[w] >= 2) {
          visited[w] = 1;
          queue.push(w);
        }
      }
    }
    if (peak >= 3) {
      census.triple_locations++;
    } else {
      census.pair_locations++;
    }
  }
  return census;
}

PhantomVolume build_crossing_phantom(const PhantomSpec& spec, const GradientScheme& scheme, const Eigenvalues& ev,
                                     const NoiseModel& noise, std::uint64_t seed, int jobs) {
  if (spec.tracts.empty() || spec.tracts.size() > 8) throw ValidationError("phantom: between 1 and 8 tracts required");

  PhantomVolume ph;
  ph.dims = spec.dims;
  ph.voxel_size_mm = spec.voxel_size_mm;
  const std::size_t n = spec.dims.count();
  ph.truth.resize(n);
  ph.labels.assign(n, 0);
  ph.tract_mask.assign(n, 0);
  ph.signals.dims = spec.dims;
  ph.signals.voxel_size_mm = spec.voxel_size_mm;
  ph.signals.data.resize(static_cast<Eigen::Index>(scheme.size()), static_cast<Eigen::Index>(n));

  // Background: isotropic diffusion at the basis tensors' mean diffusivity.
  const double md = (ev.axial + 2.0 * ev.transverse) / 3.0;
  Eigen::VectorXd isotropic(static_cast<Eigen::Index>(scheme.size()));
  for (std::size_t k = 0; k < scheme.size(); ++k) isotropic[static_cast<Eigen::Index>(k)] = std::exp(-scheme[k].b * md);

  const Eigen::Vector3d half((spec.dims.nx - 1) / 2.0, (spec.dims.ny - 1) / 2.0, (spec.dims.nz - 1) / 2.0);

  parallel_for(n, jobs, [&](std::size_t v) {
    int i, j, k;
    spec.dims.coords(v, i, j, k);
    const Eigen::Vector3d p = (Eigen::Vector3d(i, j, k) - half) * spec.voxel_size_mm;

    std::vector<Direction> tangents;
    std::uint8_t mask = 0;
    for (std::size_t t = 0; t < spec.tracts.size(); ++t) {
      Eigen::Vector3d tangent;
      if (spec.tracts[t].distance(p, tangent) <= spec.tracts[t].tube_radius) {
        mask |= static_cast<std::uint8_t>(1u << t);
        tangents.push_back(Direction::from_vector(tangent));
      }
    }
    ph.tract_mask[v] = mask;
    // Voxels covered by more than three tracts cannot be represented; the
    // census check below rejects such layouts through the label count.
    const std::size_t m = std::min<std::size_t>(tangents.size(), 3);
    ph.labels[v] = static_cast<std::uint8_t>(m);

    std::mt19937_64 rng(derive_seed(seed, {v}));
    Eigen::VectorXd clean;
    if (m == 0) {
      clean = isotropic;
    } else {
      std::vector<FiberOrientation> fos;
      for (std::size_t t = 0; t < m; ++t) fos.push_back({tangents[t], 1.0 / static_cast<double>(m)});
      ph.truth[v] = FOSet(std::move(fos));
      clean = synthesize_signal(ph.truth[v], ev, scheme);
    }
    ph.signals.data.col(static_cast<Eigen::Index>(v)) = add_rician_noise(clean, noise, rng);
  });

  for (std::size_t v = 0; v < n; ++v) {
    if (std::popcount(static_cast<unsigned>(ph.tract_mask[v])) > 3) {
      throw ValidationError("phantom: a voxel is covered by more than three tracts");
    }
  }
  ph.census = compute_census(spec.dims, ph.tract_mask);
  if (ph.census.pair_locations != spec.expected_pair_locations ||
      ph.census.triple_locations != spec.expected_triple_locations) {
    std::ostringstream msg;
    msg << "phantom census mismatch: realized " << ph.census.pair_locations << " two-crossing and "
        << ph.census.triple_locations << " three-crossing locations, expected " << spec.expected_pair_locations
        << " and " << spec.expected_triple_locations;
    throw ValidationError(msg.str());
  }
  return ph;
}

}  // namespace fordn
