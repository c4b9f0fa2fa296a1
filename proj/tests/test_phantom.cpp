#include "doctest.h"

#include <bit>
#include <queue>
#include <string>

#include "fordn/errors.hpp"
#include "fordn/phantom.hpp"

using namespace fordn;

namespace {

// Independent flood fill (breadth first, 6-connected) over voxels covered by
// two or more tracts.
std::pair<int, int> count_components(const Dims& dims, const std::vector<std::uint8_t>& mask) {
  std::vector<int> seen(mask.size(), 0);
  int pairs = 0, triples = 0;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (seen[s] || std::popcount(static_cast<unsigned>(mask[s])) < 2) continue;
    int peak = 0;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop();
      peak = std::max(peak, std::popcount(static_cast<unsigned>(mask[v])));
      int i, j, k;
      dims.coords(v, i, j, k);
      const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
      for (const auto& d : nb) {
        const int a = i + d[0], b = j + d[1], c = k + d[2];
        if (a < 0 || b < 0 || c < 0 || a >= dims.nx || b >= dims.ny || c >= dims.nz) continue;
        const std::size_t w = dims.index(a, b, c);
        if (!seen[w] && std::popcount(static_cast<unsigned>(mask[w])) >= 2) {
          seen[w] = 1;
          q.push(w);
        }
      }
    }
    (peak >= 3 ? triples : pairs)++;
  }
  return {pairs, triples};
}

const PhantomVolume& standard_phantom() {
  static const PhantomVolume ph = build_crossing_phantom(PhantomSpec::standard(), generate_gradient_scheme(30, 1000.0, 7),
                                                         Eigenvalues{}, NoiseModel{}, 2017, 1);
  return ph;
}

}  // namespace

TEST_CASE("standard phantom census") {
  const auto& ph = standard_phantom();
  CHECK(ph.census.pair_locations == 6);
  CHECK(ph.census.triple_locations == 1);
  const auto [pairs, triples] = count_components(ph.dims, ph.tract_mask);
  CHECK(pairs == 6);
  CHECK(triples == 1);
  CHECK(ph.census.voxels[1] + ph.census.voxels[2] + ph.census.voxels[3] > 1000);
  CHECK(ph.census.voxels[2] + ph.census.voxels[3] >= 1000);
}

TEST_CASE("ground truth follows the tract cover") {
  const auto& ph = standard_phantom();
  const std::size_t center = ph.dims.index(20, 20, 20);
  // The grid center sits between voxels; the nearest voxel lies inside all three lines.
  CHECK(ph.labels[center] == 3);
  CHECK(ph.truth[center].size() == 3);
  for (const auto& fo : ph.truth[center]) CHECK(fo.fraction == doctest::Approx(1.0 / 3.0));

  std::size_t singles = 0;
  for (std::size_t v = 0; v < ph.labels.size(); ++v) {
    const int m = std::popcount(static_cast<unsigned>(ph.tract_mask[v]));
    CHECK(ph.labels[v] == m);
    CHECK(ph.truth[v].size() == static_cast<std::size_t>(m));
    if (m > 0) CHECK(ph.truth[v].fraction_sum() == doctest::Approx(1.0).epsilon(1e-12));
    if (m == 1) {
      ++singles;
      CHECK(ph.truth[v][0].fraction == 1.0);
    }
  }
  CHECK(singles == ph.census.voxels[1]);
}

TEST_CASE("phantom is deterministic and independent of worker count") {
  const auto scheme = generate_gradient_scheme(30, 1000.0, 7);
  const auto b = build_crossing_phantom(PhantomSpec::standard(), scheme, Eigenvalues{}, NoiseModel{}, 2017, 3);
  CHECK(b.signals.data == standard_phantom().signals.data);
  CHECK(b.labels == standard_phantom().labels);

  const auto c = build_crossing_phantom(PhantomSpec::standard(), scheme, Eigenvalues{}, NoiseModel{}, 6, 1);
  CHECK(c.signals.data != standard_phantom().signals.data);
  CHECK(c.labels == standard_phantom().labels);
}

TEST_CASE("census mismatch is a validation error naming the counts") {
  const auto scheme = generate_gradient_scheme(30, 1000.0, 7);
  // Rings pushed outside the grid leave only the central triple crossing.
  const auto spec = PhantomSpec::standard(40, 4.0, 40.0);
  try {
    build_crossing_phantom(spec, scheme, Eigenvalues{}, NoiseModel{}, 1, 1);
    FAIL("expected a census failure");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("realized 0 two-crossing and 1 three-crossing") != std::string::npos);
  }
}

TEST_CASE("tract distance") {
  TractSpec line;
  line.axis = Eigen::Vector3d::UnitX();
  Eigen::Vector3d tangent;
  CHECK(line.distance(Eigen::Vector3d(5, 3, 4), tangent) == doctest::Approx(5.0));
  CHECK(std::abs(tangent.dot(Eigen::Vector3d::UnitX())) == doctest::Approx(1.0));

  TractSpec ring;
  ring.kind = TractSpec::Kind::Ring;
  ring.axis = Eigen::Vector3d::UnitZ();
  ring.ring_radius = 10.0;
  CHECK(ring.distance(Eigen::Vector3d(13, 0, 4), tangent) == doctest::Approx(5.0));
  CHECK(std::abs(tangent.dot(Eigen::Vector3d::UnitY())) == doctest::Approx(1.0));
}

TEST_CASE("compute_census on a hand-made mask") {
  const Dims dims{5, 1, 1};
  // components: {0,1} max 2, {3} max 3
  const std::vector<std::uint8_t> mask = {0b011, 0b110, 0b001, 0b111, 0};
  const auto census = compute_census(dims, mask);
  CHECK(census.pair_locations == 1);
  CHECK(census.triple_locations == 1);
  CHECK(census.voxels[1] == 1);
  CHECK(census.voxels[2] == 2);
  CHECK(census.voxels[3] == 1);
}
