#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "fordn/geometry.hpp"
#include "fordn/network.hpp"
#include "fordn/phantom.hpp"
#include "fordn/pipeline.hpp"
#include "fordn/signal.hpp"

namespace fordn {

/// Every tunable of the phantom experiment. Serialized into the provenance of
/// each output; the hash covers all fields.
struct ExperimentConfig {
  struct Basis {
    int coarse_level = 6;  // 2*6^2+1 = 73 directions
    int dense_level = 12;  // 2*12^2+1 = 289 directions
  } basis;
  Eigenvalues eigenvalues;
  struct Gradients {
    std::string file;  // gradient table; empty means generated
    int count = 30;
    double b = 1000.0;
    std::uint64_t seed = 7;
  } gradients;
  struct Phantom {
    int size = 40;
    double voxel_size_mm = 1.0;
    double tube_radius_mm = 4.0;
    double ring_offset_mm = 14.0;
    double snr = 20.0;
    double s0 = 1.0;
    bool noisy_baseline = false;
    std::uint64_t seed = 2017;
  } phantom;
  struct Network {
    int depth = 8;
    double lambda = 0.01;
    double tau = 1e-10;
    double learning_rate = 0.001;
    int batch_size = 64;
    int epochs = 8;
    int samples_per_combo = 500;
    std::size_t min_config_count = 5;
    std::uint64_t seed = 11;
  } network;
  struct Solver {
    std::string algorithm = "active_set";  // or proximal_gradient
    double alpha = 0.8;
    double beta_fordn = 0.25;
    double beta_cfari = 3.0;
    double beta_l2l0 = 0.05;
    int reweight_rounds = 5;
    double reweight_eps = 1e-3;
    int max_iterations = 2000;
    double tolerance = 1e-6;
  } solver;
  FoExtractionConfig extraction;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::ordered_json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;

  PhantomSpec phantom_spec() const;
  NoiseModel noise_model() const;
  SolverOptions solver_options() const;
  GradientScheme gradient_scheme() const;
};

std::string fnv1a_hex(const std::string& bytes);

}  // namespace fordn
