#include "fordn/config.hpp"

#include <cstdio>
#include <stdexcept>

#include "fordn/errors.hpp"
#include "fordn/io.hpp"

namespace fordn {

using Json = nlohmann::ordered_json;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("config: ") + what);
  };
  require(basis.coarse_level >= 1 && basis.dense_level >= 1, "tessellation levels must be >= 1");
  require(eigenvalues.axial > eigenvalues.transverse && eigenvalues.transverse > 0.0, "need axial > transverse > 0");
  require(gradients.count >= 6 || !gradients.file.empty(), "generated gradient schemes need count >= 6");
  require(gradients.b >= 0.0, "b-value must be >= 0");
  require(phantom.size >= 8, "phantom size must be >= 8");
  require(phantom.voxel_size_mm > 0.0 && phantom.tube_radius_mm > 0.0, "phantom lengths must be positive");
  require(phantom.snr > 0.0 && phantom.s0 > 0.0, "snr and s0 must be positive");
  require(network.depth >= 1 && network.lambda >= 0.0 && network.tau > 0.0, "bad network structure parameters");
  require(network.learning_rate > 0.0 && network.batch_size >= 1 && network.epochs >= 1, "bad training parameters");
  require(network.samples_per_combo >= 1 && network.min_config_count >= 1, "bad training-set parameters");
  require(solver.alpha >= 0.0 && solver.alpha < 1.0, "alpha must be in [0, 1)");
  require(solver.beta_fordn >= 0.0 && solver.beta_cfari >= 0.0 && solver.beta_l2l0 >= 0.0, "betas must be >= 0");
  require(solver.reweight_rounds >= 1 && solver.reweight_eps > 0.0, "bad reweighting parameters");
  require(solver.max_iterations >= 1 && solver.tolerance > 0.0, "bad solver stopping parameters");
  require(solver.algorithm == "active_set" || solver.algorithm == "proximal_gradient",
          "solver.algorithm must be active_set or proximal_gradient");
  try {
    extraction.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["basis"] = {{"coarse_level", basis.coarse_level}, {"dense_level", basis.dense_level}};
  j["eigenvalues"] = {{"axial", eigenvalues.axial}, {"transverse", eigenvalues.transverse}};
  j["gradients"] = {{"file", gradients.file}, {"count", gradients.count}, {"b", gradients.b}, {"seed", gradients.seed}};
  j["phantom"] = {{"size", phantom.size},
                  {"voxel_size_mm", phantom.voxel_size_mm},
                  {"tube_radius_mm", phantom.tube_radius_mm},
                  {"ring_offset_mm", phantom.ring_offset_mm},
                  {"snr", phantom.snr},
                  {"s0", phantom.s0},
                  {"noisy_baseline", phantom.noisy_baseline},
                  {"seed", phantom.seed}};
  j["network"] = {{"depth", network.depth},
                  {"lambda", network.lambda},
                  {"tau", network.tau},
                  {"learning_rate", network.learning_rate},
                  {"batch_size", network.batch_size},
                  {"epochs", network.epochs},
                  {"samples_per_combo", network.samples_per_combo},
                  {"min_config_count", network.min_config_count},
                  {"seed", network.seed}};
  j["solver"] = {{"algorithm", solver.algorithm},
                 {"alpha", solver.alpha},
                 {"beta_fordn", solver.beta_fordn},
                 {"beta_cfari", solver.beta_cfari},
                 {"beta_l2l0", solver.beta_l2l0},
                 {"reweight_rounds", solver.reweight_rounds},
                 {"reweight_eps", solver.reweight_eps},
                 {"max_iterations", solver.max_iterations},
                 {"tolerance", solver.tolerance}};
  j["extraction"] = {{"threshold", extraction.threshold}, {"refine_angle_deg", extraction.refine_angle_deg}};
  return j;
}

namespace {

template <typename T>
void read_into(const Json& section, const char* key, T& out) {
  if (section.contains(key)) out = section.at(key).get<T>();
}

void reject_unknown(const Json& j, const Json& reference, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!reference.contains(k)) throw ValidationError("config: unknown key '" + where + k + "'");
    if (v.is_object()) reject_unknown(v, reference.at(k), where + k + ".");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig c;
  reject_unknown(j, c.to_json(), "");
  try {
    const Json empty = Json::object();
    const auto& b = j.contains("basis") ? j["basis"] : empty;
    read_into(b, "coarse_level", c.basis.coarse_level);
    read_into(b, "dense_level", c.basis.dense_level);
    const auto& e = j.contains("eigenvalues") ? j["eigenvalues"] : empty;
    read_into(e, "axial", c.eigenvalues.axial);
    read_into(e, "transverse", c.eigenvalues.transverse);
    const auto& g = j.contains("gradients") ? j["gradients"] : empty;
    read_into(g, "file", c.gradients.file);
    read_into(g, "count", c.gradients.count);
    read_into(g, "b", c.gradients.b);
    read_into(g, "seed", c.gradients.seed);
    const auto& p = j.contains("phantom") ? j["phantom"] : empty;
    read_into(p, "size", c.phantom.size);
    read_into(p, "voxel_size_mm", c.phantom.voxel_size_mm);
    read_into(p, "tube_radius_mm", c.phantom.tube_radius_mm);
    read_into(p, "ring_offset_mm", c.phantom.ring_offset_mm);
    read_into(p, "snr", c.phantom.snr);
    read_into(p, "s0", c.phantom.s0);
    read_into(p, "noisy_baseline", c.phantom.noisy_baseline);
    read_into(p, "seed", c.phantom.seed);
    const auto& n = j.contains("network") ? j["network"] : empty;
    read_into(n, "depth", c.network.depth);
    read_into(n, "lambda", c.network.lambda);
    read_into(n, "tau", c.network.tau);
    read_into(n, "learning_rate", c.network.learning_rate);
    read_into(n, "batch_size", c.network.batch_size);
    read_into(n, "epochs", c.network.epochs);
    read_into(n, "samples_per_combo", c.network.samples_per_combo);
    read_into(n, "min_config_count", c.network.min_config_count);
    read_into(n, "seed", c.network.seed);
    const auto& s = j.contains("solver") ? j["solver"] : empty;
    read_into(s, "algorithm", c.solver.algorithm);
    read_into(s, "alpha", c.solver.alpha);
    read_into(s, "beta_fordn", c.solver.beta_fordn);
    read_into(s, "beta_cfari", c.solver.beta_cfari);
    read_into(s, "beta_l2l0", c.solver.beta_l2l0);
    read_into(s, "reweight_rounds", c.solver.reweight_rounds);
    read_into(s, "reweight_eps", c.solver.reweight_eps);
    read_into(s, "max_iterations", c.solver.max_iterations);
    read_into(s, "tolerance", c.solver.tolerance);
    const auto& x = j.contains("extraction") ? j["extraction"] : empty;
    read_into(x, "threshold", c.extraction.threshold);
    read_into(x, "refine_angle_deg", c.extraction.refine_angle_deg);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json(io::read_json(path));
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

PhantomSpec ExperimentConfig::phantom_spec() const {
  PhantomSpec spec = PhantomSpec::standard(phantom.size, phantom.tube_radius_mm, phantom.ring_offset_mm);
  spec.voxel_size_mm = phantom.voxel_size_mm;
  return spec;
}

NoiseModel ExperimentConfig::noise_model() const {
  return NoiseModel{phantom.snr, phantom.s0,
                    phantom.noisy_baseline ? BaselineNormalization::Noisy : BaselineNormalization::Clean};
}

SolverOptions ExperimentConfig::solver_options() const {
  SolverOptions o;
  o.max_iterations = solver.max_iterations;
  o.tolerance = solver.tolerance;
  o.algorithm = solver.algorithm == "proximal_gradient" ? SolverAlgorithm::ProximalGradient : SolverAlgorithm::ActiveSet;
  return o;
}

GradientScheme ExperimentConfig::gradient_scheme() const {
  if (!gradients.file.empty()) return io::read_gradient_table(gradients.file);
  return generate_gradient_scheme(gradients.count, gradients.b, gradients.seed);
}

}  // namespace fordn
