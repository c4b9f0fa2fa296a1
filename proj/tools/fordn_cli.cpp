#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fordn/config.hpp"
#include "fordn/errors.hpp"
#include "fordn/experiment.hpp"
#include "fordn/io.hpp"

namespace fs = std::filesystem;
using fordn::ExperimentConfig;
using Json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int jobs = 0;
  bool force = false;
};

int default_jobs() {
  if (const char* env = std::getenv("FORDN_JOBS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("FORDN_JOBS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

// key.path=value; the value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) {
      throw fordn::ValidationError("unknown config section '" + parts[i] + "' in --set " + key);
    }
    node = &(*node)[parts[i]];
  }
  if (!node->contains(parts.back())) throw fordn::ValidationError("unknown config key '" + key + "'");
  (*node)[parts.back()] = value;
}

ExperimentConfig resolve_config(const Common& c, const std::optional<fs::path>& data_dir,
                                const std::vector<std::string>& extra = {}) {
  Json j;
  if (!c.config.empty()) {
    j = fordn::io::read_json(c.config);
  } else if (data_dir && fs::exists(*data_dir / "config.json")) {
    j = fordn::io::read_json(*data_dir / "config.json");
  } else {
    j = ExperimentConfig{}.to_json();
  }
  // Fill missing keys with defaults before overriding.
  j = ExperimentConfig::from_json(j).to_json();
  for (const auto& o : c.overrides) apply_override(j, o);
  for (const auto& o : extra) apply_override(j, o);
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON experiment config");
  sub->add_option("--set", c.overrides, "Override a config value, e.g. --set solver.alpha=0.8");
  sub->add_option("--jobs", c.jobs, "Worker threads (default: $FORDN_JOBS or 1)")->check(CLI::PositiveNumber);
  sub->add_flag("--force", c.force, "Accept inputs produced with a different config");
}

int jobs_of(const Common& c) { return c.jobs > 0 ? c.jobs : default_jobs(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber orientation estimation guided by an unfolded sparse network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FORDN_VERSION);

  Common common;

  std::string out, data, models, regions, method;
  std::vector<std::string> estimates;
  std::optional<double> snr;
  std::optional<std::uint64_t> seed;
  std::vector<double> grid;
  std::size_t max_voxels = 2000;

  auto* phantom = app.add_subcommand("phantom", "Synthesize the crossing phantom");
  add_common(phantom, common);
  phantom->add_option("--out", out, "Output directory")->required();
  phantom->add_option("--snr", snr, "Signal-to-noise ratio of the b=0 signal");
  phantom->add_option("--seed", seed, "Noise seed");

  auto* train = app.add_subcommand("train", "Train one network per region");
  add_common(train, common);
  train->add_option("--data", data, "Phantom directory")->required();
  train->add_option("--models", models, "Output directory for models")->required();
  train->add_option("--regions", regions, "Region label volume base path (default: one region)");
  train->add_option("--seed", seed, "Training seed");

  auto* est = app.add_subcommand("estimate", "Estimate fiber orientations");
  add_common(est, common);
  est->add_option("--method", method, "cfari, l2l0, dn or fordn")
      ->required()
      ->check(CLI::IsMember({"cfari", "l2l0", "dn", "fordn"}));
  est->add_option("--data", data, "Phantom directory")->required();
  est->add_option("--models", models, "Model directory (dn, fordn)");
  est->add_option("--regions", regions, "Region label volume base path");
  est->add_option("--out", out, "Output base path; writes <out>.fo and <out>.json")->required();

  auto* eval = app.add_subcommand("evaluate", "Compare estimates with the ground truth");
  add_common(eval, common);
  eval->add_option("--data", data, "Phantom directory with truth and labels")->required();
  eval->add_option("--estimates", estimates, "Estimate base paths")->required();
  eval->add_option("--out", out, "Report directory")->required();

  auto* tune = app.add_subcommand("tune", "Grid search of a baseline's beta against ground truth");
  add_common(tune, common);
  tune->add_option("--method", method, "cfari or l2l0")->required()->check(CLI::IsMember({"cfari", "l2l0"}));
  tune->add_option("--data", data, "Phantom directory")->required();
  tune->add_option("--grid", grid, "Candidate beta values")->required();
  tune->add_option("--max-voxels", max_voxels, "Tissue voxels used per candidate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  namespace ex = fordn::experiment;
  try {
    if (phantom->parsed()) {
      std::vector<std::string> extra;
      if (snr) extra.push_back("phantom.snr=" + std::to_string(*snr));
      if (seed) extra.push_back("phantom.seed=" + std::to_string(*seed));
      const auto cfg = resolve_config(common, std::nullopt, extra);
      const auto r = ex::make_phantom(cfg, out, jobs_of(common));
      std::cout << "census: " << r.census.pair_locations << " two-crossing, " << r.census.triple_locations
                << " three-crossing\n"
                << "voxels: noncrossing " << r.census.voxels[1] << ", two_crossing " << r.census.voxels[2]
                << ", three_crossing " << r.census.voxels[3] << "\n"
                << "config_hash: " << r.config_hash << "\n";
    } else if (train->parsed()) {
      std::vector<std::string> extra;
      if (seed) extra.push_back("network.seed=" + std::to_string(*seed));
      const auto cfg = resolve_config(common, fs::path(data), extra);
      // A changed training seed only affects the models; compare the data against its own config.
      bool force = common.force || seed.has_value();
      const auto r = ex::train_models(cfg, data, models,
                                      regions.empty() ? std::nullopt : std::optional<fs::path>(regions),
                                      jobs_of(common), force);
      for (std::size_t i = 0; i < r.regions.size(); ++i) {
        std::cout << "region " << r.regions[i] << ": " << r.configurations[i] << " configurations, " << r.samples[i]
                  << " samples, final loss " << r.loss_histories[i].back() << "\n";
      }
    } else if (est->parsed()) {
      const auto cfg = resolve_config(common, fs::path(data));
      const auto d = ex::estimate(cfg, method, data, models.empty() ? std::nullopt : std::optional<fs::path>(models),
                                  regions.empty() ? std::nullopt : std::optional<fs::path>(regions), out,
                                  jobs_of(common), common.force);
      std::cout << method << ": " << d.voxels << " voxels";
      if (method == "fordn") {
        std::cout << ", " << d.unit_weight_fallbacks << " unguided, " << d.guidance_inconsistent
                  << " inconsistent with guidance";
      }
      if (d.solver_not_converged) std::cout << ", " << d.solver_not_converged << " not converged";
      std::cout << "\n";
    } else if (eval->parsed()) {
      const auto cfg = resolve_config(common, fs::path(data));
      std::vector<fs::path> paths(estimates.begin(), estimates.end());
      ex::evaluate(cfg, data, paths, out, common.force);
      std::cout << fordn::io::read_text(fs::path(out) / "errors.csv");
      std::cout << fordn::io::read_text(fs::path(out) / "stats.csv");
    } else if (tune->parsed()) {
      const auto cfg = resolve_config(common, fs::path(data));
      const auto r = ex::tune_baseline(cfg, method, data, grid, max_voxels, jobs_of(common));
      for (std::size_t i = 0; i < r.grid.size(); ++i) {
        std::cout << "beta " << r.grid[i] << ": mean error " << r.mean_errors[i] << "\n";
      }
      std::cout << "best beta " << r.best_beta << "\n";
    }
  } catch (const fordn::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fordn::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
