#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fordn/config.hpp"
#include "fordn/eval.hpp"
#include "fordn/phantom.hpp"

namespace fordn {

/// Stages of the phantom experiment; each reads and writes files so that the
/// command-line tool is a thin wrapper around them.
namespace experiment {

struct PhantomResult {
  RegionCensus census;
  std::string config_hash;
};

/// signals.{f32,json}, truth.{fo,json}, labels.{u8,json}, gradients.txt and
/// the resolved config.json under `out_dir`.
PhantomResult make_phantom(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, int jobs);

struct TrainResult {
  std::vector<int> regions;
  std::vector<std::vector<double>> loss_histories;
  std::vector<std::size_t> configurations;
  std::vector<std::size_t> samples;
};

/// Baseline FOs on the data give the coarse configurations; one network per
/// region is trained on signals synthesized from them.
TrainResult train_models(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                         const std::filesystem::path& models_dir, const std::optional<std::filesystem::path>& regions,
                         int jobs, bool force = false);

/// `method` is one of cfari, l2l0, dn, fordn. Writes `<out>.fo` and `<out>.json`.
EstimationDiagnostics estimate(const ExperimentConfig& cfg, const std::string& method,
                               const std::filesystem::path& data_dir, const std::optional<std::filesystem::path>& models_dir,
                               const std::optional<std::filesystem::path>& regions, const std::filesystem::path& out,
                               int jobs, bool force = false);

/// errors.csv, stats.csv, SVG panels and report.json under `out_dir`.
void evaluate(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
              const std::vector<std::filesystem::path>& estimates, const std::filesystem::path& out_dir,
              bool force = false);

struct TuneResult {
  std::vector<double> grid;
  std::vector<double> mean_errors;
  double best_beta = 0.0;
};

/// Grid search of a baseline's beta against the ground truth of `data_dir`;
/// scores are the mean over tissue classes of the class mean error.
TuneResult tune_baseline(const ExperimentConfig& cfg, const std::string& method, const std::filesystem::path& data_dir,
                         const std::vector<double>& grid, std::size_t max_voxels, int jobs);

}  // namespace experiment
}  // namespace fordn
