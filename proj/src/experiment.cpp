#include "fordn/experiment.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <limits>
#include <regex>

#include "fordn/errors.hpp"
#include "fordn/io.hpp"
#include "fordn/random.hpp"
#include "fordn/report.hpp"

namespace fordn::experiment {

namespace fs = std::filesystem;
using Json = io::Json;

namespace {

void check_hash(const Json& sidecar, const ExperimentConfig& cfg, const fs::path& what, bool force) {
  const std::string found = sidecar.value("config_hash", std::string());
  if (found != cfg.hash() && !force) {
    throw ValidationError(what.string() + " was produced with config " + (found.empty() ? "<none>" : found) +
                          " but the current config is " + cfg.hash() + " (use --force to override)");
  }
}

Json provenance(const ExperimentConfig& cfg) {
  Json j;
  j["config_hash"] = cfg.hash();
  j["code_version"] = FORDN_VERSION;
  return j;
}

RegionMap load_regions(const std::optional<fs::path>& regions, const std::vector<std::uint8_t>& labels,
                       const Dims& dims) {
  if (!regions) return single_region(labels);
  Dims rd;
  const auto values = io::read_label_volume(*regions, &rd);
  if (!(rd == dims)) throw ValidationError("region volume dimensions do not match the signal volume");
  return RegionMap(values.begin(), values.end());
}

struct Workspace {
  SignalVolume signals;
  std::vector<std::uint8_t> labels;
  GradientScheme scheme;
  Json sidecar;
};

Workspace load_workspace(const ExperimentConfig& cfg, const fs::path& data_dir, bool force) {
  Workspace w;
  w.signals = io::read_signal_volume(data_dir / "signals", &w.sidecar);
  check_hash(w.sidecar, cfg, data_dir / "signals.json", force);
  Dims ld;
  w.labels = io::read_label_volume(data_dir / "labels", &ld);
  if (!(ld == w.signals.dims)) throw ValidationError("label volume dimensions do not match the signal volume");
  w.scheme = io::read_gradient_table(data_dir / "gradients.txt");
  if (static_cast<Eigen::Index>(w.scheme.size()) != w.signals.channels()) {
    throw ValidationError("gradient table length does not match the number of signal channels");
  }
  return w;
}

Dictionary dictionary_for(const GradientScheme& scheme, const DirectionSet& basis, const ExperimentConfig& cfg) {
  return build_dictionary(scheme, make_basis_tensors(basis, cfg.eigenvalues));
}

ModelStore load_models(const fs::path& dir) {
  ModelStore store;
  if (!fs::is_directory(dir)) {
    throw ValidationError("model directory " + dir.string() + " does not exist; run `fordn train` first");
  }
  const std::regex name(R"(model_region(\d+)\.bin)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::smatch m;
    const std::string fname = path.filename().string();
    if (!std::regex_match(fname, m, name)) continue;
    TrainedModel model = io::load_model(path);
    store[std::stoi(m[1].str())] = std::move(model);
  }
  if (store.empty()) throw ValidationError("no trained models in " + dir.string() + "; run `fordn train` first");
  return store;
}

}  // namespace

PhantomResult make_phantom(const ExperimentConfig& cfg, const fs::path& out_dir, int jobs) {
  cfg.validate();
  const GradientScheme scheme = cfg.gradient_scheme();
  const PhantomVolume ph =
      build_crossing_phantom(cfg.phantom_spec(), scheme, cfg.eigenvalues, cfg.noise_model(), cfg.phantom.seed, jobs);

  Json extra = provenance(cfg);
  extra["snr"] = cfg.phantom.snr;
  extra["b_values"] = "see gradients.txt";
  io::write_signal_volume(out_dir / "signals", ph.signals, extra);

  FoVolume truth{ph.dims, ph.truth, "truth"};
  io::write_fo_volume(out_dir / "truth", truth, provenance(cfg));

  Json label_extra = provenance(cfg);
  label_extra["classes"] = {"background", "noncrossing", "two_crossing", "three_crossing"};
  label_extra["census"] = {{"two_crossing_locations", ph.census.pair_locations},
                           {"three_crossing_locations", ph.census.triple_locations},
                           {"voxels", {ph.census.voxels[0], ph.census.voxels[1], ph.census.voxels[2], ph.census.voxels[3]}}};
  io::write_label_volume(out_dir / "labels", ph.dims, ph.voxel_size_mm, ph.labels, label_extra);
  io::write_gradient_table(out_dir / "gradients.txt", scheme);
  io::write_json(out_dir / "config.json", cfg.to_json());
  return {ph.census, cfg.hash()};
}

TrainResult train_models(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& models_dir,
                         const std::optional<fs::path>& regions_path, int jobs, bool force) {
  cfg.validate();
  const Workspace w = load_workspace(cfg, data_dir, force);
  const RegionMap regions = load_regions(regions_path, w.labels, w.signals.dims);

  const DirectionSet dense = tessellate_hemisphere(cfg.basis.dense_level);
  const DirectionSet coarse = tessellate_hemisphere(cfg.basis.coarse_level);
  const Dictionary dense_dict = dictionary_for(w.scheme, dense, cfg);
  const Dictionary coarse_dict = dictionary_for(w.scheme, coarse, cfg);

  BaselineConfig bcfg;
  bcfg.beta = cfg.solver.beta_cfari;
  bcfg.extraction = cfg.extraction;
  const L1Solver solver(dense_dict.matrix, cfg.solver_options());
  const FoVolume initial = run_baseline(w.signals, regions, solver, dense, BaselineMethod::Cfari, bcfg, jobs);
  const auto counts = collect_configurations(initial, regions, coarse);

  TrainResult result;
  for (const auto& [region, region_counts] : counts) {
    const auto configs = frequent_configurations(region_counts, cfg.network.min_config_count);
    if (configs.empty()) {
      throw ValidationError("region " + std::to_string(region) + ": no configuration seen at least " +
                            std::to_string(cfg.network.min_config_count) + " times");
    }
    const std::uint64_t region_seed = derive_seed(cfg.network.seed, {static_cast<std::uint64_t>(region)});
    const TrainingSet data = synthesize_training_set(configs, coarse_dict, cfg.noise_model(),
                                                     cfg.network.samples_per_combo, region_seed, region);
    TrainingOptions topts;
    topts.epochs = cfg.network.epochs;
    topts.batch_size = cfg.network.batch_size;
    topts.seed = derive_seed(region_seed, {1});
    topts.adam.learning_rate = cfg.network.learning_rate;
    const auto init = stable_classical_params(coarse_dict.matrix, cfg.network.lambda, cfg.network.tau, cfg.network.depth);
    const TrainedModel model = train(data, init, topts);

    Json extra = provenance(cfg);
    extra["shuffle"] = "per-epoch seeded permutation, last partial batch kept";
    extra["weight_decay"] = 0.0;
    extra["loss"] = "mse on normalized output";
    io::save_model(models_dir / ("model_region" + std::to_string(region) + ".bin"), model, extra);
    io::write_loss_csv(models_dir / ("loss_region" + std::to_string(region) + ".csv"), model.loss_history);

    std::string listing;
    for (const auto& config : configs) {
      for (std::size_t i = 0; i < config.size(); ++i) listing += (i ? " " : "") + std::to_string(config[i]);
      listing += " " + std::to_string(region_counts.at(config)) + "\n";
    }
    io::write_text(models_dir / ("configurations_region" + std::to_string(region) + ".txt"), listing);

    result.regions.push_back(region);
    result.loss_histories.push_back(model.loss_history);
    result.configurations.push_back(configs.size());
    result.samples.push_back(static_cast<std::size_t>(data.size()));
  }
  return result;
}

EstimationDiagnostics estimate(const ExperimentConfig& cfg, const std::string& method, const fs::path& data_dir,
                               const std::optional<fs::path>& models_dir, const std::optional<fs::path>& regions_path,
                               const fs::path& out, int jobs, bool force) {
  cfg.validate();
  if (method != "cfari" && method != "l2l0" && method != "dn" && method != "fordn") {
    throw std::invalid_argument("unknown method '" + method + "' (expected cfari, l2l0, dn or fordn)");
  }
  const bool needs_models = method == "dn" || method == "fordn";
  if (needs_models && !models_dir) {
    throw ValidationError("method " + method + " needs trained models (--models); run `fordn train` first");
  }
  const Workspace w = load_workspace(cfg, data_dir, force);
  const RegionMap regions = load_regions(regions_path, w.labels, w.signals.dims);
  const DirectionSet dense = tessellate_hemisphere(cfg.basis.dense_level);
  const DirectionSet coarse = tessellate_hemisphere(cfg.basis.coarse_level);

  Json extra = provenance(cfg);
  Json params;
  params["threshold"] = cfg.extraction.threshold;
  params["refine_angle_deg"] = cfg.extraction.refine_angle_deg;
  params["renormalized_after_refinement"] = true;

  EstimationDiagnostics diag;
  FoVolume result;
  if (method == "cfari" || method == "l2l0") {
    const Dictionary dict = dictionary_for(w.scheme, dense, cfg);
    const L1Solver solver(dict.matrix, cfg.solver_options());
    BaselineConfig bcfg;
    bcfg.beta = method == "cfari" ? cfg.solver.beta_cfari : cfg.solver.beta_l2l0;
    bcfg.reweight_rounds = cfg.solver.reweight_rounds;
    bcfg.reweight_eps = cfg.solver.reweight_eps;
    bcfg.extraction = cfg.extraction;
    result = run_baseline(w.signals, regions, solver, dense, parse_baseline_method(method), bcfg, jobs, &diag);
    params["beta"] = bcfg.beta;
    if (method == "l2l0") params["reweight"] = {{"rounds", bcfg.reweight_rounds}, {"eps", bcfg.reweight_eps}};
  } else {
    const ModelStore models = load_models(*models_dir);
    params["lambda"] = cfg.network.lambda;
    params["depth"] = cfg.network.depth;
    if (method == "dn") {
      result = coarse_estimate(w.signals, regions, models, coarse, cfg.extraction, jobs);
      diag.voxels = static_cast<std::size_t>(std::count_if(regions.begin(), regions.end(), [](int r) { return r != 0; }));
    } else {
      const Dictionary dict = dictionary_for(w.scheme, dense, cfg);
      const L1Solver solver(dict.matrix, cfg.solver_options());
      GuidedSolveConfig gcfg;
      gcfg.alpha = cfg.solver.alpha;
      gcfg.beta = cfg.solver.beta_fordn;
      gcfg.extraction = cfg.extraction;
      result = fordn_estimate(w.signals, regions, models, coarse, dense, solver, gcfg, jobs, &diag);
      params["alpha"] = gcfg.alpha;
      params["beta"] = gcfg.beta;
    }
  }
  extra["parameters"] = params;
  extra["diagnostics"] = {{"voxels", diag.voxels},
                          {"unit_weight_fallbacks", diag.unit_weight_fallbacks},
                          {"guidance_inconsistent", diag.guidance_inconsistent},
                          {"solver_not_converged", diag.solver_not_converged}};
  io::write_fo_volume(out, result, extra);
  return diag;
}

void evaluate(const ExperimentConfig& cfg, const fs::path& data_dir, const std::vector<fs::path>& estimates,
              const fs::path& out_dir, bool force) {
  if (estimates.empty()) throw std::invalid_argument("evaluate: no estimate files");
  Json truth_meta, label_meta;
  const FoVolume truth = io::read_fo_volume(data_dir / "truth", &truth_meta);
  check_hash(truth_meta, cfg, data_dir / "truth.json", force);
  Dims ld;
  const auto labels = io::read_label_volume(data_dir / "labels", &ld, &label_meta);
  check_hash(label_meta, cfg, data_dir / "labels.json", force);
  if (!(ld == truth.dims)) throw ValidationError("labels and truth are not aligned");

  std::map<std::string, ErrorSummary> summaries;
  for (const auto& path : estimates) {
    Json meta;
    const FoVolume est = io::read_fo_volume(path, &meta);
    check_hash(meta, cfg, path.string() + ".json", force);
    if (!(est.dims == truth.dims)) throw ValidationError(path.string() + " is not aligned with the truth volume");
    const std::string method = est.provenance.empty() ? path.filename().string() : est.provenance;
    if (summaries.count(method)) throw ValidationError("two estimates share the method name " + method);
    summaries[method] = evaluate_volume(est, truth, labels);
  }

  std::vector<ComparisonRow> comparisons;
  if (summaries.count("fordn")) {
    const auto& ours = summaries.at("fordn");
    for (const auto& [method, summary] : summaries) {
      if (method == "fordn") continue;
      for (Region r : kRegions) {
        const auto a = summary.errors_in(r);
        const auto b = ours.errors_in(r);
        if (a.size() < 2) continue;
        comparisons.push_back({method + "-fordn", r, paired_stats(a, b)});
      }
    }
  }
  emit_report(summaries, comparisons, out_dir, cfg.hash());
}

TuneResult tune_baseline(const ExperimentConfig& cfg, const std::string& method, const fs::path& data_dir,
                         const std::vector<double>& grid, std::size_t max_voxels, int jobs) {
  if (grid.empty()) throw std::invalid_argument("tune_baseline: empty grid");
  const BaselineMethod which = parse_baseline_method(method);
  const Workspace w = load_workspace(cfg, data_dir, true);
  const FoVolume truth = io::read_fo_volume(data_dir / "truth");
  const DirectionSet dense = tessellate_hemisphere(cfg.basis.dense_level);
  const Dictionary dict = dictionary_for(w.scheme, dense, cfg);
  const L1Solver solver(dict.matrix, cfg.solver_options());

  // Evenly strided subset of tissue voxels.
  std::vector<std::size_t> tissue;
  for (std::size_t v = 0; v < w.labels.size(); ++v) {
    if (w.labels[v] != 0) tissue.push_back(v);
  }
  const std::size_t stride = std::max<std::size_t>(1, tissue.size() / std::max<std::size_t>(max_voxels, 1));
  RegionMap subset(w.labels.size(), 0);
  for (std::size_t i = 0; i < tissue.size(); i += stride) subset[tissue[i]] = 1;

  TuneResult result;
  result.grid = grid;
  double best = std::numeric_limits<double>::infinity();
  for (double beta : grid) {
    BaselineConfig bcfg;
    bcfg.beta = beta;
    bcfg.reweight_rounds = cfg.solver.reweight_rounds;
    bcfg.reweight_eps = cfg.solver.reweight_eps;
    bcfg.extraction = cfg.extraction;
    const FoVolume est = run_baseline(w.signals, subset, solver, dense, which, bcfg, jobs);
    // Mean of the per-class means, so that crossing voxels are not outvoted.
    double sums[4] = {0, 0, 0, 0};
    std::size_t counts[4] = {0, 0, 0, 0};
    for (std::size_t v = 0; v < subset.size(); ++v) {
      if (subset[v] == 0) continue;
      sums[w.labels[v]] += fo_error(est.voxels[v], truth.voxels[v]);
      ++counts[w.labels[v]];
    }
    double mean = 0.0;
    int classes = 0;
    for (int c = 1; c < 4; ++c) {
      if (counts[c] == 0) continue;
      mean += sums[c] / static_cast<double>(counts[c]);
      ++classes;
    }
    mean /= std::max(classes, 1);
    result.mean_errors.push_back(mean);
    if (mean < best) {
      best = mean;
      result.best_beta = beta;
    }
  }
  return result;
}

}  // namespace fordn::experiment
