#include "fordn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fordn {

void FoExtractionConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("extraction threshold must be in (0, 1)");
  if (!(refine_angle_deg > 0.0 && refine_angle_deg < 90.0)) {
    throw std::invalid_argument("refinement angle must be in (0, 90) degrees");
  }
}

FOSet extract_fos(const Eigen::VectorXd& fractions, const DirectionSet& basis, const FoExtractionConfig& cfg) {
  if (fractions.size() != static_cast<Eigen::Index>(basis.size())) {
    throw std::invalid_argument("extract_fos: fraction vector does not match basis");
  }
  if (basis.empty()) return FOSet();
  std::vector<FiberOrientation> kept;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double f = fractions[static_cast<Eigen::Index>(i)];
    if (f > cfg.threshold) kept.push_back({basis[i], f});
  }
  if (kept.empty()) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < fractions.size(); ++i) {
      if (fractions[i] > fractions[best]) best = i;
    }
    kept.push_back({basis[static_cast<std::size_t>(best)], 1.0});
  }
  return FOSet(std::move(kept)).normalized();
}

FOSet refine_fos(const FOSet& fos, double angle_deg) {
  std::vector<FiberOrientation> kept;
  for (std::size_t j = 0; j < fos.size(); ++j) {
    bool peak = true;
    for (std::size_t other = 0; other < fos.size() && peak; ++other) {
      if (other == j) continue;
      if (fordn::angle_deg(fos[j].direction, fos[other].direction) <= angle_deg &&
          fos[j].fraction < fos[other].fraction) {
        peak = false;
      }
    }
    if (peak) kept.push_back(fos[j]);
  }
  return FOSet(std::move(kept)).normalized();
}

std::vector<std::size_t> map_to_coarse(const FOSet& fos, const DirectionSet& coarse) {
  std::vector<std::size_t> out;
  for (const auto& fo : fos) {
    const std::size_t idx = coarse.nearest(fo.direction);
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  return out;
}

RegionMap single_region(const std::vector<std::uint8_t>& labels) {
  RegionMap regions(labels.size(), 0);
  for (std::size_t v = 0; v < labels.size(); ++v) regions[v] = labels[v] != 0 ? 1 : 0;
  return regions;
}

namespace {

void check_regions(const SignalVolume& signals, const RegionMap& regions) {
  if (regions.size() != signals.dims.count() || static_cast<std::size_t>(signals.data.cols()) != regions.size()) {
    throw std::invalid_argument("region map does not match the signal volume");
  }
}

const TrainedModel& model_for(const ModelStore& models, int region) {
  const auto it = models.find(region);
  if (it == models.end()) throw std::invalid_argument("no trained model for region label " + std::to_string(region));
  return it->second;
}

}  // namespace

FoVolume coarse_estimate(const SignalVolume& signals, const RegionMap& regions, const ModelStore& models,
                         const DirectionSet& coarse, const FoExtractionConfig& cfg, int jobs) {
  cfg.validate();
  check_regions(signals, regions);
  for (int r : regions) {
    if (r == 0) continue;
    const auto& m = model_for(models, r);
    if (m.params.outputs() != static_cast<Eigen::Index>(coarse.size()) || m.params.inputs() != signals.channels()) {
      throw std::invalid_argument("model for region " + std::to_string(r) + " does not match the coarse basis or signal");
    }
  }
  FoVolume out;
  out.dims = signals.dims;
  out.provenance = "dn";
  out.voxels.resize(regions.size());
  parallel_for(regions.size(), jobs, [&](std::size_t v) {
    if (regions[v] == 0) return;
    const auto& model = models.at(regions[v]);
    const auto trace = forward(model.params, signals.data.col(static_cast<Eigen::Index>(v)));
    out.voxels[v] = refine_fos(extract_fos(trace.output, coarse, cfg), cfg.refine_angle_deg);
  });
  return out;
}

FoVolume guided_estimate(const SignalVolume& signals, const RegionMap& regions, const FoVolume& guides,
                         const DirectionSet& coarse, const DirectionSet& dense, const L1Solver& dense_solver,
                         const GuidedSolveConfig& cfg, int jobs, EstimationDiagnostics* diagnostics) {
  cfg.extraction.validate();
  check_regions(signals, regions);
  if (guides.voxels.size() != regions.size()) throw std::invalid_argument("guided_estimate: guide volume size mismatch");
  if (dense_solver.dictionary().cols() != static_cast<Eigen::Index>(dense.size())) {
    throw std::invalid_argument("guided_estimate: dense dictionary does not match the dense basis");
  }

  // Diagnostic radius: coarse angular resolution plus the refinement angle.
  const double consistency_deg = coarse.max_nearest_neighbor_angle_deg() + cfg.extraction.refine_angle_deg;

  FoVolume out;
  out.dims = signals.dims;
  out.provenance = "fordn";
  out.voxels.resize(regions.size());
  std::atomic<std::size_t> voxels{0}, fallbacks{0}, inconsistent{0}, not_converged{0};

  parallel_for(regions.size(), jobs, [&](std::size_t v) {
    if (regions[v] == 0) return;
    voxels++;
    const Eigen::VectorXd y = signals.data.col(static_cast<Eigen::Index>(v));
    std::vector<Direction> guide_dirs;
    for (const auto& fo : guides.voxels[v]) guide_dirs.push_back(fo.direction);

    GuidanceWeights weights;
    if (guide_dirs.empty()) {
      weights = unit_guidance_weights(dense.size());
      fallbacks++;
    } else {
      weights = compute_guidance_weights(dense, guide_dirs, cfg.alpha);
    }
    const SolverReport rep = dense_solver.solve(y, cfg.beta, weights.weights);
    if (!rep.converged) not_converged++;
    const double total = rep.solution.sum();
    const Eigen::VectorXd f = total > 0.0 ? Eigen::VectorXd(rep.solution / total) : rep.solution;
    out.voxels[v] = refine_fos(extract_fos(f, dense, cfg.extraction), cfg.extraction.refine_angle_deg);

    if (diagnostics != nullptr) {
      std::vector<Direction> unguided;
      bool unguided_ready = false;
      for (const auto& fo : out.voxels[v]) {
        bool near = false;
        for (const auto& u : guide_dirs) near = near || angle_deg(fo.direction, u) <= consistency_deg;
        if (near) continue;
        if (!unguided_ready) {
          const SolverReport plain = dense_solver.solve(y, cfg.beta);
          for (Eigen::Index i = 0; i < plain.solution.size(); ++i) {
            if (plain.solution[i] > 0.0) unguided.push_back(dense[static_cast<std::size_t>(i)]);
          }
          unguided_ready = true;
        }
        for (const auto& u : unguided) near = near || angle_deg(fo.direction, u) <= consistency_deg;
        if (!near) {
          inconsistent++;
          break;
        }
      }
    }
  });

  if (diagnostics != nullptr) {
    diagnostics->voxels = voxels;
    diagnostics->unit_weight_fallbacks = fallbacks;
    diagnostics->guidance_inconsistent = inconsistent;
    diagnostics->solver_not_converged = not_converged;
  }
  return out;
}

FoVolume fordn_estimate(const SignalVolume& signals, const RegionMap& regions, const ModelStore& models,
                        const DirectionSet& coarse, const DirectionSet& dense, const L1Solver& dense_solver,
                        const GuidedSolveConfig& cfg, int jobs, EstimationDiagnostics* diagnostics) {
  const FoVolume guides = coarse_estimate(signals, regions, models, coarse, cfg.extraction, jobs);
  return guided_estimate(signals, regions, guides, coarse, dense, dense_solver, cfg, jobs, diagnostics);
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "cfari") return BaselineMethod::Cfari;
  if (name == "l2l0") return BaselineMethod::L2l0;
  throw std::invalid_argument("unknown baseline method '" + name + "' (expected cfari or l2l0)");
}

FoVolume run_baseline(const SignalVolume& signals, const RegionMap& regions, const L1Solver& solver,
                      const DirectionSet& basis, BaselineMethod method, const BaselineConfig& cfg, int jobs,
                      EstimationDiagnostics* diagnostics) {
  cfg.extraction.validate();
  check_regions(signals, regions);
  if (solver.dictionary().cols() != static_cast<Eigen::Index>(basis.size())) {
    throw std::invalid_argument("run_baseline: dictionary does not match basis");
  }
  FoVolume out;
  out.dims = signals.dims;
  out.provenance = method == BaselineMethod::Cfari ? "cfari" : "l2l0";
  out.voxels.resize(regions.size());
  std::atomic<std::size_t> voxels{0}, not_converged{0};
  parallel_for(regions.size(), jobs, [&](std::size_t v) {
    if (regions[v] == 0) return;
    voxels++;
    const Eigen::VectorXd y = signals.data.col(static_cast<Eigen::Index>(v));
    const SolverReport rep = method == BaselineMethod::Cfari
                                 ? solver.solve(y, cfg.beta)
                                 : solver.solve_reweighted(y, cfg.beta, cfg.reweight_rounds, cfg.reweight_eps);
    if (!rep.converged) not_converged++;
    const double total = rep.solution.sum();
    const Eigen::VectorXd f = total > 0.0 ? Eigen::VectorXd(rep.solution / total) : rep.solution;
    out.voxels[v] = refine_fos(extract_fos(f, basis, cfg.extraction), cfg.extraction.refine_angle_deg);
  });
  if (diagnostics != nullptr) {
    diagnostics->voxels = voxels;
    diagnostics->solver_not_converged = not_converged;
  }
  return out;
}

std::map<int, ConfigurationCounts> collect_configurations(const FoVolume& estimates, const RegionMap& regions,
                                                          const DirectionSet& coarse) {
  if (estimates.voxels.size() != regions.size()) throw std::invalid_argument("collect_configurations: size mismatch");
  std::map<int, ConfigurationCounts> out;
  for (std::size_t v = 0; v < regions.size(); ++v) {
    if (regions[v] == 0 || estimates.voxels[v].empty()) continue;
    auto atoms = map_to_coarse(estimates.voxels[v], coarse);
    if (atoms.size() > 3) atoms.resize(3);
    std::sort(atoms.begin(), atoms.end());
    out[regions[v]][atoms]++;
  }
  return out;
}

std::vector<std::vector<std::size_t>> frequent_configurations(const ConfigurationCounts& counts, std::size_t min_count) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& [config, count] : counts) {
    if (count >= min_count) out.push_back(config);
  }
  return out;
}

}  // namespace fordn
