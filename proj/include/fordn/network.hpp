#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fordn/geometry.hpp"
#include "fordn/signal.hpp"

namespace fordn {

/// Shared-weight unrolled thresholding network:
///   f^0 = 0, f^t = h_lambda(W y + S f^(t-1)), t = 1..depth,
///   out = (f^depth + tau) / ||f^depth + tau||_1.
struct UnfoldedNetParams {
  Eigen::MatrixXd W;  // N' x K
  Eigen::MatrixXd S;  // N' x N'
  double lambda = 0.01;
  double tau = 1e-10;
  int depth = 8;

  Eigen::Index inputs() const { return W.cols(); }
  Eigen::Index outputs() const { return W.rows(); }
  void validate() const;
};

/// W = G^T, S = I - G^T G.
UnfoldedNetParams classical_params(const Eigen::MatrixXd& G, double lambda = 0.01, double tau = 1e-10, int depth = 8);
/// W = G^T, S = I - mu G^T G with mu = 1 / lambda_max(G^T G): hard-threshold
/// iterations with step mu on the signal scaled by 1/mu. Unlike the classical
/// values the unrolled map does not blow up, so training can start from it.
UnfoldedNetParams stable_classical_params(const Eigen::MatrixXd& G, double lambda = 0.01, double tau = 1e-10, int depth = 8);

struct ForwardTrace {
  std::vector<Eigen::VectorXd> pre;   // a^t, t = 1..depth
  std::vector<Eigen::VectorXd> post;  // f^t, t = 0..depth
  Eigen::VectorXd output;
  double norm = 0.0;  // ||f^depth + tau||_1
};

ForwardTrace forward(const UnfoldedNetParams& params, const Eigen::VectorXd& y);

struct TrainingSample {
  Eigen::VectorXd input;
  Eigen::VectorXd target;
};

struct NetGradients {
  Eigen::MatrixXd dW;
  Eigen::MatrixXd dS;
};

/// Mean squared error over the N' outputs (Keras convention).
double mse_loss(const Eigen::VectorXd& output, const Eigen::VectorXd& target);

/// Gradient of mse_loss(forward(y), target) with respect to W and S,
/// accumulated over all layers.
NetGradients backward(const UnfoldedNetParams& params, const TrainingSample& sample, const ForwardTrace& trace);

struct AdamOptions {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::MatrixXd mW, vW, mS, vS;
  long step = 0;

  static AdamState zeros_like(const UnfoldedNetParams& params);
};

/// Bias-corrected Adam update of W and S in place.
void adam_step(UnfoldedNetParams& params, AdamState& state, const NetGradients& grads, const AdamOptions& opts = {});

/// Samples stored column-wise.
struct TrainingSet {
  Eigen::MatrixXd inputs;   // K x M
  Eigen::MatrixXd targets;  // N' x M
  int region = 1;
  double snr = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> configurations;  // coarse atom indices

  Eigen::Index size() const { return inputs.cols(); }
  TrainingSample sample(Eigen::Index i) const { return {inputs.col(i), targets.col(i)}; }
};

/// All fraction vectors with m parts, each a multiple of 0.1 and >= 0.1,
/// summing to one. m = 1 gives {1}.
std::vector<std::vector<double>> fraction_combinations(int m);

/// For each configuration of 1-3 coarse atoms and each fraction combination,
/// `samples_per_combo` Rician-noised signals of G_coarse f with target f.
TrainingSet synthesize_training_set(const std::vector<std::vector<std::size_t>>& configurations,
                                    const Dictionary& coarse, const NoiseModel& noise, int samples_per_combo,
                                    std::uint64_t seed, int region = 1);

struct TrainingOptions {
  int epochs = 8;
  int batch_size = 64;
  std::uint64_t seed = 0;
  AdamOptions adam;
};

struct TrainedModel {
  UnfoldedNetParams params;
  std::vector<double> loss_history;  // mean per-sample loss of each epoch
  int region = 1;
  std::size_t training_samples = 0;
  std::size_t configurations = 0;
  std::string initialization = "stable_classical";
};

/// Adam on mini-batches from a seeded per-epoch shuffle; the last partial
/// batch is kept. Deterministic for a given seed.
TrainedModel train(const TrainingSet& data, UnfoldedNetParams init, const TrainingOptions& opts);

using ModelStore = std::map<int, TrainedModel>;

}  // namespace fordn
