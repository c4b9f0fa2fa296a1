#include "fordn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fordn/random.hpp"
#include "fordn/solvers.hpp"

namespace fordn {

void UnfoldedNetParams::validate() const {
  if (W.size() == 0 || S.rows() != W.rows() || S.cols() != W.rows()) {
    throw std::invalid_argument("network: W must be N' x K and S must be N' x N'");
  }
  if (!W.allFinite() || !S.allFinite()) throw std::invalid_argument("network: non-finite weights");
  if (!(lambda >= 0.0) || !(tau > 0.0) || depth < 1) {
    throw std::invalid_argument("network: requires lambda >= 0, tau > 0, depth >= 1");
  }
}

UnfoldedNetParams classical_params(const Eigen::MatrixXd& G, double lambda, double tau, int depth) {
  UnfoldedNetParams p;
  p.W = G.transpose();
  p.S = Eigen::MatrixXd::Identity(G.cols(), G.cols()) - G.transpose() * G;
  p.lambda = lambda;
  p.tau = tau;
  p.depth = depth;
  p.validate();
  return p;
}

UnfoldedNetParams stable_classical_params(const Eigen::MatrixXd& G, double lambda, double tau, int depth) {
  const double mu = 1.0 / largest_gram_eigenvalue(G);
  UnfoldedNetParams p;
  p.W = G.transpose();
  p.S = Eigen::MatrixXd::Identity(G.cols(), G.cols()) - mu * (G.transpose() * G);
  p.lambda = lambda;
  p.tau = tau;
  p.depth = depth;
  p.validate();
  return p;
}

ForwardTrace forward(const UnfoldedNetParams& params, const Eigen::VectorXd& y) {
  if (y.size() != params.inputs()) throw std::invalid_argument("forward: input length does not match W");
  ForwardTrace trace;
  const Eigen::VectorXd wy = params.W * y;
  trace.post.push_back(Eigen::VectorXd::Zero(params.outputs()));
  for (int t = 0; t < params.depth; ++t) {
    Eigen::VectorXd a = wy + params.S * trace.post.back();
    trace.post.push_back(hard_threshold(a, params.lambda));
    trace.pre.push_back(std::move(a));
  }
  const Eigen::VectorXd shifted = trace.post.back().array() + params.tau;
  trace.norm = shifted.sum();
  trace.output = shifted / trace.norm;
  return trace;
}

double mse_loss(const Eigen::VectorXd& output, const Eigen::VectorXd& target) {
  return (output - target).squaredNorm() / static_cast<double>(output.size());
}

NetGradients backward(const UnfoldedNetParams& params, const TrainingSample& sample, const ForwardTrace& trace) {
  const auto n = params.outputs();
  if (trace.pre.size() != static_cast<std::size_t>(params.depth) ||
      trace.post.size() != static_cast<std::size_t>(params.depth) + 1 || trace.output.size() != n ||
      sample.target.size() != n || sample.input.size() != params.inputs()) {
    throw std::invalid_argument("backward: activations do not match parameters or sample");
  }
  NetGradients g{Eigen::MatrixXd::Zero(n, params.inputs()), Eigen::MatrixXd::Zero(n, n)};

  const Eigen::VectorXd d_out = 2.0 * (trace.output - sample.target) / static_cast<double>(n);
  // out = s / sum(s): the Jacobian is (I - out 1^T) / sum(s).
  Eigen::VectorXd d_post = (d_out.array() - trace.output.dot(d_out)) / trace.norm;
  Eigen::VectorXd d_pre_sum = Eigen::VectorXd::Zero(n);
  for (int t = params.depth; t >= 1; --t) {
    const Eigen::VectorXd& a = trace.pre[static_cast<std::size_t>(t - 1)];
    const Eigen::VectorXd d_pre = (a.array() >= params.lambda).select(d_post, 0.0);
    d_pre_sum += d_pre;
    g.dS.noalias() += d_pre * trace.post[static_cast<std::size_t>(t - 1)].transpose();
    d_post = params.S.transpose() * d_pre;
  }
  g.dW.noalias() = d_pre_sum * sample.input.transpose();
  return g;
}

AdamState AdamState::zeros_like(const UnfoldedNetParams& params) {
  AdamState s;
  s.mW = Eigen::MatrixXd::Zero(params.W.rows(), params.W.cols());
  s.vW = s.mW;
  s.mS = Eigen::MatrixXd::Zero(params.S.rows(), params.S.cols());
  s.vS = s.mS;
  return s;
}

void adam_step(UnfoldedNetParams& params, AdamState& state, const NetGradients& grads, const AdamOptions& opts) {
  state.step += 1;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  auto update = [&](Eigen::MatrixXd& x, Eigen::MatrixXd& m, Eigen::MatrixXd& v, const Eigen::MatrixXd& g) {
    m = opts.beta1 * m + (1.0 - opts.beta1) * g;
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.cwiseProduct(g);
    x.array() -= opts.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opts.epsilon);
  };
  update(params.W, state.mW, state.vW, grads.dW);
  update(params.S, state.mS, state.vS, grads.dS);
}

std::vector<std::vector<double>> fraction_combinations(int m) {
  if (m < 1 || m > 3) throw std::invalid_argument("fraction_combinations: 1-3 parts supported");
  std::vector<std::vector<double>> out;
  if (m == 1) {
    out.push_back({1.0});
  } else if (m == 2) {
    for (int a = 1; a <= 9; ++a) out.push_back({a / 10.0, (10 - a) / 10.0});
  } else {
    for (int a = 1; a <= 8; ++a) {
      for (int b = 1; a + b <= 9; ++b) out.push_back({a / 10.0, b / 10.0, (10 - a - b) / 10.0});
    }
  }
  return out;
}

TrainingSet synthesize_training_set(const std::vector<std::vector<std::size_t>>& configurations,
                                    const Dictionary& coarse, const NoiseModel& noise, int samples_per_combo,
                                    std::uint64_t seed, int region) {
  if (configurations.empty()) throw std::invalid_argument("synthesize_training_set: no configurations");
  if (samples_per_combo < 1) throw std::invalid_argument("synthesize_training_set: samples_per_combo must be >= 1");
  Eigen::Index total = 0;
  for (const auto& config : configurations) {
    if (config.empty() || config.size() > 3) {
      throw std::invalid_argument("synthesize_training_set: configurations need 1-3 directions");
    }
    for (auto idx : config) {
      if (idx >= static_cast<std::size_t>(coarse.cols())) throw std::invalid_argument("synthesize_training_set: atom index out of range");
    }
    total += static_cast<Eigen::Index>(fraction_combinations(static_cast<int>(config.size())).size()) * samples_per_combo;
  }

  TrainingSet set;
  set.region = region;
  set.snr = noise.snr;
  set.seed = seed;
  set.configurations = configurations;
  set.inputs.resize(coarse.rows(), total);
  set.targets = Eigen::MatrixXd::Zero(coarse.cols(), total);

  Eigen::Index col = 0;
  for (std::size_t c = 0; c < configurations.size(); ++c) {
    const auto& config = configurations[c];
    const auto combos = fraction_combinations(static_cast<int>(config.size()));
    for (std::size_t j = 0; j < combos.size(); ++j) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(coarse.cols());
      for (std::size_t p = 0; p < config.size(); ++p) f[static_cast<Eigen::Index>(config[p])] += combos[j][p];
      const Eigen::VectorXd clean = coarse.matrix * f;
      std::mt19937_64 rng(derive_seed(seed, {c, j}));
      for (int s = 0; s < samples_per_combo; ++s, ++col) {
        set.inputs.col(col) = add_rician_noise(clean, noise, rng);
        set.targets.col(col) = f;
      }
    }
  }
  return set;
}

namespace {

struct BatchResult {
  NetGradients grads;
  double loss_sum = 0.0;
};

// Mini-batch forward/backward in matrix form; gradients are of the batch-mean loss.
BatchResult batch_gradients(const UnfoldedNetParams& p, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& T) {
  const Eigen::Index n = p.outputs();
  const Eigen::Index b = Y.cols();
  const Eigen::MatrixXd WY = p.W * Y;
  std::vector<Eigen::MatrixXd> post;
  std::vector<Eigen::MatrixXd> pre;
  post.reserve(static_cast<std::size_t>(p.depth) + 1);
  pre.reserve(static_cast<std::size_t>(p.depth));
  post.push_back(Eigen::MatrixXd::Zero(n, b));
  for (int t = 0; t < p.depth; ++t) {
    Eigen::MatrixXd a = WY;
    if (t > 0) a.noalias() += p.S * post.back();
    post.push_back((a.array() >= p.lambda).select(a, 0.0));
    pre.push_back(std::move(a));
  }
  const Eigen::MatrixXd shifted = post.back().array() + p.tau;
  const Eigen::RowVectorXd norms = shifted.colwise().sum();
  const Eigen::MatrixXd out = shifted.array().rowwise() / norms.array();
  const Eigen::MatrixXd diff = out - T;

  BatchResult r;
  r.loss_sum = diff.squaredNorm() / static_cast<double>(n);
  const Eigen::MatrixXd d_out = 2.0 * diff / (static_cast<double>(n) * static_cast<double>(b));
  const Eigen::RowVectorXd proj = out.cwiseProduct(d_out).colwise().sum();
  Eigen::MatrixXd d_post = (d_out.rowwise() - proj).array().rowwise() / norms.array();

  r.grads.dS = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd d_pre_sum = Eigen::MatrixXd::Zero(n, b);
  for (int t = p.depth; t >= 1; --t) {
    const auto& a = pre[static_cast<std::size_t>(t - 1)];
    const Eigen::MatrixXd d_pre = (a.array() >= p.lambda).select(d_post, 0.0);
    d_pre_sum += d_pre;
    if (t > 1) {
      r.grads.dS.noalias() += d_pre * post[static_cast<std::size_t>(t - 1)].transpose();
      d_post.noalias() = p.S.transpose() * d_pre;
    }
  }
  r.grads.dW.noalias() = d_pre_sum * Y.transpose();
  return r;
}

}  // namespace

TrainedModel train(const TrainingSet& data, UnfoldedNetParams init, const TrainingOptions& opts) {
  if (data.size() == 0) throw std::invalid_argument("train: empty training set");
  if (opts.epochs < 1 || opts.batch_size < 1) throw std::invalid_argument("train: epochs and batch size must be >= 1");
  init.validate();
  if (data.inputs.rows() != init.inputs() || data.targets.rows() != init.outputs()) {
    throw std::invalid_argument("train: training set dimensions do not match the network");
  }

  TrainedModel model;
  model.params = std::move(init);
  model.region = data.region;
  model.training_samples = static_cast<std::size_t>(data.size());
  model.configurations = data.configurations.size();
  AdamState state = AdamState::zeros_like(model.params);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXd Y(data.inputs.rows(), opts.batch_size);
  Eigen::MatrixXd T(data.targets.rows(), opts.batch_size);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(opts.seed, {static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t count = std::min(order.size() - start, static_cast<std::size_t>(opts.batch_size));
      Y.resize(Eigen::NoChange, static_cast<Eigen::Index>(count));
      T.resize(Eigen::NoChange, static_cast<Eigen::Index>(count));
      for (std::size_t c = 0; c < count; ++c) {
        Y.col(static_cast<Eigen::Index>(c)) = data.inputs.col(order[start + c]);
        T.col(static_cast<Eigen::Index>(c)) = data.targets.col(order[start + c]);
      }
      const BatchResult r = batch_gradients(model.params, Y, T);
      epoch_loss += r.loss_sum;
      adam_step(model.params, state, r.grads, opts.adam);
    }
    model.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return model;
}

}  // namespace fordn
