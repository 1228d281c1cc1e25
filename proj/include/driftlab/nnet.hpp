#pragma once

#include <cstdint>
#include <vector>

namespace driftlab {

enum class OutputHead { kLinear, kSoftmax };

/// Architecture of a fully connected feedforward net. layer_sizes runs from
/// the input layer to the output layer; dropout_rates has one entry per
/// hidden layer and is applied after the ReLU of that layer.
struct NetworkSpec {
  std::vector<std::size_t> layer_sizes;
  OutputHead head = OutputHead::kLinear;
  std::vector<double> dropout_rates;

  std::size_t hidden_count() const {
    return layer_sizes.size() < 2 ? 0 : layer_sizes.size() - 2;
  }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }

  // Throws std::invalid_argument on empty layers, rate/layer count mismatch,
  // rates outside [0,1), or a hidden-layer count outside the supported 3..5.
  void validate() const;
};

/// weights[l] is the row-major (out x in) matrix mapping layer l to l+1.
/// Plain aggregate so tests can assemble tiny nets by hand.
struct Network {
  NetworkSpec spec;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  std::uint64_t init_seed = 0;

  std::size_t parameter_count() const;
};

/// Training uses Adam (beta1 0.9, beta2 0.999, eps 1e-8) with the loss
/// implied by the head: mean squared error for linear, categorical
/// cross-entropy for softmax. Dropout stays active while training.
struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

/// Outputs of the stochastic forward passes for one instance; passes[i] has
/// the net's output dimension.
struct PredictiveSample {
  std::vector<std::vector<double>> passes;

  std::size_t size() const { return passes.size(); }
  std::size_t dim() const { return passes.empty() ? 0 : passes.front().size(); }
};

/// Fan-in-scaled uniform weights, zero biases, deterministic per seed.
Network init_network(const NetworkSpec& spec, std::uint64_t seed);

/// One forward pass. With dropout_active, masks are drawn from mask_seed and
/// kept units are scaled by 1/(1-rate) (inverted dropout), so the inactive
/// pass needs no rescaling.
std::vector<double> forward(const Network& net, const std::vector<double>& x,
                            bool dropout_active, std::uint64_t mask_seed);

/// From the given parameters, runs cfg.epochs of minibatch Adam. Targets are
/// real values for the linear head (output dimension must be 1) and class
/// indices for the softmax head.
Network train(Network net, const std::vector<std::vector<double>>& inputs,
              const std::vector<double>& targets, const TrainConfig& cfg);

/// Max over parameters of |analytic - central difference| /
/// (|analytic| + |central difference| + 1e-12), step 1e-5, dropout inactive.
/// Intended for nets of at most ~100 parameters.
double gradient_check(const Network& net, const std::vector<double>& x, double target);

/// T dropout-active passes; pass i uses the i-th sub-seed derived from seed.
PredictiveSample mc_predict(const Network& net, const std::vector<double>& x,
                            std::size_t passes, std::uint64_t seed);

/// Mean per-sample loss with dropout inactive, same loss convention as train.
double mean_loss(const Network& net, const std::vector<std::vector<double>>& inputs,
                 const std::vector<double>& targets);

}  // namespace driftlab
