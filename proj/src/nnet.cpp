#include "driftlab/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kLogFloor = 1e-12;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double v) { return std::isfinite(v); }

// Scratch space for one forward/backward pass; reused across samples so the
// training and MC loops stay allocation-free.
struct Scratch {
  // act[l] is the input of layer l (act[0] = x), act[L] the net output.
  std::vector<std::vector<double>> act;
  // pre[l] is the pre-activation of layer l's output.
  std::vector<std::vector<double>> pre;
  // keep[l][u] is 0 for a dropped unit of hidden layer l, 1/(1-r) otherwise.
  std::vector<std::vector<double>> keep;
  std::vector<std::vector<double>> delta;

  void resize(const NetworkSpec& spec) {
    const std::size_t layers = spec.layer_sizes.size() - 1;
    act.resize(layers + 1);
    pre.resize(layers);
    keep.resize(layers);
    delta.resize(layers);
    for (std::size_t l = 0; l <= layers; ++l) act[l].resize(spec.layer_sizes[l]);
    for (std::size_t l = 0; l < layers; ++l) {
      pre[l].resize(spec.layer_sizes[l + 1]);
      keep[l].resize(spec.layer_sizes[l + 1]);
      delta[l].resize(spec.layer_sizes[l + 1]);
    }
  }
};

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// Forward pass into scratch. When rng is null dropout is inactive and every
// keep factor is 1.
void forward_pass(const Network& net, const std::vector<double>& x, Rng* rng,
                  Scratch& s) {
  const std::size_t layers = net.weights.size();
  s.act[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = net.spec.layer_sizes[l];
    const std::size_t out = net.spec.layer_sizes[l + 1];
    const double* w = net.weights[l].data();
    const double* a = s.act[l].data();
    for (std::size_t o = 0; o < out; ++o) {
      double z = net.biases[l][o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * a[i];
      s.pre[l][o] = z;
    }
    if (l + 1 < layers) {  // hidden layer: ReLU then inverted dropout
      const double rate = net.spec.dropout_rates[l];
      const double scale = rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;
      for (std::size_t o = 0; o < out; ++o) {
        double k = 1.0;
        if (rng != nullptr && rate > 0.0) k = rng->bernoulli(rate) ? 0.0 : scale;
        s.keep[l][o] = k;
        s.act[l + 1][o] = k * std::max(0.0, s.pre[l][o]);
      }
    } else {
      s.act[l + 1] = s.pre[l];
      if (net.spec.head == OutputHead::kSoftmax) softmax_inplace(s.act[l + 1]);
    }
  }
}

double sample_loss(const Network& net, const std::vector<double>& out, double target) {
  if (net.spec.head == OutputHead::kSoftmax) {
    const auto cls = static_cast<std::size_t>(target);
    return -std::log(std::max(out[cls], kLogFloor));
  }
  const double d = out[0] - target;
  return d * d;
}

// Output-layer error dL/dz for the head's loss.
void output_delta(const Network& net, const Scratch& s, double target,
                  std::vector<double>& delta) {
  const std::size_t last = net.weights.size() - 1;
  const auto& out = s.act[last + 1];
  if (net.spec.head == OutputHead::kSoftmax) {
    const auto cls = static_cast<std::size_t>(target);
    for (std::size_t k = 0; k < out.size(); ++k)
      delta[k] = out[k] - (k == cls ? 1.0 : 0.0);
  } else {
    delta[0] = 2.0 * (out[0] - target);
  }
}

// Accumulates one sample's parameter gradients into gw/gb (same shapes as
// the weights). Uses the activations and keep factors left in the scratch by
// the preceding forward_pass.
void backward_pass(const Network& net, Scratch& s, double target,
                   std::vector<std::vector<double>>& gw,
                   std::vector<std::vector<double>>& gb) {
  const std::size_t layers = net.weights.size();
  output_delta(net, s, target, s.delta[layers - 1]);
  for (std::size_t li = layers; li-- > 0;) {
    const std::size_t in = net.spec.layer_sizes[li];
    const std::size_t out = net.spec.layer_sizes[li + 1];
    const auto& delta = s.delta[li];
    const auto& a = s.act[li];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[li][o] += d;
      double* grow = gw[li].data() + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
    }
    if (li == 0) break;
    auto& prev = s.delta[li - 1];
    const double* w = net.weights[li].data();
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += w[o * in + i] * delta[o];
      // d act / d pre of the hidden layer feeding this one: ReLU gate times
      // the dropout keep factor.
      prev[i] = s.pre[li - 1][i] > 0.0 ? acc * s.keep[li - 1][i] : 0.0;
    }
  }
}

void check_training_data(const Network& net,
                         const std::vector<std::vector<double>>& inputs,
                         const std::vector<double>& targets) {
  require(!inputs.empty(), "train: empty input set");
  require(inputs.size() == targets.size(), "train: inputs/targets size mismatch");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require(inputs[i].size() == net.spec.input_dim(), "train: input dimension mismatch");
    for (double v : inputs[i]) require(finite(v), "train: non-finite input value");
    require(finite(targets[i]), "train: non-finite target");
    if (net.spec.head == OutputHead::kSoftmax) {
      require(targets[i] >= 0.0 && std::floor(targets[i]) == targets[i] &&
                  targets[i] < static_cast<double>(net.spec.output_dim()),
              "train: class target outside [0, n_classes)");
    }
  }
  if (net.spec.head == OutputHead::kLinear)
    require(net.spec.output_dim() == 1, "train: linear head expects one output");
}

}  // namespace

void NetworkSpec::validate() const {
  require(layer_sizes.size() >= 2, "spec: need input and output layers");
  for (std::size_t n : layer_sizes) require(n >= 1, "spec: empty layer");
  require(hidden_count() >= 3 && hidden_count() <= 5,
          "spec: hidden layer count must be 3..5");
  require(dropout_rates.size() == hidden_count(),
          "spec: one dropout rate per hidden layer");
  for (double r : dropout_rates)
    require(r >= 0.0 && r < 1.0, "spec: dropout rate outside [0,1)");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l)
    n += spec.layer_sizes[l] * spec.layer_sizes[l + 1] + spec.layer_sizes[l + 1];
  return n;
}

Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  net.init_seed = seed;
  Rng rng(seed);
  const std::size_t layers = spec.layer_sizes.size() - 1;
  net.weights.resize(layers);
  net.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t out = spec.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    net.weights[l].resize(in * out);
    for (double& w : net.weights[l]) w = rng.uniform(-limit, limit);
    net.biases[l].assign(out, 0.0);
  }
  return net;
}

std::vector<double> forward(const Network& net, const std::vector<double>& x,
                            bool dropout_active, std::uint64_t mask_seed) {
  require(!net.weights.empty(), "forward: uninitialized network");
  require(x.size() == net.spec.input_dim(), "forward: input dimension mismatch");
  for (double v : x) require(finite(v), "forward: non-finite input");
  Scratch s;
  s.resize(net.spec);
  if (dropout_active) {
    Rng rng(mask_seed);
    forward_pass(net, x, &rng, s);
  } else {
    forward_pass(net, x, nullptr, s);
  }
  return s.act.back();
}

Network train(Network net, const std::vector<std::vector<double>>& inputs,
              const std::vector<double>& targets, const TrainConfig& cfg) {
  require(cfg.epochs >= 1, "train: epochs must be >= 1");
  require(cfg.batch_size >= 1, "train: batch_size must be >= 1");
  require(cfg.learning_rate > 0.0, "train: learning_rate must be positive");
  require(!net.weights.empty(), "train: uninitialized network");
  check_training_data(net, inputs, targets);
  require(inputs.size() >= cfg.batch_size, "train: fewer samples than batch_size");

  const std::size_t layers = net.weights.size();
  const std::size_t n = inputs.size();

  auto zeros_like = [&](bool weight_shaped) {
    std::vector<std::vector<double>> g(layers);
    for (std::size_t l = 0; l < layers; ++l)
      g[l].assign(weight_shaped ? net.weights[l].size() : net.biases[l].size(), 0.0);
    return g;
  };
  auto gw = zeros_like(true), gb = zeros_like(false);
  auto mw = zeros_like(true), mb = zeros_like(false);
  auto vw = zeros_like(true), vb = zeros_like(false);

  Scratch s;
  s.resize(net.spec);
  Rng rng(cfg.seed);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < layers; ++l) {
        std::fill(gw[l].begin(), gw[l].end(), 0.0);
        std::fill(gb[l].begin(), gb[l].end(), 0.0);
      }
      for (std::size_t bi = start; bi < end; ++bi) {
        const std::size_t idx = order[bi];
        forward_pass(net, inputs[idx], &rng, s);
        backward_pass(net, s, targets[idx], gw, gb);
      }
      ++step;
      const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      auto adam = [&](std::vector<double>& p, std::vector<double>& g,
                      std::vector<double>& m, std::vector<double>& v) {
        for (std::size_t k = 0; k < p.size(); ++k) {
          const double grad = g[k] * inv;
          m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * grad;
          v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * grad * grad;
          p[k] -= cfg.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + kAdamEps);
        }
      };
      for (std::size_t l = 0; l < layers; ++l) {
        adam(net.weights[l], gw[l], mw[l], vw[l]);
        adam(net.biases[l], gb[l], mb[l], vb[l]);
      }
    }
  }
  return net;
}

double gradient_check(const Network& net, const std::vector<double>& x, double target) {
  require(!net.weights.empty(), "gradient_check: uninitialized network");
  require(x.size() == net.spec.input_dim(), "gradient_check: input dimension mismatch");
  if (net.spec.head == OutputHead::kSoftmax) {
    require(target >= 0.0 && std::floor(target) == target &&
                target < static_cast<double>(net.spec.output_dim()),
            "gradient_check: class target outside [0, n_classes)");
  } else {
    require(net.spec.output_dim() == 1, "gradient_check: linear head expects one output");
  }

  const std::size_t layers = net.weights.size();
  Scratch s;
  s.resize(net.spec);
  forward_pass(net, x, nullptr, s);

  std::vector<std::vector<double>> gw(layers), gb(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    gw[l].assign(net.weights[l].size(), 0.0);
    gb[l].assign(net.biases[l].size(), 0.0);
  }
  backward_pass(net, s, target, gw, gb);

  Network probe = net;
  Scratch ps;
  ps.resize(net.spec);
  const double h = 1e-5;
  auto loss_at = [&]() {
    forward_pass(probe, x, nullptr, ps);
    return sample_loss(probe, ps.act.back(), target);
  };

  double worst = 0.0;
  auto check_param = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double up = loss_at();
    p = saved - h;
    const double down = loss_at();
    p = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::fabs(analytic - fd) /
                       (std::fabs(analytic) + std::fabs(fd) + 1e-12);
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t k = 0; k < probe.weights[l].size(); ++k)
      check_param(probe.weights[l][k], gw[l][k]);
    for (std::size_t k = 0; k < probe.biases[l].size(); ++k)
      check_param(probe.biases[l][k], gb[l][k]);
  }
  return worst;
}

PredictiveSample mc_predict(const Network& net, const std::vector<double>& x,
                            std::size_t passes, std::uint64_t seed) {
  require(passes >= 1, "mc_predict: need at least one pass");
  require(!net.weights.empty(), "mc_predict: uninitialized network");
  require(x.size() == net.spec.input_dim(), "mc_predict: input dimension mismatch");
  for (double v : x) require(finite(v), "mc_predict: non-finite input");

  PredictiveSample sample;
  sample.passes.reserve(passes);
  Scratch s;
  s.resize(net.spec);
  Rng seeds(seed);
  for (std::size_t i = 0; i < passes; ++i) {
    Rng mask(seeds.next_u64());
    forward_pass(net, x, &mask, s);
    sample.passes.push_back(s.act.back());
  }
  return sample;
}

double mean_loss(const Network& net, const std::vector<std::vector<double>>& inputs,
                 const std::vector<double>& targets) {
  require(!inputs.empty(), "mean_loss: empty input set");
  require(inputs.size() == targets.size(), "mean_loss: inputs/targets size mismatch");
  Scratch s;
  s.resize(net.spec);
  double total = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    forward_pass(net, inputs[i], nullptr, s);
    total += sample_loss(net, s.act.back(), targets[i]);
  }
  return total / static_cast<double>(inputs.size());
}

}  // namespace driftlab
