#include "driftlab/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::vector<double> predictive_mean(const PredictiveSample& sample) {
  require(sample.size() >= 1, "predictive_mean: empty sample");
  std::vector<double> mean(sample.dim(), 0.0);
  for (const auto& pass : sample.passes) {
    require(pass.size() == mean.size(), "predictive_mean: ragged sample");
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += pass[k];
  }
  const double inv = 1.0 / static_cast<double>(sample.size());
  for (double& v : mean) v *= inv;
  return mean;
}

double entropy_bits(const std::vector<double>& distribution) {
  require(!distribution.empty(), "entropy: empty distribution");
  double sum = 0.0;
  for (double p : distribution) {
    require(std::isfinite(p) && p >= 0.0, "entropy: negative or non-finite component");
    sum += p;
  }
  require(std::fabs(sum - 1.0) <= 1e-6, "entropy: distribution does not sum to 1");
  double h = 0.0;
  for (double p : distribution)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(0.0, h);
}

double predictive_variance(const PredictiveSample& sample) {
  require(sample.size() >= 1, "variance: empty sample");
  require(sample.dim() == 1, "variance: expects scalar passes");
  // Shifted two-pass form. Anchoring on the first pass keeps identical
  // passes at exactly zero variance (every difference is exactly 0.0), which
  // the rate-0 dropout contract relies on.
  const double anchor = sample.passes.front()[0];
  const double n = static_cast<double>(sample.size());
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& pass : sample.passes) {
    const double d = pass[0] - anchor;
    sum += d;
    sum_sq += d * d;
  }
  return std::max(0.0, (sum_sq - sum * sum / n) / n);
}

UncertaintyScore score(const PredictiveSample& sample, Task task) {
  require(sample.size() >= 1, "score: empty sample");
  UncertaintyScore out;
  if (task == Task::kRegression) {
    require(sample.dim() == 1, "score: regression needs one-dimensional passes");
    out.kind = UncertaintyKind::kVariance;
    out.prediction = predictive_mean(sample);
    out.value = predictive_variance(sample);
    return out;
  }
  require(sample.dim() >= 2, "score: classification needs at least two classes");
  out.kind = UncertaintyKind::kEntropyBits;
  out.prediction = predictive_mean(sample);
  // entropy_bits rejects the mean when the passes were not distributions,
  // which catches a linear-head sample routed to the classification task.
  out.value = entropy_bits(out.prediction);
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.prediction.size(); ++k)
    if (out.prediction[k] > out.prediction[best]) best = k;
  out.predicted_class = best;
  return out;
}

}  // namespace driftlab
