#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "driftlab/nnet.hpp"

namespace driftlab {

enum class Task { kRegression, kClassification };

enum class UncertaintyKind { kEntropyBits, kVariance };

/// Scalar uncertainty plus the point prediction it was computed from.
/// prediction is the mean over passes: the averaged class distribution for
/// classification, a single element for regression.
struct UncertaintyScore {
  UncertaintyKind kind = UncertaintyKind::kVariance;
  double value = 0.0;
  std::vector<double> prediction;
  std::optional<std::size_t> predicted_class;

  double scalar_prediction() const { return prediction.front(); }
};

/// Componentwise mean over the passes.
std::vector<double> predictive_mean(const PredictiveSample& sample);

/// Shannon entropy in bits of a probability vector. Components must be
/// nonnegative and sum to 1 within 1e-6; 0 * log 0 counts as 0.
double entropy_bits(const std::vector<double>& distribution);

/// Population variance of the passes of a one-dimensional sample.
double predictive_variance(const PredictiveSample& sample);

/// Entropy of the averaged distribution for classification (with argmax
/// class, lowest index on ties), variance of the scalar passes for
/// regression. Throws when the sample shape does not fit the task.
UncertaintyScore score(const PredictiveSample& sample, Task task);

}  // namespace driftlab
