#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "driftlab/detectors.hpp"
#include "driftlab/strategies.hpp"
#include "driftlab/uncertainty.hpp"

namespace driftlab {

/// Outcome of matching detections against true change points. A detection
/// matches the earliest unmatched truth tau with detection time in
/// (tau, tau + window]; matching is greedy in time order.
struct DetectionReport {
  std::optional<double> mtd;  // mean delay over matches, empty without any
  std::size_t matches = 0;
  std::size_t false_alarms = 0;     // detections no truth claimed
  std::size_t missed = 0;           // truths no detection reached in time
  std::size_t matching_window = 0;
};

DetectionReport detection_metrics(const std::vector<std::size_t>& truths,
                                  const std::vector<DriftSignal>& detections,
                                  std::size_t window);

double rmse(const std::vector<double>& predictions, const std::vector<double>& actuals);

/// Generalized (multiclass) Matthews correlation over dense class indices in
/// [0, n_classes); a zero denominator yields 0.
double mcc(const std::vector<std::size_t>& predictions,
           const std::vector<std::size_t>& actuals, std::size_t n_classes);

/// Per-instance material for the uncertainty decile breakdown: the
/// uncertainty value and the error term (squared error for regression, 1/0
/// correctness for classification).
struct DecileRow {
  std::size_t count = 0;
  double mean_uncertainty = 0.0;
  double error = 0.0;  // RMSE of the decile, or its accuracy
};

struct DecileReport {
  Task task = Task::kRegression;
  std::vector<DecileRow> rows;  // decile 1 (lowest uncertainty) first
};

DecileReport decile_analysis(const std::vector<std::pair<double, double>>& unc_and_error,
                             Task task);

/// Stream-region summary of one run: RMSE or MCC plus the label/retrain
/// accounting the result table reports.
struct PredictionReport {
  Task task = Task::kRegression;
  double metric = 0.0;  // RMSE (regression) or MCC (classification)
  std::size_t evaluated = 0;
  std::size_t retrain_count = 0;
  std::size_t labels_acquired = 0;
};

PredictionReport prediction_report(const RunRecord& record, const StreamDataset& ds);

/// Decile report assembled from a run's per-instance records.
DecileReport decile_report(const RunRecord& record, const StreamDataset& ds);

/// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace driftlab
