#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/synth.hpp"
#include "driftlab/uncertainty.hpp"

namespace driftlab {

/// A fully materialized labeled stream in arrival order. For classification
/// the y values are dense class indices; class_names remembers the original
/// labels in first-appearance order when the data came from a CSV.
struct StreamDataset {
  std::vector<LabeledInstance> instances;
  Task task = Task::kRegression;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;  // 0 for regression
  std::string name;
  std::vector<std::string> class_names;

  std::size_t size() const { return instances.size(); }
};

/// Index layout: [0, train_end) initial training, [train_end, val_end)
/// calibration, [val_end, total) evaluated stream.
struct Partition {
  std::size_t total = 0;
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t retrain_batch = 0;

  std::size_t stream_begin() const { return val_end; }
  std::size_t stream_length() const { return total - val_end; }
};

/// 5% / 10% / rest split with half-up rounding; retrain_batch is 1% of the
/// total, at least 1. Requires at least 100 instances.
Partition make_partition(const StreamDataset& ds);

/// Labeled indices available for retraining: the initial training block plus
/// every acquired range, deduplicated.
class TrainingPool {
 public:
  TrainingPool(std::size_t base_begin, std::size_t base_end);

  // Acquires the retrain_batch most recent labels ending at t (inclusive),
  // clipped to the stream region. Already-acquired indices are not counted
  // again. Returns how many new labels were taken.
  std::size_t acquire_recent(const Partition& part, std::size_t t);

  // All pool indices, ascending.
  std::vector<std::size_t> indices() const;

  std::size_t labels_acquired() const { return labels_acquired_; }
  // Size of the union of acquired ranges; equals labels_acquired by
  // construction and is recomputed independently for the accounting checks.
  std::size_t acquired_union_size() const;
  const std::vector<std::pair<std::size_t, std::size_t>>& acquired_ranges() const {
    return acquired_;
  }
  std::size_t max_index() const;
  std::size_t size() const;

 private:
  std::size_t base_begin_;
  std::size_t base_end_;
  // Disjoint inclusive ranges, ascending.
  std::vector<std::pair<std::size_t, std::size_t>> acquired_;
  std::size_t labels_acquired_ = 0;
};

/// Per-feature affine transform fitted on a pool; sigma is floored at 1e-8
/// so constant features stay finite.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> sigma;

  std::vector<double> apply(const std::vector<double>& x) const;
  std::vector<double> invert(const std::vector<double>& z) const;
};

Standardizer fit_standardizer(const StreamDataset& ds, const std::vector<std::size_t>& pool);

/// Reads a UTF-8 CSV with a header row. Every non-label column is a feature
/// and must parse as a finite double; the label column (default "target") is
/// a double for regression and an arbitrary token for classification, mapped
/// to dense indices by first appearance. Malformed cells raise with row and
/// column named.
StreamDataset load_csv(const std::string& path, Task task,
                       const std::string& label_column = "target");

/// Writers for the on-disk stream format (header f1..fk,target) and the
/// drift-schedule sidecar ("real <t>" / "virtual <t>" lines, ascending).
void write_stream_csv(const std::string& path, const StreamDataset& ds);
void write_schedule_file(const std::string& path, const DriftSchedule& schedule);
DriftSchedule read_schedule_file(const std::string& path, std::size_t length);

}  // namespace driftlab
