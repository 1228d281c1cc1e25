#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "driftlab/detectors.hpp"
#include "driftlab/ingest.hpp"
#include "driftlab/nnet.hpp"
#include "driftlab/uncertainty.hpp"

namespace driftlab {

enum class Strategy {
  kNoRetrain,
  kUninformed,
  kEqualDistribution,
  kKswinLimited,
  kUdd,
  kKswinUnlimited,
  kAdwinError,
};

const char* strategy_name(Strategy s);

enum class DetectorKind { kUddAdwin, kKswin };

/// Everything one prequential pass produces. predictions[i] and
/// uncertainties[i] belong to stream index stream_begin + i and were recorded
/// before any retraining at that step.
struct RunRecord {
  Strategy strategy = Strategy::kNoRetrain;
  Task task = Task::kRegression;
  std::size_t stream_begin = 0;
  std::vector<double> predictions;  // scalar prediction, or class index
  std::vector<double> uncertainties;
  std::vector<DriftSignal> detections;
  std::vector<std::size_t> retrain_times;

  struct RetrainEvent {
    std::size_t time = 0;
    std::size_t pool_max_index = 0;  // newest label index used, for the
    std::size_t pool_size = 0;       // leakage accounting
  };
  std::vector<RetrainEvent> retrain_events;

  std::size_t labels_acquired = 0;
  std::uint64_t seed = 0;
};

/// Shared context for one strategy run: the stream, its partition, and the
/// model trained on the initial 5% block. Runs copy the model; the inputs
/// themselves are never mutated.
struct RunInputs {
  const StreamDataset& ds;
  const Partition& part;
  const Network& initial_net;
  TrainConfig train_cfg;
  std::size_t mc_passes = 0;  // 0 picks the task default (100 / 50)
};

std::size_t default_mc_passes(Task task);

/// Uncertainty-driven run: per instance, mc_predict -> score -> ADWIN at the
/// given alpha. On detection the pool acquires the most recent retrain batch,
/// standardization is refitted, the model retrains from scratch and the
/// detector resets.
RunRecord run_udd(const RunInputs& in, double alpha, std::uint64_t seed);

/// Frozen model, zero retrainings, zero labels.
RunRecord run_no_retrain(const RunInputs& in, std::uint64_t seed);

/// Budget retraining times drawn uniformly without replacement from the
/// stream region; one run per seed, exactly five seeds.
std::vector<RunRecord> run_uninformed(const RunInputs& in, std::size_t budget,
                                      const std::vector<std::uint64_t>& seeds);

/// Retrains at stream_begin + round(k L / (budget + 1)), k = 1..budget.
RunRecord run_equal_distribution(const RunInputs& in, std::size_t budget,
                                 std::uint64_t seed);

/// Feature-window KS run. Without a budget every detection retrains; with a
/// budget a first detector-only pass records all detections, the budget
/// smallest p-values are kept, and the prequential pass retrains at those
/// times (degrading to no_retrain with a note on stderr when the first pass
/// saw nothing).
RunRecord run_kswin(const RunInputs& in, double alpha,
                    std::optional<std::size_t> budget, std::uint64_t seed);

/// Label-hungry reference: ADWIN at delta 0.002 over the prequential error
/// (absolute error, or 0/1 misclassification). labels_acquired reports the
/// whole stream since every true label is consumed.
RunRecord run_adwin_error(const RunInputs& in, std::uint64_t seed);

/// The alpha sweep grid, descending from 0.1 down to 1e-90.
std::vector<double> calibration_grid();

struct CalibrationResult {
  double alpha = 0.0;
  bool fallback = false;  // nothing detected anywhere, default 0.002 returned
  // (alpha, detections on the validation segment), grid order.
  std::vector<std::pair<double, std::size_t>> counts;
};

/// Runs the chosen detector over the validation segment (model fixed, no
/// retraining) once per grid alpha and picks the largest alpha with exactly
/// one detection. If no alpha detects anything the default 0.002 is
/// returned; otherwise the detecting alpha whose count is closest to one
/// wins, ties to the larger alpha.
CalibrationResult calibrate_alpha(const RunInputs& in, DetectorKind kind,
                                  std::uint64_t seed);

}  // namespace driftlab
