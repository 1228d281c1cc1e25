#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftlab/metrics.hpp"
#include "driftlab/strategies.hpp"

namespace driftlab {

/// A parsed plan file: flat "key = value" lines, '#' comments. See
/// load_plan for the accepted keys.
struct ExperimentPlan {
  std::string dataset;  // "synth:friedman", "synth:mixed", or a CSV path
  Task task = Task::kRegression;
  std::string label_column = "target";
  std::optional<std::string> schedule_path;  // sidecar for CSV datasets

  std::vector<std::size_t> hidden;
  std::vector<double> dropout;
  std::size_t mc_passes = 0;  // 0 = task default
  TrainConfig train;

  std::vector<Strategy> strategies;
  std::uint64_t seed = 7;
  std::optional<double> alpha_udd;
  std::optional<double> alpha_kswin;
  std::string out_dir = "out";
  std::size_t threads = 0;  // 0 = one per strategy
};

ExperimentPlan load_plan(const std::string& path);

struct StrategyResult {
  Strategy strategy = Strategy::kNoRetrain;
  std::string label;  // uninformed carries its seed-averaged label here
  PredictionReport report;
  std::optional<DetectionReport> detection;
};

struct ResultTable {
  Task task = Task::kRegression;
  std::vector<StrategyResult> rows;
};

/// Generates a stream (15,000 rows) plus its schedule sidecar under out_dir.
/// Same seed, same bytes.
void cmd_synth(SynthKind kind, const std::string& out_dir, std::uint64_t seed);

/// Executes the plan: loads or generates the data, trains the initial model
/// on the 5% block, calibrates any alphas the plan left unset, runs UDD
/// first so budget-matched strategies can share its retraining budget, runs
/// the remaining strategies (in parallel, at most `threads` at once), and
/// writes results.csv, detections_*.log, trajectory_*.csv, decile_*.csv,
/// detection_metrics.csv and manifest.txt under the output directory.
/// DRIFTLAB_OUT_DIR and DRIFTLAB_THREADS override the plan.
ResultTable cmd_run(const ExperimentPlan& plan);

struct CalibrationReport {
  DetectorKind kind = DetectorKind::kUddAdwin;
  CalibrationResult result;
};

/// Calibration sweep only; prints nothing, callers format result.counts.
CalibrationReport cmd_calibrate(const ExperimentPlan& plan, DetectorKind kind);

const char* task_name(Task task);
std::optional<Strategy> parse_strategy(const std::string& name);

}  // namespace driftlab
