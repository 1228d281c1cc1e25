#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "driftlab/experiment.hpp"

namespace {

std::string effective_out_dir(const driftlab::ExperimentPlan& plan) {
  if (const char* env = std::getenv("DRIFTLAB_OUT_DIR")) return env;
  return plan.out_dir;
}

void print_table(const driftlab::ResultTable& table) {
  const char* metric = table.task == driftlab::Task::kRegression ? "rmse" : "mcc";
  std::printf("%-20s %10s %9s %8s\n", "strategy", metric, "retrains", "labels");
  for (const auto& row : table.rows) {
    std::printf("%-20s %10.4f %9zu %8zu\n", driftlab::strategy_name(row.strategy),
                row.report.metric, row.report.retrain_count,
                row.report.labels_acquired);
    if (row.detection) {
      std::printf("    %zu matched, %zu missed, %zu false alarms",
                  row.detection->matches, row.detection->missed,
                  row.detection->false_alarms);
      if (row.detection->mtd) std::printf(", mtd %.1f", *row.detection->mtd);
      std::printf("\n");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drift detection workbench: uncertainty-monitored retraining "
               "strategies on labeled streams"};
  app.require_subcommand(1);

  std::string kind;
  std::string out_dir = "out";
  std::uint64_t seed = 7;
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic stream CSV and its drift schedule");
  synth->add_option("kind", kind, "friedman or mixed")
      ->required()
      ->check(CLI::IsMember({"friedman", "mixed"}));
  synth->add_option("--out", out_dir, "output directory")->capture_default_str();
  synth->add_option("--seed", seed, "generator seed")->capture_default_str();

  std::string plan_path;
  auto* run = app.add_subcommand("run", "Execute every strategy in a plan file");
  run->add_option("--plan", plan_path, "plan file")->required();

  std::string detector = "udd";
  auto* calibrate = app.add_subcommand(
      "calibrate", "Sweep alpha over the validation segment and print counts");
  calibrate->add_option("--plan", plan_path, "plan file")->required();
  calibrate->add_option("--strategy", detector, "udd or kswin")
      ->check(CLI::IsMember({"udd", "kswin"}))
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      const auto k = kind == "friedman" ? driftlab::SynthKind::kFriedman
                                        : driftlab::SynthKind::kMixed;
      driftlab::cmd_synth(k, out_dir, seed);
      std::printf("wrote %s/%s.csv and %s/%s_schedule.txt\n", out_dir.c_str(),
                  kind.c_str(), out_dir.c_str(), kind.c_str());
    } else if (run->parsed()) {
      const auto plan = driftlab::load_plan(plan_path);
      const auto table = driftlab::cmd_run(plan);
      print_table(table);
      std::printf("artifacts in %s\n", effective_out_dir(plan).c_str());
    } else {
      const auto plan = driftlab::load_plan(plan_path);
      const auto k = detector == "udd" ? driftlab::DetectorKind::kUddAdwin
                                       : driftlab::DetectorKind::kKswin;
      const auto report = driftlab::cmd_calibrate(plan, k);
      std::printf("%12s %s\n", "alpha", "detections");
      for (const auto& [alpha, count] : report.result.counts)
        std::printf("%12g %zu\n", alpha, count);
      std::printf("calibrated alpha = %g%s\n", report.result.alpha,
                  report.result.fallback ? " (default, nothing detected)" : "");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "driftlab: %s\n", e.what());
    return 1;
  }
  return 0;
}
