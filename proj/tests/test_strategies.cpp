#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "driftlab/metrics.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/strategies.hpp"

using namespace driftlab;

namespace {

struct Fixture {
  StreamDataset ds;
  Partition part;
  Network net;
  TrainConfig cfg;
};

StreamDataset stationary_regression(std::size_t n, std::uint64_t seed) {
  StreamDataset ds;
  ds.task = Task::kRegression;
  ds.n_features = 3;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledInstance inst;
    inst.t = i;
    inst.x = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
    inst.y = inst.x[0] + 0.5 * inst.x[1] - 0.25 * inst.x[2] + 0.05 * rng.normal(0.0, 1.0);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

Fixture make_fixture(StreamDataset ds, std::size_t epochs = 20) {
  Fixture f;
  f.ds = std::move(ds);
  f.part = make_partition(f.ds);

  NetworkSpec spec;
  spec.layer_sizes = {f.ds.n_features, 8, 8, 4,
                      f.ds.task == Task::kRegression
                          ? std::size_t{1}
                          : std::max<std::size_t>(2, f.ds.n_classes)};
  spec.head =
      f.ds.task == Task::kRegression ? OutputHead::kLinear : OutputHead::kSoftmax;
  spec.dropout_rates = {0.1, 0.1, 0.1};
  spec.validate();

  f.cfg.learning_rate = 0.01;
  f.cfg.epochs = epochs;
  f.cfg.batch_size = 16;  // the 5% block of the small fixtures is ~30 rows
  f.cfg.seed = 11;

  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < f.part.train_end; ++i) {
    xs.push_back(f.ds.instances[i].x);
    ys.push_back(f.ds.instances[i].y);
  }
  f.net = train(init_network(spec, 3), xs, ys, f.cfg);
  return f;
}

void check_shape(const RunRecord& rec, const Partition& part) {
  CHECK(rec.stream_begin == part.stream_begin());
  CHECK(rec.predictions.size() == part.stream_length());
  CHECK(rec.uncertainties.size() == part.stream_length());
  CHECK(rec.retrain_events.size() == rec.retrain_times.size());
  for (std::size_t i = 0; i < rec.retrain_times.size(); ++i) {
    const auto& ev = rec.retrain_events[i];
    CHECK(ev.time == rec.retrain_times[i]);
    CHECK(ev.time >= part.stream_begin());
    CHECK(ev.time < part.total);
    // No label from after the retraining instant may enter the pool.
    CHECK(ev.pool_max_index <= ev.time);
    CHECK(ev.pool_size <= part.train_end + rec.labels_acquired);
  }
  CHECK(std::is_sorted(rec.retrain_times.begin(), rec.retrain_times.end()));
}

}  // namespace

TEST_CASE("default mc passes per task") {
  CHECK(default_mc_passes(Task::kRegression) == 100);
  CHECK(default_mc_passes(Task::kClassification) == 50);
}

TEST_CASE("strategy names") {
  CHECK(std::string(strategy_name(Strategy::kNoRetrain)) == "no_retrain");
  CHECK(std::string(strategy_name(Strategy::kUninformed)) == "uninformed");
  CHECK(std::string(strategy_name(Strategy::kEqualDistribution)) ==
        "equal_distribution");
  CHECK(std::string(strategy_name(Strategy::kKswinLimited)) == "kswin_limited");
  CHECK(std::string(strategy_name(Strategy::kUdd)) == "udd");
  CHECK(std::string(strategy_name(Strategy::kKswinUnlimited)) == "kswin_unlimited");
  CHECK(std::string(strategy_name(Strategy::kAdwinError)) == "adwin_error");
}

TEST_CASE("no_retrain leaves the model and the budget alone") {
  const auto f = make_fixture(stationary_regression(600, 2));
  RunInputs in{f.ds, f.part, f.net, f.cfg, 10};
  const auto rec = run_no_retrain(in, 77);
  check_shape(rec, f.part);
  CHECK(rec.strategy == Strategy::kNoRetrain);
  CHECK(rec.retrain_times.empty());
  CHECK(rec.detections.empty());
  CHECK(rec.labels_acquired == 0);
  for (double u : rec.uncertainties) CHECK(u >= 0.0);
}

TEST_CASE("a quiet detector makes udd identical to no_retrain") {
  const auto f = make_fixture(stationary_regression(600, 3));
  RunInputs in{f.ds, f.part, f.net, f.cfg, 10};
  const auto frozen = run_no_retrain(in, 42);
  const auto udd = run_udd(in, 1e-60, 42);
  CHECK(udd.detections.empty());
  CHECK(udd.retrain_times.empty());
  CHECK(udd.labels_acquired == 0);
  CHECK(udd.predictions == frozen.predictions);
  CHECK(udd.uncertainties == frozen.uncertainties);
}

TEST_CASE("udd runs are deterministic per seed and sensitive to it") {
  const auto f = make_fixture(stationary_regression(600, 4));
  RunInputs in{f.ds, f.part, f.net, f.cfg, 10};
  const auto a = run_udd(in, 0.002, 9);
  const auto b = run_udd(in, 0.002, 9);
  CHECK(a.predictions == b.predictions);
  CHECK(a.uncertainties == b.uncertainties);
  CHECK(a.retrain_times == b.retrain_times);
  CHECK(a.detections.size() == b.detections.size());

  const auto c = run_udd(in, 0.002, 10);
  CHECK(a.uncertainties != c.uncertainties);
}

TEST_CASE("every udd detection triggers exactly one retraining") {
  // Friedman stream with one real drift inside the evaluated region.
  DriftSchedule sched;
  sched.length = 2400;
  sched.real_drifts = {1400};
  sched.seed = 6;
  auto stream = friedman_stream(sched);
  StreamDataset ds;
  ds.task = Task::kRegression;
  ds.n_features = 10;
  ds.instances = std::move(stream);

  const auto f = make_fixture(std::move(ds), 40);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 20};
  const auto rec = run_udd(in, 0.05, 21);
  check_shape(rec, f.part);

  REQUIRE(rec.detections.size() == rec.retrain_times.size());
  for (std::size_t i = 0; i < rec.detections.size(); ++i) {
    CHECK(rec.detections[i].time_index == rec.retrain_times[i]);
    CHECK(rec.detections[i].source == DriftSource::kUncertaintyAdwin);
  }
  CHECK(rec.labels_acquired <= rec.retrain_times.size() * f.part.retrain_batch);
  // The shifted inputs must wake the detector at this loose alpha.
  CHECK(rec.detections.size() >= 1);
  bool after_drift = false;
  for (const auto& d : rec.detections) after_drift |= d.time_index > 1400;
  CHECK(after_drift);
}

TEST_CASE("equal distribution places retrainings at the quantile times") {
  const auto f = make_fixture(stationary_regression(10000, 5), 5);
  REQUIRE(f.part.stream_begin() == 1500);
  REQUIRE(f.part.total == 10000);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 1};

  const auto one = run_equal_distribution(in, 1, 33);
  CHECK(one.retrain_times == std::vector<std::size_t>{5750});

  const auto three = run_equal_distribution(in, 3, 33);
  CHECK(three.retrain_times == std::vector<std::size_t>{3625, 5750, 7875});
  check_shape(three, f.part);
  CHECK(three.labels_acquired == 3 * f.part.retrain_batch);

  const auto zero = run_equal_distribution(in, 0, 33);
  const auto frozen = run_no_retrain(in, 33);
  CHECK(zero.retrain_times.empty());
  CHECK(zero.predictions == frozen.predictions);
}

TEST_CASE("uninformed draws budget times per seed without replacement") {
  const auto f = make_fixture(stationary_regression(1200, 6), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 1};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto runs = run_uninformed(in, 4, seeds);
  REQUIRE(runs.size() == 5);
  for (const auto& rec : runs) {
    check_shape(rec, f.part);
    REQUIRE(rec.retrain_times.size() == 4);
    for (std::size_t i = 1; i < 4; ++i)
      CHECK(rec.retrain_times[i - 1] < rec.retrain_times[i]);
    CHECK(rec.labels_acquired <= 4 * f.part.retrain_batch);
  }
  // Different seeds pick different schedules.
  CHECK(runs[0].retrain_times != runs[1].retrain_times);

  CHECK_THROWS_AS(run_uninformed(in, 4, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(run_uninformed(in, f.part.stream_length() + 1, seeds),
                  std::invalid_argument);
}

TEST_CASE("label accounting never double counts overlapping batches") {
  const auto f = make_fixture(stationary_regression(1200, 7), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 1};
  // Five times bunched closer than one batch apart: unions must collapse.
  // Batch here is 12, so consecutive times 4 apart overlap heavily.
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto runs = run_uninformed(in, 60, seeds);
  for (const auto& rec : runs) {
    CHECK(rec.labels_acquired <= 60 * f.part.retrain_batch);
    CHECK(rec.labels_acquired >= 60);  // each retraining gains at least one
  }
}

TEST_CASE("kswin without budget retrains on every detection") {
  const auto f = make_fixture(stationary_regression(800, 8), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 1};
  // Alpha too small to ever fire: identical to the frozen run.
  const auto rec = run_kswin(in, 1e-300, std::nullopt, 13);
  const auto frozen = run_no_retrain(in, 13);
  CHECK(rec.detections.empty());
  CHECK(rec.retrain_times.empty());
  CHECK(rec.predictions == frozen.predictions);
  check_shape(rec, f.part);
}

TEST_CASE("kswin with a budget keeps the strongest detections") {
  // Move one noise feature twice so the detector has material to rank.
  DriftSchedule sched;
  sched.length = 2000;
  sched.virtual_drifts = {1000, 1500};
  sched.seed = 9;
  auto stream = friedman_stream(sched);
  StreamDataset ds;
  ds.task = Task::kRegression;
  ds.n_features = 10;
  ds.instances = std::move(stream);
  const auto f = make_fixture(std::move(ds), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 1};

  const auto unlimited = run_kswin(in, 1e-5, std::nullopt, 29);
  REQUIRE(unlimited.detections.size() >= 2);
  CHECK(unlimited.detections.size() == unlimited.retrain_times.size());
  for (const auto& d : unlimited.detections) {
    CHECK(d.source == DriftSource::kKswin);
    REQUIRE(d.p_value.has_value());
    CHECK(*d.p_value < 1e-5);
    REQUIRE(d.feature_index.has_value());
    CHECK(*d.feature_index >= 5);  // only noise features moved
  }

  const auto limited = run_kswin(in, 1e-5, 1, 29);
  CHECK(limited.retrain_times.size() == 1);
  check_shape(limited, f.part);

  // Budget zero degrades to the frozen model.
  const auto none = run_kswin(in, 1e-5, 0, 29);
  CHECK(none.retrain_times.empty());
}

TEST_CASE("adwin_error consumes every stream label") {
  const auto f = make_fixture(stationary_regression(700, 10), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 5};
  const auto rec = run_adwin_error(in, 51);
  check_shape(rec, f.part);
  CHECK(rec.labels_acquired == f.part.stream_length());
  for (const auto& d : rec.detections) CHECK(d.source == DriftSource::kErrorAdwin);
}

TEST_CASE("calibration grid shape") {
  const auto grid = calibration_grid();
  REQUIRE(grid.size() == 26);
  CHECK(grid.front() == 0.1);
  CHECK(grid[1] == 0.05);
  CHECK(grid[2] == 0.01);
  CHECK(grid[3] == 0.002);
  CHECK(grid[4] == doctest::Approx(1e-6));
  CHECK(grid.back() == doctest::Approx(1e-90));
  CHECK(std::is_sorted(grid.rbegin(), grid.rend()));
}

TEST_CASE("calibration falls back when nothing fires") {
  // Validation has 100 points; the KS windows need 200 before testing, so
  // no alpha can ever detect and the default must come back flagged.
  const auto f = make_fixture(stationary_regression(1000, 11), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 5};
  const auto res = calibrate_alpha(in, DetectorKind::kKswin, 99);
  CHECK(res.fallback);
  CHECK(res.alpha == 0.002);
  REQUIRE(res.counts.size() == 26);
  for (const auto& [alpha, count] : res.counts) {
    CHECK(alpha > 0.0);
    CHECK(count == 0);
  }
}

TEST_CASE("calibration picks the largest alpha with a single detection") {
  // One hard feature shift inside the validation window. After the KS
  // windows clear on detection there is no room left for a second firing,
  // so every alpha that reacts at all counts exactly one.
  StreamDataset ds = stationary_regression(4000, 12);
  for (std::size_t i = 400; i < ds.size(); ++i) ds.instances[i].x[0] += 5.0;
  const auto f = make_fixture(std::move(ds), 5);
  REQUIRE(f.part.train_end == 200);
  REQUIRE(f.part.val_end == 600);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 5};

  const auto res = calibrate_alpha(in, DetectorKind::kKswin, 99);
  CHECK_FALSE(res.fallback);
  CHECK(res.alpha == 0.1);
  REQUIRE(res.counts.size() == 26);
  CHECK(res.counts.front().second == 1);
  // The far tail of the grid is unreachable for 100 vs 100 KS windows.
  CHECK(res.counts.back().second == 0);

  // Deterministic: same seed, same sweep.
  const auto again = calibrate_alpha(in, DetectorKind::kKswin, 99);
  CHECK(again.alpha == res.alpha);
  CHECK(again.counts == res.counts);
}

TEST_CASE("udd calibration replays one uncertainty stream across the grid") {
  const auto f = make_fixture(stationary_regression(1000, 13), 5);
  RunInputs in{f.ds, f.part, f.net, f.cfg, 5};
  const auto res = calibrate_alpha(in, DetectorKind::kUddAdwin, 7);
  REQUIRE(res.counts.size() == 26);
  // Counts can only shrink as alpha tightens.
  for (std::size_t i = 1; i < res.counts.size(); ++i)
    CHECK(res.counts[i].second <= res.counts[i - 1].second);
  const auto again = calibrate_alpha(in, DetectorKind::kUddAdwin, 7);
  CHECK(again.counts == res.counts);
  CHECK(again.alpha == res.alpha);
  CHECK(again.fallback == res.fallback);
}
