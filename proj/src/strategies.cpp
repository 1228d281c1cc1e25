#include "driftlab/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

constexpr double kDefaultDelta = 0.002;

// Seed-stream tags so the per-instance MC seeds, retraining seeds and draw
// seeds never collide.
constexpr std::uint64_t kMcTag = 0x6d63;       // per-instance MC passes
constexpr std::uint64_t kRetrainTag = 0x7274;  // per-retraining init/train
constexpr std::uint64_t kDrawTag = 0x6472;     // uninformed time draws

std::vector<double> feature_row(const StreamDataset& ds, std::size_t t) {
  return ds.instances[t].x;
}

// Retraining times handed to the generic prequential loop. A detector-driven
// run decides on the fly instead.
struct PresetTimes {
  std::vector<std::size_t> times;
};

struct LoopState {
  Network net;
  Standardizer std_tf;
  TrainingPool pool;
  std::size_t retrain_index = 0;
};

Network retrain_from_scratch(const RunInputs& in, const TrainingPool& pool,
                             const Standardizer& std_tf, std::uint64_t run_seed,
                             std::size_t retrain_index) {
  const std::uint64_t seed =
      Rng::mix(run_seed, Rng::mix(kRetrainTag, retrain_index));
  Network net = init_network(in.initial_net.spec, seed);
  const auto idx = pool.indices();
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  xs.reserve(idx.size());
  ys.reserve(idx.size());
  for (std::size_t i : idx) {
    xs.push_back(std_tf.apply(in.ds.instances[i].x));
    ys.push_back(in.ds.instances[i].y);
  }
  TrainConfig cfg = in.train_cfg;
  cfg.seed = seed;
  return train(std::move(net), xs, ys, cfg);
}

void do_retrain(const RunInputs& in, LoopState& st, RunRecord& rec,
                std::size_t t, std::uint64_t run_seed) {
  st.pool.acquire_recent(in.part, t);
  st.std_tf = fit_standardizer(in.ds, st.pool.indices());
  st.net = retrain_from_scratch(in, st.pool, st.std_tf, run_seed, st.retrain_index);
  ++st.retrain_index;
  rec.retrain_times.push_back(t);
  rec.retrain_events.push_back({t, st.pool.max_index(), st.pool.size()});
  rec.labels_acquired = st.pool.labels_acquired();
}

std::size_t record_prediction(const RunInputs& in, const LoopState& st,
                              RunRecord& rec, std::size_t t, std::size_t passes,
                              std::uint64_t run_seed) {
  const auto sample = mc_predict(st.net, st.std_tf.apply(in.ds.instances[t].x),
                                 passes, Rng::mix(run_seed, Rng::mix(kMcTag, t)));
  const auto sc = score(sample, in.ds.task);
  if (in.ds.task == Task::kClassification) {
    rec.predictions.push_back(static_cast<double>(*sc.predicted_class));
  } else {
    rec.predictions.push_back(sc.scalar_prediction());
  }
  rec.uncertainties.push_back(sc.value);
  return rec.predictions.size() - 1;
}

RunRecord make_record(const RunInputs& in, Strategy strategy, std::uint64_t seed) {
  RunRecord rec;
  rec.strategy = strategy;
  rec.task = in.ds.task;
  rec.stream_begin = in.part.stream_begin();
  rec.seed = seed;
  rec.predictions.reserve(in.part.stream_length());
  rec.uncertainties.reserve(in.part.stream_length());
  return rec;
}

LoopState make_state(const RunInputs& in) {
  LoopState st{in.initial_net,
               Standardizer{},
               TrainingPool(0, in.part.train_end),
               0};
  st.std_tf = fit_standardizer(in.ds, st.pool.indices());
  return st;
}

std::size_t resolve_passes(const RunInputs& in) {
  return in.mc_passes != 0 ? in.mc_passes : default_mc_passes(in.ds.task);
}

// Prequential pass retraining at a preset list of times.
RunRecord run_preset(const RunInputs& in, Strategy strategy,
                     const PresetTimes& preset, std::uint64_t seed) {
  RunRecord rec = make_record(in, strategy, seed);
  LoopState st = make_state(in);
  const std::size_t passes = resolve_passes(in);
  auto next_time = preset.times.begin();
  for (std::size_t t = in.part.stream_begin(); t < in.part.total; ++t) {
    record_prediction(in, st, rec, t, passes, seed);
    if (next_time != preset.times.end() && *next_time == t) {
      do_retrain(in, st, rec, t, seed);
      ++next_time;
    }
  }
  return rec;
}

}  // namespace

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kNoRetrain: return "no_retrain";
    case Strategy::kUninformed: return "uninformed";
    case Strategy::kEqualDistribution: return "equal_distribution";
    case Strategy::kKswinLimited: return "kswin_limited";
    case Strategy::kUdd: return "udd";
    case Strategy::kKswinUnlimited: return "kswin_unlimited";
    case Strategy::kAdwinError: return "adwin_error";
  }
  return "unknown";
}

std::size_t default_mc_passes(Task task) {
  return task == Task::kRegression ? 100 : 50;
}

RunRecord run_udd(const RunInputs& in, double alpha, std::uint64_t seed) {
  RunRecord rec = make_record(in, Strategy::kUdd, seed);
  LoopState st = make_state(in);
  const std::size_t passes = resolve_passes(in);
  Adwin adwin(alpha);
  for (std::size_t t = in.part.stream_begin(); t < in.part.total; ++t) {
    const std::size_t i = record_prediction(in, st, rec, t, passes, seed);
    if (adwin.add(rec.uncertainties[i])) {
      rec.detections.push_back(
          DriftSignal{t, DriftSource::kUncertaintyAdwin, std::nullopt, std::nullopt});
      do_retrain(in, st, rec, t, seed);
      adwin.reset();
    }
  }
  return rec;
}

RunRecord run_no_retrain(const RunInputs& in, std::uint64_t seed) {
  return run_preset(in, Strategy::kNoRetrain, PresetTimes{}, seed);
}

std::vector<RunRecord> run_uninformed(const RunInputs& in, std::size_t budget,
                                      const std::vector<std::uint64_t>& seeds) {
  require(seeds.size() == 5, "uninformed: expected exactly five seeds");
  require(budget <= in.part.stream_length(),
          "uninformed: budget exceeds the stream length");
  std::vector<RunRecord> out;
  out.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    Rng rng(Rng::mix(seed, kDrawTag));
    std::set<std::size_t> picks;
    while (picks.size() < budget)
      picks.insert(in.part.stream_begin() + rng.below(in.part.stream_length()));
    PresetTimes preset;
    preset.times.assign(picks.begin(), picks.end());
    out.push_back(run_preset(in, Strategy::kUninformed, preset, seed));
  }
  return out;
}

RunRecord run_equal_distribution(const RunInputs& in, std::size_t budget,
                                 std::uint64_t seed) {
  const double length = static_cast<double>(in.part.stream_length());
  PresetTimes preset;
  for (std::size_t k = 1; k <= budget; ++k) {
    const auto offset = static_cast<std::size_t>(std::floor(
        static_cast<double>(k) * length / static_cast<double>(budget + 1) + 0.5));
    preset.times.push_back(in.part.stream_begin() +
                           std::min(offset, in.part.stream_length() - 1));
  }
  preset.times.erase(std::unique(preset.times.begin(), preset.times.end()),
                     preset.times.end());
  RunRecord rec = run_preset(in, Strategy::kEqualDistribution, preset, seed);
  return rec;
}

RunRecord run_kswin(const RunInputs& in, double alpha,
                    std::optional<std::size_t> budget, std::uint64_t seed) {
  const Strategy strategy =
      budget.has_value() ? Strategy::kKswinLimited : Strategy::kKswinUnlimited;

  if (budget.has_value()) {
    // First pass: detector only. Detection times depend on nothing but the
    // raw features, so no model is needed yet.
    Kswin detector(alpha, in.ds.n_features);
    std::vector<DriftSignal> found;
    for (std::size_t t = in.part.stream_begin(); t < in.part.total; ++t) {
      const auto outcome = detector.add(feature_row(in.ds, t), t);
      if (outcome.detected) found.push_back(*outcome.best);
    }
    if (found.empty() && *budget > 0)
      std::fprintf(stderr,
                   "kswin_limited: no detections on the first pass, running without "
                   "retraining\n");
    // Keep the budget smallest p-values, replay them in time order.
    std::stable_sort(found.begin(), found.end(),
                     [](const DriftSignal& a, const DriftSignal& b) {
                       return a.p_value.value_or(1.0) < b.p_value.value_or(1.0);
                     });
    if (found.size() > *budget) found.resize(*budget);
    std::sort(found.begin(), found.end(),
              [](const DriftSignal& a, const DriftSignal& b) {
                return a.time_index < b.time_index;
              });
    PresetTimes preset;
    for (const auto& sig : found) preset.times.push_back(sig.time_index);
    RunRecord rec = run_preset(in, strategy, preset, seed);
    rec.detections = std::move(found);
    return rec;
  }

  RunRecord rec = make_record(in, strategy, seed);
  LoopState st = make_state(in);
  const std::size_t passes = resolve_passes(in);
  Kswin detector(alpha, in.ds.n_features);
  for (std::size_t t = in.part.stream_begin(); t < in.part.total; ++t) {
    record_prediction(in, st, rec, t, passes, seed);
    const auto outcome = detector.add(feature_row(in.ds, t), t);
    if (outcome.detected) {
      rec.detections.push_back(*outcome.best);
      do_retrain(in, st, rec, t, seed);
    }
  }
  return rec;
}

RunRecord run_adwin_error(const RunInputs& in, std::uint64_t seed) {
  RunRecord rec = make_record(in, Strategy::kAdwinError, seed);
  LoopState st = make_state(in);
  const std::size_t passes = resolve_passes(in);
  Adwin adwin(kDefaultDelta);
  for (std::size_t t = in.part.stream_begin(); t < in.part.total; ++t) {
    const std::size_t i = record_prediction(in, st, rec, t, passes, seed);
    const double y = in.ds.instances[t].y;
    const double err = in.ds.task == Task::kClassification
                           ? (rec.predictions[i] == y ? 0.0 : 1.0)
                           : std::fabs(rec.predictions[i] - y);
    if (adwin.add(err)) {
      rec.detections.push_back(
          DriftSignal{t, DriftSource::kErrorAdwin, std::nullopt, std::nullopt});
      do_retrain(in, st, rec, t, seed);
      adwin.reset();
    }
  }
  // This strategy reads the true label at every step.
  rec.labels_acquired = in.part.stream_length();
  return rec;
}

std::vector<double> calibration_grid() {
  std::vector<double> grid = {0.1, 0.05, 0.01, 0.002};
  for (int e = 6; e <= 90; e += 4) grid.push_back(std::pow(10.0, -e));
  return grid;
}

CalibrationResult calibrate_alpha(const RunInputs& in, DetectorKind kind,
                                  std::uint64_t seed) {
  const std::size_t val_begin = in.part.train_end;
  const std::size_t val_end = in.part.val_end;
  require(val_end > val_begin, "calibrate: empty validation segment");

  // The model stays fixed over the sweep, so the uncertainty stream is
  // computed once and replayed per grid point.
  std::vector<double> u_stream;
  if (kind == DetectorKind::kUddAdwin) {
    const std::size_t passes = resolve_passes(in);
    const auto pool = TrainingPool(0, in.part.train_end);
    const auto std_tf = fit_standardizer(in.ds, pool.indices());
    u_stream.reserve(val_end - val_begin);
    for (std::size_t t = val_begin; t < val_end; ++t) {
      const auto sample =
          mc_predict(in.initial_net, std_tf.apply(in.ds.instances[t].x), passes,
                     Rng::mix(seed, Rng::mix(kMcTag, t)));
      u_stream.push_back(score(sample, in.ds.task).value);
    }
  }

  CalibrationResult result;
  for (double alpha : calibration_grid()) {
    std::size_t count = 0;
    if (kind == DetectorKind::kUddAdwin) {
      Adwin adwin(alpha);
      for (double u : u_stream)
        if (adwin.add(u)) {
          ++count;
          adwin.reset();
        }
    } else {
      Kswin detector(alpha, in.ds.n_features);
      for (std::size_t t = val_begin; t < val_end; ++t)
        if (detector.add(feature_row(in.ds, t), t).detected) ++count;
    }
    result.counts.emplace_back(alpha, count);
  }

  // Largest alpha with exactly one detection; otherwise the detecting alpha
  // closest to one detection (ties to the larger alpha); otherwise the
  // default.
  const auto best = std::min_element(
      result.counts.begin(), result.counts.end(), [](const auto& a, const auto& b) {
        if (a.second == 0 && b.second == 0) return false;
        if (a.second == 0) return false;
        if (b.second == 0) return true;
        const auto da = a.second > 1 ? a.second - 1 : 1 - a.second;
        const auto db = b.second > 1 ? b.second - 1 : 1 - b.second;
        return da < db;  // grid is descending, min_element keeps the earlier
      });
  if (best == result.counts.end() || best->second == 0) {
    result.alpha = kDefaultDelta;
    result.fallback = true;
  } else {
    result.alpha = best->first;
  }
  return result;
}

}  // namespace driftlab
