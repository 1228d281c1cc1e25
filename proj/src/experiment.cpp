#include "driftlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "driftlab/rng.hpp"
#include "driftlab/synth.hpp"

namespace driftlab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

// Seed-stream tags; see strategies.cpp for the per-run ones.
constexpr std::uint64_t kInitTag = 0x696e6974;      // initial model
constexpr std::uint64_t kCalibrateTag = 0x63616c;   // alpha calibration
constexpr std::uint64_t kStrategyTag = 0x73747261;  // per-strategy run seeds

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("plan: bad number for " + key + ": '" + s + "'");
  }
  require(used == s.size() && std::isfinite(v),
          "plan: bad number for " + key + ": '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("plan: bad integer for " + key + ": '" + s + "'");
  }
  require(used == s.size(), "plan: bad integer for " + key + ": '" + s + "'");
  return v;
}

const char* source_name(DriftSource s) {
  switch (s) {
    case DriftSource::kUncertaintyAdwin: return "uncertainty_adwin";
    case DriftSource::kErrorAdwin: return "error_adwin";
    case DriftSource::kKswin: return "kswin";
  }
  return "unknown";
}

// Everything a run needs, resolved once per plan.
struct Prepared {
  StreamDataset ds;
  std::optional<DriftSchedule> schedule;
  Partition part;
  Network net;  // trained on the initial block
  TrainConfig cfg;
};

StreamDataset materialize_synth(SynthKind kind, const DriftSchedule& schedule) {
  StreamDataset ds;
  if (kind == SynthKind::kFriedman) {
    ds.instances = friedman_stream(schedule);
    ds.task = Task::kRegression;
    ds.n_features = 10;
    ds.name = "friedman";
  } else {
    ds.instances = mixed_stream(schedule);
    ds.task = Task::kClassification;
    ds.n_features = 6;
    ds.n_classes = 2;
    ds.name = "mixed";
    ds.class_names = {"0", "1"};
  }
  return ds;
}

Prepared prepare(const ExperimentPlan& plan) {
  Prepared prep;
  if (plan.dataset == "synth:friedman" || plan.dataset == "synth:mixed") {
    const SynthKind kind = plan.dataset == "synth:friedman" ? SynthKind::kFriedman
                                                            : SynthKind::kMixed;
    DriftSchedule sched = reference_schedule(kind);
    sched.seed = plan.seed;
    prep.ds = materialize_synth(kind, sched);
    prep.schedule = sched;
    require(plan.task == prep.ds.task,
            "plan: task does not match dataset '" + plan.dataset + "'");
  } else {
    prep.ds = load_csv(plan.dataset, plan.task, plan.label_column);
    if (plan.schedule_path)
      prep.schedule = read_schedule_file(*plan.schedule_path, prep.ds.size());
  }
  prep.part = make_partition(prep.ds);

  std::vector<std::size_t> hidden =
      plan.hidden.empty() ? std::vector<std::size_t>{32, 16, 8} : plan.hidden;
  std::vector<double> dropout = plan.dropout.empty()
                                    ? std::vector<double>(hidden.size(), 0.1)
                                    : plan.dropout;
  if (dropout.size() == 1) dropout.assign(hidden.size(), dropout[0]);

  NetworkSpec spec;
  spec.layer_sizes.push_back(prep.ds.n_features);
  for (std::size_t h : hidden) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(
      prep.ds.task == Task::kRegression ? 1 : std::max<std::size_t>(2, prep.ds.n_classes));
  spec.head = prep.ds.task == Task::kRegression ? OutputHead::kLinear
                                                : OutputHead::kSoftmax;
  spec.dropout_rates = dropout;
  spec.validate();

  prep.cfg = plan.train;
  prep.cfg.seed = Rng::mix(plan.seed, kInitTag);
  prep.net = init_network(spec, prep.cfg.seed);

  const TrainingPool base(0, prep.part.train_end);
  const Standardizer std_tf = fit_standardizer(prep.ds, base.indices());
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  xs.reserve(prep.part.train_end);
  ys.reserve(prep.part.train_end);
  for (std::size_t i = 0; i < prep.part.train_end; ++i) {
    xs.push_back(std_tf.apply(prep.ds.instances[i].x));
    ys.push_back(prep.ds.instances[i].y);
  }
  prep.net = train(std::move(prep.net), xs, ys, prep.cfg);
  return prep;
}

bool needs_budget(Strategy s) {
  return s == Strategy::kUninformed || s == Strategy::kEqualDistribution ||
         s == Strategy::kKswinLimited;
}

bool uses_kswin_alpha(Strategy s) {
  return s == Strategy::kKswinLimited || s == Strategy::kKswinUnlimited;
}

std::uint64_t strategy_seed(const ExperimentPlan& plan, Strategy s) {
  return Rng::mix(plan.seed,
                  Rng::mix(kStrategyTag, static_cast<std::uint64_t>(s)));
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

void write_trajectory(const std::filesystem::path& p, const RunRecord& rec) {
  std::ofstream f = open_out(p);
  std::vector<bool> hit(rec.uncertainties.size(), false);
  for (const auto& d : rec.detections)
    if (d.time_index >= rec.stream_begin)
      hit[d.time_index - rec.stream_begin] = true;
  f << "t,u,detected\n";
  for (std::size_t i = 0; i < rec.uncertainties.size(); ++i)
    f << rec.stream_begin + i << ',' << fmt(rec.uncertainties[i]) << ','
      << (hit[i] ? 1 : 0) << '\n';
}

void write_detections(const std::filesystem::path& p, const RunRecord& rec) {
  std::ofstream f = open_out(p);
  for (const auto& d : rec.detections) {
    f << d.time_index << ' ' << source_name(d.source) << ' ';
    if (d.p_value)
      f << fmt(*d.p_value);
    else
      f << '-';
    f << '\n';
  }
}

void write_decile(const std::filesystem::path& p, const RunRecord& rec,
                  const StreamDataset& ds) {
  const DecileReport rep = decile_report(rec, ds);
  std::ofstream f = open_out(p);
  f << "decile,count,mean_uncertainty,"
    << (rep.task == Task::kRegression ? "rmse" : "accuracy") << '\n';
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    f << i + 1 << ',' << rep.rows[i].count << ','
      << fmt(rep.rows[i].mean_uncertainty) << ',' << fmt(rep.rows[i].error)
      << '\n';
}

// FNV-1a, for the manifest's config hash.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

const char* task_name(Task task) {
  return task == Task::kRegression ? "regression" : "classification";
}

std::optional<Strategy> parse_strategy(const std::string& name) {
  static const std::pair<const char*, Strategy> table[] = {
      {"no_retrain", Strategy::kNoRetrain},
      {"uninformed", Strategy::kUninformed},
      {"equal_distribution", Strategy::kEqualDistribution},
      {"kswin_limited", Strategy::kKswinLimited},
      {"udd", Strategy::kUdd},
      {"kswin_unlimited", Strategy::kKswinUnlimited},
      {"adwin_error", Strategy::kAdwinError},
  };
  for (const auto& [n, s] : table)
    if (name == n) return s;
  return std::nullopt;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open plan file: " + path);
  ExperimentPlan plan;
  bool saw_dataset = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    require(eq != std::string::npos,
            "plan line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    require(!value.empty(), "plan: empty value for " + key);

    if (key == "dataset") {
      plan.dataset = value;
      saw_dataset = true;
    } else if (key == "task") {
      if (value == "regression")
        plan.task = Task::kRegression;
      else if (value == "classification")
        plan.task = Task::kClassification;
      else
        throw std::runtime_error("plan: unknown task '" + value + "'");
    } else if (key == "label_column") {
      plan.label_column = value;
    } else if (key == "schedule") {
      plan.schedule_path = value;
    } else if (key == "hidden") {
      plan.hidden.clear();
      for (const auto& tok : split_list(value))
        plan.hidden.push_back(static_cast<std::size_t>(parse_u64(tok, key)));
    } else if (key == "dropout") {
      plan.dropout.clear();
      for (const auto& tok : split_list(value))
        plan.dropout.push_back(parse_double(tok, key));
    } else if (key == "mc_passes") {
      plan.mc_passes = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "learning_rate") {
      plan.train.learning_rate = parse_double(value, key);
    } else if (key == "epochs") {
      plan.train.epochs = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "batch_size") {
      plan.train.batch_size = static_cast<std::size_t>(parse_u64(value, key));
    } else if (key == "strategies") {
      for (const auto& tok : split_list(value)) {
        const auto s = parse_strategy(tok);
        require(s.has_value(), "plan: unknown strategy '" + tok + "'");
        plan.strategies.push_back(*s);
      }
    } else if (key == "seed") {
      plan.seed = parse_u64(value, key);
    } else if (key == "alpha_udd") {
      plan.alpha_udd = parse_double(value, key);
    } else if (key == "alpha_kswin") {
      plan.alpha_kswin = parse_double(value, key);
    } else if (key == "out_dir") {
      plan.out_dir = value;
    } else if (key == "threads") {
      plan.threads = static_cast<std::size_t>(parse_u64(value, key));
    } else {
      throw std::runtime_error("plan line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
    }
  }
  require(saw_dataset, "plan: missing dataset");
  require(!plan.strategies.empty(), "plan: missing strategies");
  for (std::size_t i = 0; i < plan.strategies.size(); ++i)
    for (std::size_t j = i + 1; j < plan.strategies.size(); ++j)
      require(plan.strategies[i] != plan.strategies[j],
              "plan: duplicate strategy in list");
  return plan;
}

void cmd_synth(SynthKind kind, const std::string& out_dir, std::uint64_t seed) {
  DriftSchedule sched = reference_schedule(kind);
  sched.seed = seed;
  const StreamDataset ds = materialize_synth(kind, sched);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  write_stream_csv((dir / (ds.name + ".csv")).string(), ds);
  write_schedule_file((dir / (ds.name + "_schedule.txt")).string(), sched);
}

ResultTable cmd_run(const ExperimentPlan& plan_in) {
  ExperimentPlan plan = plan_in;
  if (const char* env = std::getenv("DRIFTLAB_OUT_DIR")) plan.out_dir = env;
  if (const char* env = std::getenv("DRIFTLAB_THREADS"))
    plan.threads = static_cast<std::size_t>(parse_u64(env, "DRIFTLAB_THREADS"));
  require(!plan.strategies.empty(), "plan: missing strategies");

  const bool has_udd =
      std::find(plan.strategies.begin(), plan.strategies.end(), Strategy::kUdd) !=
      plan.strategies.end();
  for (Strategy s : plan.strategies)
    require(!needs_budget(s) || has_udd,
            std::string("plan: ") + strategy_name(s) +
                " needs a retraining budget, add udd to the plan");

  const Prepared prep = prepare(plan);
  const RunInputs in{prep.ds, prep.part, prep.net, prep.cfg, plan.mc_passes};

  double alpha_udd = plan.alpha_udd.value_or(0.0);
  if (has_udd && !plan.alpha_udd) {
    alpha_udd =
        calibrate_alpha(in, DetectorKind::kUddAdwin, Rng::mix(plan.seed, kCalibrateTag))
            .alpha;
  }
  double alpha_kswin = plan.alpha_kswin.value_or(0.0);
  if (!plan.alpha_kswin &&
      std::any_of(plan.strategies.begin(), plan.strategies.end(), uses_kswin_alpha)) {
    alpha_kswin =
        calibrate_alpha(in, DetectorKind::kKswin, Rng::mix(plan.seed, kCalibrateTag))
            .alpha;
  }

  // UDD first; the budget-matched strategies read its retraining count.
  std::vector<std::vector<RunRecord>> runs(plan.strategies.size());
  std::size_t budget = 0;
  for (std::size_t i = 0; i < plan.strategies.size(); ++i) {
    if (plan.strategies[i] != Strategy::kUdd) continue;
    runs[i].push_back(run_udd(in, alpha_udd, strategy_seed(plan, Strategy::kUdd)));
    budget = runs[i][0].retrain_times.size();
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < plan.strategies.size(); ++i)
    if (plan.strategies[i] != Strategy::kUdd) pending.push_back(i);

  const auto run_one = [&](std::size_t i) {
    const Strategy s = plan.strategies[i];
    const std::uint64_t seed = strategy_seed(plan, s);
    switch (s) {
      case Strategy::kNoRetrain:
        runs[i].push_back(run_no_retrain(in, seed));
        break;
      case Strategy::kUninformed: {
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t k = 0; k < 5; ++k) seeds.push_back(Rng::mix(seed, k));
        runs[i] = run_uninformed(in, budget, seeds);
        break;
      }
      case Strategy::kEqualDistribution:
        runs[i].push_back(run_equal_distribution(in, budget, seed));
        break;
      case Strategy::kKswinLimited:
        runs[i].push_back(run_kswin(in, alpha_kswin, budget, seed));
        break;
      case Strategy::kKswinUnlimited:
        runs[i].push_back(run_kswin(in, alpha_kswin, std::nullopt, seed));
        break;
      case Strategy::kAdwinError:
        runs[i].push_back(run_adwin_error(in, seed));
        break;
      case Strategy::kUdd:
        break;
    }
  };

  const std::size_t n_threads =
      std::max<std::size_t>(1, plan.threads != 0 ? plan.threads : plan.strategies.size());
  if (n_threads == 1 || pending.size() <= 1) {
    for (std::size_t i : pending) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const std::size_t n_workers = std::min(n_threads, pending.size());
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w)
      workers.emplace_back([&]() {
        for (;;) {
          const std::size_t k = next.fetch_add(1);
          if (k >= pending.size()) return;
          run_one(pending[k]);
        }
      });
    for (auto& t : workers) t.join();
  }

  // Assemble the table in plan order.
  ResultTable table;
  table.task = prep.ds.task;
  for (std::size_t i = 0; i < plan.strategies.size(); ++i) {
    const Strategy s = plan.strategies[i];
    StrategyResult row;
    row.strategy = s;
    if (s == Strategy::kUninformed) {
      double metric_sum = 0.0;
      double labels_sum = 0.0;
      PredictionReport last;
      for (const auto& rec : runs[i]) {
        last = prediction_report(rec, prep.ds);
        metric_sum += last.metric;
        labels_sum += static_cast<double>(last.labels_acquired);
      }
      row.label = "mean over 5 seeds";
      row.report = last;
      row.report.metric = metric_sum / static_cast<double>(runs[i].size());
      row.report.labels_acquired = static_cast<std::size_t>(
          std::floor(labels_sum / static_cast<double>(runs[i].size()) + 0.5));
    } else {
      row.label = strategy_name(s);
      row.report = prediction_report(runs[i][0], prep.ds);
    }
    if (prep.schedule && !runs[i][0].detections.empty()) {
      row.detection =
          detection_metrics(prep.schedule->real_drifts, runs[i][0].detections, 600);
    }
    table.rows.push_back(std::move(row));
  }

  // Artifacts.
  std::filesystem::create_directories(plan.out_dir);
  const std::filesystem::path dir(plan.out_dir);

  {
    std::ofstream f = open_out(dir / "results.csv");
    f << "strategy,label,metric,value,evaluated,retrains,labels_acquired\n";
    for (const auto& row : table.rows)
      f << strategy_name(row.strategy) << ',' << row.label << ','
        << (table.task == Task::kRegression ? "rmse" : "mcc") << ','
        << fmt(row.report.metric) << ',' << row.report.evaluated << ','
        << row.report.retrain_count << ',' << row.report.labels_acquired << '\n';
  }

  for (std::size_t i = 0; i < plan.strategies.size(); ++i) {
    const std::string base = strategy_name(plan.strategies[i]);
    for (std::size_t k = 0; k < runs[i].size(); ++k) {
      const std::string suffix =
          runs[i].size() == 1 ? "" : "_seed" + std::to_string(k);
      write_trajectory(dir / ("trajectory_" + base + suffix + ".csv"), runs[i][k]);
      write_decile(dir / ("decile_" + base + suffix + ".csv"), runs[i][k], prep.ds);
      if (!runs[i][k].detections.empty())
        write_detections(dir / ("detections_" + base + suffix + ".log"), runs[i][k]);
    }
  }

  if (prep.schedule) {
    std::ofstream f = open_out(dir / "detection_metrics.csv");
    f << "strategy,matches,missed,false_alarms,mtd\n";
    for (const auto& row : table.rows) {
      if (!row.detection) continue;
      f << strategy_name(row.strategy) << ',' << row.detection->matches << ','
        << row.detection->missed << ',' << row.detection->false_alarms << ',';
      if (row.detection->mtd)
        f << fmt(*row.detection->mtd);
      else
        f << '-';
      f << '\n';
    }
  }

  {
    std::ostringstream body;
    body << "dataset = " << plan.dataset << '\n';
    body << "name = " << prep.ds.name << '\n';
    body << "task = " << task_name(prep.ds.task) << '\n';
    body << "instances = " << prep.ds.size() << '\n';
    body << "features = " << prep.ds.n_features << '\n';
    if (prep.ds.task == Task::kClassification)
      body << "classes = " << prep.ds.n_classes << '\n';
    body << "partition = " << prep.part.train_end << '/' << prep.part.val_end << '/'
         << prep.part.total << '\n';
    body << "retrain_batch = " << prep.part.retrain_batch << '\n';
    body << "hidden =";
    for (std::size_t l = 1; l + 1 < prep.net.spec.layer_sizes.size(); ++l)
      body << ' ' << prep.net.spec.layer_sizes[l];
    body << '\n';
    body << "dropout =";
    for (double r : prep.net.spec.dropout_rates) body << ' ' << fmt(r);
    body << '\n';
    body << "mc_passes = "
         << (plan.mc_passes != 0 ? plan.mc_passes : default_mc_passes(prep.ds.task))
         << '\n';
    body << "learning_rate = " << fmt(prep.cfg.learning_rate) << '\n';
    body << "epochs = " << prep.cfg.epochs << '\n';
    body << "batch_size = " << prep.cfg.batch_size << '\n';
    body << "seed = " << plan.seed << '\n';
    body << "init_seed = " << prep.cfg.seed << '\n';
    if (has_udd) body << "alpha_udd = " << fmt(alpha_udd) << '\n';
    if (std::any_of(plan.strategies.begin(), plan.strategies.end(), uses_kswin_alpha))
      body << "alpha_kswin = " << fmt(alpha_kswin) << '\n';
    for (std::size_t i = 0; i < plan.strategies.size(); ++i) {
      const Strategy s = plan.strategies[i];
      body << "strategy " << strategy_name(s) << " seed = " << strategy_seed(plan, s);
      body << " retrains = " << runs[i][0].retrain_times.size() << '\n';
    }
    std::ofstream f = open_out(dir / "manifest.txt");
    f << body.str();
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(body.str())));
    f << "config_hash = " << hash << '\n';
  }

  return table;
}

CalibrationReport cmd_calibrate(const ExperimentPlan& plan, DetectorKind kind) {
  const Prepared prep = prepare(plan);
  const RunInputs in{prep.ds, prep.part, prep.net, prep.cfg, plan.mc_passes};
  CalibrationReport report;
  report.kind = kind;
  report.result = calibrate_alpha(in, kind, Rng::mix(plan.seed, kCalibrateTag));
  return report;
}

}  // namespace driftlab
