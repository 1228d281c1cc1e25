#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "driftlab/detectors.hpp"
#include "driftlab/experiment.hpp"
#include "driftlab/synth.hpp"
#include "driftlab/uncertainty.hpp"

namespace py = pybind11;

namespace {

driftlab::SynthKind parse_kind(const std::string& kind) {
  if (kind == "friedman") return driftlab::SynthKind::kFriedman;
  if (kind == "mixed") return driftlab::SynthKind::kMixed;
  throw py::value_error("kind must be 'friedman' or 'mixed'");
}

py::object opt_float(const std::optional<double>& v) {
  return v ? py::cast(*v) : py::none();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Streaming drift detection core: detectors, synthetic streams and "
            "the retraining-strategy harness";
  m.attr("__version__") = "0.1.0";

  m.def("entropy_bits", &driftlab::entropy_bits, py::arg("distribution"),
        "Shannon entropy in bits of a probability vector");
  m.def("ks_statistic", &driftlab::ks_statistic, py::arg("a"), py::arg("b"),
        "Exact two-sample Kolmogorov-Smirnov statistic");
  m.def("ks_p_value", &driftlab::ks_p_value, py::arg("d"), py::arg("n"),
        py::arg("m"), "Asymptotic two-sample KS p-value");

  py::class_<driftlab::Adwin>(m, "Adwin",
                              "Adaptive windowing change detector; add() "
                              "returns True when the window shrank")
      .def(py::init<double>(), py::arg("delta"))
      .def("add", &driftlab::Adwin::add, py::arg("value"))
      .def("reset", &driftlab::Adwin::reset)
      .def_property_readonly("width", &driftlab::Adwin::width)
      .def_property_readonly("mean", &driftlab::Adwin::mean)
      .def_property_readonly("variance", &driftlab::Adwin::variance)
      .def_property_readonly("delta", &driftlab::Adwin::delta);

  py::class_<driftlab::Kswin>(m, "Kswin",
                              "Per-feature sliding-window KS detector")
      .def(py::init<double, std::size_t, std::size_t, std::size_t>(),
           py::arg("alpha"), py::arg("n_features"), py::arg("window_size") = 200,
           py::arg("stat_size") = 100)
      .def("add",
           [](driftlab::Kswin& k, const std::vector<double>& x, std::size_t t) {
             const auto out = k.add(x, t);
             py::dict d;
             d["detected"] = out.detected;
             if (out.best) {
               d["p_value"] = opt_float(out.best->p_value);
               d["feature"] =
                   out.best->feature_index ? py::cast(*out.best->feature_index) : py::none();
             } else {
               d["p_value"] = py::none();
               d["feature"] = py::none();
             }
             return d;
           },
           py::arg("x"), py::arg("time_index"))
      .def("reset", &driftlab::Kswin::reset)
      .def_property_readonly("fill", &driftlab::Kswin::fill);

  m.def(
      "synth_stream",
      [](const std::string& kind, std::uint64_t seed) {
        driftlab::DriftSchedule sched =
            driftlab::reference_schedule(parse_kind(kind));
        sched.seed = seed;
        const auto instances = kind == "friedman"
                                   ? driftlab::friedman_stream(sched)
                                   : driftlab::mixed_stream(sched);
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        xs.reserve(instances.size());
        ys.reserve(instances.size());
        for (const auto& inst : instances) {
          xs.push_back(inst.x);
          ys.push_back(inst.y);
        }
        py::dict d;
        d["x"] = std::move(xs);
        d["y"] = std::move(ys);
        d["real_drifts"] = sched.real_drifts;
        d["virtual_drifts"] = sched.virtual_drifts;
        d["task"] = kind == "friedman" ? "regression" : "classification";
        return d;
      },
      py::arg("kind"), py::arg("seed") = 7,
      "Generate the 15,000-step evaluation stream in memory");

  m.def(
      "write_synth",
      [](const std::string& kind, const std::string& out_dir, std::uint64_t seed) {
        driftlab::cmd_synth(parse_kind(kind), out_dir, seed);
      },
      py::arg("kind"), py::arg("out_dir"), py::arg("seed") = 7,
      "Write a synthetic stream CSV plus its drift-schedule sidecar");

  m.def(
      "run_plan",
      [](const std::string& path) {
        const auto plan = driftlab::load_plan(path);
        driftlab::ResultTable table;
        {
          py::gil_scoped_release release;
          table = driftlab::cmd_run(plan);
        }
        py::list rows;
        for (const auto& row : table.rows) {
          py::dict d;
          d["strategy"] = driftlab::strategy_name(row.strategy);
          d["label"] = row.label;
          d["metric"] = table.task == driftlab::Task::kRegression ? "rmse" : "mcc";
          d["value"] = row.report.metric;
          d["evaluated"] = row.report.evaluated;
          d["retrains"] = row.report.retrain_count;
          d["labels_acquired"] = row.report.labels_acquired;
          if (row.detection) {
            py::dict det;
            det["matches"] = row.detection->matches;
            det["missed"] = row.detection->missed;
            det["false_alarms"] = row.detection->false_alarms;
            det["mtd"] = opt_float(row.detection->mtd);
            d["detection"] = det;
          }
          rows.append(d);
        }
        return rows;
      },
      py::arg("plan_path"),
      "Execute a plan file; returns the result table as a list of dicts");

  m.def(
      "calibrate",
      [](const std::string& path, const std::string& detector) {
        driftlab::DetectorKind kind;
        if (detector == "udd")
          kind = driftlab::DetectorKind::kUddAdwin;
        else if (detector == "kswin")
          kind = driftlab::DetectorKind::kKswin;
        else
          throw py::value_error("detector must be 'udd' or 'kswin'");
        const auto plan = driftlab::load_plan(path);
        driftlab::CalibrationReport report;
        {
          py::gil_scoped_release release;
          report = driftlab::cmd_calibrate(plan, kind);
        }
        py::dict d;
        d["alpha"] = report.result.alpha;
        d["fallback"] = report.result.fallback;
        d["counts"] = report.result.counts;
        return d;
      },
      py::arg("plan_path"), py::arg("detector"),
      "Sweep alpha on the validation segment; returns alpha and grid counts");
}
