#include "driftlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace driftlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

DetectionReport detection_metrics(const std::vector<std::size_t>& truths,
                                  const std::vector<DriftSignal>& detections,
                                  std::size_t window) {
  require(window > 0, "detection_metrics: window must be positive");
  for (std::size_t i = 1; i < truths.size(); ++i)
    require(truths[i] > truths[i - 1], "detection_metrics: truths must be increasing");
  std::vector<std::size_t> times;
  times.reserve(detections.size());
  for (const auto& d : detections) times.push_back(d.time_index);
  require(std::is_sorted(times.begin(), times.end()),
          "detection_metrics: detections must be in time order");

  DetectionReport rep;
  rep.matching_window = window;
  std::vector<bool> used(times.size(), false);
  double delay_sum = 0.0;
  for (std::size_t truth : truths) {
    bool matched = false;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (used[i]) continue;
      if (times[i] <= truth) continue;
      if (times[i] > truth + window) break;
      used[i] = true;
      matched = true;
      delay_sum += static_cast<double>(times[i] - truth);
      break;
    }
    if (!matched) ++rep.missed;
  }
  rep.matches = truths.size() - rep.missed;
  rep.false_alarms = times.size() - rep.matches;
  if (rep.matches > 0) rep.mtd = delay_sum / static_cast<double>(rep.matches);
  return rep;
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& actuals) {
  require(!predictions.empty(), "rmse: empty input");
  require(predictions.size() == actuals.size(), "rmse: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - actuals[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

double mcc(const std::vector<std::size_t>& predictions,
           const std::vector<std::size_t>& actuals, std::size_t n_classes) {
  require(!predictions.empty(), "mcc: empty input");
  require(predictions.size() == actuals.size(), "mcc: size mismatch");
  require(n_classes >= 2, "mcc: need at least two classes");
  std::vector<double> confusion(n_classes * n_classes, 0.0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    require(predictions[i] < n_classes && actuals[i] < n_classes,
            "mcc: class index out of range");
    confusion[actuals[i] * n_classes + predictions[i]] += 1.0;
  }
  const double s = static_cast<double>(predictions.size());
  double trace = 0.0;
  for (std::size_t k = 0; k < n_classes; ++k) trace += confusion[k * n_classes + k];
  std::vector<double> truth_marginal(n_classes, 0.0), pred_marginal(n_classes, 0.0);
  for (std::size_t t = 0; t < n_classes; ++t)
    for (std::size_t p = 0; p < n_classes; ++p) {
      truth_marginal[t] += confusion[t * n_classes + p];
      pred_marginal[p] += confusion[t * n_classes + p];
    }
  double cross = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    cross += pred_marginal[k] * truth_marginal[k];
    pp += pred_marginal[k] * pred_marginal[k];
    tt += truth_marginal[k] * truth_marginal[k];
  }
  // One sqrt of the product, not a product of sqrts: the factors are exact
  // integers here, so perfect agreement divides two equal doubles and lands
  // on 1.0 exactly.
  const double denom = std::sqrt((s * s - pp) * (s * s - tt));
  if (denom == 0.0) return 0.0;
  return (trace * s - cross) / denom;
}

DecileReport decile_analysis(const std::vector<std::pair<double, double>>& unc_and_error,
                             Task task) {
  require(unc_and_error.size() >= 10, "decile_analysis: need at least 10 records");
  const std::size_t n = unc_and_error.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return unc_and_error[a].first < unc_and_error[b].first;
  });

  DecileReport rep;
  rep.task = task;
  const std::size_t base = n / 10;
  const std::size_t extra = n % 10;  // first groups absorb the remainder
  std::size_t pos = 0;
  for (std::size_t g = 0; g < 10; ++g) {
    const std::size_t count = base + (g < extra ? 1 : 0);
    DecileRow row;
    row.count = count;
    double err = 0.0;
    for (std::size_t k = 0; k < count; ++k, ++pos) {
      row.mean_uncertainty += unc_and_error[order[pos]].first;
      err += unc_and_error[order[pos]].second;
    }
    row.mean_uncertainty /= static_cast<double>(count);
    err /= static_cast<double>(count);
    row.error = task == Task::kRegression ? std::sqrt(err) : err;
    rep.rows.push_back(row);
  }
  return rep;
}

PredictionReport prediction_report(const RunRecord& record, const StreamDataset& ds) {
  require(record.stream_begin + record.predictions.size() <= ds.size(),
          "prediction_report: record does not fit the dataset");
  PredictionReport rep;
  rep.task = record.task;
  rep.evaluated = record.predictions.size();
  rep.retrain_count = record.retrain_times.size();
  rep.labels_acquired = record.labels_acquired;
  if (record.task == Task::kRegression) {
    std::vector<double> actual(rep.evaluated);
    for (std::size_t i = 0; i < rep.evaluated; ++i)
      actual[i] = ds.instances[record.stream_begin + i].y;
    rep.metric = rmse(record.predictions, actual);
  } else {
    std::vector<std::size_t> pred(rep.evaluated), actual(rep.evaluated);
    for (std::size_t i = 0; i < rep.evaluated; ++i) {
      pred[i] = static_cast<std::size_t>(record.predictions[i]);
      actual[i] = static_cast<std::size_t>(ds.instances[record.stream_begin + i].y);
    }
    rep.metric = mcc(pred, actual, std::max<std::size_t>(2, ds.n_classes));
  }
  return rep;
}

DecileReport decile_report(const RunRecord& record, const StreamDataset& ds) {
  require(record.predictions.size() == record.uncertainties.size(),
          "decile_report: ragged record");
  std::vector<std::pair<double, double>> rows;
  rows.reserve(record.predictions.size());
  for (std::size_t i = 0; i < record.predictions.size(); ++i) {
    const double y = ds.instances[record.stream_begin + i].y;
    double err;
    if (record.task == Task::kRegression) {
      const double d = record.predictions[i] - y;
      err = d * d;
    } else {
      err = record.predictions[i] == y ? 1.0 : 0.0;
    }
    rows.emplace_back(record.uncertainties[i], err);
  }
  return decile_analysis(rows, record.task);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "spearman: size mismatch");
  require(a.size() >= 2, "spearman: need at least two points");
  return pearson(average_ranks(a), average_ranks(b));
}

}  // namespace driftlab
