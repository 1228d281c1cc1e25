#include "driftlab/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace driftlab {

namespace {

constexpr double kSigmaFloor = 1e-8;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  const std::string t = trim(cell);
  std::size_t consumed = 0;
  double v = 0.0;
  bool ok = !t.empty();
  if (ok) {
    try {
      v = std::stod(t, &consumed);
    } catch (const std::exception&) {
      ok = false;
    }
  }
  if (!ok || consumed != t.size() || !std::isfinite(v))
    fail("csv: unparseable value '" + cell + "' at row " + std::to_string(row) +
         ", column '" + column + "'");
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Partition make_partition(const StreamDataset& ds) {
  const std::size_t n = ds.size();
  if (n < 100) fail("partition: dataset needs at least 100 instances");
  Partition p;
  p.total = n;
  p.train_end = round_half_up(0.05 * static_cast<double>(n));
  p.val_end = p.train_end + round_half_up(0.10 * static_cast<double>(n));
  p.retrain_batch = std::max<std::size_t>(1, round_half_up(0.01 * static_cast<double>(n)));
  return p;
}

TrainingPool::TrainingPool(std::size_t base_begin, std::size_t base_end)
    : base_begin_(base_begin), base_end_(base_end) {
  if (base_end < base_begin) fail("pool: inverted base range");
}

std::size_t TrainingPool::acquire_recent(const Partition& part, std::size_t t) {
  if (t < part.stream_begin() || t >= part.total)
    fail("pool: acquisition time outside the stream region");
  const std::size_t want = part.retrain_batch;
  const std::size_t lo = std::max(part.stream_begin(), t + 1 >= want ? t + 1 - want : 0);
  const std::size_t hi = t;  // inclusive

  // Count and splice [lo,hi] against the existing disjoint ranges.
  std::size_t gained = 0;
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  std::size_t cur_lo = lo, cur_hi = hi;
  bool placed = false;
  std::size_t covered = 0;
  for (const auto& r : acquired_) {
    if (r.second + 1 < cur_lo) {
      merged.push_back(r);
    } else if (cur_hi + 1 < r.first) {
      if (!placed) {
        merged.emplace_back(cur_lo, cur_hi);
        placed = true;
      }
      merged.push_back(r);
    } else {
      // Overlapping or adjacent: fold into the candidate, remembering how
      // much of [lo,hi] was already owned.
      const std::size_t olo = std::max(r.first, lo);
      const std::size_t ohi = std::min(r.second, hi);
      if (olo <= ohi) covered += ohi - olo + 1;
      cur_lo = std::min(cur_lo, r.first);
      cur_hi = std::max(cur_hi, r.second);
    }
  }
  if (!placed) merged.emplace_back(cur_lo, cur_hi);
  std::sort(merged.begin(), merged.end());
  acquired_ = std::move(merged);
  gained = (hi - lo + 1) - covered;
  labels_acquired_ += gained;
  return gained;
}

std::vector<std::size_t> TrainingPool::indices() const {
  std::vector<std::size_t> out;
  out.reserve(size());
  for (std::size_t i = base_begin_; i < base_end_; ++i) out.push_back(i);
  for (const auto& r : acquired_)
    for (std::size_t i = r.first; i <= r.second; ++i) out.push_back(i);
  return out;
}

std::size_t TrainingPool::acquired_union_size() const {
  std::size_t n = 0;
  for (const auto& r : acquired_) n += r.second - r.first + 1;
  return n;
}

std::size_t TrainingPool::max_index() const {
  std::size_t m = base_end_ > base_begin_ ? base_end_ - 1 : base_begin_;
  if (!acquired_.empty()) m = std::max(m, acquired_.back().second);
  return m;
}

std::size_t TrainingPool::size() const {
  return (base_end_ - base_begin_) + acquired_union_size();
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / sigma[i];
  return z;
}

std::vector<double> Standardizer::invert(const std::vector<double>& z) const {
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * sigma[i] + mean[i];
  return x;
}

Standardizer fit_standardizer(const StreamDataset& ds, const std::vector<std::size_t>& pool) {
  if (pool.empty()) fail("standardize: empty pool");
  const std::size_t d = ds.n_features;
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.sigma.assign(d, 0.0);
  for (std::size_t idx : pool) {
    if (idx >= ds.size()) fail("standardize: pool index out of range");
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += ds.instances[idx].x[k];
  }
  const double inv = 1.0 / static_cast<double>(pool.size());
  for (double& m : s.mean) m *= inv;
  for (std::size_t idx : pool)
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = ds.instances[idx].x[k] - s.mean[k];
      s.sigma[k] += diff * diff;
    }
  for (double& v : s.sigma) v = std::max(kSigmaFloor, std::sqrt(v * inv));
  return s;
}

StreamDataset load_csv(const std::string& path, Task task, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) fail("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail("csv: empty file '" + path + "'");
  if (line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' && line[2] == '\xBF')
    line.erase(0, 3);  // strip a UTF-8 BOM

  const auto header = split_csv_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (trim(header[i]) == label_column) label_idx = i;
  if (label_idx == header.size())
    fail("csv: label column '" + label_column + "' not found in '" + path + "'");
  if (header.size() < 2) fail("csv: need at least one feature column");

  StreamDataset ds;
  ds.task = task;
  ds.n_features = header.size() - 1;
  ds.name = path;

  std::unordered_map<std::string, std::size_t> class_ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      fail("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
           " cells, expected " + std::to_string(header.size()));
    LabeledInstance inst;
    inst.t = ds.instances.size();
    inst.x.reserve(ds.n_features);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == label_idx) continue;
      inst.x.push_back(parse_cell(cells[i], row, trim(header[i])));
    }
    const std::string label = trim(cells[label_idx]);
    if (task == Task::kRegression) {
      inst.y = parse_cell(cells[label_idx], row, label_column);
    } else {
      auto [it, inserted] = class_ids.try_emplace(label, class_ids.size());
      if (inserted) ds.class_names.push_back(label);
      inst.y = static_cast<double>(it->second);
    }
    ds.instances.push_back(std::move(inst));
  }
  if (ds.instances.empty()) fail("csv: no data rows in '" + path + "'");
  ds.n_classes = task == Task::kClassification ? class_ids.size() : 0;
  return ds;
}

void write_stream_csv(const std::string& path, const StreamDataset& ds) {
  std::ofstream out(path);
  if (!out) fail("csv: cannot write '" + path + "'");
  for (std::size_t k = 0; k < ds.n_features; ++k) out << 'f' << (k + 1) << ',';
  out << "target\n";
  for (const auto& inst : ds.instances) {
    for (double v : inst.x) out << format_double(v) << ',';
    if (ds.task == Task::kClassification)
      out << static_cast<long long>(inst.y) << '\n';
    else
      out << format_double(inst.y) << '\n';
  }
}

void write_schedule_file(const std::string& path, const DriftSchedule& schedule) {
  std::ofstream out(path);
  if (!out) fail("schedule: cannot write '" + path + "'");
  struct Entry {
    std::size_t t;
    const char* kind;
  };
  std::vector<Entry> entries;
  for (std::size_t t : schedule.real_drifts) entries.push_back({t, "real"});
  for (std::size_t t : schedule.virtual_drifts) entries.push_back({t, "virtual"});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.t < b.t; });
  for (const auto& e : entries) out << e.kind << ' ' << e.t << '\n';
}

DriftSchedule read_schedule_file(const std::string& path, std::size_t length) {
  std::ifstream in(path);
  if (!in) fail("schedule: cannot open '" + path + "'");
  DriftSchedule s;
  s.length = length;
  std::string kind;
  std::size_t t;
  while (in >> kind >> t) {
    if (kind == "real")
      s.real_drifts.push_back(t);
    else if (kind == "virtual")
      s.virtual_drifts.push_back(t);
    else
      fail("schedule: unknown drift kind '" + kind + "' in '" + path + "'");
  }
  std::sort(s.real_drifts.begin(), s.real_drifts.end());
  std::sort(s.virtual_drifts.begin(), s.virtual_drifts.end());
  s.validate();
  return s;
}

}  // namespace driftlab
