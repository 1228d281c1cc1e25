#include "driftlab/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace driftlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Adwin

Adwin::Adwin(double delta) : delta_(delta) {
  require(std::isfinite(delta) && delta > 0.0 && delta < 1.0,
          "adwin: delta outside (0,1)");
  levels_.emplace_back();
}

void Adwin::reset() {
  levels_.clear();
  levels_.emplace_back();
  width_ = 0;
  total_ = 0.0;
  var_sum_ = 0.0;
}

bool Adwin::add(double value) {
  require(std::isfinite(value), "adwin: non-finite value");
  insert(value);
  compress();
  return shrink_while_detecting();
}

void Adwin::insert(double value) {
  ++width_;
  // Newest data always enters at level 0; merging ages it upward.
  levels_[0].push_back(Bucket{value, 0.0});
  if (width_ > 1) {
    const double prev_mean = total_ / static_cast<double>(width_ - 1);
    const double d = value - prev_mean;
    var_sum_ += static_cast<double>(width_ - 1) * d * d / static_cast<double>(width_);
  }
  total_ += value;
}

void Adwin::compress() {
  for (std::size_t level = 0; level < levels_.size(); ++level) {
    if (levels_[level].size() <= kMaxBucketsPerLevel) break;
    if (level + 1 == levels_.size()) levels_.emplace_back();
    // Merge the two oldest buckets of this level into one bucket of twice
    // the size. The merged data is newer than everything already sitting in
    // the next level, so it is appended at that level's newest end.
    const double n = static_cast<double>(std::size_t{1} << level);
    const Bucket a = levels_[level][0];
    const Bucket b = levels_[level][1];
    const double u1 = a.sum / n;
    const double u2 = b.sum / n;
    const double inc = n * n * (u1 - u2) * (u1 - u2) / (n + n);
    levels_[level + 1].push_back(Bucket{a.sum + b.sum, a.var + b.var + inc});
    levels_[level].erase(levels_[level].begin(), levels_[level].begin() + 2);
  }
}

double Adwin::cut_threshold(std::size_t n0, std::size_t n1) const {
  const double n = static_cast<double>(width_);
  const double dd = std::log(2.0 * std::log(n) / delta_);
  const double v = variance();
  const double m = 1.0 / static_cast<double>(n0 - kMinSubWindow + 1) +
                   1.0 / static_cast<double>(n1 - kMinSubWindow + 1);
  return std::sqrt(2.0 * m * v * dd) + (2.0 / 3.0) * m * dd;
}

bool Adwin::scan_once() {
  // Walk splits from the oldest boundary to the newest: levels top down,
  // oldest bucket first inside a level.
  std::size_t n0 = 0;
  double u0 = 0.0;
  for (std::size_t level = levels_.size(); level-- > 0;) {
    const std::size_t bucket_n = std::size_t{1} << level;
    for (const Bucket& b : levels_[level]) {
      n0 += bucket_n;
      u0 += b.sum;
      const std::size_t n1 = width_ - n0;
      if (n1 == 0) return false;  // newest bucket, no split to the right
      if (n0 < kMinSubWindow || n1 < kMinSubWindow) continue;
      const double mean0 = u0 / static_cast<double>(n0);
      const double mean1 = (total_ - u0) / static_cast<double>(n1);
      if (std::fabs(mean0 - mean1) > cut_threshold(n0, n1)) {
        drop_oldest_bucket();
        return true;
      }
    }
  }
  return false;
}

bool Adwin::shrink_while_detecting() {
  if (width_ < 2 * kMinSubWindow) return false;
  bool detected = false;
  while (scan_once()) detected = true;
  return detected;
}

void Adwin::drop_oldest_bucket() {
  const std::size_t level = levels_.size() - 1;
  const std::size_t n1 = std::size_t{1} << level;
  const Bucket b = levels_[level].front();
  width_ -= n1;
  total_ -= b.sum;
  if (width_ > 0) {
    const double u1 = b.sum / static_cast<double>(n1);
    const double d = u1 - total_ / static_cast<double>(width_);
    var_sum_ -= b.var + static_cast<double>(n1) * static_cast<double>(width_) * d * d /
                            static_cast<double>(n1 + width_);
    var_sum_ = std::max(0.0, var_sum_);
  } else {
    var_sum_ = 0.0;
  }
  levels_[level].erase(levels_[level].begin());
  while (levels_.size() > 1 && levels_.back().empty()) levels_.pop_back();
}

std::size_t Adwin::bucket_count() const {
  std::size_t n = 0;
  for (const auto& level : levels_) n += level.size();
  return n;
}

std::vector<std::size_t> Adwin::level_bucket_counts() const {
  std::vector<std::size_t> counts;
  counts.reserve(levels_.size());
  for (const auto& level : levels_) counts.push_back(level.size());
  return counts;
}

std::size_t Adwin::width_from_buckets() const {
  std::size_t n = 0;
  for (std::size_t level = 0; level < levels_.size(); ++level)
    n += levels_[level].size() * (std::size_t{1} << level);
  return n;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

double ks_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  require(!a.empty() && !b.empty(), "ks_statistic: empty sample");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one sample is exhausted the gap only shrinks at later points.
  return d;
}

double ks_p_value(double d, std::size_t n, std::size_t m) {
  require(n >= 1 && m >= 1, "ks_p_value: empty sample size");
  require(std::isfinite(d) && d >= 0.0 && d <= 1.0, "ks_p_value: d outside [0,1]");
  const double en = static_cast<double>(n) * static_cast<double>(m) /
                    static_cast<double>(n + m);
  const double root = std::sqrt(en);
  const double lambda = d * (root + 0.12 + 0.11 / root);
  // Below this the series needs hundreds of near-unit terms while the true
  // value is 1 to double precision.
  if (lambda < 0.05) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 1000; ++j) {
    const double term = 2.0 * std::exp(-2.0 * lambda * lambda *
                                       static_cast<double>(j) * static_cast<double>(j));
    sum += sign * term;
    if (term < 1e-10 * std::max(sum, 1e-280)) break;
    sign = -sign;
  }
  if (sum <= 0.0) return std::numeric_limits<double>::min();
  return std::min(1.0, sum);
}

// ---------------------------------------------------------------------------
// Kswin

Kswin::Kswin(double alpha, std::size_t n_features, std::size_t window_size,
             std::size_t stat_size)
    : alpha_(alpha),
      n_features_(n_features),
      window_size_(window_size),
      stat_size_(stat_size) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0,
          "kswin: alpha outside (0,1)");
  require(n_features >= 1, "kswin: need at least one feature");
  require(stat_size >= 1 && stat_size < window_size,
          "kswin: stat_size must be inside the window");
  windows_.assign(n_features_, std::vector<double>());
  for (auto& w : windows_) w.reserve(window_size_);
}

void Kswin::reset() {
  for (auto& w : windows_) w.clear();
  fill_ = 0;
  head_ = 0;
}

Kswin::Outcome Kswin::add(const std::vector<double>& x, std::size_t time_index) {
  require(x.size() == n_features_, "kswin: feature dimension changed mid-stream");
  for (double v : x) require(std::isfinite(v), "kswin: non-finite feature value");

  if (fill_ < window_size_) {
    for (std::size_t f = 0; f < n_features_; ++f) windows_[f].push_back(x[f]);
    ++fill_;
  } else {
    for (std::size_t f = 0; f < n_features_; ++f) windows_[f][head_] = x[f];
    head_ = (head_ + 1) % window_size_;
  }
  Outcome out;
  if (fill_ < window_size_) return out;

  const std::size_t older_n = window_size_ - stat_size_;
  std::vector<double> older(older_n), recent(stat_size_);
  double best_p = 1.0;
  std::size_t best_f = 0;
  for (std::size_t f = 0; f < n_features_; ++f) {
    const auto& w = windows_[f];
    // head_ points at the oldest slot; unroll the ring into age order.
    for (std::size_t k = 0; k < older_n; ++k) older[k] = w[(head_ + k) % window_size_];
    for (std::size_t k = 0; k < stat_size_; ++k)
      recent[k] = w[(head_ + older_n + k) % window_size_];
    const double d = ks_statistic(older, recent);
    const double p = ks_p_value(d, older_n, stat_size_);
    if (f == 0 || p < best_p) {
      best_p = p;
      best_f = f;
    }
  }
  if (best_p < alpha_) {
    out.detected = true;
    DriftSignal sig;
    sig.time_index = time_index;
    sig.source = DriftSource::kKswin;
    sig.p_value = best_p;
    sig.feature_index = best_f;
    out.best = sig;
    reset();
  }
  return out;
}

}  // namespace driftlab
