#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace driftlab {

enum class DriftSource { kUncertaintyAdwin, kErrorAdwin, kKswin };

struct DriftSignal {
  std::size_t time_index = 0;
  DriftSource source = DriftSource::kUncertaintyAdwin;
  std::optional<double> p_value;        // KSWIN only
  std::optional<std::size_t> feature_index;  // KSWIN only
};

/**
 * Adaptive windowing change detector over a stream of reals.
 *
 * The window is kept as an exponential histogram: level i holds buckets of
 * 2^i elements, at most five buckets per level; overflowing levels merge
 * their two oldest buckets into the next level. Each insertion re-checks
 * every bucket boundary as a candidate split and shrinks the window from the
 * old end while any split's subwindow means differ by more than the
 * variance-based threshold at confidence delta. add() returns true when at
 * least one shrink happened for that insertion.
 */
class Adwin {
 public:
  explicit Adwin(double delta);

  // Inserts one value (must be finite) and reports whether a change was
  // detected at this step.
  bool add(double value);

  void reset();

  std::size_t width() const { return width_; }
  double total() const { return total_; }
  double mean() const { return width_ == 0 ? 0.0 : total_ / static_cast<double>(width_); }
  // Population variance of the current window.
  double variance() const { return width_ == 0 ? 0.0 : var_sum_ / static_cast<double>(width_); }
  double delta() const { return delta_; }

  // Histogram introspection, used by the structural tests.
  std::size_t bucket_count() const;
  std::vector<std::size_t> level_bucket_counts() const;
  std::size_t width_from_buckets() const;

  static constexpr std::size_t kMaxBucketsPerLevel = 5;

 private:
  struct Bucket {
    double sum = 0.0;
    double var = 0.0;  // accumulated squared deviation within the bucket
  };

  static constexpr std::size_t kMinSubWindow = 5;

  void insert(double value);
  void compress();
  // Re-checks all splits, dropping the oldest bucket while one fires.
  bool shrink_while_detecting();
  bool scan_once();
  void drop_oldest_bucket();
  double cut_threshold(std::size_t n0, std::size_t n1) const;

  double delta_;
  // levels_[i] holds the level-i buckets ordered oldest first.
  std::vector<std::vector<Bucket>> levels_;
  std::size_t width_ = 0;
  double total_ = 0.0;
  double var_sum_ = 0.0;
};

/// Exact two-sample Kolmogorov-Smirnov statistic sup |ECDF_a - ECDF_b|.
double ks_statistic(const std::vector<double>& a, const std::vector<double>& b);

/// Asymptotic two-sample p-value 2 * sum_j (-1)^(j-1) exp(-2 j^2 lambda^2)
/// with lambda = d (sqrt(en) + 0.12 + 0.11 / sqrt(en)), en = n m / (n + m).
/// The series is truncated once terms drop below 1e-10 of the running sum
/// and the result is clamped into (0, 1].
double ks_p_value(double d, std::size_t n, std::size_t m);

/**
 * Sliding-window KS detector, one window per feature. Once a window holds
 * window_size values, every insertion compares the stat_size newest values
 * against the whole older region; a change is flagged when any feature's
 * p-value undercuts alpha, and all windows are cleared after a detection.
 */
class Kswin {
 public:
  Kswin(double alpha, std::size_t n_features, std::size_t window_size = 200,
        std::size_t stat_size = 100);

  struct Outcome {
    bool detected = false;
    std::optional<DriftSignal> best;  // smallest p-value over features
  };

  Outcome add(const std::vector<double>& x, std::size_t time_index);

  void reset();
  double alpha() const { return alpha_; }
  std::size_t window_size() const { return window_size_; }
  std::size_t stat_size() const { return stat_size_; }
  std::size_t fill() const { return fill_; }

 private:
  double alpha_;
  std::size_t n_features_;
  std::size_t window_size_;
  std::size_t stat_size_;
  std::size_t fill_ = 0;
  // Ring buffers, one per feature; head_ marks the oldest slot once full.
  std::vector<std::vector<double>> windows_;
  std::size_t head_ = 0;
};

}  // namespace driftlab
