#pragma once

#include <cstdint>
#include <vector>

namespace driftlab {

enum class SynthKind { kFriedman, kMixed };

/// Ground-truth drift positions for a generated stream. An instance at index
/// t is produced under the regime counting how many drift points are <= t.
struct DriftSchedule {
  std::size_t length = 0;
  std::vector<std::size_t> real_drifts;
  std::vector<std::size_t> virtual_drifts;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless both lists are strictly increasing,
  // inside (0, length), and disjoint from each other.
  void validate() const;

  std::size_t real_regime(std::size_t t) const;
  std::size_t virtual_regime(std::size_t t) const;
  // Count of all drift points <= t, used as the instance segment id.
  std::size_t segment(std::size_t t) const;
};

struct LabeledInstance {
  std::vector<double> x;
  double y = 0.0;  // regression target, or class index stored as a double
  std::size_t t = 0;
  std::size_t segment_id = 0;
};

/// The 15,000-step layout used by the evaluation runs: real drifts at 4500,
/// 7500 and 10500, virtual drifts at 6000 and 9000, all past the 15%
/// calibration prefix.
DriftSchedule reference_schedule(SynthKind kind);

/// Friedman #1 regression stream, ten features.
///
/// Base regime: x1..x10 ~ U[0,1] iid, y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2
/// + 10 x4 + 5 x5 + N(0,1). The j-th real drift rotates the five relevant
/// feature roles one step, grows the sine amplitude to 10 (1 + r/2), parks
/// the j-th relevant feature on the band [1.1, 1.2], above anything earlier
/// regimes produced, so the change is visible to a model watching the
/// inputs; earlier bands persist.
/// The j-th virtual drift re-shapes the j-th noise feature from U[0,1] to
/// the edge bands [0,0.1] u [0.9,1], staying inside the original support;
/// earlier re-shapes persist.
std::vector<LabeledInstance> friedman_stream(const DriftSchedule& schedule);

/// Mixed classification stream: b1, b2 ~ Bernoulli(1/2), d1..d4 uniform on a
/// ten-point grid {0..9}/9. Label is 1 iff at least two of {b1, b2,
/// d1 < 0.5 + 0.3 sin(3 pi d2)} hold, the inequality flipping at every real
/// drift. Odd real regimes also redraw d1 inside a strip within 1/18 of the
/// boundary 0.5 + 0.3 sin(3 pi d2), so the flipped vote alone decides those
/// labels; even regimes return d1 to the grid. Virtual drifts thin the
/// noise grids in place: the first removes cell 4/9 from d3, the second
/// removes 5/9 from d4.
std::vector<LabeledInstance> mixed_stream(const DriftSchedule& schedule);

/// Regime-r regression function on the first five components of x,
/// noise-free. Exposed so tests can compare regime functions directly.
double friedman_regime_value(const std::vector<double>& x, std::size_t real_regime);

/// Regime-r label rule of the mixed stream.
bool mixed_label(double b1, double b2, double d1, double d2, std::size_t real_regime);

}  // namespace driftlab
