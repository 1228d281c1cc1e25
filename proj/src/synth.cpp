#include "driftlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::size_t regime_of(const std::vector<std::size_t>& drifts, std::size_t t) {
  std::size_t r = 0;
  while (r < drifts.size() && drifts[r] <= t) ++r;
  return r;
}

// Relevant-feature draw for the Friedman stream. The base regime is uniform
// on [0,1]; the j-th real drift parks the j-th relevant feature on the
// narrow band [1.1, 1.2], just above everything earlier regimes produced,
// and earlier bands persist. A pure change of the regression function would
// leave the input distribution untouched, so the drift has to be carried by
// the features themselves, onto fresh ground. A narrow band does that
// without widening the within-regime spread, and keeping it close to the
// old support lets a model retrained on post-drift rows absorb it instead
// of staying alarmed for the rest of the stream.
double friedman_relevant_draw(Rng& rng, std::size_t real_regime, std::size_t slot) {
  const double u = rng.uniform01();
  if (slot >= real_regime) return u;
  return 1.1 + 0.1 * u;
}

// Noise-feature draw for the Friedman stream. The j-th virtual drift
// re-shapes the j-th noise feature from U[0,1] to the two edge bands
// [0,0.1] u [0.9,1]; features re-shaped earlier stay that way. The new
// support sits inside the old one with the same mean, so a model trained on
// the base regime keeps seeing familiar values, while the distribution
// change on that one feature is large (ECDF distance 0.4 from uniform).
double friedman_noise_draw(Rng& rng, std::size_t virtual_regime, std::size_t slot) {
  const double u = rng.uniform01();
  if (slot >= virtual_regime) return u;
  return u < 0.5 ? 0.2 * u : 0.9 + 0.2 * (u - 0.5);
}

// Noise-grid draw for the mixed stream. The first virtual drift removes the
// center cell 4/9 from the d3 grid, the second removes 5/9 from the d4 grid.
// Dropping one interior cell changes the marginal while leaving the support
// and the remaining cell frequencies alone, so a model that picked up
// spurious weight on a noise feature sees almost the same inputs and its
// confidence profile barely moves.
double mixed_noise_draw(Rng& rng, std::size_t virtual_regime, std::size_t slot) {
  if (slot == 0 && virtual_regime >= 1) {
    const std::uint64_t k = rng.below(9);
    return static_cast<double>(k >= 4 ? k + 1 : k) / 9.0;
  }
  if (slot == 1 && virtual_regime >= 2) {
    const std::uint64_t k = rng.below(9);
    return static_cast<double>(k >= 5 ? k + 1 : k) / 9.0;
  }
  return static_cast<double>(rng.below(10)) / 9.0;
}

}  // namespace

void DriftSchedule::validate() const {
  require(length > 0, "schedule: zero length");
  auto check_list = [&](const std::vector<std::size_t>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      require(v[i] > 0 && v[i] < length, what);
      if (i > 0) require(v[i] > v[i - 1], what);
    }
  };
  check_list(real_drifts, "schedule: real drifts must be strictly increasing inside (0,length)");
  check_list(virtual_drifts,
             "schedule: virtual drifts must be strictly increasing inside (0,length)");
  for (std::size_t r : real_drifts)
    require(std::find(virtual_drifts.begin(), virtual_drifts.end(), r) ==
                virtual_drifts.end(),
            "schedule: real and virtual drift points must be disjoint");
}

std::size_t DriftSchedule::real_regime(std::size_t t) const {
  return regime_of(real_drifts, t);
}

std::size_t DriftSchedule::virtual_regime(std::size_t t) const {
  return regime_of(virtual_drifts, t);
}

std::size_t DriftSchedule::segment(std::size_t t) const {
  return real_regime(t) + virtual_regime(t);
}

DriftSchedule reference_schedule(SynthKind) {
  DriftSchedule s;
  s.length = 15000;
  s.real_drifts = {4500, 7500, 10500};
  s.virtual_drifts = {6000, 9000};
  s.seed = 0;
  return s;
}

double friedman_regime_value(const std::vector<double>& x, std::size_t real_regime) {
  require(x.size() >= 5, "friedman_regime_value: need five relevant features");
  // Roles rotate one step per real drift; a 5-cycle never maps a role to
  // itself, so consecutive regimes disagree on every role.
  const auto at = [&](std::size_t role) { return x[(role + real_regime) % 5]; };
  const double amplitude = 10.0 * (1.0 + 0.5 * static_cast<double>(real_regime));
  return amplitude * std::sin(std::numbers::pi * at(0) * at(1)) +
         20.0 * (at(2) - 0.5) * (at(2) - 0.5) + 10.0 * at(3) + 5.0 * at(4);
}

std::vector<LabeledInstance> friedman_stream(const DriftSchedule& schedule) {
  schedule.validate();
  Rng rng(schedule.seed);
  std::vector<LabeledInstance> out;
  out.reserve(schedule.length);
  for (std::size_t t = 0; t < schedule.length; ++t) {
    const std::size_t r = schedule.real_regime(t);
    const std::size_t v = schedule.virtual_regime(t);
    LabeledInstance inst;
    inst.t = t;
    inst.segment_id = schedule.segment(t);
    inst.x.resize(10);
    for (std::size_t i = 0; i < 5; ++i) inst.x[i] = friedman_relevant_draw(rng, r, i);
    for (std::size_t i = 5; i < 10; ++i) inst.x[i] = friedman_noise_draw(rng, v, i - 5);
    inst.y = friedman_regime_value(inst.x, r) + rng.normal(0.0, 1.0);
    out.push_back(std::move(inst));
  }
  return out;
}

bool mixed_label(double b1, double b2, double d1, double d2, std::size_t real_regime) {
  const double theta = 0.5 + 0.3 * std::sin(3.0 * std::numbers::pi * d2);
  // The grid values k/9 never hit theta exactly, so flipping the inequality
  // flips the condition outright.
  const bool third = real_regime % 2 == 0 ? d1 < theta : d1 > theta;
  const int votes = (b1 > 0.5 ? 1 : 0) + (b2 > 0.5 ? 1 : 0) + (third ? 1 : 0);
  return votes >= 2;
}

std::vector<LabeledInstance> mixed_stream(const DriftSchedule& schedule) {
  schedule.validate();
  Rng rng(schedule.seed);
  std::vector<LabeledInstance> out;
  out.reserve(schedule.length);
  for (std::size_t t = 0; t < schedule.length; ++t) {
    const std::size_t r = schedule.real_regime(t);
    const std::size_t v = schedule.virtual_regime(t);
    LabeledInstance inst;
    inst.t = t;
    inst.segment_id = schedule.segment(t);
    inst.x.resize(6);
    inst.x[0] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    inst.x[1] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    // d1 alternates between the base grid and a narrow strip hugging the
    // label boundary theta(d2). Odd regimes draw d1 within 1/18 of theta,
    // where the vote hangs on which side of theta the draw lands; even
    // regimes use the grid. Grid-trained models place their decision
    // boundary near theta, so strip rows sit exactly where such a model is
    // undecided, whatever its seed. Labels always follow the regime rule on
    // the observed features.
    const double g2 = static_cast<double>(rng.below(10)) / 9.0;
    if (r % 2 == 1) {
      const double theta = 0.5 + 0.3 * std::sin(3.0 * std::numbers::pi * g2);
      inst.x[2] = theta + (rng.uniform01() - 0.5) / 9.0;
    } else {
      inst.x[2] = static_cast<double>(rng.below(10)) / 9.0;
    }
    inst.x[3] = g2;
    inst.x[4] = mixed_noise_draw(rng, v, 0);  // d3, label-irrelevant
    inst.x[5] = mixed_noise_draw(rng, v, 1);  // d4, label-irrelevant
    inst.y =
        mixed_label(inst.x[0], inst.x[1], inst.x[2], inst.x[3], r) ? 1.0 : 0.0;
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace driftlab
