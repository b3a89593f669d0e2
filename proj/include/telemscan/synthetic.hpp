#pragma once

// Synthetic telemetry channels with injected, labelled anomalies. Point
// anomalies are out-of-range spikes; contextual anomalies switch the signal to
// a faster in-range oscillation, so only prediction residuals reveal them.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "telemscan/series.hpp"

namespace telemscan::synthetic {

struct InjectedAnomaly {
  StepIndex start = 0;
  StepIndex length = 0;
  AnomalyClass cls = AnomalyClass::point;
};

struct SyntheticSpec {
  std::string channel_id = "synthetic";
  std::size_t steps = 8000;
  double period = 100.0;
  double amplitude = 1.0;
  double noise_sd = 0.02;
  double spike_height = 2.5;  // added on top of the signal for point anomalies
  double contextual_period = 25.0;
  std::size_t command_dims = 2;
  std::vector<InjectedAnomaly> anomalies;
  std::uint64_t seed = 1;
};

struct SyntheticChannel {
  ChannelSeries series;
  std::vector<LabelEntry> labels;
};

inline SyntheticChannel make_synthetic_channel(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::bernoulli_distribution command(0.02);
  const double phase = phase_dist(rng);
  const double w = 2.0 * std::numbers::pi / spec.period;
  const double w_ctx = 2.0 * std::numbers::pi / spec.contextual_period;

  std::vector<TimeStep> steps(spec.steps);
  for (std::size_t t = 0; t < spec.steps; ++t) {
    steps[t].index = static_cast<StepIndex>(t);
    steps[t].values.assign(1 + spec.command_dims, 0.0);
    steps[t].values[0] = spec.amplitude * std::sin(w * static_cast<double>(t) + phase) + noise(rng);
    for (std::size_t c = 0; c < spec.command_dims; ++c) steps[t].values[1 + c] = command(rng) ? 1.0 : 0.0;
  }

  SyntheticChannel out{ChannelSeries{}, {}};
  for (const auto& a : spec.anomalies) {
    const auto first = static_cast<std::size_t>(a.start);
    const auto last = std::min(spec.steps, first + static_cast<std::size_t>(a.length));
    for (std::size_t t = first; t < last; ++t) {
      if (a.cls == AnomalyClass::point) {
        steps[t].values[0] += spec.spike_height;
      } else {
        // in-range frequency change, phase-continuous at the start
        const double base = w * static_cast<double>(first) + phase;
        steps[t].values[0] = spec.amplitude * std::sin(base + w_ctx * static_cast<double>(t - first)) + noise(rng);
      }
    }
    out.labels.push_back({spec.channel_id, a.start, static_cast<StepIndex>(last) - 1, a.cls,
                          a.start, std::string{}});
  }
  out.series = ChannelSeries(spec.channel_id, 1 + spec.command_dims, std::move(steps));
  return out;
}

/// The acceptance corpus: `channels` channels, each with three anomalies
/// (alternating point and contextual) placed well after the training span.
inline std::vector<SyntheticChannel> synthetic_corpus(std::size_t channels = 20, std::uint64_t seed = 42) {
  std::vector<SyntheticChannel> out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> jitter(-150, 150);
  std::uniform_real_distribution<double> period(80.0, 120.0);
  for (std::size_t c = 0; c < channels; ++c) {
    SyntheticSpec spec;
    spec.channel_id = "S-" + std::to_string(c + 1);
    spec.seed = seed * 1000 + c;
    spec.period = period(rng);
    spec.contextual_period = spec.period / 4.0;
    const StepIndex anchors[] = {2600, 5000, 7400};
    for (std::size_t k = 0; k < 3; ++k) {
      const bool point = (c + k) % 2 == 0;
      spec.anomalies.push_back({anchors[k] + jitter(rng), point ? 5 : 100,
                                point ? AnomalyClass::point : AnomalyClass::contextual});
    }
    out.push_back(make_synthetic_channel(spec));
  }
  return out;
}

}  // namespace telemscan::synthetic
