#pragma once

// Parametric comparison detector: raw errors are modelled by a rolling normal
// distribution and a step is flagged when the short-term mean sits in its
// upper tail, L = 1 - Q((mu_s - mu_W) / sigma_W^2) >= 1 - epsilon_norm.

#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telemscan/error.hpp"
#include "telemscan/prediction.hpp"
#include "telemscan/thresholding.hpp"

namespace telemscan {

enum class TailDenominator { variance, stddev };

struct GaussianTailConfig {
  std::size_t window_len = 2100;
  std::size_t short_len = 10;
  double epsilon_norm = 0.01;
  /// `variance` follows the published formula literally; `stddev` gives a unitless z.
  TailDenominator denominator = TailDenominator::variance;

  void validate() const {
    if (window_len == 0 || short_len == 0) throw Error(ErrorCode::ConfigError, "l_w and l_short must be positive");
    if (!(epsilon_norm > 0.0 && epsilon_norm < 1.0)) throw Error(ErrorCode::ConfigError, "epsilon_norm must be in (0,1)");
  }
};

/// Standard normal upper-tail probability.
inline double upper_tail_probability(double u) { return 0.5 * std::erfc(u / std::sqrt(2.0)); }

/// Rolling mean/variance of the last l_w raw errors plus the mean of the last
/// l_short. Welford add/remove keeps the update O(1). The moments are rebuilt
/// from the buffer once per l_w insertions, and also whenever the sum of
/// squares or the mean falls far below its peak since the last rebuild:
/// evicting large values leaves a rounding residue proportional to that peak.
class GaussianWindowState {
 public:
  explicit GaussianWindowState(GaussianTailConfig config = {}) : config_(config) { config_.validate(); }

  void push(double e) {
    if (!std::isfinite(e) || e < 0.0) throw Error(ErrorCode::InvalidArgument, "errors must be finite and >= 0");
    window_.push_back(e);
    add(e);
    if (window_.size() > config_.window_len) {
      const double old = window_.front();
      window_.pop_front();
      remove(old);
    }
    short_.push_back(e);
    if (short_.size() > config_.short_len) short_.pop_front();
    if (++since_rebuild_ >= config_.window_len || m2_ < kCollapse * peak_m2_ ||
        std::abs(mean_) < kCollapse * peak_mean_) {
      rebuild();
    }
  }

  const GaussianTailConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return window_.size(); }
  const std::deque<double>& window() const noexcept { return window_; }

  double mean() const noexcept { return mean_; }
  double variance() const noexcept {
    return window_.empty() ? 0.0 : std::max(0.0, m2_ / static_cast<double>(window_.size()));
  }
  double short_mean() const noexcept {
    if (short_.empty()) return 0.0;
    double sum = 0.0;
    for (double v : short_) sum += v;
    return sum / static_cast<double>(short_.size());
  }

 private:
  void add(double x) {
    const double n = static_cast<double>(window_.size());
    const double delta = x - mean_;
    mean_ += delta / n;
    m2_ += delta * (x - mean_);
    peak_m2_ = std::max(peak_m2_, m2_);
    peak_mean_ = std::max(peak_mean_, std::abs(mean_));
  }

  void remove(double x) {
    const double n = static_cast<double>(window_.size());
    if (n == 0) {
      mean_ = m2_ = 0.0;
      return;
    }
    const double old_mean = mean_;
    mean_ = (old_mean * (n + 1.0) - x) / n;
    m2_ -= (x - old_mean) * (x - mean_);
  }

  void rebuild() {
    since_rebuild_ = 0;
    double sum = 0.0;
    for (double v : window_) sum += v;
    mean_ = sum / static_cast<double>(window_.size());
    m2_ = 0.0;
    for (double v : window_) m2_ += (v - mean_) * (v - mean_);
    peak_m2_ = m2_;
    peak_mean_ = std::abs(mean_);
  }

  static constexpr double kCollapse = 1e-4;

  GaussianTailConfig config_;
  std::deque<double> window_;
  std::deque<double> short_;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double peak_m2_ = 0.0;
  double peak_mean_ = 0.0;
  std::size_t since_rebuild_ = 0;
};

inline GaussianWindowState update_window(GaussianWindowState state, double e) {
  state.push(e);
  return state;
}

/// L = 1 - Q((mu_s - mu_W) / d) with d = sigma_W^2 (or sigma_W). Throws
/// DegenerateWindow when the window has no spread.
inline double anomaly_likelihood(const GaussianWindowState& state) {
  const double var = state.variance();
  const double mean = state.mean();
  if (state.size() == 0 || var <= 1e-24 * std::max(1.0, mean * mean)) {
    throw Error(ErrorCode::DegenerateWindow, "rolling variance is zero");
  }
  const double denom = state.config().denominator == TailDenominator::variance ? var : std::sqrt(var);
  return 1.0 - upper_tail_probability((state.short_mean() - mean) / denom);
}

struct GaussianTailTrace {
  /// Per-step likelihood; empty where the window was degenerate.
  std::vector<std::optional<double>> likelihood;
  std::vector<bool> flagged;
};

inline GaussianTailTrace gaussian_tail_trace(std::span<const double> errors, const GaussianTailConfig& config) {
  GaussianWindowState state(config);
  GaussianTailTrace trace;
  trace.likelihood.reserve(errors.size());
  trace.flagged.reserve(errors.size());
  const double cutoff = 1.0 - config.epsilon_norm;
  for (double e : errors) {
    state.push(e);
    std::optional<double> l;
    try {
      l = anomaly_likelihood(state);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateWindow) throw;
    }
    trace.likelihood.push_back(l);
    trace.flagged.push_back(l && *l >= cutoff);
  }
  return trace;
}

/// Contiguous flagged positions merged into ranges, same contiguity rule as
/// extract_sequences.
inline std::vector<IndexRange> flagged_runs(const std::vector<bool>& flags) {
  std::vector<double> as_values(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) as_values[i] = flags[i] ? 1.0 : 0.0;
  return extract_sequences(as_values, 0.5);
}

/// Scores runs found by a threshold-free detector. The reference threshold is
/// the smoothed error at the first step of each run, and mu, sigma come from
/// the whole smoothed window, so the result plugs into the same pruning path
/// as nonparametric sequences.
inline std::vector<AnomalySequence> bridge_sequences(std::string_view channel_id, std::span<const IndexRange> runs,
                                                     std::span<const double> smoothed,
                                                     std::span<const StepIndex> indices) {
  const WindowStats stats = window_stats(smoothed);
  std::vector<AnomalySequence> out;
  for (const auto& run : runs) {
    auto first = smoothed.begin() + run.start;
    auto peak = std::max_element(first, smoothed.begin() + run.end + 1);
    const double bridge_eps = *first;
    AnomalySequence s;
    s.channel_id = std::string(channel_id);
    s.range = {indices[static_cast<std::size_t>(run.start)], indices[static_cast<std::size_t>(run.end)]};
    s.peak_index = indices[static_cast<std::size_t>(peak - smoothed.begin())];
    s.peak_value = *peak;
    const double denom = stats.mean + stats.sd;
    s.score = denom > 0.0 ? std::max(0.0, anomaly_score(*peak, bridge_eps, stats.mean, stats.sd)) : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

/// Standalone detector over a whole error stream.
inline std::vector<AnomalySequence> detect_gaussian_tail(const ErrorSeries& errors, const GaussianTailConfig& config,
                                                         std::size_t smoothing_span) {
  if (errors.errors.empty()) throw Error(ErrorCode::InvalidArgument, "empty error stream");
  const auto raw = errors.values();
  const auto trace = gaussian_tail_trace(raw, config);
  const auto runs = flagged_runs(trace.flagged);
  const auto smoothed = ewma(raw, smoothing_span);
  std::vector<StepIndex> indices;
  indices.reserve(errors.errors.size());
  for (const auto& p : errors.errors) indices.push_back(p.index);
  return bridge_sequences(errors.channel_id, runs, smoothed, indices);
}

}  // namespace telemscan
