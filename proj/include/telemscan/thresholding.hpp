#pragma once

// Nonparametric dynamic thresholding of smoothed prediction errors.
//
// Candidate thresholds are eps(z) = mu(e_s) + z * sigma(e_s) for z in a grid.
// The chosen threshold maximises
//
//     (d_mu / mu + d_sigma / sigma) / (|e_a| + |E_seq|^2)
//
// where d_mu and d_sigma are the drops in mean and standard deviation when
// the values at or above eps are removed, e_a are the values strictly above
// eps and E_seq their maximal contiguous runs. Statistics are population
// (divide by n) throughout.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telemscan/error.hpp"
#include "telemscan/series.hpp"

namespace telemscan {

/// Inclusive range [start, end]. Used for window positions and step indices alike.
struct IndexRange {
  StepIndex start = 0;
  StepIndex end = 0;

  StepIndex length() const noexcept { return end - start + 1; }
  bool contains(StepIndex i) const noexcept { return start <= i && i <= end; }
  bool overlaps(const IndexRange& o) const noexcept { return start <= o.end && o.start <= end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

class ZGrid {
 public:
  ZGrid() : ZGrid(2.5, 10.0, 0.5) {}

  explicit ZGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::InvalidArgument, "z grid is empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 2.0) || !std::isfinite(values_[i])) {
        throw Error(ErrorCode::InvalidArgument, "z values must be finite and >= 2");
      }
      if (i > 0 && values_[i] <= values_[i - 1]) {
        throw Error(ErrorCode::InvalidArgument, "z grid must be strictly increasing");
      }
    }
  }

  /// {z_min, z_min + step, ..., <= z_max}; generated from an integer counter.
  ZGrid(double z_min, double z_max, double step) : ZGrid(make(z_min, z_max, step)) {}

  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  static std::vector<double> make(double z_min, double z_max, double step) {
    if (!(step > 0.0) || z_max < z_min) throw Error(ErrorCode::InvalidArgument, "bad z grid bounds");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((z_max - z_min) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) out.push_back(z_min + static_cast<double>(k) * step);
    return out;
  }

  std::vector<double> values_;
};

struct WindowStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

/// Two-pass population mean and standard deviation.
inline WindowStats window_stats(std::span<const double> values) {
  WindowStats s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

/// Maximal runs of consecutive positions whose value is strictly above eps.
inline std::vector<IndexRange> extract_sequences(std::span<const double> values, double eps) {
  std::vector<IndexRange> runs;
  std::optional<StepIndex> open;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto pos = static_cast<StepIndex>(i);
    if (values[i] > eps) {
      if (!open) open = pos;
    } else if (open) {
      runs.push_back({*open, pos - 1});
      open.reset();
    }
  }
  if (open) runs.push_back({*open, static_cast<StepIndex>(values.size()) - 1});
  return runs;
}

struct ThresholdDecision {
  double epsilon = 0.0;
  double z = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double delta_mean = 0.0;
  double delta_sd = 0.0;
  /// Window positions with e_s > epsilon, ascending.
  std::vector<StepIndex> anomalous;
  /// Maximal contiguous runs of `anomalous`, window positions.
  std::vector<IndexRange> sequences;
  double objective = 0.0;
};

namespace detail {

// Scores one candidate threshold; nullopt when nothing lies above eps.
inline std::optional<ThresholdDecision> evaluate_candidate(std::span<const double> values, const WindowStats& full,
                                                           double eps) {
  ThresholdDecision d;
  d.epsilon = eps;
  d.mean = full.mean;
  d.sd = full.sd;

  double below_sum = 0.0;
  std::size_t below_n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > eps) {
      d.anomalous.push_back(static_cast<StepIndex>(i));
    } else if (values[i] < eps) {
      below_sum += values[i];
      ++below_n;
    }
  }
  if (d.anomalous.empty()) return std::nullopt;
  if (below_n == 0) {
    throw Error(ErrorCode::InvalidArgument, "threshold leaves no values below it");
  }
  const double below_mean = below_sum / static_cast<double>(below_n);
  double below_ss = 0.0;
  for (double v : values) {
    if (v < eps) below_ss += (v - below_mean) * (v - below_mean);
  }
  const double below_sd = std::sqrt(below_ss / static_cast<double>(below_n));

  d.delta_mean = full.mean - below_mean;
  d.delta_sd = full.sd - below_sd;
  d.sequences = extract_sequences(values, eps);
  const double n_seq = static_cast<double>(d.sequences.size());
  d.objective = (d.delta_mean / full.mean + d.delta_sd / full.sd) /
                (static_cast<double>(d.anomalous.size()) + n_seq * n_seq);
  return d;
}

}  // namespace detail

/// Objective value of a single threshold. Throws EmptyCandidate when no value
/// exceeds eps and DegenerateWindow when the window has zero spread.
inline double threshold_objective(std::span<const double> values, double eps) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty window");
  const WindowStats full = window_stats(values);
  if (full.sd == 0.0) throw Error(ErrorCode::DegenerateWindow, "window has zero standard deviation");
  auto d = detail::evaluate_candidate(values, full, eps);
  if (!d) throw Error(ErrorCode::EmptyCandidate, "no smoothed error exceeds epsilon");
  return d->objective;
}

enum class SelectionStatus { selected, no_anomalies, degenerate };

struct ThresholdSelection {
  SelectionStatus status = SelectionStatus::no_anomalies;
  std::optional<ThresholdDecision> decision;

  explicit operator bool() const noexcept { return decision.has_value(); }
};

/// Evaluates every grid candidate and keeps the best; equal objectives go to
/// the larger z.
inline ThresholdSelection select_threshold(std::span<const double> values, const ZGrid& grid = ZGrid{}) {
  if (values.size() < 2) throw Error(ErrorCode::InvalidArgument, "window needs at least 2 values");
  const WindowStats full = window_stats(values);
  if (full.sd == 0.0) return {SelectionStatus::degenerate, std::nullopt};

  std::optional<ThresholdDecision> best;
  for (double z : grid.values()) {
    auto candidate = detail::evaluate_candidate(values, full, full.mean + z * full.sd);
    if (!candidate) continue;
    candidate->z = z;
    if (!best || candidate->objective >= best->objective) best = std::move(candidate);
  }
  if (!best) return {SelectionStatus::no_anomalies, std::nullopt};
  return {SelectionStatus::selected, std::move(best)};
}

/// s = (peak - eps) / (mu + sigma), mu and sigma taken over the full window.
inline double anomaly_score(double peak, double epsilon, double mean, double sd) {
  return (peak - epsilon) / (mean + sd);
}

/// Scores a run of window positions against the decision that produced it.
inline double score_sequence(std::span<const double> values, const IndexRange& seq, const ThresholdDecision& decision) {
  if (seq.start < 0 || seq.end < seq.start || static_cast<std::size_t>(seq.end) >= values.size()) {
    throw Error(ErrorCode::InvalidArgument, "sequence outside window");
  }
  const double peak = *std::max_element(values.begin() + seq.start, values.begin() + seq.end + 1);
  if (!(peak > decision.epsilon)) {
    throw Error(ErrorCode::InvalidArgument, "sequence peak does not exceed epsilon");
  }
  return anomaly_score(peak, decision.epsilon, decision.mean, decision.sd);
}

enum class SequenceStatus { candidate, pruned, confirmed };

inline std::string_view to_string(SequenceStatus s) {
  switch (s) {
    case SequenceStatus::candidate: return "candidate";
    case SequenceStatus::pruned: return "pruned";
    case SequenceStatus::confirmed: return "confirmed";
  }
  return "candidate";
}

struct AnomalySequence {
  std::string channel_id;
  IndexRange range;
  StepIndex peak_index = 0;
  double peak_value = 0.0;
  double score = 0.0;
  SequenceStatus status = SequenceStatus::candidate;

  friend bool operator==(const AnomalySequence&, const AnomalySequence&) = default;
};

/// Builds candidate sequences for a decision. `indices[pos]` maps window
/// positions to step indices.
inline std::vector<AnomalySequence> sequences_from_decision(std::string_view channel_id,
                                                            std::span<const double> values,
                                                            std::span<const StepIndex> indices,
                                                            const ThresholdDecision& decision) {
  std::vector<AnomalySequence> out;
  for (const auto& run : decision.sequences) {
    auto first = values.begin() + run.start;
    auto peak = std::max_element(first, values.begin() + run.end + 1);
    const auto peak_pos = static_cast<std::size_t>(peak - values.begin());
    AnomalySequence s;
    s.channel_id = std::string(channel_id);
    s.range = {indices[static_cast<std::size_t>(run.start)], indices[static_cast<std::size_t>(run.end)]};
    s.peak_index = indices[peak_pos];
    s.peak_value = *peak;
    s.score = anomaly_score(*peak, decision.epsilon, decision.mean, decision.sd);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace telemscan
