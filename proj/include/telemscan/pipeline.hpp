#pragma once

// Per-channel batch orchestration.
//
// Errors are smoothed once over the whole stream (the EWMA is causal, so this
// equals streaming evaluation). The stream is then cut into batches; each
// batch is evaluated against a window of up to h prior smoothed errors plus
// the batch itself. Sequences are attributed to the batch holding their peak,
// so a run crossing a batch boundary is reported once per peak position and
// later merged.

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "telemscan/error.hpp"
#include "telemscan/gaussian_tail.hpp"
#include "telemscan/prediction.hpp"
#include "telemscan/pruning.hpp"
#include "telemscan/series.hpp"
#include "telemscan/thresholding.hpp"

namespace telemscan {

enum class DetectionMethod { nonparametric, gaussian_tail };

inline std::string_view to_string(DetectionMethod m) {
  return m == DetectionMethod::nonparametric ? "nonparametric" : "gaussian_tail";
}

inline DetectionMethod parse_method(std::string_view text) {
  if (text == "nonparametric") return DetectionMethod::nonparametric;
  if (text == "gaussian_tail") return DetectionMethod::gaussian_tail;
  throw Error(ErrorCode::ConfigError, "unknown method '" + std::string(text) + "'");
}

struct PipelineConfig {
  std::size_t h = 2100;
  std::size_t batch_size = 70;
  std::size_t warmup_min = 500;
  std::size_t expansion_buffer = 50;
  /// 0 derives the span from h (5% of h).
  std::size_t smoothing_span = 0;
  double p = 0.13;
  double z_min = 2.5;
  double z_max = 10.0;
  double z_step = 0.5;
  PredictorSpec predictor = PersistencePredictor{};
  /// Leading steps used to fit the AR baseline.
  std::size_t ar_train_len = 2100;
  DetectionMethod method = DetectionMethod::nonparametric;
  double epsilon_norm = 0.01;
  std::size_t l_short = 10;
  /// 0 follows h.
  std::size_t l_w = 0;
  TailDenominator denominator = TailDenominator::variance;
  SminPolicy smin_policy = SminNone{};
  double smin_rate_threshold = 0.1;

  std::size_t effective_span() const { return smoothing_span ? smoothing_span : default_smoothing_span(h); }
  ZGrid grid() const { return ZGrid(z_min, z_max, z_step); }
  GaussianTailConfig gaussian() const { return {l_w ? l_w : h, l_short, epsilon_norm, denominator}; }

  void validate() const {
    if (h == 0 || batch_size == 0 || warmup_min == 0) {
      throw Error(ErrorCode::ConfigError, "h, batch_size and warmup_min must be positive");
    }
    if (warmup_min > h) throw Error(ErrorCode::ConfigError, "warmup_min must not exceed h");
    if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorCode::ConfigError, "p must be in [0,1)");
    (void)grid();
    gaussian().validate();
  }
};

enum class BatchStatus { warmup, degenerate, no_anomalies, selected, evaluated };

inline std::string_view to_string(BatchStatus s) {
  switch (s) {
    case BatchStatus::warmup: return "warmup";
    case BatchStatus::degenerate: return "degenerate";
    case BatchStatus::no_anomalies: return "no_anomalies";
    case BatchStatus::selected: return "selected";
    case BatchStatus::evaluated: return "evaluated";
  }
  return "warmup";
}

struct BatchDiagnostic {
  std::size_t batch = 0;
  StepIndex first_index = 0;
  StepIndex last_index = 0;
  BatchStatus status = BatchStatus::warmup;
  std::optional<double> epsilon;
  std::optional<double> z;
  std::optional<double> objective;
  /// Anomalous points (nonparametric) or flagged steps (gaussian tail) in the window.
  std::size_t n_anomalous = 0;

  friend bool operator==(const BatchDiagnostic&, const BatchDiagnostic&) = default;
};

struct ChannelResult {
  std::string channel_id;
  DetectionMethod method = DetectionMethod::nonparametric;
  std::string config_hash;
  std::vector<AnomalySequence> sequences;
  std::vector<BatchDiagnostic> diagnostics;

  std::vector<IndexRange> confirmed_ranges() const {
    std::vector<IndexRange> out;
    for (const auto& s : sequences) {
      if (s.status == SequenceStatus::confirmed) out.push_back(s.range);
    }
    return out;
  }

  friend bool operator==(const ChannelResult&, const ChannelResult&) = default;
};

/// Widens each range by `buffer` on both sides (clamped to `bounds`) and merges
/// ranges that overlap or touch afterwards. Input must be sorted by start.
inline std::vector<IndexRange> expand_and_merge(std::span<const IndexRange> ranges, std::size_t buffer,
                                                std::optional<IndexRange> bounds = std::nullopt) {
  std::vector<IndexRange> out;
  const auto b = static_cast<StepIndex>(buffer);
  for (const auto& r : ranges) {
    IndexRange w{r.start - b, r.end + b};
    if (bounds) {
      w.start = std::max(w.start, bounds->start);
      w.end = std::min(w.end, bounds->end);
    }
    if (!out.empty() && w.start <= out.back().end + 1) {
      out.back().end = std::max(out.back().end, w.end);
    } else {
      out.push_back(w);
    }
  }
  return out;
}

namespace detail {

inline std::vector<AnomalySequence> merge_confirmed(std::vector<AnomalySequence> sequences, std::size_t buffer,
                                                    IndexRange bounds) {
  std::vector<AnomalySequence> confirmed;
  std::vector<AnomalySequence> pruned;
  for (auto& s : sequences) {
    (s.status == SequenceStatus::confirmed ? confirmed : pruned).push_back(std::move(s));
  }
  auto by_start = [](const AnomalySequence& a, const AnomalySequence& b) {
    if (a.range.start != b.range.start) return a.range.start < b.range.start;
    return a.range.end < b.range.end;
  };
  std::sort(confirmed.begin(), confirmed.end(), by_start);
  std::vector<IndexRange> ranges;
  for (const auto& s : confirmed) ranges.push_back(s.range);
  const auto merged = expand_and_merge(ranges, buffer, bounds);

  std::vector<AnomalySequence> out;
  std::size_t k = 0;
  for (const auto& m : merged) {
    AnomalySequence acc;
    bool first = true;
    for (; k < confirmed.size() && m.overlaps(confirmed[k].range); ++k) {
      const auto& s = confirmed[k];
      if (first || s.peak_value > acc.peak_value) {
        acc.channel_id = s.channel_id;
        acc.peak_index = s.peak_index;
        acc.peak_value = s.peak_value;
      }
      acc.score = first ? s.score : std::max(acc.score, s.score);
      first = false;
    }
    acc.range = m;
    acc.status = SequenceStatus::confirmed;
    out.push_back(std::move(acc));
  }

  std::sort(pruned.begin(), pruned.end(), by_start);
  pruned.erase(std::unique(pruned.begin(), pruned.end(),
                           [](const AnomalySequence& a, const AnomalySequence& b) { return a.range == b.range; }),
               pruned.end());
  out.insert(out.end(), pruned.begin(), pruned.end());
  std::stable_sort(out.begin(), out.end(), by_start);
  return out;
}

}  // namespace detail

/// Runs the configured detector over one channel's prediction errors.
inline ChannelResult run_channel(const ChannelSeries& series, const PredictionSeries& predictions,
                                 const PipelineConfig& config, const ChannelPolicy* policy = nullptr,
                                 std::string config_hash = {}) {
  config.validate();
  ChannelResult result;
  result.channel_id = series.channel_id();
  result.method = config.method;
  result.config_hash = std::move(config_hash);

  const ErrorSeries errors = compute_errors(series, predictions);
  if (errors.errors.empty()) return result;

  const std::vector<double> raw = errors.values();
  const std::vector<double> smoothed = ewma(raw, config.effective_span());
  std::vector<StepIndex> indices;
  indices.reserve(raw.size());
  for (const auto& e : errors.errors) indices.push_back(e.index);

  const ZGrid grid = config.grid();
  std::optional<GaussianTailTrace> trace;
  if (config.method == DetectionMethod::gaussian_tail) trace = gaussian_tail_trace(raw, config.gaussian());

  const std::size_t n = raw.size();
  std::vector<AnomalySequence> collected;
  std::size_t evaluated_batches = 0;
  std::size_t confirmed_so_far = 0;

  for (std::size_t start = 0, batch = 0; start < n; start += config.batch_size, ++batch) {
    const std::size_t end = std::min(n, start + config.batch_size);
    BatchDiagnostic diag;
    diag.batch = batch;
    diag.first_index = indices[start];
    diag.last_index = indices[end - 1];
    if (start < config.warmup_min) {
      result.diagnostics.push_back(diag);
      continue;
    }
    ++evaluated_batches;
    const std::size_t wstart = start > config.h ? start - config.h : 0;
    const std::span<const double> window(smoothed.data() + wstart, end - wstart);
    const std::span<const StepIndex> window_idx(indices.data() + wstart, end - wstart);

    std::vector<AnomalySequence> candidates;
    if (config.method == DetectionMethod::nonparametric) {
      const auto selection = select_threshold(window, grid);
      if (selection.status == SelectionStatus::degenerate) {
        diag.status = BatchStatus::degenerate;
      } else if (!selection) {
        diag.status = BatchStatus::no_anomalies;
      } else {
        const auto& d = *selection.decision;
        diag.status = BatchStatus::selected;
        diag.epsilon = d.epsilon;
        diag.z = d.z;
        diag.objective = d.objective;
        diag.n_anomalous = d.anomalous.size();
        candidates = sequences_from_decision(result.channel_id, window, window_idx, d);
        candidates = prune_sequences(build_emax(candidates, window, d.epsilon, config.p), candidates);
      }
    } else {
      std::vector<bool> flags(trace->flagged.begin() + static_cast<std::ptrdiff_t>(wstart),
                              trace->flagged.begin() + static_cast<std::ptrdiff_t>(end));
      diag.status = BatchStatus::evaluated;
      diag.n_anomalous = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
      const auto runs = flagged_runs(flags);
      candidates = bridge_sequences(result.channel_id, runs, window, window_idx);
      candidates = prune_sequences(build_emax(candidates, window, window_idx, config.p), candidates);
    }

    // keep only sequences whose peak falls in this batch
    std::vector<AnomalySequence> attributed;
    for (auto& s : candidates) {
      if (s.peak_index >= diag.first_index && s.peak_index <= diag.last_index) attributed.push_back(std::move(s));
    }
    if (policy && policy->s_min) {
      const double rate = static_cast<double>(confirmed_so_far) / static_cast<double>(evaluated_batches);
      if (rate > policy->anomaly_rate_threshold) attributed = apply_smin(attributed, *policy);
    }
    for (auto& s : attributed) {
      if (s.status == SequenceStatus::confirmed) ++confirmed_so_far;
      collected.push_back(std::move(s));
    }
    result.diagnostics.push_back(diag);
  }

  result.sequences = detail::merge_confirmed(std::move(collected), config.expansion_buffer,
                                             {indices.front(), indices.back()});
  return result;
}

/// Produces baseline predictions for `series` according to `spec`. File
/// predictors are resolved by the caller.
inline PredictionSeries baseline_predictions(const ChannelSeries& series, const PipelineConfig& config) {
  if (std::holds_alternative<PersistencePredictor>(config.predictor)) return persistence_predictions(series);
  if (auto* ar = std::get_if<ARPredictor>(&config.predictor)) {
    auto values = series.telemetry();
    const std::size_t train_len = std::min(values.size(), config.ar_train_len);
    const ARModel model = fit_ar(std::span<const double>(values.data(), train_len), ar->order);
    return ar_predictions(model, series);
  }
  throw Error(ErrorCode::ConfigError, "file predictor needs a prediction series");
}

inline ChannelResult run_channel(const ChannelSeries& series, const PipelineConfig& config,
                                 const ChannelPolicy* policy = nullptr, std::string config_hash = {}) {
  return run_channel(series, baseline_predictions(series, config), config, policy, std::move(config_hash));
}

// ---------------------------------------------------------------------------
// Labelled evaluation windows

struct EvalWindowSpec {
  double days_before = 3.0;
  double days_after = 2.0;
  double train_days = 2.0;
};

struct EvalWindow {
  std::string channel_id;
  StepIndex t_a = 0;
  IndexRange eval;
  IndexRange train;
  /// Set when either range had to be clamped to the available data.
  bool shortfall = false;
};

/// Evaluation span [t_a - 3d, t_a + 2d] and training span [t_s - 2d, t_s] per
/// label, in steps. `data_bounds(channel)` returns the available index range
/// (if known) used for clamping.
template <typename BoundsFn>
std::vector<EvalWindow> make_eval_windows(const LabelSet& labels, const EvalWindowSpec& spec, double step_minutes,
                                          BoundsFn data_bounds) {
  if (!(step_minutes > 0.0)) throw Error(ErrorCode::InvalidArgument, "step_minutes must be positive");
  const double steps_per_day = 1440.0 / step_minutes;
  auto steps = [&](double days) { return static_cast<StepIndex>(std::llround(days * steps_per_day)); };
  std::vector<EvalWindow> out;
  for (const auto& label : labels.entries) {
    EvalWindow w;
    w.channel_id = label.channel_id;
    w.t_a = label.t_a;
    w.eval = {label.t_a - steps(spec.days_before), label.t_a + steps(spec.days_after)};
    w.train = {w.eval.start - steps(spec.train_days), w.eval.start};
    const std::optional<IndexRange> bounds = data_bounds(label.channel_id);
    const IndexRange limit = bounds.value_or(IndexRange{0, std::numeric_limits<StepIndex>::max()});
    auto clamp = [&](IndexRange r) {
      IndexRange c{std::max(r.start, limit.start), std::min(r.end, limit.end)};
      if (c.end < c.start) c.end = c.start;
      if (c != r) w.shortfall = true;
      return c;
    };
    w.eval = clamp(w.eval);
    w.train = clamp(w.train);
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<EvalWindow> make_eval_windows(const LabelSet& labels, const EvalWindowSpec& spec = {},
                                                 double step_minutes = 1.0) {
  return make_eval_windows(labels, spec, step_minutes, [](const std::string&) -> std::optional<IndexRange> {
    return std::nullopt;
  });
}

}  // namespace telemscan
