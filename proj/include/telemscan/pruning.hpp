#pragma once

// False-positive mitigation: percent-decrease pruning over sequence peaks and
// learned per-channel minimum scores.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "telemscan/detail/csv.hpp"
#include "telemscan/error.hpp"
#include "telemscan/thresholding.hpp"

namespace telemscan {

struct PruneInput {
  /// Sequence peaks in descending order followed by the nominal maximum.
  std::vector<double> e_max;
  /// order[k] is the position in the caller's sequence list of e_max[k].
  std::vector<std::size_t> order;
  double p = 0.13;
};

namespace detail {

inline PruneInput sorted_peaks(std::span<const AnomalySequence> sequences, double nominal_max) {
  PruneInput in;
  in.order.resize(sequences.size());
  std::iota(in.order.begin(), in.order.end(), std::size_t{0});
  std::stable_sort(in.order.begin(), in.order.end(), [&](std::size_t a, std::size_t b) {
    if (sequences[a].peak_value != sequences[b].peak_value) return sequences[a].peak_value > sequences[b].peak_value;
    return sequences[a].range.start < sequences[b].range.start;
  });
  for (auto k : in.order) in.e_max.push_back(sequences[k].peak_value);
  in.e_max.push_back(nominal_max);
  return in;
}

}  // namespace detail

/// e_max for sequences produced by one threshold decision: peaks descending
/// (ties by start) then max{e_s <= eps}, or 0 when every value is anomalous.
inline PruneInput build_emax(std::span<const AnomalySequence> sequences, std::span<const double> window, double eps,
                             double p = 0.13) {
  double nominal = 0.0;
  for (double v : window) {
    if (v <= eps) nominal = std::max(nominal, v);
  }
  auto in = detail::sorted_peaks(sequences, nominal);
  in.p = p;
  return in;
}

/// Variant for detectors without a single threshold: the nominal maximum is
/// taken over window steps outside every sequence range.
inline PruneInput build_emax(std::span<const AnomalySequence> sequences, std::span<const double> window,
                             std::span<const StepIndex> indices, double p) {
  double nominal = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    bool inside = std::any_of(sequences.begin(), sequences.end(),
                              [&](const AnomalySequence& s) { return s.range.contains(indices[i]); });
    if (!inside) nominal = std::max(nominal, window[i]);
  }
  auto in = detail::sorted_peaks(sequences, nominal);
  in.p = p;
  return in;
}

/// d(i) = (e_max[i-1] - e_max[i]) / e_max[i-1] for i = 1..|e_max|-1.
inline std::vector<double> percent_decreases(std::span<const double> e_max) {
  std::vector<double> d;
  for (std::size_t i = 1; i < e_max.size(); ++i) {
    d.push_back(e_max[i - 1] > 0.0 ? (e_max[i - 1] - e_max[i]) / e_max[i - 1] : 0.0);
  }
  return d;
}

/// Number of leading e_max entries that stay anomalous: the largest i with
/// d(i) >= p, or 0 when no drop qualifies. A qualifying drop re-validates
/// every larger peak even if an earlier drop failed.
inline std::size_t pruning_keep_count(const PruneInput& input) {
  auto d = percent_decreases(input.e_max);
  std::size_t keep = 0;
  for (std::size_t i = 1; i <= d.size(); ++i) {
    if (d[i - 1] >= input.p) keep = i;
  }
  return keep;
}

inline std::vector<AnomalySequence> prune_sequences(const PruneInput& input,
                                                    std::span<const AnomalySequence> sequences) {
  if (input.order.size() != sequences.size() || input.e_max.size() != sequences.size() + 1) {
    throw Error(ErrorCode::InvalidArgument, "prune input does not match the sequence list");
  }
  std::vector<AnomalySequence> out(sequences.begin(), sequences.end());
  const std::size_t keep = pruning_keep_count(input);
  for (std::size_t k = 0; k < input.order.size(); ++k) {
    out[input.order[k]].status = k < keep ? SequenceStatus::confirmed : SequenceStatus::pruned;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Learned minimum score

enum class Verdict { true_positive, false_positive, unlabeled };

struct ScoredVerdict {
  double score = 0.0;
  Verdict verdict = Verdict::unlabeled;
};

struct SminNone {};
struct SminLabelMax {};
struct SminQuantile {
  double q = 0.9;
};
using SminPolicy = std::variant<SminNone, SminLabelMax, SminQuantile>;

inline SminPolicy parse_smin_policy(const std::string& text) {
  if (text == "none") return SminNone{};
  if (text == "label_max") return SminLabelMax{};
  if (text.rfind("quantile(", 0) == 0 && text.back() == ')') {
    double q = detail::parse_finite(text.substr(9, text.size() - 10), "smin_policy");
    if (q < 0.0 || q > 1.0) throw Error(ErrorCode::ConfigError, "quantile must be in [0,1]");
    return SminQuantile{q};
  }
  throw Error(ErrorCode::ConfigError, "unknown smin policy '" + text + "'");
}

inline std::string to_string(const SminPolicy& policy) {
  if (std::holds_alternative<SminLabelMax>(policy)) return "label_max";
  if (auto* q = std::get_if<SminQuantile>(&policy)) return "quantile(" + detail::format_real(q->q) + ")";
  return "none";
}

struct ChannelPolicy {
  std::string channel_id;
  std::optional<double> s_min;
  /// Confirmed anomalies per evaluated batch above which s_min is enforced.
  double anomaly_rate_threshold = 0.1;
};

/// Inverse empirical CDF: the smallest sample x with F(x) >= q.
inline double empirical_quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sample.size());
  return sample[rank - 1];
}

inline ChannelPolicy learn_smin(std::span<const ScoredVerdict> history, const SminPolicy& policy,
                                std::string channel_id = {}, double anomaly_rate_threshold = 0.1) {
  ChannelPolicy out{std::move(channel_id), std::nullopt, anomaly_rate_threshold};
  if (std::holds_alternative<SminLabelMax>(policy)) {
    for (const auto& h : history) {
      if (h.verdict == Verdict::false_positive) out.s_min = std::max(out.s_min.value_or(h.score), h.score);
    }
  } else if (auto* q = std::get_if<SminQuantile>(&policy)) {
    std::vector<double> scores;
    for (const auto& h : history) scores.push_back(h.score);
    if (!scores.empty()) out.s_min = empirical_quantile(std::move(scores), q->q);
  }
  return out;
}

/// Marks sequences with score strictly below s_min as pruned.
inline std::vector<AnomalySequence> apply_smin(std::span<const AnomalySequence> sequences,
                                               const ChannelPolicy& policy) {
  std::vector<AnomalySequence> out(sequences.begin(), sequences.end());
  if (!policy.s_min) return out;
  for (auto& s : out) {
    if (s.score < *policy.s_min) s.status = SequenceStatus::pruned;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feedback file: channel_id,sequence_start,sequence_end,score,label

struct FeedbackEntry {
  std::string channel_id;
  IndexRange range;
  double score = 0.0;
  Verdict verdict = Verdict::false_positive;
};

inline std::string_view verdict_tag(Verdict v) {
  return v == Verdict::true_positive ? "tp" : (v == Verdict::false_positive ? "fp" : "unlabeled");
}

inline Verdict parse_verdict(std::string_view text, const std::string& ctx) {
  if (text == "tp") return Verdict::true_positive;
  if (text == "fp") return Verdict::false_positive;
  throw Error(ErrorCode::InvalidArgument, ctx + ": verdict must be tp or fp, got '" + std::string(text) + "'");
}

inline constexpr const char* kFeedbackHeader = "channel_id,sequence_start,sequence_end,score,label";

inline std::vector<FeedbackEntry> load_feedback(const std::filesystem::path& path) {
  using namespace detail;
  CsvTable table = read_csv(path);
  if (table.header != std::vector<std::string>{"channel_id", "sequence_start", "sequence_end", "score", "label"}) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected '" + kFeedbackHeader + "'");
  }
  std::vector<FeedbackEntry> out;
  for (const auto& row : table.rows) {
    std::string ctx = where(path, row.line_no);
    if (row.fields.size() != 5) throw Error(ErrorCode::RaggedRow, ctx);
    out.push_back({row.fields[0],
                   {parse_index(row.fields[1], ctx), parse_index(row.fields[2], ctx)},
                   parse_finite(row.fields[3], ctx),
                   parse_verdict(row.fields[4], ctx)});
  }
  return out;
}

inline void save_feedback(const std::filesystem::path& path, std::span<const FeedbackEntry> entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << kFeedbackHeader << '\n';
  for (const auto& e : entries) {
    out << e.channel_id << ',' << e.range.start << ',' << e.range.end << ',' << detail::format_real(e.score) << ','
        << verdict_tag(e.verdict) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

inline std::vector<ScoredVerdict> feedback_history(std::span<const FeedbackEntry> entries,
                                                   const std::string& channel_id) {
  std::vector<ScoredVerdict> out;
  for (const auto& e : entries) {
    if (e.channel_id == channel_id) out.push_back({e.score, e.verdict});
  }
  return out;
}

}  // namespace telemscan
