#pragma once

// Labelled-sequence scoring.
//
//  - a labelled range is a true positive if any predicted range overlaps it,
//    counted once no matter how many predictions hit it;
//  - a labelled range nothing overlaps is a false negative;
//  - a predicted range overlapping no labelled range is a false positive.
//
// Metrics that would divide by zero are reported as absent rather than 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "telemscan/detail/csv.hpp"
#include "telemscan/error.hpp"
#include "telemscan/pipeline.hpp"
#include "telemscan/series.hpp"

namespace telemscan {

struct MatchReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  /// (predicted position, label position) for every overlapping pair.
  std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_labels;
  std::vector<bool> label_matched;
};

inline MatchReport match_sequences(std::span<const IndexRange> predicted, std::span<const IndexRange> labels) {
  MatchReport r;
  r.label_matched.assign(labels.size(), false);
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    bool hit = false;
    for (std::size_t l = 0; l < labels.size(); ++l) {
      if (predicted[p].overlaps(labels[l])) {
        hit = true;
        r.label_matched[l] = true;
        r.matched_pairs.emplace_back(p, l);
      }
    }
    if (!hit) r.unmatched_predictions.push_back(p);
  }
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (r.label_matched[l]) ++r.tp;
    else r.unmatched_labels.push_back(l);
  }
  r.fn = r.unmatched_labels.size();
  r.fp = r.unmatched_predictions.size();
  return r;
}

struct MetricsRow {
  std::string slice = "all";
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_beta;
  double beta = 0.5;
};

inline std::optional<double> f_beta_score(std::optional<double> precision, std::optional<double> recall, double beta) {
  if (!precision || !recall) return std::nullopt;
  const double p = *precision;
  const double r = *recall;
  if (p == 0.0 && r == 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (b2 * p + r);
}

inline MetricsRow precision_recall_fbeta(std::size_t tp, std::size_t fp, std::size_t fn, double beta = 0.5,
                                         std::string slice = "all") {
  MetricsRow row;
  row.slice = std::move(slice);
  row.tp = tp;
  row.fp = fp;
  row.fn = fn;
  row.beta = beta;
  if (tp + fp > 0) row.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) row.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  row.f_beta = f_beta_score(row.precision, row.recall, beta);
  return row;
}

inline MetricsRow precision_recall_fbeta(const MatchReport& report, double beta = 0.5) {
  return precision_recall_fbeta(report.tp, report.fp, report.fn, beta);
}

struct LabelOutcome {
  LabelEntry label;
  bool matched = false;
};

/// Recall for point and contextual labels separately. False positives carry
/// no class, so precision is left absent.
inline std::vector<MetricsRow> breakdown_by_type(std::span<const LabelOutcome> outcomes, double beta = 0.5) {
  std::vector<MetricsRow> rows;
  for (auto cls : {AnomalyClass::point, AnomalyClass::contextual}) {
    std::size_t tp = 0;
    std::size_t fn = 0;
    for (const auto& o : outcomes) {
      if (o.label.cls != cls) continue;
      (o.matched ? tp : fn) += 1;
    }
    MetricsRow row;
    row.slice = std::string(to_string(cls));
    row.tp = tp;
    row.fn = fn;
    row.beta = beta;
    if (tp + fn > 0) row.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct EvaluationSummary {
  std::map<std::string, MatchReport> per_channel;
  std::vector<LabelOutcome> outcomes;
  /// all, one row per tag (if any), then point and contextual.
  std::vector<MetricsRow> rows;
};

/// Scores confirmed sequences against labels. Every labelled channel must
/// appear in the results; unlabelled result channels only contribute false
/// positives.
inline EvaluationSummary evaluate_results(std::span<const ChannelResult> results, const LabelSet& labels,
                                          double beta = 0.5) {
  std::map<std::string, const ChannelResult*> by_channel;
  for (const auto& r : results) by_channel[r.channel_id] = &r;
  std::vector<std::string> missing;
  for (const auto& c : labels.channels()) {
    if (!by_channel.count(c)) missing.push_back(c);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::CoverageMismatch, "labelled channels missing from results: " + list);
  }

  EvaluationSummary summary;
  std::map<std::string, std::array<std::size_t, 3>> by_tag;  // tp, fp, fn
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [channel, result] : by_channel) {
    const auto channel_labels = labels.for_channel(channel);
    std::vector<IndexRange> label_ranges;
    for (const auto& l : channel_labels) label_ranges.push_back({l.start, l.end});
    const auto predicted = result->confirmed_ranges();
    auto report = match_sequences(predicted, label_ranges);
    tp += report.tp;
    fp += report.fp;
    fn += report.fn;
    const std::string tag = channel_labels.empty() ? std::string{} : channel_labels.front().tag;
    if (!tag.empty()) {
      auto& counts = by_tag[tag];
      counts[0] += report.tp;
      counts[1] += report.fp;
      counts[2] += report.fn;
    }
    for (std::size_t l = 0; l < channel_labels.size(); ++l) {
      summary.outcomes.push_back({channel_labels[l], report.label_matched[l]});
    }
    summary.per_channel.emplace(channel, std::move(report));
  }
  summary.rows.push_back(precision_recall_fbeta(tp, fp, fn, beta, "all"));
  for (const auto& [tag, c] : by_tag) summary.rows.push_back(precision_recall_fbeta(c[0], c[1], c[2], beta, tag));
  for (auto& row : breakdown_by_type(summary.outcomes, beta)) summary.rows.push_back(std::move(row));
  return summary;
}

struct ComparisonRow {
  std::string method;
  MetricsRow metrics;
};

/// One block of rows per method, in input order. All methods must cover the
/// same channel set.
inline std::vector<ComparisonRow> compare_methods(
    const std::vector<std::pair<std::string, std::vector<ChannelResult>>>& results_by_method, const LabelSet& labels,
    double beta = 0.5) {
  if (results_by_method.empty()) return {};
  auto channel_set = [](const std::vector<ChannelResult>& rs) {
    std::set<std::string> s;
    for (const auto& r : rs) s.insert(r.channel_id);
    return s;
  };
  const auto reference = channel_set(results_by_method.front().second);
  for (std::size_t m = 1; m < results_by_method.size(); ++m) {
    const auto other = channel_set(results_by_method[m].second);
    if (other != reference) {
      std::string diff;
      for (const auto& c : reference) {
        if (!other.count(c)) diff += " -" + c;
      }
      for (const auto& c : other) {
        if (!reference.count(c)) diff += " +" + c;
      }
      throw Error(ErrorCode::CoverageMismatch,
                  results_by_method[m].first + " vs " + results_by_method.front().first + ":" + diff);
    }
  }
  std::vector<ComparisonRow> rows;
  for (const auto& [name, results] : results_by_method) {
    auto summary = evaluate_results(results, labels, beta);
    for (auto& row : summary.rows) rows.push_back({name, std::move(row)});
  }
  return rows;
}

struct NormalizedErrorSummary {
  std::optional<double> mean;
  std::map<std::string, double> per_channel;
  std::vector<std::string> excluded;
};

/// Mean |y - y_hat| over each channel divided by the channel's value range,
/// averaged over channels. Zero-range channels are excluded and listed.
inline NormalizedErrorSummary mean_normalized_prediction_error(
    const std::vector<std::pair<ChannelSeries, PredictionSeries>>& channels) {
  NormalizedErrorSummary out;
  double total = 0.0;
  for (const auto& [series, predictions] : channels) {
    const auto values = series.telemetry();
    if (values.empty()) {
      out.excluded.push_back(series.channel_id());
      continue;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    const auto errors = compute_errors(series, predictions);
    if (!(range > 0.0) || errors.errors.empty()) {
      out.excluded.push_back(series.channel_id());
      continue;
    }
    double sum = 0.0;
    for (const auto& e : errors.errors) sum += e.e;
    const double normalized = sum / static_cast<double>(errors.errors.size()) / range;
    out.per_channel[series.channel_id()] = normalized;
    total += normalized;
  }
  if (!out.per_channel.empty()) out.mean = total / static_cast<double>(out.per_channel.size());
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline std::string metric_cell(const std::optional<double>& v, int precision = 4) {
  if (!v) return "undefined";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

}  // namespace detail

inline void write_metrics_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << "method,slice,tp,fp,fn,precision,recall,f_beta,beta\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.method << ',' << m.slice << ',' << m.tp << ',' << m.fp << ',' << m.fn << ','
        << (m.precision ? detail::format_real(*m.precision) : "") << ','
        << (m.recall ? detail::format_real(*m.recall) : "") << ','
        << (m.f_beta ? detail::format_real(*m.f_beta) : "") << ',' << detail::format_real(m.beta) << '\n';
  }
}

inline void write_metrics_table(std::ostream& out, std::span<const ComparisonRow> rows) {
  std::vector<std::array<std::string, 8>> cells;
  cells.push_back({"method", "slice", "tp", "fp", "fn", "precision", "recall", "f_beta"});
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    cells.push_back({r.method, m.slice, std::to_string(m.tp), std::to_string(m.fp), std::to_string(m.fn),
                     detail::metric_cell(m.precision), detail::metric_cell(m.recall), detail::metric_cell(m.f_beta)});
  }
  std::array<std::size_t, 8> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      if (c < 2) out << std::left;
      else out << std::right;
      out << std::setw(static_cast<int>(width[c])) << row[c];
    }
    out << std::left << '\n';
  }
}

}  // namespace telemscan
