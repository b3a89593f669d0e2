#pragma once

// Channel, label and prediction containers plus their CSV ingestion.
//
// Channel CSV:    index,value,cmd_0,...,cmd_{k-1}
// Label CSV:      channel_id,start,end,class,t_a[,tag]
// Prediction CSV: index,y_hat
//
// All indices are 0-based step indices; one step is one aggregation window.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "telemscan/detail/csv.hpp"
#include "telemscan/error.hpp"

namespace telemscan {

using StepIndex = std::int64_t;

struct TimeStep {
  StepIndex index = 0;
  /// values[0] is the telemetry value, values[1..] are one-hot command covariates.
  std::vector<double> values;
};

class ChannelSeries {
 public:
  ChannelSeries() = default;

  /// Validates every invariant; throws Error on violation.
  ChannelSeries(std::string channel_id, std::size_t dims, std::vector<TimeStep> steps)
      : channel_id_(std::move(channel_id)), dims_(dims), steps_(std::move(steps)) {
    if (dims_ == 0) throw Error(ErrorCode::InvalidArgument, "dims must be positive");
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const auto& step = steps_[i];
      if (step.values.size() != dims_) {
        throw Error(ErrorCode::RaggedRow, channel_id_ + ": step " + std::to_string(step.index));
      }
      if (i > 0 && step.index <= steps_[i - 1].index) {
        throw Error(ErrorCode::NonMonotonicIndex, channel_id_ + ": step " + std::to_string(step.index));
      }
      for (std::size_t d = 0; d < dims_; ++d) {
        double v = step.values[d];
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::NonFiniteValue, channel_id_ + ": step " + std::to_string(step.index));
        }
        if (d > 0 && v != 0.0 && v != 1.0) {
          throw Error(ErrorCode::NonBinaryCommand, channel_id_ + ": step " + std::to_string(step.index));
        }
      }
    }
  }

  /// Convenience for command-free channels with contiguous indices from `first`.
  static ChannelSeries from_values(std::string channel_id, const std::vector<double>& values,
                                   StepIndex first = 0) {
    std::vector<TimeStep> steps;
    steps.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      steps.push_back({first + static_cast<StepIndex>(i), {values[i]}});
    }
    return ChannelSeries(std::move(channel_id), 1, std::move(steps));
  }

  const std::string& channel_id() const noexcept { return channel_id_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }
  const std::vector<TimeStep>& steps() const noexcept { return steps_; }
  const TimeStep& operator[](std::size_t pos) const { return steps_[pos]; }

  /// Position of the step carrying `index`, if present.
  std::optional<std::size_t> position_of(StepIndex index) const {
    auto it = std::lower_bound(steps_.begin(), steps_.end(), index,
                               [](const TimeStep& s, StepIndex i) { return s.index < i; });
    if (it == steps_.end() || it->index != index) return std::nullopt;
    return static_cast<std::size_t>(it - steps_.begin());
  }

  std::vector<double> column(std::size_t dim) const {
    std::vector<double> out;
    out.reserve(steps_.size());
    for (const auto& s : steps_) out.push_back(s.values.at(dim));
    return out;
  }

  std::vector<double> telemetry() const { return column(0); }

 private:
  std::string channel_id_;
  std::size_t dims_ = 1;
  std::vector<TimeStep> steps_;
};

enum class AnomalyClass { point, contextual };

inline std::string_view to_string(AnomalyClass c) {
  return c == AnomalyClass::point ? "point" : "contextual";
}

struct LabelEntry {
  std::string channel_id;
  StepIndex start = 0;
  StepIndex end = 0;
  AnomalyClass cls = AnomalyClass::point;
  StepIndex t_a = 0;
  /// Optional slice tag such as the spacecraft name; empty when absent.
  std::string tag;
};

struct LabelSet {
  std::vector<LabelEntry> entries;

  std::vector<LabelEntry> for_channel(const std::string& channel_id) const {
    std::vector<LabelEntry> out;
    for (const auto& e : entries) {
      if (e.channel_id == channel_id) out.push_back(e);
    }
    return out;
  }

  std::vector<std::string> channels() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.channel_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// Throws InvalidRange or OverlappingLabels when the set breaks its invariants.
inline void validate_labels(const LabelSet& labels) {
  std::map<std::string, std::vector<const LabelEntry*>> by_channel;
  for (const auto& e : labels.entries) {
    if (e.start > e.end || e.t_a < e.start || e.t_a > e.end) {
      throw Error(ErrorCode::InvalidRange, e.channel_id + " [" + std::to_string(e.start) + "," +
                                               std::to_string(e.end) + "] t_a=" + std::to_string(e.t_a));
    }
    by_channel[e.channel_id].push_back(&e);
  }
  for (auto& [channel, list] : by_channel) {
    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->start < b->start; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->start <= list[i - 1]->end) {
        throw Error(ErrorCode::OverlappingLabels,
                    channel + ": [" + std::to_string(list[i - 1]->start) + "," + std::to_string(list[i - 1]->end) +
                        "] and [" + std::to_string(list[i]->start) + "," + std::to_string(list[i]->end) + "]");
      }
    }
  }
}

struct Prediction {
  StepIndex index = 0;
  double y_hat = 0.0;
};

struct PredictionSeries {
  std::string channel_id;
  std::vector<Prediction> predictions;
};

inline void validate_predictions(const PredictionSeries& series) {
  for (std::size_t i = 0; i < series.predictions.size(); ++i) {
    const auto& p = series.predictions[i];
    if (!std::isfinite(p.y_hat)) {
      throw Error(ErrorCode::NonFiniteValue, series.channel_id + ": prediction " + std::to_string(p.index));
    }
    if (i > 0) {
      StepIndex prev = series.predictions[i - 1].index;
      if (p.index == prev) {
        throw Error(ErrorCode::DuplicateIndex, series.channel_id + ": index " + std::to_string(p.index));
      }
      if (p.index < prev) {
        throw Error(ErrorCode::NonMonotonicIndex, series.channel_id + ": index " + std::to_string(p.index));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Loaders

/// Loads a channel CSV. The channel id defaults to the file stem.
inline ChannelSeries load_channel(const std::filesystem::path& path, std::string channel_id = {}) {
  using namespace detail;
  if (channel_id.empty()) channel_id = path.stem().string();
  CsvTable table = read_csv(path);
  const auto& header = table.header;
  if (header.size() < 2 || header[0] != "index" || header[1] != "value") {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected 'index,value[,cmd_k...]'");
  }
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c] != "cmd_" + std::to_string(c - 2)) {
      throw Error(ErrorCode::MalformedHeader, path.string() + ": column " + std::to_string(c) +
                                                  " should be cmd_" + std::to_string(c - 2));
    }
  }
  const std::size_t dims = header.size() - 1;
  std::vector<TimeStep> steps;
  steps.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::string ctx = where(path, row.line_no);
    if (row.fields.size() != header.size()) {
      throw Error(ErrorCode::RaggedRow, ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                                            std::to_string(row.fields.size()));
    }
    TimeStep step;
    step.index = parse_index(row.fields[0], ctx);
    if (!steps.empty() && step.index <= steps.back().index) {
      throw Error(ErrorCode::NonMonotonicIndex, ctx + ": index " + std::to_string(step.index));
    }
    step.values.reserve(dims);
    for (std::size_t c = 1; c < row.fields.size(); ++c) {
      double v = parse_finite(row.fields[c], ctx);
      if (c >= 2 && v != 0.0 && v != 1.0) {
        throw Error(ErrorCode::NonBinaryCommand, ctx + ": " + header[c] + "=" + row.fields[c]);
      }
      step.values.push_back(v);
    }
    steps.push_back(std::move(step));
  }
  return ChannelSeries(std::move(channel_id), dims, std::move(steps));
}

inline AnomalyClass parse_class(std::string_view text, const std::string& ctx) {
  if (text == "point") return AnomalyClass::point;
  if (text == "contextual") return AnomalyClass::contextual;
  throw Error(ErrorCode::UnknownClass, ctx + ": '" + std::string(text) + "'");
}

inline LabelSet load_labels(const std::filesystem::path& path) {
  using namespace detail;
  CsvTable table = read_csv(path);
  const std::vector<std::string> expected{"channel_id", "start", "end", "class", "t_a"};
  const auto& header = table.header;
  bool has_tag = header.size() == 6 && header[5] == "tag";
  if (header.size() < 5 || !std::equal(expected.begin(), expected.end(), header.begin()) ||
      (header.size() > 5 && !has_tag)) {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected 'channel_id,start,end,class,t_a[,tag]'");
  }
  LabelSet labels;
  for (const auto& row : table.rows) {
    std::string ctx = where(path, row.line_no);
    if (row.fields.size() != header.size()) {
      throw Error(ErrorCode::RaggedRow, ctx);
    }
    LabelEntry e;
    e.channel_id = row.fields[0];
    e.start = parse_index(row.fields[1], ctx);
    e.end = parse_index(row.fields[2], ctx);
    e.cls = parse_class(row.fields[3], ctx);
    e.t_a = parse_index(row.fields[4], ctx);
    if (has_tag) e.tag = row.fields[5];
    labels.entries.push_back(std::move(e));
  }
  validate_labels(labels);
  return labels;
}

inline PredictionSeries load_predictions(const std::filesystem::path& path, std::string channel_id = {}) {
  using namespace detail;
  if (channel_id.empty()) channel_id = path.stem().string();
  CsvTable table = read_csv(path);
  if (table.header.size() != 2 || table.header[0] != "index" || table.header[1] != "y_hat") {
    throw Error(ErrorCode::MalformedHeader, path.string() + ": expected 'index,y_hat'");
  }
  PredictionSeries out;
  out.channel_id = std::move(channel_id);
  out.predictions.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::string ctx = where(path, row.line_no);
    if (row.fields.size() != 2) throw Error(ErrorCode::RaggedRow, ctx);
    Prediction p{parse_index(row.fields[0], ctx), parse_finite(row.fields[1], ctx)};
    if (!out.predictions.empty()) {
      if (p.index == out.predictions.back().index) {
        throw Error(ErrorCode::DuplicateIndex, ctx + ": index " + std::to_string(p.index));
      }
      if (p.index < out.predictions.back().index) {
        throw Error(ErrorCode::NonMonotonicIndex, ctx + ": index " + std::to_string(p.index));
      }
    }
    out.predictions.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Writers (12 significant digits)

inline void write_channel(std::ostream& out, const ChannelSeries& series) {
  out << "index,value";
  for (std::size_t c = 1; c < series.dims(); ++c) out << ",cmd_" << (c - 1);
  out << '\n';
  for (const auto& step : series.steps()) {
    out << step.index;
    for (std::size_t d = 0; d < step.values.size(); ++d) {
      out << ',' << (d == 0 ? detail::format_real(step.values[d]) : (step.values[d] == 0.0 ? "0" : "1"));
    }
    out << '\n';
  }
}

inline void write_predictions(std::ostream& out, const PredictionSeries& series) {
  out << "index,y_hat\n";
  for (const auto& p : series.predictions) out << p.index << ',' << detail::format_real(p.y_hat) << '\n';
}

inline void write_labels(std::ostream& out, const LabelSet& labels) {
  bool any_tag = std::any_of(labels.entries.begin(), labels.entries.end(),
                             [](const LabelEntry& e) { return !e.tag.empty(); });
  out << "channel_id,start,end,class,t_a" << (any_tag ? ",tag" : "") << '\n';
  for (const auto& e : labels.entries) {
    out << e.channel_id << ',' << e.start << ',' << e.end << ',' << to_string(e.cls) << ',' << e.t_a;
    if (any_tag) out << ',' << e.tag;
    out << '\n';
  }
}

template <typename Writer, typename T>
void write_file(const std::filesystem::path& path, const T& value, Writer writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  writer(out, value);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace telemscan
