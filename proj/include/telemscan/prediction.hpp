#pragma once

// One-step-ahead baseline predictors, prediction errors and EWMA smoothing.
//
// The LSTM predictions the detector was designed around are produced outside
// this library and arrive as PredictionSeries files; persistence and
// autoregressive predictors cover self-contained runs.

#include <Eigen/Dense>

#include <cmath>
#include <regex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "telemscan/error.hpp"
#include "telemscan/series.hpp"

namespace telemscan {

struct PredictorConfig {
  std::size_t sequence_length = 250;
  std::size_t prediction_length = 1;
  std::size_t output_dims = 1;

  void validate() const {
    if (sequence_length < 1) throw Error(ErrorCode::InvalidArgument, "sequence_length must be >= 1");
    if (prediction_length != 1 || output_dims != 1) {
      throw Error(ErrorCode::InvalidArgument, "only single-step scalar prediction is supported");
    }
  }
};

struct ErrorPoint {
  StepIndex index = 0;
  double e = 0.0;
};

struct ErrorSeries {
  std::string channel_id;
  std::vector<ErrorPoint> errors;

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(errors.size());
    for (const auto& p : errors) out.push_back(p.e);
    return out;
  }
};

struct SmoothedError {
  StepIndex index = 0;
  double e_s = 0.0;
};

struct SmoothedErrorWindow {
  std::size_t history_len = 2100;
  std::size_t smoothing_span = 105;
  std::vector<SmoothedError> values;
};

/// Default EWMA span, 5% of the evaluation history (105 for h = 2100).
inline std::size_t default_smoothing_span(std::size_t h) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.05 * static_cast<double>(h))));
}

// ---------------------------------------------------------------------------
// Persistence

/// Predicts the value at step index t as the telemetry value at step t-1.
inline double predict_persistence(const ChannelSeries& series, StepIndex t) {
  if (t <= 0) throw Error(ErrorCode::InsufficientHistory, "persistence needs t >= 1");
  auto pos = series.position_of(t - 1);
  if (!pos) throw Error(ErrorCode::AlignmentGap, series.channel_id() + ": no step " + std::to_string(t - 1));
  return series[*pos].values[0];
}

/// Persistence predictions for every step after the first.
inline PredictionSeries persistence_predictions(const ChannelSeries& series) {
  PredictionSeries out{series.channel_id(), {}};
  for (std::size_t pos = 1; pos < series.size(); ++pos) {
    out.predictions.push_back({series[pos].index, series[pos - 1].values[0]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Autoregressive baseline

struct ARModel {
  std::size_t order = 0;
  /// coefficients[k] multiplies the value k+1 steps back (most-recent-first).
  std::vector<double> coefficients;
  double intercept = 0.0;
  /// Set when the design matrix was rank deficient and the ridge fallback was used.
  bool regularized = false;
};

inline constexpr double kRidgeLambda = 1e-8;

/// Least-squares AR(order) fit on the telemetry column, with intercept.
///
/// The regression is solved on centred data so the intercept is never
/// penalised; a constant channel therefore fits with zero coefficients and
/// intercept equal to the constant. Rank-deficient designs fall back to a
/// ridge solve with lambda = 1e-8.
inline ARModel fit_ar(std::span<const double> train, std::size_t order) {
  if (train.size() <= order + 1) {
    throw Error(ErrorCode::InsufficientHistory, "AR(" + std::to_string(order) + ") needs more than " +
                                                    std::to_string(order + 1) + " training values");
  }
  ARModel model;
  model.order = order;
  const auto rows = static_cast<Eigen::Index>(train.size() - order);
  const auto cols = static_cast<Eigen::Index>(order);

  Eigen::VectorXd y(rows);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = static_cast<std::size_t>(r) + order;
    y(r) = train[t];
    for (Eigen::Index k = 0; k < cols; ++k) x(r, k) = train[t - 1 - static_cast<std::size_t>(k)];
  }
  const double y_mean = y.mean();
  if (order == 0) {
    model.intercept = y_mean;
    return model;
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  Eigen::MatrixXd xc = x.rowwise() - x_mean;
  Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd coef;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  if (qr.rank() == cols) {
    coef = qr.solve(yc);
  } else {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += kRidgeLambda;
    coef = gram.ldlt().solve(xc.transpose() * yc);
    model.regularized = true;
  }
  if (!coef.allFinite()) {
    throw Error(ErrorCode::DegenerateFit, "AR(" + std::to_string(order) + ") solve produced non-finite values");
  }
  model.coefficients.assign(coef.data(), coef.data() + coef.size());
  model.intercept = y_mean - x_mean.dot(coef);
  return model;
}

inline ARModel fit_ar(const ChannelSeries& train, std::size_t order) {
  auto values = train.telemetry();
  return fit_ar(std::span<const double>(values), order);
}

/// `window[0]` is the most recent value, `window[k]` the value k+1 steps back.
inline double predict_ar(const ARModel& model, std::span<const double> window) {
  if (window.size() != model.order) {
    throw Error(ErrorCode::WrongWindowLength, "expected " + std::to_string(model.order) + " values, got " +
                                                  std::to_string(window.size()));
  }
  double y = model.intercept;
  for (std::size_t k = 0; k < model.order; ++k) y += model.coefficients[k] * window[k];
  return y;
}

/// AR predictions for every step with `order` predecessors available.
inline PredictionSeries ar_predictions(const ARModel& model, const ChannelSeries& series) {
  PredictionSeries out{series.channel_id(), {}};
  std::vector<double> window(model.order);
  for (std::size_t pos = model.order; pos < series.size(); ++pos) {
    for (std::size_t k = 0; k < model.order; ++k) window[k] = series[pos - 1 - k].values[0];
    out.predictions.push_back({series[pos].index, predict_ar(model, window)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Predictor selection: persistence | ar(order) | file(path)

struct PersistencePredictor {};
struct ARPredictor {
  std::size_t order = 1;
};
struct FilePredictor {
  std::string path;
};
using PredictorSpec = std::variant<PersistencePredictor, ARPredictor, FilePredictor>;

inline PredictorSpec parse_predictor_spec(const std::string& text) {
  static const std::regex ar_re(R"(ar\(\s*(\d+)\s*\))");
  static const std::regex file_re(R"(file(\((.*)\))?)");
  std::smatch m;
  if (text == "persistence") return PersistencePredictor{};
  if (std::regex_match(text, m, ar_re)) return ARPredictor{std::stoul(m[1].str())};
  if (std::regex_match(text, m, file_re)) return FilePredictor{m[2].str()};
  throw Error(ErrorCode::ConfigError, "unknown predictor '" + text + "'");
}

inline std::string to_string(const PredictorSpec& spec) {
  struct Visitor {
    std::string operator()(const PersistencePredictor&) const { return "persistence"; }
    std::string operator()(const ARPredictor& p) const { return "ar(" + std::to_string(p.order) + ")"; }
    std::string operator()(const FilePredictor& p) const { return p.path.empty() ? "file" : "file(" + p.path + ")"; }
  };
  return std::visit(Visitor{}, spec);
}

// ---------------------------------------------------------------------------
// Errors and smoothing

/// e(t) = |y(t) - y_hat(t)|. A prediction labelled t targets the telemetry
/// value stored at step t; the one-step shift is applied when predictions are
/// produced, not here.
inline ErrorSeries compute_errors(const ChannelSeries& actuals, const PredictionSeries& predictions) {
  ErrorSeries out{actuals.channel_id(), {}};
  out.errors.reserve(predictions.predictions.size());
  std::size_t pos = 0;
  for (const auto& p : predictions.predictions) {
    // predictions are sorted, so scan forward instead of searching each time
    while (pos < actuals.size() && actuals[pos].index < p.index) ++pos;
    if (pos == actuals.size() || actuals[pos].index != p.index) {
      throw Error(ErrorCode::AlignmentGap, actuals.channel_id() + ": no actual for prediction at index " +
                                               std::to_string(p.index));
    }
    out.errors.push_back({p.index, std::abs(actuals[pos].values[0] - p.y_hat)});
  }
  return out;
}

/// e_s(0) = e(0); e_s(t) = a*e(t) + (1-a)*e_s(t-1), a = 2/(span+1).
inline std::vector<double> ewma(std::span<const double> values, std::size_t span) {
  if (span < 1) throw Error(ErrorCode::InvalidArgument, "span must be >= 1");
  const double alpha = 2.0 / (static_cast<double>(span) + 1.0);
  std::vector<double> out;
  out.reserve(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) {
    out.push_back(t == 0 ? values[0] : alpha * values[t] + (1.0 - alpha) * out.back());
  }
  return out;
}

inline std::vector<SmoothedError> ewma_smooth(const ErrorSeries& errors, std::size_t span) {
  auto raw = errors.values();
  auto smoothed = ewma(raw, span);
  std::vector<SmoothedError> out;
  out.reserve(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) out.push_back({errors.errors[i].index, smoothed[i]});
  return out;
}

}  // namespace telemscan
