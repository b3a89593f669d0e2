#pragma once

// Flat key/value run configuration.
//
//   # comment
//   h = 2100
//   predictor = "ar(8)"
//
// Every key maps to one PipelineConfig field. The provenance hash is FNV-1a
// over the canonical `key=value` dump of the fully resolved configuration,
// so any override that changes behaviour changes the hash.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "telemscan/detail/csv.hpp"
#include "telemscan/error.hpp"
#include "telemscan/pipeline.hpp"

namespace telemscan {

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config_text(const std::string& text, const std::string& origin = "config") {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    auto view = detail::trim(line);
    if (view.empty()) continue;
    if (view.front() == '[') continue;  // section headers are ignored; keys are flat
    auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(detail::trim(view.substr(0, eq)));
    std::string_view value = detail::trim(view.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[key] = std::string(value);
  }
  return out;
}

inline ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path.string());
}

namespace detail {

inline std::size_t parse_count(const std::string& key, const std::string& value) {
  try {
    return static_cast<std::size_t>(parse_index(value, key));
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, key + ": expected a non-negative integer, got '" + value + "'");
  }
}

inline double parse_config_real(const std::string& key, const std::string& value) {
  try {
    return parse_finite(value, key);
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, key + ": expected a real number, got '" + value + "'");
  }
}

}  // namespace detail

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "ar_train_len", "batch_size",  "denominator", "epsilon_norm", "expansion_buffer", "h",
      "l_short",      "l_w",         "method",      "p",            "predictor",        "smin_policy",
      "smin_rate_threshold", "smoothing_span", "warmup_min", "z_max", "z_min", "z_step"};
  return keys;
}

inline void apply_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_config_real;
  using detail::parse_count;
  if (key == "h") c.h = parse_count(key, value);
  else if (key == "batch_size") c.batch_size = parse_count(key, value);
  else if (key == "warmup_min") c.warmup_min = parse_count(key, value);
  else if (key == "expansion_buffer") c.expansion_buffer = parse_count(key, value);
  else if (key == "smoothing_span") c.smoothing_span = parse_count(key, value);
  else if (key == "p") c.p = parse_config_real(key, value);
  else if (key == "z_min") c.z_min = parse_config_real(key, value);
  else if (key == "z_max") c.z_max = parse_config_real(key, value);
  else if (key == "z_step") c.z_step = parse_config_real(key, value);
  else if (key == "predictor") c.predictor = parse_predictor_spec(value);
  else if (key == "ar_train_len") c.ar_train_len = parse_count(key, value);
  else if (key == "method") c.method = parse_method(value);
  else if (key == "epsilon_norm") c.epsilon_norm = parse_config_real(key, value);
  else if (key == "l_short") c.l_short = parse_count(key, value);
  else if (key == "l_w") c.l_w = parse_count(key, value);
  else if (key == "denominator") {
    if (value == "variance") c.denominator = TailDenominator::variance;
    else if (value == "stddev") c.denominator = TailDenominator::stddev;
    else throw Error(ErrorCode::ConfigError, "denominator must be variance or stddev");
  } else if (key == "smin_policy") c.smin_policy = parse_smin_policy(value);
  else if (key == "smin_rate_threshold") c.smin_rate_threshold = parse_config_real(key, value);
  else throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

inline PipelineConfig make_config(const ConfigMap& values, PipelineConfig base = {}) {
  for (const auto& [k, v] : values) apply_config_value(base, k, v);
  return base;
}

/// Resolved configuration as sorted key/value pairs.
inline ConfigMap config_to_map(const PipelineConfig& c) {
  using detail::format_real;
  ConfigMap m;
  m["ar_train_len"] = std::to_string(c.ar_train_len);
  m["batch_size"] = std::to_string(c.batch_size);
  m["denominator"] = c.denominator == TailDenominator::variance ? "variance" : "stddev";
  m["epsilon_norm"] = format_real(c.epsilon_norm);
  m["expansion_buffer"] = std::to_string(c.expansion_buffer);
  m["h"] = std::to_string(c.h);
  m["l_short"] = std::to_string(c.l_short);
  m["l_w"] = std::to_string(c.gaussian().window_len);
  m["method"] = std::string(to_string(c.method));
  m["p"] = format_real(c.p);
  m["predictor"] = to_string(c.predictor);
  m["smin_policy"] = to_string(c.smin_policy);
  m["smin_rate_threshold"] = format_real(c.smin_rate_threshold);
  m["smoothing_span"] = std::to_string(c.effective_span());
  m["warmup_min"] = std::to_string(c.warmup_min);
  m["z_max"] = format_real(c.z_max);
  m["z_min"] = format_real(c.z_min);
  m["z_step"] = format_real(c.z_step);
  return m;
}

inline std::string canonical_config(const PipelineConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_to_map(c)) out += k + "=" + v + "\n";
  return out;
}

inline std::string config_hash(const PipelineConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace telemscan
