#pragma once

// Line-delimited JSON results. The first line is a header record describing
// the run; each following line is one channel:
//
//   {"channel_id":..,"method":..,"config_hash":..,
//    "sequences":[{"start","end","peak_index","peak_value","score","status"}],
//    "diagnostics":[{"batch","first_index","last_index","status","epsilon","z","objective","n_anomalous"}]}
//
// Field order is fixed and doubles are written in shortest round-trip form,
// so identical results always serialise to identical bytes.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "telemscan/config.hpp"
#include "telemscan/error.hpp"
#include "telemscan/pipeline.hpp"

namespace telemscan {

inline constexpr const char* kResultsFormat = "telemscan-results";
inline constexpr int kResultsVersion = 1;

struct RunInfo {
  std::string config_hash;
  ConfigMap config;
  friend bool operator==(const RunInfo&, const RunInfo&) = default;
};

struct ResultsFile {
  RunInfo run;
  std::vector<ChannelResult> channels;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson optional_to_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

inline std::optional<double> optional_from_json(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

inline SequenceStatus parse_status(const std::string& s) {
  if (s == "candidate") return SequenceStatus::candidate;
  if (s == "pruned") return SequenceStatus::pruned;
  if (s == "confirmed") return SequenceStatus::confirmed;
  throw Error(ErrorCode::InvalidArgument, "unknown sequence status '" + s + "'");
}

inline BatchStatus parse_batch_status(const std::string& s) {
  for (auto st : {BatchStatus::warmup, BatchStatus::degenerate, BatchStatus::no_anomalies, BatchStatus::selected,
                  BatchStatus::evaluated}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown batch status '" + s + "'");
}

inline ojson channel_to_json(const ChannelResult& r) {
  ojson j;
  j["channel_id"] = r.channel_id;
  j["method"] = std::string(to_string(r.method));
  j["config_hash"] = r.config_hash;
  ojson seqs = ojson::array();
  for (const auto& s : r.sequences) {
    ojson js;
    js["start"] = s.range.start;
    js["end"] = s.range.end;
    js["peak_index"] = s.peak_index;
    js["peak_value"] = s.peak_value;
    js["score"] = s.score;
    js["status"] = std::string(to_string(s.status));
    seqs.push_back(std::move(js));
  }
  j["sequences"] = std::move(seqs);
  ojson diags = ojson::array();
  for (const auto& d : r.diagnostics) {
    ojson jd;
    jd["batch"] = d.batch;
    jd["first_index"] = d.first_index;
    jd["last_index"] = d.last_index;
    jd["status"] = std::string(to_string(d.status));
    jd["epsilon"] = optional_to_json(d.epsilon);
    jd["z"] = optional_to_json(d.z);
    jd["objective"] = optional_to_json(d.objective);
    jd["n_anomalous"] = d.n_anomalous;
    diags.push_back(std::move(jd));
  }
  j["diagnostics"] = std::move(diags);
  return j;
}

inline ChannelResult channel_from_json(const ojson& j) {
  ChannelResult r;
  r.channel_id = j.at("channel_id").get<std::string>();
  r.method = parse_method(j.at("method").get<std::string>());
  r.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& js : j.at("sequences")) {
    AnomalySequence s;
    s.channel_id = r.channel_id;
    s.range = {js.at("start").get<StepIndex>(), js.at("end").get<StepIndex>()};
    s.peak_index = js.at("peak_index").get<StepIndex>();
    s.peak_value = js.at("peak_value").get<double>();
    s.score = js.at("score").get<double>();
    s.status = parse_status(js.at("status").get<std::string>());
    r.sequences.push_back(std::move(s));
  }
  for (const auto& jd : j.at("diagnostics")) {
    BatchDiagnostic d;
    d.batch = jd.at("batch").get<std::size_t>();
    d.first_index = jd.at("first_index").get<StepIndex>();
    d.last_index = jd.at("last_index").get<StepIndex>();
    d.status = parse_batch_status(jd.at("status").get<std::string>());
    d.epsilon = optional_from_json(jd.at("epsilon"));
    d.z = optional_from_json(jd.at("z"));
    d.objective = optional_from_json(jd.at("objective"));
    d.n_anomalous = jd.at("n_anomalous").get<std::size_t>();
    r.diagnostics.push_back(d);
  }
  return r;
}

}  // namespace detail

inline void write_results(std::ostream& out, std::span<const ChannelResult> results, const RunInfo& run) {
  detail::ojson header;
  header["format"] = kResultsFormat;
  header["version"] = kResultsVersion;
  header["config_hash"] = run.config_hash;
  header["config"] = detail::ojson::object();
  for (const auto& [k, v] : run.config) header["config"][k] = v;
  out << header.dump() << '\n';
  for (const auto& r : results) out << detail::channel_to_json(r).dump() << '\n';
}

inline void persist_results(std::span<const ChannelResult> results, const std::filesystem::path& path,
                            const RunInfo& run = {}) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write results to " + path.string());
  write_results(out, results, run);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

inline ResultsFile load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(std::filesystem::exists(path) ? ErrorCode::IoError : ErrorCode::FileNotFound, path.string());
  }
  ResultsFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = detail::ojson::parse(line);
      if (!have_header) {
        if (j.value("format", std::string{}) != kResultsFormat) {
          throw Error(ErrorCode::MalformedHeader, "not a results file");
        }
        file.run.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& [k, v] : j.at("config").items()) file.run.config[k] = v.get<std::string>();
        have_header = true;
        continue;
      }
      file.channels.push_back(detail::channel_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedHeader, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::MalformedHeader, path.string() + ": missing header record");
  return file;
}

}  // namespace telemscan
