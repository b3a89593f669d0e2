#pragma once

// Operator entry point. Exit codes: 0 success, 1 data/processing error,
// 2 usage error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "telemscan/config.hpp"
#include "telemscan/evaluation.hpp"
#include "telemscan/pipeline.hpp"
#include "telemscan/pruning.hpp"
#include "telemscan/results_io.hpp"
#include "telemscan/series.hpp"

namespace telemscan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

/// Worker count for channel-parallel runs, capped by TELEMSCAN_THREADS.
inline std::size_t thread_budget(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TELEMSCAN_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
    } catch (const std::exception&) {
      // unparsable values fall back to the hardware default
    }
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

inline std::vector<std::filesystem::path> channel_files(const std::filesystem::path& data) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_regular_file(data)) {
    files.push_back(data);
    return files;
  }
  if (!std::filesystem::is_directory(data)) throw Error(ErrorCode::FileNotFound, data.string());
  for (const auto& entry : std::filesystem::directory_iterator(data)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Row label used when comparing runs, e.g. "nonparametric p=0.13".
inline std::string run_label(const RunInfo& run) {
  auto get = [&](const char* key) {
    auto it = run.config.find(key);
    return it == run.config.end() ? std::string("?") : it->second;
  };
  std::string label = get("method");
  if (label == "gaussian_tail") label += " eps_norm=" + get("epsilon_norm");
  return label + " p=" + get("p");
}

struct DetectOptions {
  std::string config;
  std::string data;
  std::string predictions;
  std::string out;
  std::string feedback;
  std::vector<std::string> set;
  // explicit flags; empty means not given
  std::optional<std::string> method, predictor;
  std::optional<double> p, z_min, z_max, z_step, epsilon_norm;
  std::optional<std::size_t> h, batch_size, buffer;
};

inline PipelineConfig resolve_config(const DetectOptions& o) {
  ConfigMap values;
  if (!o.config.empty()) values = load_config_file(o.config);
  auto put = [&](const char* key, const auto& opt) {
    if (opt) {
      std::ostringstream os;
      os.precision(17);
      os << *opt;
      values[key] = os.str();
    }
  };
  put("method", o.method);
  put("predictor", o.predictor);
  put("p", o.p);
  put("z_min", o.z_min);
  put("z_max", o.z_max);
  put("z_step", o.z_step);
  put("epsilon_norm", o.epsilon_norm);
  put("h", o.h);
  put("batch_size", o.batch_size);
  put("expansion_buffer", o.buffer);
  for (const auto& kv : o.set) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
    values[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (!o.predictions.empty()) values["predictor"] = "file(" + o.predictions + ")";
  PipelineConfig config = make_config(values);
  config.validate();
  return config;
}

inline int cmd_detect(const DetectOptions& o, std::ostream& out, std::ostream& err) {
  PipelineConfig config;
  try {
    config = resolve_config(o);
  } catch (const Error& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }
  const std::string hash = config_hash(config);

  std::vector<std::filesystem::path> files;
  std::vector<FeedbackEntry> feedback;
  try {
    files = channel_files(o.data);
    if (!o.feedback.empty() && std::filesystem::exists(o.feedback)) feedback = load_feedback(o.feedback);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  std::string prediction_dir;
  if (auto* f = std::get_if<FilePredictor>(&config.predictor)) {
    prediction_dir = f->path;
    if (prediction_dir.empty()) {
      err << "usage error: file predictor needs --predictions <dir>\n";
      return kExitUsage;
    }
  }

  std::vector<std::optional<ChannelResult>> results(files.size());
  std::vector<std::string> failures(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        const ChannelSeries series = load_channel(files[i]);
        std::optional<ChannelPolicy> policy;
        if (!feedback.empty()) {
          const auto history = feedback_history(feedback, series.channel_id());
          policy = learn_smin(history, config.smin_policy, series.channel_id(), config.smin_rate_threshold);
        }
        const ChannelPolicy* policy_ptr = policy ? &*policy : nullptr;
        if (!prediction_dir.empty()) {
          const auto predictions =
              load_predictions(std::filesystem::path(prediction_dir) / files[i].filename(), series.channel_id());
          results[i] = run_channel(series, predictions, config, policy_ptr, hash);
        } else {
          results[i] = run_channel(series, config, policy_ptr, hash);
        }
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = thread_budget(files.size());
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<ChannelResult> ok;
  for (auto& r : results) {
    if (r) ok.push_back(std::move(*r));
  }
  std::sort(ok.begin(), ok.end(), [](const auto& a, const auto& b) { return a.channel_id < b.channel_id; });
  try {
    persist_results(ok, o.out, RunInfo{hash, config_to_map(config)});
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  std::size_t confirmed = 0;
  for (const auto& r : ok) confirmed += r.confirmed_ranges().size();
  out << "detected " << confirmed << " anomalous sequence(s) over " << ok.size() << " channel(s); config "
      << hash << " -> " << o.out << '\n';

  bool failed = false;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (failures[i].empty()) continue;
    if (!failed) err << "channels aborted:\n";
    failed = true;
    err << "  " << files[i].stem().string() << ": " << failures[i] << '\n';
  }
  return failed ? kExitData : kExitOk;
}

inline void emit_rows(const std::vector<ComparisonRow>& rows, const std::string& csv_path, std::ostream& out) {
  write_metrics_table(out, rows);
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write " + csv_path);
    write_metrics_csv(csv, rows);
  }
}

inline int cmd_evaluate(const std::string& results_path, const std::string& labels_path, const std::string& csv_path,
                        double beta, std::ostream& out, std::ostream& err) {
  try {
    const ResultsFile results = load_results(results_path);
    const LabelSet labels = load_labels(labels_path);
    const auto summary = evaluate_results(results.channels, labels, beta);
    std::vector<ComparisonRow> rows;
    for (const auto& row : summary.rows) rows.push_back({run_label(results.run), row});
    emit_rows(rows, csv_path, out);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

inline int cmd_compare(const std::vector<std::string>& result_paths, const std::string& labels_path,
                       const std::string& csv_path, double beta, std::ostream& out, std::ostream& err) {
  if (result_paths.size() < 2) {
    err << "usage error: compare needs at least two results files\n";
    return kExitUsage;
  }
  try {
    const LabelSet labels = load_labels(labels_path);
    std::vector<std::pair<std::string, std::vector<ChannelResult>>> by_method;
    for (const auto& path : result_paths) {
      ResultsFile file = load_results(path);
      std::string name = run_label(file.run);
      bool taken = std::any_of(by_method.begin(), by_method.end(), [&](const auto& m) { return m.first == name; });
      if (taken) name += " [" + std::filesystem::path(path).stem().string() + "]";
      by_method.emplace_back(std::move(name), std::move(file.channels));
    }
    emit_rows(compare_methods(by_method, labels, beta), csv_path, out);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

inline int cmd_label(const std::string& results_path, const std::string& channel, StepIndex start, StepIndex end,
                     const std::string& verdict_text, const std::string& feedback_path, std::ostream& out,
                     std::ostream& err) {
  try {
    const Verdict verdict = parse_verdict(verdict_text, "--verdict");
    const ResultsFile results = load_results(results_path);
    auto rec = std::find_if(results.channels.begin(), results.channels.end(),
                            [&](const ChannelResult& r) { return r.channel_id == channel; });
    if (rec == results.channels.end()) {
      throw Error(ErrorCode::UnknownSequence, "unknown channel '" + channel + "'");
    }
    auto seq = std::find_if(rec->sequences.begin(), rec->sequences.end(), [&](const AnomalySequence& s) {
      return s.range.start == start && s.range.end == end;
    });
    if (seq == rec->sequences.end()) {
      throw Error(ErrorCode::UnknownSequence,
                  channel + " has no sequence " + std::to_string(start) + ".." + std::to_string(end));
    }
    std::vector<FeedbackEntry> entries;
    if (std::filesystem::exists(feedback_path)) entries = load_feedback(feedback_path);
    FeedbackEntry entry{channel, seq->range, seq->score, verdict};
    auto existing = std::find_if(entries.begin(), entries.end(), [&](const FeedbackEntry& e) {
      return e.channel_id == channel && e.range == seq->range;
    });
    if (existing != entries.end()) {
      err << "warning: replacing earlier verdict for " << channel << ' ' << start << ".." << end << '\n';
      *existing = entry;
    } else {
      entries.push_back(entry);
    }
    save_feedback(feedback_path, entries);
    out << "recorded " << verdict_tag(verdict) << " for " << channel << ' ' << start << ".." << end << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

inline int cmd_inspect(const std::string& results_path, const std::string& channel, std::ostream& out,
                       std::ostream& err) {
  try {
    const ResultsFile results = load_results(results_path);
    auto rec = std::find_if(results.channels.begin(), results.channels.end(),
                            [&](const ChannelResult& r) { return r.channel_id == channel; });
    if (rec == results.channels.end()) throw Error(ErrorCode::UnknownSequence, "unknown channel '" + channel + "'");
    out << "channel " << rec->channel_id << "  method " << to_string(rec->method) << "  config " << rec->config_hash
        << '\n';
    out << "batch  first  last    status        epsilon       z          objective     n_anomalous\n";
    for (const auto& d : rec->diagnostics) {
      out << std::left << std::setw(7) << d.batch << std::setw(7) << d.first_index << std::setw(8) << d.last_index
          << std::setw(14) << to_string(d.status) << std::setw(14) << detail::metric_cell(d.epsilon, 6)
          << std::setw(11) << detail::metric_cell(d.z, 1) << std::setw(14) << detail::metric_cell(d.objective, 6)
          << d.n_anomalous << '\n';
    }
    out << "sequences:\n";
    for (const auto& s : rec->sequences) {
      out << "  " << s.range.start << ".." << s.range.end << "  peak " << s.peak_index << " ("
          << detail::format_real(s.peak_value) << ")  score " << detail::format_real(s.score) << "  "
          << to_string(s.status) << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Streaming telemetry anomaly detection over prediction residuals", "telemscan"};
  app.require_subcommand(1);
  // "--h" is the history-length flag, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  DetectOptions det;
  auto* detect = app.add_subcommand("detect", "Run detection over every channel under --data");
  detect->add_option("--config", det.config, "Flat key = value config file")->check(CLI::ExistingFile);
  detect->add_option("--data", det.data, "Channel CSV file or directory")->required();
  detect->add_option("--predictions", det.predictions, "Directory of <channel>.csv prediction files");
  detect->add_option("--out", det.out, "Results file (JSON lines)")->required();
  detect->add_option("--feedback", det.feedback, "Verdict file used to learn per-channel s_min");
  detect->add_option("--method", det.method, "nonparametric | gaussian_tail");
  detect->add_option("--predictor", det.predictor, "persistence | ar(N) | file(dir)");
  detect->add_option("--p", det.p, "Minimum percent decrease for pruning");
  detect->add_option("--z-min", det.z_min);
  detect->add_option("--z-max", det.z_max);
  detect->add_option("--z-step", det.z_step);
  detect->add_option("--epsilon-norm", det.epsilon_norm);
  detect->add_option("--h", det.h, "History length");
  detect->add_option("--batch-size", det.batch_size);
  detect->add_option("--buffer", det.buffer, "Expansion buffer in steps");
  detect->add_option("--set", det.set, "Override any config key: key=value");

  std::string results_path, labels_path, csv_out;
  double beta = 0.5;
  auto* evaluate = app.add_subcommand("evaluate", "Score a results file against labels");
  evaluate->add_option("--results", results_path)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--labels", labels_path)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", csv_out, "Also write the table as CSV");
  evaluate->add_option("--beta", beta, "F-beta weight")->capture_default_str();

  std::vector<std::string> compare_inputs;
  auto* compare = app.add_subcommand("compare", "Compare results files over the same channels");
  compare->add_option("results", compare_inputs, "Two or more results files")->required()->check(CLI::ExistingFile);
  compare->add_option("--labels", labels_path)->required()->check(CLI::ExistingFile);
  compare->add_option("--out", csv_out, "Also write the table as CSV");
  compare->add_option("--beta", beta)->capture_default_str();

  std::string channel, verdict, feedback_out;
  StepIndex start = 0, end = 0;
  auto* label = app.add_subcommand("label", "Record a tp/fp verdict for a detected sequence");
  label->add_option("--results", results_path)->required()->check(CLI::ExistingFile);
  label->add_option("--channel", channel)->required();
  label->add_option("--start", start)->required();
  label->add_option("--end", end)->required();
  label->add_option("--verdict", verdict, "tp | fp")->required();
  label->add_option("--out", feedback_out, "Feedback CSV to update")->required();

  auto* inspect = app.add_subcommand("inspect", "Dump per-batch threshold diagnostics for one channel");
  inspect->add_option("--results", results_path)->required()->check(CLI::ExistingFile);
  inspect->add_option("--channel", channel)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  if (detect->parsed()) return cmd_detect(det, out, err);
  if (evaluate->parsed()) return cmd_evaluate(results_path, labels_path, csv_out, beta, out, err);
  if (compare->parsed()) return cmd_compare(compare_inputs, labels_path, csv_out, beta, out, err);
  if (label->parsed()) return cmd_label(results_path, channel, start, end, verdict, feedback_out, out, err);
  if (inspect->parsed()) return cmd_inspect(results_path, channel, out, err);
  return kExitUsage;
}

}  // namespace telemscan::cli
