// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "telemscan/synthetic.hpp"
#include "telemscan/cli.hpp"
#include "telemscan/evaluation.hpp"
#include "telemscan/gaussian_tail.hpp"
#include "telemscan/normality.hpp"
#include "telemscan/pipeline.hpp"
#include "telemscan/pruning.hpp"
#include "telemscan/thresholding.hpp"

using namespace telemscan;
namespace ts = telemscan::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::vector<double> random_window(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> w(n);
  const int family = static_cast<int>(u(rng) * 3);
  std::exponential_distribution<double> ex(2.0);
  std::lognormal_distribution<double> ln(0.0, 0.7);
  std::normal_distribution<double> nm(0.0, 1.0);
  for (auto& x : w) x = family == 0 ? ex(rng) : family == 1 ? ln(rng) : std::abs(nm(rng));
  // smooth part of the time so runs of consecutive anomalies occur
  if (u(rng) < 0.5) w = ewma(w, 1 + static_cast<std::size_t>(u(rng) * 40));
  const int bursts = static_cast<int>(u(rng) * 5);
  for (int b = 0; b < bursts; ++b) {
    const std::size_t len = 1 + static_cast<std::size_t>(u(rng) * 20);
    const auto at = static_cast<std::size_t>(u(rng) * static_cast<double>(n - len));
    const double h = 0.5 + 6.0 * u(rng);
    for (std::size_t k = 0; k < len; ++k) w[at + k] += h;
  }
  return w;
}

// ---------------------------------------------------------------------------

Outcome figure_two_pruning() {
  const std::vector<AnomalySequence> seqs = [] {
    std::vector<AnomalySequence> s(2);
    s[0].range = {100, 110};
    s[0].peak_value = 0.01396;
    s[1].range = {400, 405};
    s[1].peak_value = 0.01072;
    return s;
  }();
  const PruneInput in{{0.01396, 0.01072, 0.00994}, {0, 1}, 0.1};
  const auto t0 = Clock::now();
  const auto d = percent_decreases(in.e_max);
  const auto out = prune_sequences(in, seqs);
  const double ms = seconds_since(t0) * 1e3;
  const bool ok = std::abs(d[0] - 0.23) <= 0.005 && std::abs(d[1] - 0.07) <= 0.005 &&
                  out[0].status == SequenceStatus::confirmed && out[1].status == SequenceStatus::pruned && ms < 1.0;
  return {ok, fmt("d(1)=%.4f d(2)=%.4f statuses=", d[0], d[1]) + std::string(to_string(out[0].status)) + "/" +
                  std::string(to_string(out[1].status)) + fmt(" %.4f ms", ms)};
}

struct OracleRun {
  Outcome equivalence;
  Outcome delta;
  std::vector<std::pair<std::vector<double>, ThresholdDecision>> decisions;
};

OracleRun threshold_oracle() {
  OracleRun run;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(50, 4000);
  const ZGrid grid;
  std::size_t mismatches = 0, selected = 0, delta_failures = 0;
  double worst_delta = 0.0;
  double selector_seconds = 0.0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 1000; ++trial) {
    const auto w = random_window(rng, len(rng));
    const auto ts0 = Clock::now();
    const auto sel = select_threshold(w, grid);
    selector_seconds += seconds_since(ts0);
    const auto brute = ts::brute_force_threshold(w, grid.values());
    if (sel.decision.has_value() != brute.has_value()) {
      ++mismatches;
      continue;
    }
    if (!brute) continue;
    ++selected;
    const auto& d = *sel.decision;
    std::vector<std::size_t> members(d.anomalous.begin(), d.anomalous.end());
    if (d.z != brute->z || members != brute->anomalous) ++mismatches;

    std::vector<double> below;
    for (double v : w) {
      if (v < d.epsilon) below.push_back(v);
    }
    const double err = std::max(std::abs(ts::mean_of(below) - (d.mean - d.delta_mean)),
                                std::abs(ts::pop_sd_of(below) - (d.sd - d.delta_sd)));
    worst_delta = std::max(worst_delta, err);
    if (err > 1e-9) ++delta_failures;
    run.decisions.emplace_back(w, d);
  }
  const double total = seconds_since(t0);
  run.equivalence = {mismatches == 0 && total < 30.0,
                     fmt("1000 windows, %.0f with a decision, %.0f mismatches, selector %.2f s, total %.2f s",
                         static_cast<double>(selected), static_cast<double>(mismatches), selector_seconds, total)};
  run.delta = {delta_failures == 0 && selected > 0,
               fmt("%.0f decisions, max |error| %.3g", static_cast<double>(selected), worst_delta)};
  return run;
}

Outcome pruning_monotonicity(const std::vector<std::pair<std::vector<double>, ThresholdDecision>>& decisions) {
  const double ps[] = {0.0, 0.05, 0.13, 0.20};
  std::size_t checked = 0, violations = 0, total_candidates = 0;
  std::size_t confirmed_at[4] = {0, 0, 0, 0};
  for (const auto& [w, d] : decisions) {
    std::vector<StepIndex> idx(w.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<StepIndex>(i);
    const auto candidates = sequences_from_decision("c", w, idx, d);
    total_candidates += candidates.size();
    std::vector<bool> previous(candidates.size(), true);
    for (int k = 0; k < 4; ++k) {
      const auto out = prune_sequences(build_emax(candidates, w, d.epsilon, ps[k]), candidates);
      for (std::size_t i = 0; i < out.size(); ++i) {
        const bool confirmed = out[i].status == SequenceStatus::confirmed;
        confirmed_at[k] += confirmed;
        if (k == 0 && !confirmed) ++violations;  // p = 0 confirms everything
        if (confirmed && !previous[i]) ++violations;
        previous[i] = confirmed;
      }
    }
    ++checked;
  }
  return {violations == 0 && checked > 0 && confirmed_at[0] == total_candidates,
          fmt("%.0f windows; confirmed at p=0/.05/.13/.20: ", static_cast<double>(checked)) +
              std::to_string(confirmed_at[0]) + "/" + std::to_string(confirmed_at[1]) + "/" +
              std::to_string(confirmed_at[2]) + "/" + std::to_string(confirmed_at[3]) + " of " +
              std::to_string(total_candidates) + ", violations " + std::to_string(violations)};
}

Outcome gaussian_tail_oracle() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  std::size_t availability_mismatch = 0, subset_violations = 0, tight_flags = 0, loose_flags = 0;
  for (int stream = 0; stream < 4; ++stream) {
    std::vector<double> e(10000);
    std::gamma_distribution<double> g(1.5, 0.05);
    std::lognormal_distribution<double> ln(-2.0, 1.0);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = stream % 2 ? ln(rng) : g(rng);
    // level shifts and a quiet stretch exercise eviction of large values
    for (std::size_t i = 3000; i < 3200; ++i) e[i] += 1.0 + stream;
    for (std::size_t i = 6000; i < 6040; ++i) e[i] *= 50.0;
    if (stream == 3) {
      for (std::size_t i = 8000; i < 8400; ++i) e[i] = 0.01;
    }
    GaussianTailConfig config;
    config.denominator = stream < 2 ? TailDenominator::variance : TailDenominator::stddev;
    const auto trace = gaussian_tail_trace(e, config);
    const auto oracle = ts::naive_tail_likelihood(e, config.window_len, config.short_len,
                                                  config.denominator == TailDenominator::variance);
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (trace.likelihood[i].has_value() != oracle[i].has_value()) {
        ++availability_mismatch;
        continue;
      }
      if (oracle[i]) worst = std::max(worst, std::abs(*trace.likelihood[i] - *oracle[i]));
    }
    auto tight_config = config;
    tight_config.epsilon_norm = 0.0001;
    const auto tight = gaussian_tail_trace(e, tight_config);
    for (std::size_t i = 0; i < e.size(); ++i) {
      tight_flags += tight.flagged[i];
      loose_flags += trace.flagged[i];
      if (tight.flagged[i] && !trace.flagged[i]) ++subset_violations;
    }
  }
  return {worst <= 1e-9 && availability_mismatch == 0 && subset_violations == 0,
          fmt("4 x 10000 steps, max |dL| %.3g; flags eps_norm=1e-4: %.0f within eps_norm=1e-2: %.0f, violations %.0f",
              worst, static_cast<double>(tight_flags), static_cast<double>(loose_flags),
              static_cast<double>(subset_violations))};
}

Outcome evaluation_rules() {
  struct Case {
    const char* name;
    std::vector<IndexRange> predicted;
    std::vector<IndexRange> labels;
    std::size_t tp, fp, fn;
  };
  const std::vector<Case> corpus{
      {"partial overlap", {{10, 20}}, {{15, 30}}, 1, 0, 0},
      {"multi-prediction single credit", {{10, 20}, {18, 25}}, {{15, 30}}, 1, 0, 0},
      {"three predictions one label", {{0, 5}, {6, 9}, {10, 12}}, {{4, 11}}, 1, 0, 0},
      {"disjoint", {{40, 50}}, {{15, 30}}, 0, 1, 1},
      {"touching at end boundary", {{30, 40}}, {{15, 30}}, 1, 0, 0},
      {"touching at start boundary", {{5, 15}}, {{15, 30}}, 1, 0, 0},
      {"adjacent but not touching", {{31, 40}}, {{15, 30}}, 0, 1, 1},
      {"single-step prediction inside", {{20, 20}}, {{15, 30}}, 1, 0, 0},
      {"single-step label inside prediction", {{0, 100}}, {{50, 50}}, 1, 0, 0},
      {"one prediction spans two labels", {{10, 60}}, {{15, 20}, {40, 45}}, 2, 0, 0},
      {"one prediction spans two of three", {{10, 60}}, {{15, 20}, {40, 45}, {80, 90}}, 2, 0, 1},
      {"no predictions", {}, {{1, 2}, {5, 6}}, 0, 0, 2},
      {"no labels", {{1, 2}, {5, 6}}, {}, 0, 2, 0},
      {"empty both", {}, {}, 0, 0, 0},
      {"mixed hit and miss", {{0, 5}, {100, 110}, {200, 210}}, {{3, 8}, {205, 300}, {400, 410}}, 2, 1, 1},
      {"identical ranges", {{7, 9}}, {{7, 9}}, 1, 0, 0},
      {"nested label", {{0, 50}}, {{10, 20}}, 1, 0, 0},
      {"duplicate predictions", {{10, 20}, {10, 20}, {10, 20}}, {{12, 13}}, 1, 0, 0},
      {"two false positives one miss", {{0, 1}, {3, 4}}, {{10, 12}}, 0, 2, 1},
      {"unsorted predictions", {{200, 210}, {0, 5}, {100, 110}}, {{3, 8}, {205, 300}}, 2, 1, 0},
  };
  std::size_t failures = 0;
  std::string first_failure;
  for (const auto& c : corpus) {
    const auto r = match_sequences(c.predicted, c.labels);
    if (r.tp != c.tp || r.fp != c.fp || r.fn != c.fn) {
      if (first_failure.empty()) first_failure = c.name;
      ++failures;
    }
  }
  return {failures == 0 && corpus.size() == 20,
          std::to_string(corpus.size()) + " cases, " + std::to_string(failures) + " wrong" +
              (first_failure.empty() ? "" : " (first: " + first_failure + ")")};
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const auto corpus = synthetic::synthetic_corpus(20, 42);
  LabelSet labels;
  for (const auto& ch : corpus) labels.entries.insert(labels.entries.end(), ch.labels.begin(), ch.labels.end());
  auto run = [&](double p) {
    PipelineConfig config;
    config.p = p;
    config.predictor = ARPredictor{8};
    std::vector<ChannelResult> results;
    for (const auto& ch : corpus) results.push_back(run_channel(ch.series, config));
    return evaluate_results(results, labels).rows.front();
  };
  const auto pruned = run(0.13);
  const auto unpruned = run(0.0);
  const double elapsed = seconds_since(t0);
  const double p13 = pruned.precision.value_or(0), r13 = pruned.recall.value_or(0);
  const double p0 = unpruned.precision.value_or(0), r0 = unpruned.recall.value_or(0);
  return {p13 >= 0.9 && r13 >= 0.9 && p13 > p0 && elapsed < 120.0,
          fmt("p=0.13: P=%.3f R=%.3f; p=0: P=%.3f R=%.3f", p13, r13, p0, r0) +
              fmt("; %.1f s", elapsed)};
}

Outcome ewma_closed_form() {
  std::mt19937_64 rng(5150);
  std::uniform_int_distribution<std::size_t> len(1, 400), span(1, 250);
  std::exponential_distribution<double> ex(1.0);
  double worst = 0.0;
  bool identity = true;
  for (int s = 0; s < 100; ++s) {
    std::vector<double> e(len(rng));
    for (auto& x : e) x = ex(rng) * 10.0;
    const std::size_t sp = span(rng);
    const auto got = ewma(e, sp);
    const auto want = ts::unrolled_ewma(e, sp);
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    identity = identity && ewma(e, 1) == e;
  }
  return {worst <= 1e-12 && identity, fmt("100 series, max |diff| %.3g, span=1 identity ", worst) +
                                          (identity ? "holds" : "broken")};
}

Outcome normality() {
  const auto cases = ts::load_normality_reference(std::string(TELEMSCAN_TEST_DATA) + "/normality_reference.csv");
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, std::abs(dagostino_pearson(c.sample).p_value - c.p_value));
  std::size_t rejected = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = ex(rng);
    rejected += dagostino_pearson(x).p_value < 0.005;
  }
  return {cases.size() == 20 && worst <= 1e-6 && rejected == 20,
          fmt("%.0f reference samples, max |dp| %.3g; exponential rejected %.0f/20", static_cast<double>(cases.size()),
              worst, static_cast<double>(rejected))};
}

Outcome determinism() {
  ts::TempDir dir("telemscan-accept");
  const auto data = dir / "channels";
  std::filesystem::create_directories(data);
  for (const auto& ch : synthetic::synthetic_corpus(6, 7)) {
    write_file(data / (ch.series.channel_id() + ".csv"), ch.series,
               [](std::ostream& os, const ChannelSeries& s) { write_channel(os, s); });
  }
  auto detect = [&](const std::string& name) {
    const std::string out = (dir / name).string();
    const std::string d = data.string();
    const char* argv[] = {"telemscan", "detect", "--data", d.c_str(), "--out", out.c_str(), "--predictor", "ar(8)"};
    std::ostringstream sink;
    return cli::run(8, argv, sink, sink);
  };
  const int a = detect("a.jsonl");
  const int b = detect("b.jsonl");
  const auto first = ts::slurp(dir / "a.jsonl");
  const auto second = ts::slurp(dir / "b.jsonl");
  const bool same = a == 0 && b == 0 && !first.empty() && first == second;
  return {same, "6 channels, " + std::to_string(first.size()) + " bytes, " + (same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<Outcome()>>> checks;
  OracleRun oracle;
  bool oracle_done = false;
  auto ensure_oracle = [&] {
    if (!oracle_done) oracle = threshold_oracle();
    oracle_done = true;
  };
  checks.emplace_back("pruning worked example (p=0.1)", figure_two_pruning);
  checks.emplace_back("threshold selection vs brute force", [&] {
    ensure_oracle();
    return oracle.equivalence;
  });
  checks.emplace_back("delta consistency", [&] {
    ensure_oracle();
    return oracle.delta;
  });
  checks.emplace_back("pruning monotonicity and p=0 identity", [&] {
    ensure_oracle();
    return pruning_monotonicity(oracle.decisions);
  });
  checks.emplace_back("gaussian tail vs scratch recomputation", gaussian_tail_oracle);
  checks.emplace_back("evaluation rule corpus", evaluation_rules);
  checks.emplace_back("end-to-end synthetic detection", end_to_end);
  checks.emplace_back("ewma closed form", ewma_closed_form);
  checks.emplace_back("normality diagnostic", normality);
  checks.emplace_back("detect determinism", determinism);

  int failures = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  [" << o.detail << "]\n";
    failures += !o.pass;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed\n"
                         : "acceptance: all criteria passed\n");
  return failures ? 1 : 0;
}
