// Writes a synthetic corpus: <out>/channels/*.csv and <out>/labels.csv.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "telemscan/series.hpp"
#include "telemscan/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic telemetry channels with labelled anomalies", "telemscan-synth"};
  std::string out = "demo";
  std::size_t channels = 20;
  std::uint64_t seed = 42;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--channels", channels, "Number of channels")->capture_default_str()->check(CLI::Range(1, 10000));
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    const fs::path root(out);
    fs::create_directories(root / "channels");
    telemscan::LabelSet labels;
    for (const auto& ch : telemscan::synthetic::synthetic_corpus(channels, seed)) {
      telemscan::write_file(root / "channels" / (ch.series.channel_id() + ".csv"), ch.series,
                            [](std::ostream& os, const telemscan::ChannelSeries& s) { telemscan::write_channel(os, s); });
      labels.entries.insert(labels.entries.end(), ch.labels.begin(), ch.labels.end());
    }
    telemscan::write_file(root / "labels.csv", labels,
                          [](std::ostream& os, const telemscan::LabelSet& l) { telemscan::write_labels(os, l); });
    std::cout << "wrote " << channels << " channels and " << labels.entries.size() << " labels to " << out << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
