#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "telemscan/series.hpp"

using namespace telemscan;
using telemscan::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected telemscan::Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(LoadChannel, ParsesValuesAndCommands) {
  TempDir dir;
  auto path = dir.write("chanA.csv", "index,value,cmd_0\n0,1.0,0\n1,2.0,1\n2,3.0,0\n");
  const ChannelSeries s = load_channel(path);
  EXPECT_EQ(s.channel_id(), "chanA");
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.dims(), 2u);
  EXPECT_EQ(s.telemetry(), (std::vector<double>{1.0, 2.0, 3.0}));
  EXPECT_EQ(s.column(1), (std::vector<double>{0.0, 1.0, 0.0}));
}

TEST(LoadChannel, WideChannelKeepsAllDimensions) {
  TempDir dir;
  std::ostringstream csv;
  csv << "index,value";
  for (int c = 0; c < 24; ++c) csv << ",cmd_" << c;
  csv << "\n";
  for (int t = 0; t < 4; ++t) {
    csv << t << ",0.5";
    for (int c = 0; c < 24; ++c) csv << "," << ((c == t) ? 1 : 0);
    csv << "\n";
  }
  EXPECT_EQ(load_channel(dir.write("wide.csv", csv.str())).dims(), 25u);
}

TEST(LoadChannel, NonFiniteValueReportsRow) {
  TempDir dir;
  auto path = dir.write("bad.csv", "index,value\n0,1.0\n1,nan\n");
  try {
    load_channel(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteValue);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

TEST(LoadChannel, ValidationErrors) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { load_channel(dir / "missing.csv"); }), ErrorCode::FileNotFound);
  EXPECT_EQ(code_of([&] { load_channel(dir.write("a.csv", "idx,value\n0,1\n")); }), ErrorCode::MalformedHeader);
  EXPECT_EQ(code_of([&] { load_channel(dir.write("b.csv", "index,value,cmd_0\n0,1\n")); }), ErrorCode::RaggedRow);
  EXPECT_EQ(code_of([&] { load_channel(dir.write("c.csv", "index,value\n0,abc\n")); }), ErrorCode::BadNumber);
  EXPECT_EQ(code_of([&] { load_channel(dir.write("d.csv", "index,value,cmd_0\n0,1,2\n")); }),
            ErrorCode::NonBinaryCommand);
  EXPECT_EQ(code_of([&] { load_channel(dir.write("e.csv", "index,value\n1,1\n1,2\n")); }),
            ErrorCode::NonMonotonicIndex);
}

TEST(LoadChannel, RoundTripAtTwelveSignificantDigits) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(-6, 6);
  std::uniform_real_distribution<double> mant(-1, 1);
  std::bernoulli_distribution bit(0.3);
  TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    std::ostringstream csv;
    csv << "index,value,cmd_0\n";
    std::vector<double> expected;
    for (int t = 0; t < 200; ++t) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", mant(rng) * std::pow(10.0, mag(rng)));
      expected.push_back(std::strtod(buf, nullptr));
      csv << t * 3 << ',' << buf << ',' << (bit(rng) ? 1 : 0) << '\n';
    }
    const auto first = load_channel(dir.write("r.csv", csv.str()));
    auto out = dir / "r2.csv";
    write_file(out, first, [](std::ostream& os, const ChannelSeries& s) { write_channel(os, s); });
    const auto second = load_channel(out, first.channel_id());
    EXPECT_EQ(first.telemetry(), expected);
    EXPECT_EQ(second.telemetry(), first.telemetry());
    EXPECT_EQ(second.column(1), first.column(1));
    for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].index, second[i].index);
  }
}

TEST(LoadLabels, ParsesEntry) {
  TempDir dir;
  auto labels = load_labels(dir.write("l.csv", "channel_id,start,end,class,t_a\nchanA,100,150,point,120\n"));
  ASSERT_EQ(labels.entries.size(), 1u);
  EXPECT_EQ(labels.entries[0].cls, AnomalyClass::point);
  EXPECT_EQ(labels.entries[0].start, 100);
  EXPECT_EQ(labels.entries[0].end, 150);
  EXPECT_EQ(labels.entries[0].t_a, 120);
  EXPECT_TRUE(labels.entries[0].tag.empty());
}

TEST(LoadLabels, OverlapAndRangeErrors) {
  TempDir dir;
  const std::string header = "channel_id,start,end,class,t_a\n";
  EXPECT_EQ(code_of([&] {
              load_labels(dir.write("a.csv", header + "chanA,100,150,point,120\nchanA,140,160,point,150\n"));
            }),
            ErrorCode::OverlappingLabels);
  EXPECT_EQ(code_of([&] { load_labels(dir.write("b.csv", header + "chanA,150,100,point,120\n")); }),
            ErrorCode::InvalidRange);
  EXPECT_EQ(code_of([&] { load_labels(dir.write("c.csv", header + "chanA,100,150,weird,120\n")); }),
            ErrorCode::UnknownClass);
  // the same range on different channels is fine
  EXPECT_NO_THROW(load_labels(dir.write("d.csv", header + "chanA,100,150,point,120\nchanB,100,150,point,120\n")));
}

TEST(LoadLabels, ManyChannelsAndTags) {
  TempDir dir;
  std::ostringstream csv;
  csv << "channel_id,start,end,class,t_a,tag\n";
  for (int i = 0; i < 105; ++i) {
    csv << "C-" << (i % 82) << ',' << (i * 1000) << ',' << (i * 1000 + 50) << ','
        << (i < 62 ? "point" : "contextual") << ',' << (i * 1000 + 10) << ',' << (i % 2 ? "SMAP" : "MSL") << '\n';
  }
  const auto labels = load_labels(dir.write("l.csv", csv.str()));
  EXPECT_EQ(labels.entries.size(), 105u);
  EXPECT_EQ(labels.channels().size(), 82u);
  EXPECT_EQ(labels.entries[1].tag, "SMAP");
}

TEST(LoadPredictions, ParsesAndRejectsDuplicates) {
  TempDir dir;
  auto p = load_predictions(dir.write("p.csv", "index,y_hat\n250,0.5\n251,0.52\n"));
  EXPECT_EQ(p.predictions.size(), 2u);
  EXPECT_EQ(p.predictions[1].index, 251);
  EXPECT_DOUBLE_EQ(p.predictions[1].y_hat, 0.52);
  EXPECT_EQ(code_of([&] { load_predictions(dir.write("d.csv", "index,y_hat\n250,0.5\n250,0.6\n")); }),
            ErrorCode::DuplicateIndex);
}

TEST(LoadPredictions, SpanAtMinuteResolution) {
  TempDir dir;
  std::ostringstream csv;
  csv << "index,y_hat\n";
  const int steps = 5 * 24 * 60;
  for (int t = 0; t < steps; ++t) csv << t << ',' << 0.001 * t << '\n';
  EXPECT_EQ(load_predictions(dir.write("p.csv", csv.str())).predictions.size(), 7200u);
}

TEST(ChannelSeries, PositionLookup) {
  auto s = ChannelSeries::from_values("x", {1, 2, 3}, 10);
  EXPECT_EQ(s.position_of(11), 1u);
  EXPECT_FALSE(s.position_of(13).has_value());
}
