#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "telemscan/normality.hpp"

using namespace telemscan;

TEST(Normality, MatchesReferenceValues) {
  const auto cases = telemscan::testing::load_normality_reference(std::string(TELEMSCAN_TEST_DATA) +
                                                                  "/normality_reference.csv");
  ASSERT_EQ(cases.size(), 20u);
  for (const auto& c : cases) {
    const auto r = dagostino_pearson(c.sample);
    EXPECT_NEAR(r.p_value, c.p_value, 1e-6) << c.name;
    EXPECT_NEAR(r.k2, c.k2, 1e-6 * std::max(1.0, c.k2)) << c.name;
  }
}

TEST(Normality, NormalDrawsRarelyRejected) {
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> x(5000);
    for (auto& v : x) v = n(rng);
    accepted += dagostino_pearson(x).p_value > 0.005;
  }
  EXPECT_GE(accepted, 99);
}

TEST(Normality, ExponentialDrawsRejected) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> d(1.0);
    std::vector<double> x(5000);
    for (auto& v : x) v = d(rng);
    EXPECT_LT(dagostino_pearson(x).p_value, 0.005) << seed;
  }
}

TEST(Normality, SmallOrConstantSamples) {
  try {
    dagostino_pearson(std::vector<double>(19, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SampleTooSmall);
  }
  try {
    dagostino_pearson(std::vector<double>(50, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSample);
  }
}
