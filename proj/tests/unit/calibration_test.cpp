#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "keyscore/calibration.hpp"

namespace {

using keyscore::Binning;
using keyscore::CalibrationSample;

TEST(CalibrationTest, PerfectlyCalibrated) {
  std::vector<CalibrationSample> s;
  for (int i = 0; i < 10; ++i) s.push_back({0.5, i < 5});
  s.push_back({1.0, true});
  const auto r = keyscore::calibrate(s);
  EXPECT_NEAR(r.ece, 0.0, 1e-9);
  EXPECT_EQ(r.n, 11u);
  EXPECT_EQ(r.bins.size(), 10u);
  EXPECT_EQ(r.bins[9].count, 1u);  // 1.0 lands in the closed last bin
}

TEST(CalibrationTest, Examples) {
  // all at 0.9, all correct -> |1 - 0.9|
  std::vector<CalibrationSample> s(4, {0.9, true});
  EXPECT_NEAR(keyscore::calibrate(s).ece_percent, 10.0, 1e-9);

  // two half-correct bins at 0.3 and 0.7: both gaps are 0.2
  s = {{0.3, true}, {0.3, false}, {0.7, true}, {0.7, false}};
  const auto r = keyscore::calibrate(s);
  EXPECT_NEAR(r.ece_percent, 20.0, 1e-9);
  EXPECT_NEAR(r.ece, 0.2, 1e-12);
  EXPECT_EQ(r.bins[3].count, 2u);
  EXPECT_EQ(r.bins[7].count, 2u);
}

TEST(CalibrationTest, SingleBin) {
  const std::vector<CalibrationSample> s{{0.2, true}, {0.6, false}, {1.0, true}};
  const auto r = keyscore::calibrate(s, 1);
  ASSERT_EQ(r.bins.size(), 1u);
  EXPECT_NEAR(r.ece, std::abs(2.0 / 3.0 - 0.6), 1e-12);
}

TEST(CalibrationTest, InvalidInput) {
  EXPECT_THROW(keyscore::calibrate({}), keyscore::ValidationError);
  const std::vector<CalibrationSample> zero{{0.0, true}};
  EXPECT_THROW(keyscore::calibrate(zero), keyscore::ValidationError);
  const std::vector<CalibrationSample> ok{{0.5, true}};
  EXPECT_THROW(keyscore::calibrate(ok, 0), keyscore::ValidationError);
}

std::vector<CalibrationSample> random_samples(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  std::vector<CalibrationSample> s(n);
  for (auto& x : s) x = {u(rng), rng() % 2 == 0};
  return s;
}

TEST(CalibrationPropertyTest, BoundsAndPermutationInvariance) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = random_samples(rng, 1 + rng() % 60);
    for (auto binning : {Binning::EqualWidth, Binning::EqualMass}) {
      const std::size_t k = 1 + rng() % 15;
      const auto a = keyscore::calibrate(s, k, binning);
      EXPECT_GE(a.ece, 0.0);
      EXPECT_LE(a.ece, 1.0);
      std::size_t total = 0;
      for (const auto& b : a.bins) total += b.count;
      EXPECT_EQ(total, s.size());
      auto shuffled = s;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      EXPECT_NEAR(keyscore::calibrate(shuffled, k, binning).ece, a.ece, 1e-12);
    }
  }
}

TEST(CalibrationPropertyTest, MergingToOneBinIsAbsoluteGap) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_samples(rng, 1 + rng() % 40);
    double conf = 0.0, acc = 0.0;
    for (const auto& x : s) {
      conf += x.confidence;
      acc += x.correct ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(s.size());
    EXPECT_NEAR(keyscore::calibrate(s, 1).ece, std::abs(acc / n - conf / n), 1e-12);
  }
}

TEST(CalibrationTest, EqualMassBalancesCounts) {
  std::vector<CalibrationSample> s;
  for (int i = 1; i <= 20; ++i) s.push_back({i / 20.0, i % 2 == 0});
  const auto r = keyscore::calibrate(s, 4, Binning::EqualMass);
  for (const auto& b : r.bins) EXPECT_EQ(b.count, 5u);
}

TEST(ReliabilityTest, OnlyNonEmptyBinsAscending) {
  const std::vector<CalibrationSample> s{{0.95, true}, {0.15, false}, {0.12, true}};
  const auto pts = keyscore::reliability_data(keyscore::calibrate(s));
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].midpoint, 0.15, 1e-12);
  EXPECT_DOUBLE_EQ(pts[0].accuracy, 0.5);
  EXPECT_NEAR(pts[1].midpoint, 0.95, 1e-12);
}

TEST(CorrectnessTest, StemmedExactMatch) {
  const std::vector<keyscore::NormalizedPhrase> gold{keyscore::normalize("neural networks")};
  EXPECT_TRUE(keyscore::correctness(keyscore::normalize("Neural Network"), gold));
  EXPECT_FALSE(keyscore::correctness(keyscore::normalize("neural"), gold));
}

}  // namespace
