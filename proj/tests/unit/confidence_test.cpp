#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "keyscore/confidence.hpp"

namespace {

using keyscore::KeyphraseConfidence;
using keyscore::KeyphraseSpan;
using keyscore::Presence;
using keyscore::PresenceFilter;
using keyscore::TokenTrace;

TokenTrace trace_of(std::vector<double> probs) {
  TokenTrace t;
  for (std::size_t i = 0; i < probs.size(); ++i) t.tokens.push_back("t" + std::to_string(i));
  t.probs = std::move(probs);
  t.special_mask.assign(t.probs.size(), false);
  return t;
}

KeyphraseConfidence kp(double kpp_value, Presence presence = Presence::Present) {
  KeyphraseConfidence c;
  c.kpp = kpp_value;
  c.confidence = 1.0 / kpp_value;
  c.presence = presence;
  return c;
}

KeyphraseConfidence kp_probs(std::vector<double> probs, Presence presence = Presence::Present) {
  const auto t = trace_of(probs);
  return KeyphraseConfidence::measure(t, {0, probs.size() - 1}, presence);
}

TEST(PerplexityTest, Examples) {
  EXPECT_NEAR(keyscore::kpp(trace_of({1.0, 1.0}), {0, 1}), 1.0, 1e-12);
  EXPECT_NEAR(keyscore::kpp(trace_of({0.25, 0.25}), {0, 1}), 4.0, 1e-12);
  EXPECT_NEAR(keyscore::kpp(trace_of({0.5, 0.9, 0.5}), {0, 0}), 2.0, 1e-12);
  // geometric mean of 0.9, 0.4, 0.9
  EXPECT_NEAR(keyscore::confidence(trace_of({0.9, 0.4, 0.9}), {0, 2}), std::cbrt(0.9 * 0.4 * 0.9), 1e-12);
  EXPECT_NEAR(keyscore::confidence(trace_of({0.9, 0.4, 0.9}), {0, 2}), 0.6868, 5e-5);
}

TEST(PerplexityTest, InvalidInput) {
  EXPECT_THROW(keyscore::perplexity(std::vector<double>{}), keyscore::ValidationError);
  EXPECT_THROW(keyscore::perplexity(std::vector<double>{0.0}), keyscore::ValidationError);
  EXPECT_THROW(keyscore::perplexity(std::vector<double>{1.5}), keyscore::ValidationError);
  EXPECT_THROW(keyscore::kpp(trace_of({0.5}), {0, 1}), keyscore::ValidationError);
  auto t = trace_of({0.5, 0.5, 0.5});
  t.special_mask[1] = true;
  EXPECT_THROW(keyscore::kpp(t, {0, 2}), keyscore::ValidationError);
}

TEST(PerplexityTest, Properties) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> probs(1 + rng() % 8);
    for (auto& p : probs) p = u(rng);
    const auto t = trace_of(probs);
    const KeyphraseSpan span{0, probs.size() - 1};
    const double k = keyscore::kpp(t, span);
    const double c = keyscore::confidence(t, span);
    EXPECT_GE(k, 1.0);
    EXPECT_GT(c, 0.0);
    EXPECT_LE(c, 1.0);
    EXPECT_NEAR(k * c, 1.0, 1e-9);
    const auto lo = *std::min_element(probs.begin(), probs.end());
    const auto hi = *std::max_element(probs.begin(), probs.end());
    EXPECT_LE(c, hi * (1 + 1e-12));
    EXPECT_GE(c, lo * (1 - 1e-12));
    // identical probabilities: KPP = 1/p
    const std::vector<double> same(probs.size(), probs[0]);
    EXPECT_NEAR(keyscore::perplexity(same), 1.0 / probs[0], 1e-9 / probs[0]);
  }
}

TEST(HistogramTest, BinsAndMedian) {
  const std::vector<KeyphraseConfidence> kps{kp(1.2), kp(1.25), kp(1.0), kp(5.0), kp(7.5), kp(2.0, Presence::Absent)};
  const auto h = keyscore::kpp_histogram(kps, PresenceFilter::Present);
  ASSERT_EQ(h.counts.size(), 40u);
  EXPECT_EQ(h.counts[2], 2u);  // [1.2, 1.3)
  EXPECT_EQ(h.counts[0], 1u);
  EXPECT_EQ(h.overflow, 2u);
  EXPECT_EQ(h.n, 5u);
  ASSERT_TRUE(h.median);
  EXPECT_DOUBLE_EQ(*h.median, 1.25);

  const auto absent = keyscore::kpp_histogram(kps, PresenceFilter::Absent);
  EXPECT_EQ(absent.n, 1u);
  EXPECT_EQ(absent.counts[10], 1u);

  const std::vector<KeyphraseConfidence> none{kp(1.5, Presence::Absent)};
  const auto empty = keyscore::kpp_histogram(none, PresenceFilter::Present);
  EXPECT_TRUE(empty.empty());
  EXPECT_FALSE(empty.median);
}

TEST(HistogramTest, CountsSumToSample) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(1.0, 6.0);
  std::vector<KeyphraseConfidence> kps;
  for (int i = 0; i < 500; ++i) kps.push_back(kp(u(rng), i % 3 ? Presence::Present : Presence::Absent));
  for (auto f : {PresenceFilter::All, PresenceFilter::Present, PresenceFilter::Absent}) {
    const auto h = keyscore::kpp_histogram(kps, f);
    std::size_t total = h.overflow;
    for (auto c : h.counts) total += c;
    EXPECT_EQ(total, h.n);
  }
}

TEST(StatsTest, MedianAndQuantiles) {
  EXPECT_EQ(*keyscore::median({1.0, 2.0, 3.0}), 2.0);
  EXPECT_EQ(*keyscore::median({4.0, 1.0}), 2.5);
  EXPECT_FALSE(keyscore::median({}));
  const std::vector<double> edges = keyscore::bin_edges(1.0, 5.0, 0.1);
  EXPECT_EQ(*keyscore::find_bin(edges, 1.2), 2u);
  EXPECT_EQ(*keyscore::find_bin(edges, 5.0), 39u);
  EXPECT_FALSE(keyscore::find_bin(edges, 5.01));
}

TEST(PositionStatsTest, PooledQuartiles) {
  const std::vector<KeyphraseConfidence> kps{kp_probs({0.1}), kp_probs({0.1, 0.3}), kp_probs({0.9, 0.6})};
  const auto r = keyscore::position_stats(kps, 3, PresenceFilter::All);
  ASSERT_EQ(r.positions.size(), 2u);
  const auto& p1 = r.positions[0];
  EXPECT_EQ(p1.position, 1u);
  EXPECT_EQ(p1.count, 3u);
  EXPECT_NEAR(p1.median, 0.1, 1e-12);
  EXPECT_NEAR(p1.q1, 0.1, 1e-12);
  EXPECT_NEAR(p1.q3, 0.5, 1e-12);
  EXPECT_EQ(r.omitted, std::vector<std::size_t>{3});
}

TEST(PositionStatsTest, WhiskersStayOutsideBox) {
  const auto s = keyscore::summarize_box(1, {0.5, 0.51, 0.52, 0.53, 0.99, 0.01});
  EXPECT_LE(s.whisker_low, s.q1);
  EXPECT_GE(s.whisker_high, s.q3);
  EXPECT_LE(s.q1, s.median);
  EXPECT_LE(s.median, s.q3);
  EXPECT_EQ(s.whisker_high, 0.53);  // 0.99 is an outlier
}

TEST(PositionStatsTest, FilterByPresence) {
  const std::vector<KeyphraseConfidence> kps{kp_probs({0.2}, Presence::Absent)};
  const auto r = keyscore::position_stats(kps, 2, PresenceFilter::Present);
  EXPECT_TRUE(r.positions.empty());
  EXPECT_EQ(r.omitted, (std::vector<std::size_t>{1, 2}));
}

}  // namespace
