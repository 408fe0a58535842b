#pragma once

// Keyphrase-level expected calibration error:
//   ECE = sum_i |B_i|/n * |acc(B_i) - confid(B_i)|
// with confidence = KPP^-1 and accuracy = fraction of exact stemmed matches.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "keyscore/errors.hpp"
#include "keyscore/matching.hpp"
#include "keyscore/stats.hpp"
#include "keyscore/textnorm.hpp"

namespace keyscore {

inline bool correctness(const NormalizedPhrase& pred, std::span<const NormalizedPhrase> gold) {
  return std::any_of(gold.begin(), gold.end(), [&](const auto& g) { return g.stems == pred.stems; });
}

struct CalibrationSample {
  double confidence = 0.0;
  bool correct = false;
};

enum class Binning { EqualWidth, EqualMass };

struct CalibrationBin {
  std::size_t index = 1;  // 1-based
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
  double midpoint() const { return 0.5 * (lo + hi); }
};

struct CalibrationReport {
  std::size_t k = 10;
  std::vector<CalibrationBin> bins;
  double ece = 0.0;  // fraction
  double ece_percent = 0.0;
  std::size_t n = 0;
};

namespace detail {

inline CalibrationBin fill_bin(std::size_t index, double lo, double hi, std::vector<CalibrationSample>& members) {
  CalibrationBin b{index, lo, hi, members.size(), 0.0, 0.0};
  if (members.empty()) return b;
  std::vector<double> conf;
  conf.reserve(members.size());
  std::size_t correct = 0;
  for (const auto& s : members) {
    conf.push_back(s.confidence);
    correct += s.correct ? 1 : 0;
  }
  std::sort(conf.begin(), conf.end());
  b.mean_confidence = std::accumulate(conf.begin(), conf.end(), 0.0) / static_cast<double>(members.size());
  b.accuracy = static_cast<double>(correct) / static_cast<double>(members.size());
  return b;
}

}  // namespace detail

/// Bins samples by confidence (k equal-width bins over [0,1] by default,
/// last bin closed at 1) and computes ECE. Throws on an empty sample set.
inline CalibrationReport calibrate(std::span<const CalibrationSample> samples, std::size_t k = 10,
                                   Binning binning = Binning::EqualWidth) {
  if (k < 1) throw ValidationError("calibration needs at least one bin");
  if (samples.empty()) throw ValidationError("calibration over zero keyphrases");
  for (const auto& s : samples)
    if (!(s.confidence > 0.0 && s.confidence <= 1.0))
      throw ValidationError("confidence " + std::to_string(s.confidence) + " outside (0,1]");

  CalibrationReport report;
  report.k = k;
  report.n = samples.size();
  std::vector<std::vector<CalibrationSample>> members(k);

  if (binning == Binning::EqualWidth) {
    const auto edges = bin_edges(0.0, 1.0, 1.0 / static_cast<double>(k));
    for (const auto& s : samples) members[*find_bin(edges, s.confidence)].push_back(s);
    for (std::size_t i = 0; i < k; ++i) report.bins.push_back(detail::fill_bin(i + 1, edges[i], edges[i + 1], members[i]));
  } else {
    std::vector<CalibrationSample> sorted(samples.begin(), samples.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
      return a.confidence < b.confidence || (a.confidence == b.confidence && a.correct < b.correct);
    });
    for (std::size_t i = 0; i < sorted.size(); ++i) members[i * k / sorted.size()].push_back(sorted[i]);
    // Boundaries sit at the first confidence of the next non-empty bin.
    double lo = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double hi = 1.0;
      for (std::size_t j = i + 1; j < k; ++j)
        if (!members[j].empty()) {
          hi = members[j].front().confidence;
          break;
        }
      report.bins.push_back(detail::fill_bin(i + 1, lo, hi, members[i]));
      lo = hi;
    }
  }

  for (const auto& b : report.bins)
    report.ece += static_cast<double>(b.count) / static_cast<double>(report.n) * std::abs(b.accuracy - b.mean_confidence);
  report.ece_percent = 100.0 * report.ece;
  return report;
}

struct ReliabilityPoint {
  double midpoint = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

/// One point per non-empty bin, ascending by midpoint.
inline std::vector<ReliabilityPoint> reliability_data(const CalibrationReport& report) {
  std::vector<ReliabilityPoint> out;
  for (const auto& b : report.bins)
    if (b.count > 0) out.push_back({b.midpoint(), b.accuracy, b.count});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.midpoint < b.midpoint; });
  return out;
}

}  // namespace keyscore
