#pragma once

// Test-only reference implementations, deliberately independent of the
// library's code paths.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// Plain recursive Levenshtein distance, no memo table and no DP rows.
inline std::size_t edit_distance(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                                 std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = edit_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = edit_distance(a, i + 1, b, j) + 1;
  const std::size_t ins = edit_distance(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

inline std::size_t edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return edit_distance(a, 0, b, 0);
}

/// Every sequence of length 0..max_len over the alphabet.
inline std::vector<std::vector<std::string>> all_sequences(const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::vector<std::vector<std::string>> out{{}};
  std::vector<std::vector<std::string>> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& s : frontier)
      for (const auto& sym : alphabet) {
        auto t = s;
        t.push_back(sym);
        next.push_back(t);
      }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

struct F1 {
  double p = 0.0;
  double r = 0.0;
  double f = 0.0;
};

/// Standard keyphrase F1 by counting: a prediction is correct when its stem
/// sequence appears in the gold set, a gold phrase is recalled when it
/// appears among the predictions. `denominator` is the precision
/// denominator (|pred| for @M, K for padded @K).
inline F1 exact_f1(const std::vector<std::vector<std::string>>& pred, const std::vector<std::vector<std::string>>& gold,
                   std::size_t denominator) {
  F1 out;
  if (gold.empty() || denominator == 0) return out;
  const std::set<std::vector<std::string>> gold_set(gold.begin(), gold.end());
  const std::set<std::vector<std::string>> pred_set(pred.begin(), pred.end());
  std::size_t correct_pred = 0;
  for (const auto& p : pred) correct_pred += gold_set.count(p);
  std::size_t recalled = 0;
  for (const auto& g : gold) recalled += pred_set.count(g);
  out.p = static_cast<double>(correct_pred) / static_cast<double>(denominator);
  out.r = static_cast<double>(recalled) / static_cast<double>(gold.size());
  out.f = out.p + out.r == 0.0 ? 0.0 : 2.0 * out.p * out.r / (out.p + out.r);
  return out;
}

}  // namespace oracle
