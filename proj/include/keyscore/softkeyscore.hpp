#pragma once

// Set-to-set F-measure with a soft phrase kernel and greedy max matching.
// With the exact kernel this is the standard keyphrase F1.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "keyscore/errors.hpp"
#include "keyscore/matching.hpp"
#include "keyscore/textnorm.hpp"

namespace keyscore {

/// @M selects every prediction, @K the first K in generation order.
struct Selection {
  enum class Kind { AtM, AtK };
  Kind kind = Kind::AtM;
  std::size_t k = 0;

  static Selection at_m() { return {Kind::AtM, 0}; }
  static Selection at_k(std::size_t k) {
    if (k == 0) throw ValidationError("@K selection needs K >= 1");
    return {Kind::AtK, k};
  }

  std::string label() const { return kind == Kind::AtM ? "M" : std::to_string(k); }
};

struct MetricConfig {
  ScoreFunction score_fn = ScoreFunction::exact();
  Selection selection = Selection::at_m();
  bool pad_short_predictions = true;  // @K only

  /// "F1@M", "F_KMR@5", "F_BS@M", ...
  std::string name() const {
    const auto kernel = score_fn.label();
    return (kernel == "1" ? std::string("F1") : "F_" + kernel) + "@" + selection.label();
  }
};

struct MetricResult {
  double p_score = 0.0;
  double r_score = 0.0;
  double f_score = 0.0;
  std::size_t n_pred_used = 0;
  std::size_t n_gold = 0;
  /// False when the gold set is empty; such documents are left out of
  /// corpus averages.
  bool defined = true;
};

inline double harmonic_f(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

struct SelectedPredictions {
  std::span<const NormalizedPhrase> phrases;
  std::size_t effective_count = 0;  // precision denominator
};

/// Short @K lists are padded by count: the missing slots act as predictions
/// that match nothing.
inline SelectedPredictions select_predictions(std::span<const NormalizedPhrase> pred, const MetricConfig& config) {
  if (config.selection.kind == Selection::Kind::AtM) return {pred, pred.size()};
  const std::size_t k = config.selection.k;
  const std::size_t used = std::min(pred.size(), k);
  return {pred.first(used), config.pad_short_predictions ? k : used};
}

namespace detail {

// Sums in sorted order so the result does not depend on input order.
inline double ordered_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace detail

inline MetricResult soft_f(std::span<const NormalizedPhrase> pred, std::span<const NormalizedPhrase> gold,
                           const MetricConfig& config, EmbeddingProvider* embeddings = nullptr) {
  config.score_fn.validate();
  const auto selected = select_predictions(pred, config);
  MetricResult out;
  out.n_pred_used = selected.effective_count;
  out.n_gold = gold.size();
  if (gold.empty()) {
    out.defined = false;
    return out;
  }
  if (selected.phrases.empty()) return out;

  const auto& ps = selected.phrases;
  std::vector<double> best_for_pred(ps.size(), 0.0);
  std::vector<double> best_for_gold(gold.size(), 0.0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      const double s = apply(config.score_fn, ps[i], gold[j], embeddings);
      best_for_pred[i] = std::max(best_for_pred[i], s);
      best_for_gold[j] = std::max(best_for_gold[j], s);
    }
  }
  out.p_score = detail::ordered_sum(std::move(best_for_pred)) / static_cast<double>(selected.effective_count);
  out.r_score = detail::ordered_sum(std::move(best_for_gold)) / static_cast<double>(gold.size());
  out.f_score = harmonic_f(out.p_score, out.r_score);
  return out;
}

inline MetricResult classic_f1(std::span<const NormalizedPhrase> pred, std::span<const NormalizedPhrase> gold,
                               Selection selection = Selection::at_m()) {
  return soft_f(pred, gold, MetricConfig{ScoreFunction::exact(), selection, true});
}

struct PresenceSplit {
  std::vector<NormalizedPhrase> present_pred;
  std::vector<NormalizedPhrase> absent_pred;
  std::vector<NormalizedPhrase> present_gold;
  std::vector<NormalizedPhrase> absent_gold;
};

inline PresenceSplit split_by_presence(std::span<const NormalizedPhrase> pred, std::span<const NormalizedPhrase> gold,
                                       const DocumentStems& doc) {
  PresenceSplit s;
  for (const auto& p : pred)
    (classify_presence(p, doc) == Presence::Present ? s.present_pred : s.absent_pred).push_back(p);
  for (const auto& g : gold)
    (classify_presence(g, doc) == Presence::Present ? s.present_gold : s.absent_gold).push_back(g);
  return s;
}

inline PresenceSplit split_by_presence(std::span<const NormalizedPhrase> pred, std::span<const NormalizedPhrase> gold,
                                       const Document& doc) {
  return split_by_presence(pred, gold, DocumentStems::build(doc.text));
}

}  // namespace keyscore
