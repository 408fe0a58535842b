#pragma once

// Phrase-pair similarity kernels: exact stemmed match, KMR (1 - TER with
// length padding) and greedy embedding matching, plus the threshold and
// baseline-rescaling wrappers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <ranges>
#include <string>
#include <vector>

#include "keyscore/errors.hpp"
#include "keyscore/textnorm.hpp"

namespace keyscore {

/// Word-level Levenshtein distance, unit costs, no shifts.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
std::size_t edit_distance(const A& a, const B& b) {
  const auto n = static_cast<std::size_t>(std::ranges::size(a));
  const auto m = static_cast<std::size_t>(std::ranges::size(b));
  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (std::ranges::begin(a)[i - 1] == std::ranges::begin(b)[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[m];
}

inline double exact_score(const NormalizedPhrase& a, const NormalizedPhrase& b) { return a.stems == b.stems ? 1.0 : 0.0; }

/// Translation edit rate with the shorter phrase padded to the longer one's
/// length; pads turn deletions into substitutions at the same cost, so the
/// padded TER is the plain edit distance over the longer length.
inline double ter_padded(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) throw ValidationError("KMR is undefined for an empty phrase");
  return static_cast<double>(edit_distance(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

inline double kmr(const NormalizedPhrase& a, const NormalizedPhrase& b) { return 1.0 - ter_padded(a.stems, b.stems); }

/// Unit-norm token vectors for one phrase, as served by an embedding provider.
struct TokenEmbeddingSet {
  std::string phrase;               // provider lookup key
  std::vector<std::string> tokens;  // encoder tokenization, informational
  std::vector<std::vector<double>> vectors;

  std::size_t dimension() const { return vectors.empty() ? 0 : vectors.front().size(); }

  void validate(double tolerance = 1e-6) const {
    if (vectors.empty()) throw ValidationError("embedding set for '" + phrase + "' has no vectors");
    const std::size_t dim = dimension();
    for (const auto& v : vectors) {
      if (v.size() != dim || dim == 0)
        throw ValidationError("embedding set for '" + phrase + "' mixes vector dimensions");
      double sq = 0.0;
      for (double x : v) sq += x * x;
      if (std::abs(std::sqrt(sq) - 1.0) > tolerance)
        throw ValidationError("embedding for '" + phrase + "' is not unit norm (norm " + std::to_string(std::sqrt(sq)) + ")");
    }
  }

  friend bool operator==(const TokenEmbeddingSet&, const TokenEmbeddingSet&) = default;
};

namespace detail {

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double greedy_mean(const TokenEmbeddingSet& from, const TokenEmbeddingSet& to) {
  double total = 0.0;
  for (const auto& u : from.vectors) {
    double best = -1.0;
    for (const auto& v : to.vectors) best = std::max(best, dot(u, v));
    total += best;
  }
  return total / static_cast<double>(from.vectors.size());
}

inline double clamp_unit(double x) { return std::clamp(x, 0.0, 1.0); }

inline double rescale(double raw, double baseline) { return (raw - baseline) / (1.0 - baseline); }

}  // namespace detail

/// Greedy-matching F over token vectors (BERTScore without IDF weights).
/// Precision greedily matches a's tokens into b, recall the reverse.
inline double embedding_greedy_raw(const TokenEmbeddingSet& a, const TokenEmbeddingSet& b) {
  if (a.vectors.empty() || b.vectors.empty()) throw ValidationError("empty embedding set");
  if (a.dimension() != b.dimension())
    throw ValidationError("embedding dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                          std::to_string(b.dimension()));
  const double p = detail::greedy_mean(a, b);
  const double r = detail::greedy_mean(b, a);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

inline double embedding_greedy_score(const TokenEmbeddingSet& a, const TokenEmbeddingSet& b,
                                     std::optional<double> rescale_baseline = std::nullopt) {
  double s = embedding_greedy_raw(a, b);
  if (rescale_baseline) s = detail::rescale(s, *rescale_baseline);
  return detail::clamp_unit(s);
}

/// Source of token embeddings for phrases. Implementations must be safe for
/// concurrent calls.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;

  /// Throws ValidationError (missing phrase) or IoError (service failure).
  virtual std::shared_ptr<const TokenEmbeddingSet> embed(const std::string& phrase) = 0;

  /// Optional batching hook called before a burst of embed() calls.
  virtual void prefetch(const std::vector<std::string>& /*phrases*/) {}

  /// Text sent to the encoder for a phrase: its word tokens joined by spaces.
  static std::string phrase_key(const NormalizedPhrase& p) { return join(p.original.tokens); }
};

enum class Kernel { Exact, Kmr, EmbeddingGreedy };

struct ScoreFunction {
  Kernel kind = Kernel::Exact;
  double threshold = 0.4;
  std::optional<double> rescale_baseline;  // EmbeddingGreedy only
  bool threshold_before_rescale = false;

  static ScoreFunction exact() { return {Kernel::Exact, 0.4, std::nullopt, false}; }
  static ScoreFunction kmr(double threshold = 0.4) { return {Kernel::Kmr, threshold, std::nullopt, false}; }
  static ScoreFunction embedding(double threshold = 0.4, std::optional<double> baseline = std::nullopt) {
    return {Kernel::EmbeddingGreedy, threshold, baseline, false};
  }

  void validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0))
      throw ValidationError("threshold " + std::to_string(threshold) + " outside [0,1]");
    if (rescale_baseline) {
      if (kind != Kernel::EmbeddingGreedy) throw ValidationError("baseline rescaling applies to embedding kernels only");
      if (!(*rescale_baseline >= 0.0 && *rescale_baseline < 1.0))
        throw ValidationError("rescale baseline " + std::to_string(*rescale_baseline) + " outside [0,1)");
    }
  }

  /// Metric-name fragment: "1", "KMR" or "BS".
  std::string label() const {
    switch (kind) {
      case Kernel::Exact: return "1";
      case Kernel::Kmr: return "KMR";
      case Kernel::EmbeddingGreedy: return "BS";
    }
    return "?";
  }
};

/// Kernel value with rescaling and thresholding applied; scores below the
/// threshold become 0.
inline double apply(const ScoreFunction& fn, const NormalizedPhrase& a, const NormalizedPhrase& b,
                    EmbeddingProvider* embeddings = nullptr) {
  const auto cut = [&](double s) { return s < fn.threshold ? 0.0 : s; };
  switch (fn.kind) {
    case Kernel::Exact:
      return cut(exact_score(a, b));
    case Kernel::Kmr:
      return cut(kmr(a, b));
    case Kernel::EmbeddingGreedy: {
      if (!embeddings)
        throw ValidationError("embedding kernel needs an embedding provider (phrase '" + a.original.raw + "')");
      const auto ea = embeddings->embed(EmbeddingProvider::phrase_key(a));
      const auto eb = embeddings->embed(EmbeddingProvider::phrase_key(b));
      double s = embedding_greedy_raw(*ea, *eb);
      if (fn.threshold_before_rescale) {
        s = cut(s);
        if (s > 0.0 && fn.rescale_baseline) s = detail::rescale(s, *fn.rescale_baseline);
        return detail::clamp_unit(s);
      }
      if (fn.rescale_baseline) s = detail::rescale(s, *fn.rescale_baseline);
      return cut(detail::clamp_unit(s));
    }
  }
  return 0.0;
}

}  // namespace keyscore
