#pragma once

// Keyphrase perplexity: KPP(w_j..w_k) = (prod p_i)^(-1/m) over the span's
// conditional token probabilities, and confidence = 1/KPP, the geometric mean
// of those probabilities. Conditioning on earlier keyphrases in the same
// generated sequence is not removed.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "keyscore/corpus.hpp"
#include "keyscore/errors.hpp"
#include "keyscore/stats.hpp"
#include "keyscore/textnorm.hpp"

namespace keyscore {

namespace detail {

inline double mean_log_prob(std::span<const double> probs) {
  if (probs.empty()) throw ValidationError("perplexity of an empty token sequence");
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0 && p <= 1.0) || std::isnan(p))
      throw ValidationError("probability " + std::to_string(p) + " outside (0,1]");
    total += std::log(p);
  }
  return total / static_cast<double>(probs.size());
}

}  // namespace detail

/// Sequence perplexity p(w_1..w_n)^(-1/n) from per-token conditionals.
inline double perplexity(std::span<const double> probs) { return std::exp(-detail::mean_log_prob(probs)); }

/// Probabilities of a span; throws when the span leaves the trace or covers
/// a special token.
inline std::vector<double> span_probs(const TokenTrace& trace, const KeyphraseSpan& span) {
  if (span.start > span.end || span.end >= trace.size())
    throw ValidationError("span [" + std::to_string(span.start) + "," + std::to_string(span.end) + "] out of range");
  std::vector<double> out;
  out.reserve(span.length());
  for (std::size_t i = span.start; i <= span.end; ++i) {
    if (i < trace.special_mask.size() && trace.special_mask[i])
      throw ValidationError("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                            "] touches special token '" + trace.tokens[i] + "'");
    out.push_back(trace.probs[i]);
  }
  return out;
}

inline double kpp(const TokenTrace& trace, const KeyphraseSpan& span) { return perplexity(span_probs(trace, span)); }

inline double confidence(const TokenTrace& trace, const KeyphraseSpan& span) {
  return std::exp(detail::mean_log_prob(span_probs(trace, span)));
}

struct KeyphraseConfidence {
  KeyphraseSpan span;
  double kpp = 1.0;
  double confidence = 1.0;
  Presence presence = Presence::Absent;
  std::vector<double> token_probs;  // conditionals of the span's tokens, in order

  static KeyphraseConfidence measure(const TokenTrace& trace, const KeyphraseSpan& span, Presence presence) {
    KeyphraseConfidence c;
    c.span = span;
    c.token_probs = span_probs(trace, span);
    const double mean_log = detail::mean_log_prob(c.token_probs);
    c.kpp = std::exp(-mean_log);
    c.confidence = std::exp(mean_log);
    c.presence = presence;
    return c;
  }
};

enum class PresenceFilter { All, Present, Absent };

inline bool passes(PresenceFilter f, Presence p) {
  return f == PresenceFilter::All || (f == PresenceFilter::Present) == (p == Presence::Present);
}

inline const char* to_string(PresenceFilter f) {
  switch (f) {
    case PresenceFilter::All: return "all";
    case PresenceFilter::Present: return "present";
    case PresenceFilter::Absent: return "absent";
  }
  return "?";
}

struct HistogramConfig {
  double lo = 1.0;
  double hi = 5.0;
  double width = 0.1;
};

struct KppHistogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;  // one per [edges[i], edges[i+1])
  std::size_t overflow = 0;         // KPP >= hi
  std::size_t n = 0;
  std::optional<double> median;     // nullopt when the split is empty

  bool empty() const { return n == 0; }
};

inline KppHistogram kpp_histogram(std::span<const KeyphraseConfidence> keyphrases, PresenceFilter filter,
                                  const HistogramConfig& config = {}) {
  KppHistogram h;
  h.edges = bin_edges(config.lo, config.hi, config.width);
  h.counts.assign(h.edges.size() - 1, 0);
  std::vector<double> values;
  for (const auto& k : keyphrases) {
    if (!passes(filter, k.presence)) continue;
    values.push_back(k.kpp);
    if (k.kpp >= config.hi) {
      ++h.overflow;
    } else if (auto bin = find_bin(h.edges, k.kpp)) {
      ++h.counts[*bin];
    } else {
      ++h.counts.front();  // below lo: only reachable through rounding when lo = 1
    }
  }
  h.n = values.size();
  h.median = median(std::move(values));
  return h;
}

struct PositionStats {
  std::size_t position = 1;  // 1-based token index within the keyphrase
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::size_t count = 0;
};

/// Box-plot summary of one sample: linear-interpolation quartiles and
/// whiskers at the most extreme data within 1.5 IQR of the box.
inline PositionStats summarize_box(std::size_t position, std::vector<double> sample) {
  if (sample.empty()) throw ValidationError("box summary of empty sample");
  std::sort(sample.begin(), sample.end());
  PositionStats s;
  s.position = position;
  s.count = sample.size();
  s.q1 = quantile_sorted(sample, 0.25);
  s.median = quantile_sorted(sample, 0.5);
  s.q3 = quantile_sorted(sample, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = *std::find_if(sample.begin(), sample.end(), [&](double x) { return x >= lo_fence; });
  s.whisker_high = *std::find_if(sample.rbegin(), sample.rend(), [&](double x) { return x <= hi_fence; });
  s.whisker_low = std::min(s.whisker_low, s.q1);
  s.whisker_high = std::max(s.whisker_high, s.q3);
  return s;
}

struct PositionStatsResult {
  std::vector<PositionStats> positions;  // only positions with samples
  std::vector<std::size_t> omitted;      // positions without samples
};

/// Pools the i-th token probability of every qualifying keyphrase for
/// i = 1..n_positions.
inline PositionStatsResult position_stats(std::span<const KeyphraseConfidence> keyphrases, std::size_t n_positions,
                                          PresenceFilter filter) {
  std::vector<std::vector<double>> pools(n_positions);
  for (const auto& k : keyphrases) {
    if (!passes(filter, k.presence)) continue;
    for (std::size_t i = 0; i < n_positions && i < k.token_probs.size(); ++i) pools[i].push_back(k.token_probs[i]);
  }
  PositionStatsResult out;
  for (std::size_t i = 0; i < n_positions; ++i) {
    if (pools[i].empty())
      out.omitted.push_back(i + 1);
    else
      out.positions.push_back(summarize_box(i + 1, std::move(pools[i])));
  }
  return out;
}

}  // namespace keyscore
