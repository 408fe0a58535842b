#pragma once

// Per-document evaluation over a corpus: prediction dedup, present/absent
// split, metric computation, keyphrase confidences and section tallies.
// Documents run on a bounded worker pool; results come back sorted by
// doc_id regardless of scheduling.

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "keyscore/calibration.hpp"
#include "keyscore/confidence.hpp"
#include "keyscore/corpus.hpp"
#include "keyscore/matching.hpp"
#include "keyscore/positional.hpp"
#include "keyscore/softkeyscore.hpp"
#include "keyscore/textnorm.hpp"

namespace keyscore {

struct EvaluationOptions {
  std::vector<MetricConfig> metrics = {MetricConfig{ScoreFunction::exact(), Selection::at_m(), true},
                                       MetricConfig{ScoreFunction::exact(), Selection::at_k(5), true}};
  std::size_t workers = 1;
  bool dedup_gold = false;
  /// Kernel behind the secondary "soft miss" column of the positional report.
  ScoreFunction soft_miss_kernel = ScoreFunction::kmr();
};

struct SplitMetrics {
  MetricResult all;
  MetricResult present;
  MetricResult absent;
};

struct DocumentEvaluation {
  std::string doc_id;
  std::vector<SplitMetrics> metrics;              // parallel to EvaluationOptions::metrics
  std::vector<KeyphraseConfidence> keyphrases;    // deduplicated predictions
  std::vector<bool> correct;                      // parallel to keyphrases
  SectionTally sections;
  std::size_t n_predicted = 0;                    // spans in the trace
  std::size_t n_unnormalizable = 0;               // spans with no word tokens
  std::size_t n_duplicates = 0;                   // spans removed by stemmed dedup
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The exception of
/// the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline bool needs_embeddings(const EvaluationOptions& options) {
  if (options.soft_miss_kernel.kind == Kernel::EmbeddingGreedy) return true;
  return std::any_of(options.metrics.begin(), options.metrics.end(),
                     [](const auto& m) { return m.score_fn.kind == Kernel::EmbeddingGreedy; });
}

struct PreparedPredictions {
  std::vector<NormalizedPhrase> phrases;
  std::vector<KeyphraseSpan> spans;
  std::size_t n_predicted = 0;
  std::size_t n_unnormalizable = 0;
  std::size_t n_duplicates = 0;
};

inline PreparedPredictions prepare_predictions(const PredictionRecord* record) {
  PreparedPredictions out;
  if (!record) return out;
  out.n_predicted = record->spans.size();
  std::set<std::vector<std::string>> seen;
  for (std::size_t i = 0; i < record->spans.size(); ++i) {
    auto norm = try_normalize(record->phrases[i]);
    if (!norm) {
      ++out.n_unnormalizable;
      continue;
    }
    if (!seen.insert(norm->stems).second) {
      ++out.n_duplicates;
      continue;
    }
    out.phrases.push_back(std::move(*norm));
    out.spans.push_back(record->spans[i]);
  }
  return out;
}

inline std::vector<NormalizedPhrase> prepare_gold(const Document& doc, bool dedup_gold) {
  std::vector<NormalizedPhrase> gold;
  for (const auto& g : doc.gold) gold.push_back(normalize(g));
  return dedup_gold ? dedup(std::span<const NormalizedPhrase>(gold)) : gold;
}

}  // namespace detail

inline DocumentEvaluation evaluate_document(const Document& doc, const PredictionRecord* record,
                                            const EvaluationOptions& options, const Normalizer& normalizer,
                                            EmbeddingProvider* embeddings = nullptr) {
  const auto stems = normalizer.document(doc);
  auto pred = detail::prepare_predictions(record);
  const auto gold = detail::prepare_gold(doc, options.dedup_gold);
  const auto split = split_by_presence(pred.phrases, gold, *stems);

  DocumentEvaluation ev;
  ev.doc_id = doc.doc_id;
  ev.n_predicted = pred.n_predicted;
  ev.n_unnormalizable = pred.n_unnormalizable;
  ev.n_duplicates = pred.n_duplicates;
  for (const auto& m : options.metrics) {
    ev.metrics.push_back({soft_f(pred.phrases, gold, m, embeddings),
                          soft_f(split.present_pred, split.present_gold, m, embeddings),
                          soft_f(split.absent_pred, split.absent_gold, m, embeddings)});
  }
  for (std::size_t i = 0; i < pred.phrases.size(); ++i) {
    const auto presence = classify_presence(pred.phrases[i], *stems);
    ev.keyphrases.push_back(KeyphraseConfidence::measure(record->trace, pred.spans[i], presence));
    ev.correct.push_back(correctness(pred.phrases[i], gold));
  }
  ev.sections = tally_sections(*stems, split.present_gold, pred.phrases, options.soft_miss_kernel, embeddings);
  return ev;
}

/// Evaluates every document of the corpus. Documents without a prediction
/// record are scored as empty predictions.
inline std::vector<DocumentEvaluation> evaluate_corpus(const Corpus& corpus, const EvaluationOptions& options,
                                                       EmbeddingProvider* embeddings = nullptr) {
  for (const auto& m : options.metrics) m.score_fn.validate();
  options.soft_miss_kernel.validate();
  if (detail::needs_embeddings(options)) {
    if (!embeddings) throw ValidationError("embedding kernel selected but no embedding source configured");
    std::set<std::string> keys;
    for (const auto& doc : corpus.documents())
      for (const auto& g : doc.gold) keys.insert(join(g.tokens));
    for (const auto& rec : corpus.predictions())
      for (const auto& p : rec.phrases)
        if (!p.tokens.empty()) keys.insert(join(p.tokens));
    embeddings->prefetch({keys.begin(), keys.end()});
  }

  Normalizer normalizer;
  const auto& docs = corpus.documents();
  std::vector<DocumentEvaluation> results(docs.size());
  parallel_for(docs.size(), options.workers, [&](std::size_t i) {
    results[i] = evaluate_document(docs[i], corpus.find_prediction(docs[i].doc_id), options, normalizer, embeddings);
  });
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  return results;
}

/// Flattened keyphrase confidences across documents, in doc_id order.
inline std::vector<KeyphraseConfidence> collect_keyphrases(std::span<const DocumentEvaluation> evals) {
  std::vector<KeyphraseConfidence> out;
  for (const auto& e : evals) out.insert(out.end(), e.keyphrases.begin(), e.keyphrases.end());
  return out;
}

inline std::vector<CalibrationSample> collect_calibration(std::span<const DocumentEvaluation> evals,
                                                          PresenceFilter filter) {
  std::vector<CalibrationSample> out;
  for (const auto& e : evals)
    for (std::size_t i = 0; i < e.keyphrases.size(); ++i)
      if (passes(filter, e.keyphrases[i].presence)) out.push_back({e.keyphrases[i].confidence, e.correct[i]});
  return out;
}

inline PositionalReport positional_report(std::span<const DocumentEvaluation> evals) {
  SectionTally total;
  for (const auto& e : evals) total += e.sections;
  return positional_report(total);
}

}  // namespace keyscore
