#pragma once

// Corpus data model and line-delimited JSON ingestion.
//
//   documents:    {"doc_id": str, "text": str, "gold": [str, ...]}
//   predictions:  {"doc_id": str, "tokens": [str], "probs": [float],
//                  "special_mask": [bool]?, "spans": [[int,int], ...]?}
//                 "logprobs" may replace "probs"; values are exponentiated.
//   human scores: {"doc_id": str, "score": float}
//
// Spans are 0-based and inclusive on both ends.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "keyscore/errors.hpp"
#include "keyscore/text.hpp"

namespace keyscore {

/// A raw keyphrase with its derived word tokens and Porter stems.
struct Keyphrase {
  std::string raw;
  std::vector<std::string> tokens;
  std::vector<std::string> stemmed;

  static Keyphrase from_raw(std::string raw) {
    Keyphrase k;
    k.tokens = tokenize(raw);
    k.stemmed = stem_all(k.tokens);
    k.raw = std::move(raw);
    return k;
  }

  friend bool operator==(const Keyphrase&, const Keyphrase&) = default;
};

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<Keyphrase> gold;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Generated tokens with their conditional probabilities p(w_i | w_<i).
struct TokenTrace {
  std::vector<std::string> tokens;
  std::vector<double> probs;
  std::vector<bool> special_mask;

  std::size_t size() const { return tokens.size(); }

  /// Throws ValidationError when the parallel arrays disagree in length or a
  /// probability falls outside (0, 1].
  void validate() const {
    if (tokens.size() != probs.size() || tokens.size() != special_mask.size()) {
      throw ValidationError("token trace length mismatch: " + std::to_string(tokens.size()) + " tokens, " +
                            std::to_string(probs.size()) + " probs, " + std::to_string(special_mask.size()) +
                            " mask entries");
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double p = probs[i];
      if (!(p > 0.0 && p <= 1.0)) {
        std::ostringstream os;
        os << "probability " << p << " at token " << i
           << " outside (0,1]; keyphrase perplexity is undefined for non-positive probabilities";
        throw ValidationError(os.str());
      }
    }
  }

  friend bool operator==(const TokenTrace&, const TokenTrace&) = default;
};

struct KeyphraseSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  std::size_t length() const { return end - start + 1; }

  friend bool operator==(const KeyphraseSpan&, const KeyphraseSpan&) = default;
};

struct PredictionRecord {
  std::string doc_id;
  TokenTrace trace;
  std::vector<KeyphraseSpan> spans;
  std::vector<Keyphrase> phrases;  // one per span

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct HumanScoreRecord {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const HumanScoreRecord&, const HumanScoreRecord&) = default;
};

/// Tokens treated as keyphrase delimiters or sequence markers when a trace
/// carries no explicit special_mask.
inline std::set<std::string> default_delimiters() {
  return {";", "<sep>", "<eos>", "</s>", "<s>", "<pad>", "<unk_sep>", "<peos>"};
}

struct LoadOptions {
  std::set<std::string> delimiters = default_delimiters();
  /// Treat "probs" arrays as natural-log probabilities.
  bool log_probs = false;
};

/// Maximal runs of non-special tokens. A token is special when its mask bit
/// is set or it is one of the delimiter tokens.
inline std::vector<KeyphraseSpan> segment_spans(const TokenTrace& trace, const std::set<std::string>& delimiters) {
  std::vector<KeyphraseSpan> spans;
  std::optional<std::size_t> run_start;
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    const bool special = (i < trace.special_mask.size() && trace.special_mask[i]) || delimiters.count(trace.tokens[i]);
    if (special) {
      if (run_start) spans.push_back({*run_start, i - 1});
      run_start.reset();
    } else if (!run_start) {
      run_start = i;
    }
  }
  if (run_start) spans.push_back({*run_start, trace.tokens.size() - 1});
  return spans;
}

/// Keyphrase text for a span: the span's non-special trace tokens joined by a
/// single space.
inline Keyphrase phrase_from_span(const TokenTrace& trace, const KeyphraseSpan& span) {
  std::vector<std::string> parts;
  for (std::size_t i = span.start; i <= span.end; ++i)
    if (!trace.special_mask[i]) parts.push_back(trace.tokens[i]);
  return Keyphrase::from_raw(join(parts));
}

inline void validate_spans(const TokenTrace& trace, const std::vector<KeyphraseSpan>& spans) {
  std::optional<std::size_t> prev_end;
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= trace.size())
      throw ValidationError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                            "] out of range for trace of " + std::to_string(trace.size()) + " tokens");
    if (prev_end && s.start <= *prev_end)
      throw ValidationError("spans overlap or are out of order at [" + std::to_string(s.start) + "," +
                            std::to_string(s.end) + "]");
    for (std::size_t i = s.start; i <= s.end; ++i)
      if (trace.special_mask[i])
        throw ValidationError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                              "] contains special token at " + std::to_string(i));
    prev_end = s.end;
  }
}

/// Documents and their prediction records. Immutable once loaded.
class Corpus {
public:
  Corpus() = default;

  /// Validates ids and pairing; throws ValidationError on duplicates or on
  /// predictions whose doc_id has no document.
  Corpus(std::vector<Document> documents, std::vector<PredictionRecord> predictions)
      : documents_(std::move(documents)), predictions_(std::move(predictions)) {
    for (std::size_t i = 0; i < documents_.size(); ++i) {
      if (documents_[i].doc_id.empty()) throw ValidationError("document " + std::to_string(i + 1) + " has empty doc_id");
      if (!doc_index_.emplace(documents_[i].doc_id, i).second)
        throw ValidationError("duplicate doc_id '" + documents_[i].doc_id + "'");
    }
    std::vector<std::string> orphans;
    for (std::size_t i = 0; i < predictions_.size(); ++i) {
      const auto& id = predictions_[i].doc_id;
      if (!doc_index_.count(id)) {
        orphans.push_back(id);
        continue;
      }
      if (!pred_index_.emplace(id, i).second) throw ValidationError("duplicate prediction record for doc_id '" + id + "'");
    }
    if (!orphans.empty())
      throw ValidationError("predictions reference unknown doc_id(s): " + join(orphans, ", "));
  }

  const std::vector<Document>& documents() const { return documents_; }
  const std::vector<PredictionRecord>& predictions() const { return predictions_; }
  std::size_t size() const { return documents_.size(); }

  const Document* find_document(const std::string& doc_id) const {
    auto it = doc_index_.find(doc_id);
    return it == doc_index_.end() ? nullptr : &documents_[it->second];
  }

  /// Prediction record for a document, or nullptr when the model emitted none.
  const PredictionRecord* find_prediction(const std::string& doc_id) const {
    auto it = pred_index_.find(doc_id);
    return it == pred_index_.end() ? nullptr : &predictions_[it->second];
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.documents_ == b.documents_ && a.predictions_ == b.predictions_;
  }

private:
  std::vector<Document> documents_;
  std::vector<PredictionRecord> predictions_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::string, std::size_t> pred_index_;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void fail_line(const std::string& source, std::size_t line, const std::string& what) {
  throw ValidationError(source + ":" + std::to_string(line) + ": " + what);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

/// Calls fn(json, line_number) for each non-blank line.
template <class Fn>
void for_each_json_line(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail_line(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail_line(source, line_no, "expected a JSON object");
    try {
      fn(j, line_no);
    } catch (const ValidationError& e) {
      fail_line(source, line_no, e.what());
    } catch (const json::exception& e) {
      fail_line(source, line_no, std::string("schema error: ") + e.what());
    }
  }
}

inline const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace detail

inline Document parse_document(const nlohmann::json& j) {
  Document d;
  d.doc_id = detail::require(j, "doc_id").get<std::string>();
  d.text = detail::require(j, "text").get<std::string>();
  if (d.doc_id.empty()) throw ValidationError("empty doc_id");
  if (d.text.empty()) throw ValidationError("document '" + d.doc_id + "' has empty text");
  for (const auto& g : detail::require(j, "gold")) {
    auto k = Keyphrase::from_raw(g.get<std::string>());
    if (k.tokens.empty())
      throw ValidationError("gold keyphrase '" + k.raw + "' of '" + d.doc_id + "' has no word tokens");
    d.gold.push_back(std::move(k));
  }
  return d;
}

inline PredictionRecord parse_prediction(const nlohmann::json& j, const LoadOptions& options = {}) {
  PredictionRecord r;
  r.doc_id = detail::require(j, "doc_id").get<std::string>();
  r.trace.tokens = detail::require(j, "tokens").get<std::vector<std::string>>();

  bool log_space = options.log_probs;
  const nlohmann::json* probs = nullptr;
  if (auto it = j.find("logprobs"); it != j.end()) {
    probs = &*it;
    log_space = true;
  } else {
    probs = &detail::require(j, "probs");
  }
  for (const auto& v : *probs) {
    if (!v.is_number()) throw ValidationError("non-numeric probability");
    const double x = v.get<double>();
    r.trace.probs.push_back(log_space ? std::exp(x) : x);
  }

  if (auto it = j.find("special_mask"); it != j.end()) {
    for (const auto& b : *it) r.trace.special_mask.push_back(b.get<bool>());
  } else {
    for (const auto& t : r.trace.tokens) r.trace.special_mask.push_back(options.delimiters.count(t) > 0);
  }
  r.trace.validate();

  if (auto it = j.find("spans"); it != j.end()) {
    for (const auto& s : *it) {
      if (!s.is_array() || s.size() != 2) throw ValidationError("span must be a [start, end] pair");
      const auto start = s[0].get<long long>();
      const auto end = s[1].get<long long>();
      if (start < 0 || end < 0) throw ValidationError("negative span index");
      r.spans.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end)});
    }
    validate_spans(r.trace, r.spans);
  } else {
    r.spans = segment_spans(r.trace, options.delimiters);
  }
  for (const auto& s : r.spans) r.phrases.push_back(phrase_from_span(r.trace, s));
  return r;
}

inline std::vector<Document> read_documents(std::istream& in, const std::string& source = "documents") {
  std::vector<Document> docs;
  detail::for_each_json_line(in, source, [&](const nlohmann::json& j, std::size_t) { docs.push_back(parse_document(j)); });
  return docs;
}

inline std::vector<PredictionRecord> read_predictions(std::istream& in, const LoadOptions& options = {},
                                                      const std::string& source = "predictions") {
  std::vector<PredictionRecord> preds;
  detail::for_each_json_line(in, source,
                             [&](const nlohmann::json& j, std::size_t) { preds.push_back(parse_prediction(j, options)); });
  return preds;
}

inline Corpus load_corpus(const std::string& documents_path, const std::string& predictions_path,
                          const LoadOptions& options = {}) {
  auto doc_in = detail::open_input(documents_path);
  auto docs = read_documents(doc_in, documents_path);
  auto pred_in = detail::open_input(predictions_path);
  auto preds = read_predictions(pred_in, options, predictions_path);
  return Corpus(std::move(docs), std::move(preds));
}

inline std::vector<HumanScoreRecord> read_human_scores(std::istream& in, const std::string& source = "human scores") {
  std::vector<HumanScoreRecord> out;
  std::set<std::string> seen;
  detail::for_each_json_line(in, source, [&](const nlohmann::json& j, std::size_t) {
    HumanScoreRecord r;
    r.doc_id = detail::require(j, "doc_id").get<std::string>();
    const auto& s = detail::require(j, "score");
    if (!s.is_number()) throw ValidationError("score must be a number");
    r.score = s.get<double>();
    if (!(r.score >= 0.0 && r.score <= 1.0))
      throw ValidationError("score " + std::to_string(r.score) + " for '" + r.doc_id + "' outside [0,1]");
    if (!seen.insert(r.doc_id).second) throw ValidationError("duplicate human score for '" + r.doc_id + "'");
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<HumanScoreRecord> load_human_scores(const std::string& path) {
  auto in = detail::open_input(path);
  return read_human_scores(in, path);
}

// Serialization writes only source fields; derived tokens and stems are
// rebuilt on load.

inline nlohmann::json to_json(const Document& d) {
  nlohmann::json gold = nlohmann::json::array();
  for (const auto& g : d.gold) gold.push_back(g.raw);
  return {{"doc_id", d.doc_id}, {"text", d.text}, {"gold", gold}};
}

inline nlohmann::json to_json(const PredictionRecord& r) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : r.spans) spans.push_back({s.start, s.end});
  std::vector<bool> mask(r.trace.special_mask.begin(), r.trace.special_mask.end());
  return {{"doc_id", r.doc_id}, {"tokens", r.trace.tokens}, {"probs", r.trace.probs}, {"special_mask", mask},
          {"spans", spans}};
}

inline void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) out << to_json(d).dump() << '\n';
}

inline void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& preds) {
  for (const auto& p : preds) out << to_json(p).dump() << '\n';
}

}  // namespace keyscore
