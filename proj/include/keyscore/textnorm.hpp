#pragma once

// Stemmed phrase normalization, duplicate removal and present/absent
// classification against the stemmed source document.

#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "keyscore/corpus.hpp"
#include "keyscore/errors.hpp"
#include "keyscore/text.hpp"

namespace keyscore {

struct NormalizedPhrase {
  Keyphrase original;
  std::vector<std::string> stems;

  friend bool operator==(const NormalizedPhrase&, const NormalizedPhrase&) = default;
};

enum class Presence { Present, Absent };

inline const char* to_string(Presence p) { return p == Presence::Present ? "present" : "absent"; }

inline NormalizedPhrase normalize(const Keyphrase& phrase) {
  if (phrase.tokens.empty()) throw EmptyPhraseError("keyphrase '" + phrase.raw + "' has no word tokens");
  return {phrase, phrase.stemmed};
}

inline NormalizedPhrase normalize(std::string raw) { return normalize(Keyphrase::from_raw(std::move(raw))); }

inline std::optional<NormalizedPhrase> try_normalize(const Keyphrase& phrase) {
  if (phrase.tokens.empty()) return std::nullopt;
  return NormalizedPhrase{phrase, phrase.stemmed};
}

/// Keeps the first phrase of each distinct stem sequence.
inline std::vector<Keyphrase> dedup(std::span<const Keyphrase> phrases) {
  std::set<std::vector<std::string>> seen;
  std::vector<Keyphrase> out;
  for (const auto& p : phrases)
    if (seen.insert(p.stemmed).second) out.push_back(p);
  return out;
}

inline std::vector<NormalizedPhrase> dedup(std::span<const NormalizedPhrase> phrases) {
  std::set<std::vector<std::string>> seen;
  std::vector<NormalizedPhrase> out;
  for (const auto& p : phrases)
    if (seen.insert(p.stems).second) out.push_back(p);
  return out;
}

/// Stemmed token sequence of a document with code-point offsets of each token.
struct DocumentStems {
  std::vector<std::string> stems;
  std::vector<std::size_t> offsets;
  std::size_t length = 0;  // code points in the original text

  static DocumentStems build(const std::string& text) {
    DocumentStems d;
    for (auto& t : tokenize_with_offsets(text)) {
      d.stems.push_back(stem(t.text));
      d.offsets.push_back(t.offset);
    }
    d.length = text_length(text);
    return d;
  }
};

/// Token index of the first contiguous occurrence of needle in haystack.
inline std::optional<std::size_t> find_contiguous(std::span<const std::string> needle,
                                                  std::span<const std::string> haystack) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end());
  if (it == haystack.end()) return std::nullopt;
  return static_cast<std::size_t>(it - haystack.begin());
}

inline Presence classify_presence(const NormalizedPhrase& phrase, const DocumentStems& doc) {
  return find_contiguous(phrase.stems, doc.stems) ? Presence::Present : Presence::Absent;
}

/// Shares memoized document stem sequences across evaluation workers.
class Normalizer {
public:
  std::shared_ptr<const DocumentStems> document(const Document& doc) const {
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(doc.doc_id); it != cache_.end()) return it->second;
    }
    auto built = std::make_shared<const DocumentStems>(DocumentStems::build(doc.text));
    std::unique_lock lock(mutex_);
    return cache_.try_emplace(doc.doc_id, std::move(built)).first->second;
  }

  Presence classify_presence(const NormalizedPhrase& phrase, const Document& doc) const {
    return keyscore::classify_presence(phrase, *document(doc));
  }

private:
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const DocumentStems>> cache_;
};

inline Presence classify_presence(const NormalizedPhrase& phrase, const Document& doc) {
  return classify_presence(phrase, DocumentStems::build(doc.text));
}

}  // namespace keyscore
