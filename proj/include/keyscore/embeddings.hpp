#pragma once

// Embedding-cache file reader for the embedding kernel.
//
// Cache file: one JSON object per line,
//   {"phrase": str, "model_id": str, "tokens": [str], "vectors": [[float]]}

#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "keyscore/corpus.hpp"
#include "keyscore/errors.hpp"
#include "keyscore/matching.hpp"

namespace keyscore {

struct CacheEntry {
  std::string model_id;
  TokenEmbeddingSet embeddings;
};

inline CacheEntry parse_cache_entry(const nlohmann::json& j) {
  CacheEntry e;
  e.embeddings.phrase = detail::require(j, "phrase").get<std::string>();
  e.model_id = detail::require(j, "model_id").get<std::string>();
  e.embeddings.tokens = detail::require(j, "tokens").get<std::vector<std::string>>();
  e.embeddings.vectors = detail::require(j, "vectors").get<std::vector<std::vector<double>>>();
  if (e.embeddings.phrase.empty()) throw ValidationError("cache entry with empty phrase");
  e.embeddings.validate();
  return e;
}

inline nlohmann::json to_json(const CacheEntry& e) {
  return {{"phrase", e.embeddings.phrase},
          {"model_id", e.model_id},
          {"tokens", e.embeddings.tokens},
          {"vectors", e.embeddings.vectors}};
}

/// Serves embeddings from a precomputed cache file. When model_id is empty the
/// file must hold a single model.
class CacheEmbeddingProvider final : public EmbeddingProvider {
public:
  CacheEmbeddingProvider(std::istream& in, std::string model_id = {}, const std::string& source = "embedding cache")
      : model_id_(std::move(model_id)) {
    std::set<std::string> models;
    std::optional<std::size_t> dim;
    detail::for_each_json_line(in, source, [&](const nlohmann::json& j, std::size_t) {
      auto entry = parse_cache_entry(j);
      if (!model_id_.empty() && entry.model_id != model_id_) return;
      models.insert(entry.model_id);
      if (dim && *dim != entry.embeddings.dimension())
        throw ValidationError("embedding dimension " + std::to_string(entry.embeddings.dimension()) +
                              " differs from earlier entries (" + std::to_string(*dim) + ")");
      dim = entry.embeddings.dimension();
      auto key = entry.embeddings.phrase;
      if (!entries_.emplace(key, std::make_shared<const TokenEmbeddingSet>(std::move(entry.embeddings))).second)
        throw ValidationError("duplicate cache entry for phrase '" + key + "'");
    });
    if (models.size() > 1)
      throw ValidationError("embedding cache holds several models; select one with a model id");
    if (model_id_.empty() && !models.empty()) model_id_ = *models.begin();
  }

  static CacheEmbeddingProvider from_file(const std::string& path, std::string model_id = {}) {
    auto in = detail::open_input(path);
    return CacheEmbeddingProvider(in, std::move(model_id), path);
  }

  std::shared_ptr<const TokenEmbeddingSet> embed(const std::string& phrase) override {
    auto it = entries_.find(phrase);
    if (it == entries_.end())
      throw ValidationError("no cached embeddings for phrase '" + phrase + "' (model '" + model_id_ + "')");
    return it->second;
  }

  const std::string& model_id() const { return model_id_; }
  std::size_t size() const { return entries_.size(); }

private:
  std::string model_id_;
  std::unordered_map<std::string, std::shared_ptr<const TokenEmbeddingSet>> entries_;
};

/// In-memory provider, mostly for fixtures and tests.
class StaticEmbeddingProvider final : public EmbeddingProvider {
public:
  void add(TokenEmbeddingSet set) {
    set.validate();
    auto key = set.phrase;
    entries_[key] = std::make_shared<const TokenEmbeddingSet>(std::move(set));
  }

  std::shared_ptr<const TokenEmbeddingSet> embed(const std::string& phrase) override {
    auto it = entries_.find(phrase);
    if (it == entries_.end()) throw ValidationError("no embeddings for phrase '" + phrase + "'");
    return it->second;
  }

private:
  std::map<std::string, std::shared_ptr<const TokenEmbeddingSet>> entries_;
};

}  // namespace keyscore
