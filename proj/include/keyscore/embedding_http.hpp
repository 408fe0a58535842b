#pragma once

// Client for the embedding sidecar service.
//
//   POST {base}/embed  {"phrases": [str], "model_id": str}
//     -> {"dimension": int, "results": [{"phrase": str, "tokens": [str], "vectors": [[float]]}]}
//   GET  {base}/health -> 200 {"model_id": str, "dimension": int} once ready, 503 while loading

#include <algorithm>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "keyscore/errors.hpp"
#include "keyscore/matching.hpp"

namespace keyscore {

struct ServiceHealth {
  bool ready = false;
  std::string model_id;
  std::size_t dimension = 0;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
  /// base_url is "http://host:port" optionally followed by a path prefix.
  HttpEmbeddingProvider(std::string base_url, std::string model_id, std::size_t batch_limit = 64)
      : model_id_(std::move(model_id)), batch_limit_(std::max<std::size_t>(1, batch_limit)) {
    const auto scheme_end = base_url.find("://");
    const auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
      host_ = base_url;
    } else {
      host_ = base_url.substr(0, path_start);
      prefix_ = base_url.substr(path_start);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  ServiceHealth health() {
    auto client = make_client();
    auto res = client.Get(prefix_ + "/health");
    if (!res) throw IoError("embedding service at " + host_ + " unreachable: " + httplib::to_string(res.error()));
    ServiceHealth h;
    if (res->status != 200) return h;
    const auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw IoError("embedding service returned malformed health JSON");
    h.ready = true;
    h.model_id = j.value("model_id", std::string{});
    h.dimension = j.value("dimension", std::size_t{0});
    return h;
  }

  void prefetch(const std::vector<std::string>& phrases) override {
    std::vector<std::string> missing;
    {
      std::lock_guard lock(mutex_);
      for (const auto& p : phrases)
        if (!cache_.count(p) && std::find(missing.begin(), missing.end(), p) == missing.end()) missing.push_back(p);
    }
    for (std::size_t i = 0; i < missing.size(); i += batch_limit_) {
      const auto end = std::min(missing.size(), i + batch_limit_);
      fetch({missing.begin() + static_cast<std::ptrdiff_t>(i), missing.begin() + static_cast<std::ptrdiff_t>(end)});
    }
  }

  std::shared_ptr<const TokenEmbeddingSet> embed(const std::string& phrase) override {
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(phrase); it != cache_.end()) return it->second;
    }
    fetch({phrase});
    std::lock_guard lock(mutex_);
    return cache_.at(phrase);
  }

private:
  std::string host_;
  std::string prefix_;
  std::string model_id_;
  std::size_t batch_limit_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const TokenEmbeddingSet>> cache_;

  httplib::Client make_client() const {
    httplib::Client client(host_);
    client.set_connection_timeout(10);
    client.set_read_timeout(300);
    return client;
  }

  void fetch(const std::vector<std::string>& phrases) {
    const nlohmann::json request = {{"phrases", phrases}, {"model_id", model_id_}};
    auto client = make_client();
    auto res = client.Post(prefix_ + "/embed", request.dump(), "application/json");
    if (!res) throw IoError("embedding service at " + host_ + " unreachable: " + httplib::to_string(res.error()));
    if (res->status >= 400 && res->status < 500)
      throw ValidationError("embedding service rejected request (HTTP " + std::to_string(res->status) + "): " + res->body);
    if (res->status != 200)
      throw IoError("embedding service failed (HTTP " + std::to_string(res->status) + "): " + res->body);

    const auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.contains("results") || !body["results"].is_array())
      throw IoError("embedding service returned malformed JSON");
    const auto& results = body["results"];
    if (results.size() != phrases.size())
      throw IoError("embedding service returned " + std::to_string(results.size()) + " results for " +
                    std::to_string(phrases.size()) + " phrases");

    std::vector<std::shared_ptr<const TokenEmbeddingSet>> sets;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      TokenEmbeddingSet s;
      try {
        s.phrase = phrases[i];
        s.tokens = results[i].value("tokens", std::vector<std::string>{});
        s.vectors = results[i].at("vectors").get<std::vector<std::vector<double>>>();
      } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("embedding service result malformed: ") + e.what());
      }
      if (results[i].contains("phrase") && results[i]["phrase"] != phrases[i])
        throw IoError("embedding service answered out of order at '" + phrases[i] + "'");
      s.validate();
      sets.push_back(std::make_shared<const TokenEmbeddingSet>(std::move(s)));
    }
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < phrases.size(); ++i) cache_.emplace(phrases[i], sets[i]);
  }
};

}  // namespace keyscore
