#include <atomic>
#include <cmath>
#include <sstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include "keyscore/embedding_http.hpp"
#include "keyscore/embeddings.hpp"

namespace {

using nlohmann::json;

std::string cache_line(const std::string& phrase, const std::string& model, const json& vectors) {
  return json{{"phrase", phrase}, {"model_id", model}, {"tokens", json::array()}, {"vectors", vectors}}.dump() + "\n";
}

TEST(CacheProviderTest, LoadsAndSelectsModel) {
  const double s = 1.0 / std::sqrt(2.0);
  std::istringstream in(cache_line("web search", "roberta-large", {{1.0, 0.0}, {s, s}}) +
                        cache_line("web search", "scibert", {{0.0, 1.0}}) +
                        cache_line("search engine", "roberta-large", {{0.0, 1.0}}));
  keyscore::CacheEmbeddingProvider p(in, "roberta-large");
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.embed("web search")->vectors.size(), 2u);
  EXPECT_THROW(p.embed("unknown phrase"), keyscore::ValidationError);
}

TEST(CacheProviderTest, RejectsAmbiguousOrInvalidFiles) {
  {
    std::istringstream in(cache_line("a", "m1", {{1.0}}) + cache_line("b", "m2", {{1.0}}));
    EXPECT_THROW(keyscore::CacheEmbeddingProvider p(in), keyscore::ValidationError);
  }
  {
    std::istringstream in(cache_line("a", "m1", {{0.5, 0.5}}));
    EXPECT_THROW(keyscore::CacheEmbeddingProvider p(in), keyscore::ValidationError);
  }
  {
    std::istringstream in(cache_line("a", "m1", {{1.0}}) + cache_line("a", "m1", {{1.0}}));
    EXPECT_THROW(keyscore::CacheEmbeddingProvider p(in), keyscore::ValidationError);
  }
  {
    std::istringstream in(cache_line("a", "m1", {{1.0}}) + cache_line("b", "m1", {{1.0, 0.0}}));
    EXPECT_THROW(keyscore::CacheEmbeddingProvider p(in), keyscore::ValidationError);
  }
}

TEST(CacheProviderTest, FullPrecisionRoundTripIsBitExact) {
  const double a = 0.6, b = 0.8;
  const double c = 1.0 / 3.0;
  const double d = std::sqrt(1.0 - c * c);
  keyscore::CacheEntry entry{"m", {"weird phrase", {"weird", "phrase"}, {{a, b}, {c, d}}}};
  std::istringstream in(keyscore::to_json(entry).dump() + "\n");
  keyscore::CacheEmbeddingProvider p(in);
  const auto got = p.embed("weird phrase");
  ASSERT_EQ(got->vectors.size(), 2u);
  EXPECT_EQ(got->vectors[1][0], c);
  EXPECT_EQ(got->vectors[1][1], d);
  EXPECT_EQ(p.model_id(), "m");
}

/// Minimal stand-in for the embedding sidecar: one-hot vectors keyed by the
/// phrase's first letter.
class FakeService {
public:
  FakeService() {
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      if (!ready_) {
        res.status = 503;
        return;
      }
      res.set_content(json{{"model_id", "fake"}, {"dimension", 3}}.dump(), "application/json");
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const auto body = json::parse(req.body, nullptr, false);
      if (body.is_discarded()) {
        res.status = 400;
        return;
      }
      if (body.value("model_id", "") != "fake") {
        res.status = 404;
        return;
      }
      json results = json::array();
      for (const auto& p : body["phrases"]) {
        const auto s = p.get<std::string>();
        std::vector<double> v(3, 0.0);
        v[static_cast<unsigned char>(s[0]) % 3] = 1.0;
        results.push_back({{"phrase", s}, {"tokens", {s}}, {"vectors", {v}}});
      }
      res.set_content(json{{"dimension", 3}, {"results", results}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }
  void set_ready(bool r) { ready_ = r; }

private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<bool> ready_{true};
};

TEST(HttpProviderTest, HealthAndEmbed) {
  FakeService svc;
  keyscore::HttpEmbeddingProvider p(svc.url(), "fake", 2);
  const auto h = p.health();
  EXPECT_TRUE(h.ready);
  EXPECT_EQ(h.dimension, 3u);
  svc.set_ready(false);
  EXPECT_FALSE(p.health().ready);
  svc.set_ready(true);

  p.prefetch({"alpha", "beta", "gamma", "alpha"});
  EXPECT_EQ(svc.requests(), 2);  // three distinct phrases, batch limit 2
  const auto e = p.embed("alpha");
  EXPECT_EQ(svc.requests(), 2);
  EXPECT_EQ(e->dimension(), 3u);
  EXPECT_EQ(*e, *p.embed("alpha"));
  p.embed("delta");
  EXPECT_EQ(svc.requests(), 3);
}

TEST(HttpProviderTest, ErrorsAreTyped) {
  FakeService svc;
  keyscore::HttpEmbeddingProvider wrong_model(svc.url(), "nope");
  EXPECT_THROW(wrong_model.embed("x"), keyscore::ValidationError);
  keyscore::HttpEmbeddingProvider unreachable("http://127.0.0.1:1", "fake");
  EXPECT_THROW(unreachable.embed("x"), keyscore::IoError);
}

TEST(HttpProviderTest, DrivesEmbeddingKernel) {
  FakeService svc;
  keyscore::HttpEmbeddingProvider p(svc.url(), "fake");
  const auto a = keyscore::normalize("abc");
  const auto b = keyscore::normalize("aaa");  // same one-hot
  const auto c = keyscore::normalize("bbb");
  EXPECT_DOUBLE_EQ(keyscore::apply(keyscore::ScoreFunction::embedding(), a, b, &p), 1.0);
  EXPECT_EQ(keyscore::apply(keyscore::ScoreFunction::embedding(), a, c, &p), 0.0);
}

}  // namespace
