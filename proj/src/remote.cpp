#include "prefgeom/remote.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "prefgeom/linalg.hpp"

namespace prefgeom {

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  require(scheme_end != std::string::npos, "fetch_embeddings_remote: malformed endpoint url");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

EmbeddingStore fetch_embeddings_remote(
    const std::vector<std::pair<std::string, std::string>>& id_texts,
    const RemoteConfig& config) {
  require(!id_texts.empty(), "fetch_embeddings_remote: no texts");
  require(config.batch_size >= 1, "fetch_embeddings_remote: batch_size must be >= 1");
  require(config.retries >= 0, "fetch_embeddings_remote: retries must be >= 0");

  std::string api_key;
  if (!config.api_key_env.empty()) {
    const char* key = std::getenv(config.api_key_env.c_str());
    require(key != nullptr && *key != '\0',
            "fetch_embeddings_remote: environment variable " + config.api_key_env + " is not set");
    api_key = key;
  }

  const ParsedUrl url = parse_url(config.endpoint_url);
  httplib::Client client(url.base);
  client.set_connection_timeout(10, 0);
  client.set_read_timeout(30, 0);

  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  EmbeddingStore store;
  const std::size_t n = id_texts.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t end = std::min(n, start + bs);
    nlohmann::json body;
    body["model"] = config.model;
    auto& input = body["input"] = nlohmann::json::array();
    for (std::size_t i = start; i < end; ++i) input.push_back(id_texts[i].second);
    const std::string payload = body.dump();

    httplib::Result res;
    int attempt = 0;
    for (;;) {
      res = client.Post(url.path, headers, payload, "application/json");
      const bool retryable =
          !res || res->status == 429 || (res->status >= 500 && res->status <= 599);
      if (!retryable) break;
      if (attempt >= config.retries) {
        if (res) {
          throw Error("fetch_embeddings_remote: retries exhausted, last status " +
                      std::to_string(res->status));
        }
        throw Error("fetch_embeddings_remote: retries exhausted, transport error");
      }
      std::this_thread::sleep_for(
          std::chrono::milliseconds(config.backoff_base_ms * (1 << attempt)));
      ++attempt;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error("fetch_embeddings_remote: authentication failed (status " +
                  std::to_string(res->status) + ")");
    }
    require(res->status == 200, "fetch_embeddings_remote: unexpected status " +
                                    std::to_string(res->status));

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("fetch_embeddings_remote: bad response json: ") + e.what());
    }
    require(reply.contains("data") && reply["data"].is_array(),
            "fetch_embeddings_remote: response missing data array");

    const std::size_t batch_n = end - start;
    std::vector<Vector> vectors(batch_n);
    std::vector<bool> seen(batch_n, false);
    for (const auto& item : reply["data"]) {
      require(item.contains("index") && item.contains("embedding"),
              "fetch_embeddings_remote: data entry missing index or embedding");
      const std::size_t idx = item["index"].get<std::size_t>();
      require(idx < batch_n, "fetch_embeddings_remote: index out of range");
      require(!seen[idx], "fetch_embeddings_remote: duplicate index in response");
      const auto& emb = item["embedding"];
      require(emb.is_array() && !emb.empty(), "fetch_embeddings_remote: bad embedding entry");
      Vector v(static_cast<Index>(emb.size()));
      for (std::size_t j = 0; j < emb.size(); ++j) {
        v[static_cast<Index>(j)] = emb[j].get<double>();
      }
      vectors[idx] = normalize(v);
      seen[idx] = true;
    }
    for (std::size_t i = 0; i < batch_n; ++i) {
      require(seen[i], "fetch_embeddings_remote: response missing index " + std::to_string(i));
      store.insert(id_texts[start + i].first, std::move(vectors[i]),
                   id_texts[start + i].second);
    }
  }
  return store;
}

} // namespace prefgeom
