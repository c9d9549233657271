#pragma once

#include <string>
#include <utility>
#include <vector>

#include "prefgeom/ingest.hpp"

namespace prefgeom {

struct RemoteConfig {
  std::string endpoint_url;  // e.g. https://host:port/v1/embeddings
  std::string model;
  std::string api_key_env;   // name of the env var holding the key; "" = no auth
  int batch_size = 64;
  int retries = 3;           // extra attempts after the first
  int backoff_base_ms = 100; // doubled per retry
};

// Fetches embeddings for (id, text) rows. Requests are batched; each request
// body is {"model": ..., "input": [texts]} and the response must be
// {"data": [{"index": i, "embedding": [...]}]} with one entry per input,
// assembled by index. Retryable statuses (429, 5xx) and transport errors get
// exponential backoff. Vectors are unit-normalized on ingest. The API key is
// read from the named environment variable and never logged or echoed.
EmbeddingStore fetch_embeddings_remote(
    const std::vector<std::pair<std::string, std::string>>& id_texts,
    const RemoteConfig& config);

} // namespace prefgeom
