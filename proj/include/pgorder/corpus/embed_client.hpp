#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

// <resolv.h> (pulled in by httplib) defines _res as a macro, which breaks Eigen's
// product kernels when both are included in one translation unit.
#ifdef _res
#undef _res
#endif

#include "pgorder/corpus/types.hpp"
#include "pgorder/errors.hpp"

namespace pgo {

inline constexpr const char* kEmbedKeyVariable = "EMBED_API_KEY";

/// Reads the service key from EMBED_API_KEY.
inline std::string credentials_from_env() {
  const char* key = std::getenv(kEmbedKeyVariable);
  if (!key || !*key) throw CredentialError(std::string(kEmbedKeyVariable) + " is not set");
  return key;
}

struct EmbedOptions {
  std::size_t batch_size = 64;
  int max_retries = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  std::size_t expected_dim = 0;            // 0: fixed by the first response
  std::chrono::seconds timeout{30};
};

/// Client for `POST {endpoint}/embed` with body {"texts": [...]} returning
/// {"embeddings": [[...], ...]}. Server errors (5xx) and transport failures
/// are retried with exponential backoff; 401/403 fail immediately.
class EmbeddingClient {
 public:
  EmbeddingClient(std::string endpoint, std::string api_key, EmbedOptions options = {})
      : api_key_(std::move(api_key)), options_(options) {
    if (options_.batch_size == 0) throw ConfigError("embedding batch size must be positive");
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    base_ = endpoint.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  /// One embedding per text, in order. Either every batch succeeds or this throws.
  std::vector<Embedding> fetch(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    if (texts.empty()) return out;
    out.reserve(texts.size());
    std::size_t dim = options_.expected_dim;
    for (std::size_t start = 0; start < texts.size(); start += options_.batch_size) {
      const auto stop = std::min(texts.size(), start + options_.batch_size);
      std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                     texts.begin() + static_cast<std::ptrdiff_t>(stop));
      auto embeddings = post_batch(batch);
      if (embeddings.size() != batch.size()) {
        throw EmbedError("service returned " + std::to_string(embeddings.size()) + " embeddings for " +
                         std::to_string(batch.size()) + " texts");
      }
      for (auto& e : embeddings) {
        if (dim == 0) dim = e.size();
        if (e.size() != dim || dim == 0) {
          throw DimensionMismatch("embedding dimension " + std::to_string(e.size()) + ", expected " +
                                  std::to_string(dim));
        }
        out.push_back(std::move(e));
      }
    }
    return out;
  }

  /// Number of HTTP attempts made by the last `fetch` (for diagnostics and tests).
  [[nodiscard]] int attempts() const { return attempts_; }

 private:
  std::vector<Embedding> post_batch(const std::vector<std::string>& batch) const {
    httplib::Client client(base_);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    const std::string body = nlohmann::json{{"texts", batch}}.dump();

    auto delay = options_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      ++attempts_;
      auto res = client.Post(prefix_ + "/embed", headers, body, "application/json");
      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        throw AuthError("embedding service rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw EmbedError("embedding service returned HTTP " + std::to_string(res->status));
      try {
        return nlohmann::json::parse(res->body).at("embeddings").get<std::vector<Embedding>>();
      } catch (const nlohmann::json::exception& e) {
        throw EmbedError(std::string("malformed embedding response: ") + e.what());
      }
    }
    throw TransportError("embedding request failed after " + std::to_string(options_.max_retries + 1) +
                         " attempts: " + last_error);
  }

  std::string base_;
  std::string prefix_;
  std::string api_key_;
  EmbedOptions options_;
  mutable int attempts_ = 0;
};

inline std::vector<Embedding> fetch_embeddings(const std::vector<std::string>& texts, const std::string& endpoint,
                                               const std::string& api_key, EmbedOptions options = {}) {
  if (texts.empty()) return {};
  return EmbeddingClient(endpoint, api_key, options).fetch(texts);
}

}  // namespace pgo
