// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>

#include "referi/backend.hpp"

namespace referi {

/// OpenAI-compatible HTTP access.
///
/// Generation: POST {base}/v1/completions (or /v1/chat/completions when
/// chat_generation is set) with model, prompt, max_tokens, temperature, n,
/// seed and optional logprobs. Scoring: POST {base}/v1/completions with
/// echo=true, max_tokens=0 and logprobs depth, reading the continuation
/// span off the returned text offsets. Embedding: POST {base}/v1/embeddings.
///
/// Authentication uses a bearer token from REFERI_API_KEY; the base URL
/// comes from REFERI_BASE_URL or explicit configuration. Retryable
/// failures (timeouts, 408/429/5xx) follow the bounded-backoff policy;
/// other HTTP errors are permanent.
struct HttpBackendConfig {
  std::string base_url;  // e.g. "https://api.openai.com" or "http://127.0.0.1:8080"
  std::string model;
  std::string api_key;             // empty: read REFERI_API_KEY
  bool chat_generation = false;    // generate via /v1/chat/completions
  bool completion_scoring = true;  // declared echo-scoring support
  /// Some providers document logprobs in a base other than e; values are
  /// converted to natural log on receipt.
  double logprob_base = 0.0;  // 0 or e: already natural
  int max_concurrency = 8;
  int timeout_sec = 120;
  RetryPolicy retry;
  /// Window guard in characters; contexts beyond it either truncate from
  /// the left (allow_truncation) or fail.
  std::optional<std::size_t> max_context_chars;
  bool allow_truncation = false;
};

std::shared_ptr<Backend> make_http_backend(HttpBackendConfig config);

/// Parses "http(s)://host[:port][/prefix]?model=...&chat=1&score=0&..."
/// into a config. Query parameters: model, chat, score, base (logprob
/// base), window, truncate, concurrency, timeout.
HttpBackendConfig parse_http_backend_url(const std::string& url);

}  // namespace referi
