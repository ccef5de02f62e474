// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "referi/types.hpp"

namespace referi {

/// Base class for backend failures.
class BackendError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual bool retryable() const { return false; }
};

/// Transient failure (transport, rate limit, 5xx). Subject to retry policy.
class RetryableError : public BackendError {
public:
  using BackendError::BackendError;
  bool retryable() const override { return true; }
};

/// Hard failure (missing capability, bad request, unrecorded fixture).
/// Never retried.
class PermanentError : public BackendError {
public:
  using BackendError::BackendError;
};

/// Request for K sampled candidates given a fully rendered context.
struct GenerationRequest {
  std::string context;
  int num_samples = 1;           // K >= 1
  double temperature = 1.0;      // >= 0
  int max_tokens = 512;          // >= 1
  std::optional<std::uint64_t> seed;
  bool want_logprobs = false;
};

void validate_generation_request(const GenerationRequest& req);

/// Request for per-token logprobs of `continuation` given `context`.
/// top_k_alternatives >= 2 is required by the token-confidence-gap baseline.
struct LikelihoodRequest {
  std::string context;
  std::string continuation;
  int top_k_alternatives = 0;
};

void validate_likelihood_request(const LikelihoodRequest& req);

/// Token scores covering exactly the continuation: concatenating the token
/// texts reconstructs the continuation byte-for-byte.
struct LikelihoodResponse {
  std::vector<TokenScore> token_scores;
  std::string tokenizer_id;
  bool truncated = false;
};

/// Verifies the detokenization round-trip invariant.
void validate_likelihood_response(const LikelihoodResponse& resp, const std::string& continuation);

struct Capabilities {
  bool generation = false;
  bool scoring = false;        // continuation likelihood estimation
  bool embedding = false;
  bool chat_scoring = false;   // can score a continuation as an assistant prefix
  bool deterministic = false;  // replayable byte-for-byte (oracle, fixture, synthetic)
};

/// Pluggable model access. A backend declares which of the three
/// capabilities it implements; default implementations report the
/// capability as missing. All logprobs are natural-log; backends speaking a
/// different base must convert before returning.
class Backend {
public:
  virtual ~Backend() = default;

  virtual std::string id() const = 0;
  virtual std::string model_id() const = 0;
  virtual Capabilities capabilities() const = 0;

  virtual std::vector<Candidate> generate(const GenerationRequest& req);
  virtual LikelihoodResponse score_continuation(const LikelihoodRequest& req);
  virtual std::vector<double> embed(const std::string& text);
};

/// Bounded exponential backoff with full jitter: attempt n sleeps a uniform
/// draw from [0, base * factor^(n-1)]. Retryable errors only; permanent
/// errors surface immediately.
struct RetryPolicy {
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  int max_attempts = 5;
};

/// Computes the jittered delay before retry attempt `attempt` (1-based count
/// of failures so far). Exposed for tests.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, std::mt19937_64& rng);

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Runs `op` under the retry policy. `sleep` is injectable for tests; the
/// default sleeps on the calling thread.
template <typename F>
auto with_retry(const RetryPolicy& policy, F&& op, SleepFn sleep = nullptr,
                std::uint64_t jitter_seed = std::random_device{}())
    -> decltype(op()) {
  if (!sleep) sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::mt19937_64 rng(jitter_seed);
  int attempt = 0;
  for (;;) {
    try {
      return op();
    } catch (const BackendError& e) {
      if (!e.retryable()) throw;
      ++attempt;
      if (attempt >= policy.max_attempts) {
        throw RetryableError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                             " attempts)");
      }
      sleep(backoff_delay(policy, attempt, rng));
    }
  }
}

/// Deterministic feature-hashing embedder: words are hashed into a
/// fixed-dimension vector, L2-normalized. Identical text always maps to the
/// identical vector; no model call involved.
std::vector<double> hashing_embed(const std::string& text, std::size_t dim);

/// Backend exposing only the hashing embedder.
class HashingEmbedderBackend final : public Backend {
public:
  explicit HashingEmbedderBackend(std::size_t dim = 64) : dim_(dim) {}
  std::string id() const override { return "hash-embedder:" + std::to_string(dim_); }
  std::string model_id() const override { return "feature-hash-" + std::to_string(dim_); }
  Capabilities capabilities() const override {
    return Capabilities{false, false, true, false, true};
  }
  std::vector<double> embed(const std::string& text) override {
    return hashing_embed(text, dim_);
  }

private:
  std::size_t dim_;
};

/// Mock estimator assigning every token logprob ln(1/V) over a V-symbol
/// vocabulary. Tokenizes on whitespace boundaries (whitespace sticks to the
/// following token so the round-trip is exact).
class UniformBackend final : public Backend {
public:
  explicit UniformBackend(int vocab = 8);
  std::string id() const override { return "uniform:" + std::to_string(vocab_); }
  std::string model_id() const override { return "uniform-" + std::to_string(vocab_); }
  Capabilities capabilities() const override {
    return Capabilities{false, true, false, false, true};
  }
  LikelihoodResponse score_continuation(const LikelihoodRequest& req) override;

private:
  int vocab_;
};

/// Splits text into tokens such that concatenation reproduces the input:
/// each token is a maximal run of whitespace followed by a maximal run of
/// non-whitespace (a leading non-whitespace run forms the first token).
std::vector<std::string> whitespace_tokenize(const std::string& text);

}  // namespace referi
