// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/backend.hpp"

#include <cctype>
#include <cmath>

#include "referi/hash.hpp"

namespace referi {

void validate_generation_request(const GenerationRequest& req) {
  if (req.num_samples < 1) throw ValueError("num_samples must be >= 1");
  if (req.max_tokens < 1) throw ValueError("max_tokens must be >= 1");
  if (!(req.temperature >= 0.0)) throw ValueError("temperature must be >= 0");
}

void validate_likelihood_request(const LikelihoodRequest& req) {
  if (req.continuation.empty()) throw ValueError("continuation is empty");
  if (req.top_k_alternatives < 0) throw ValueError("top_k_alternatives must be >= 0");
}

void validate_likelihood_response(const LikelihoodResponse& resp,
                                  const std::string& continuation) {
  std::string joined;
  for (const auto& ts : resp.token_scores) joined += ts.token;
  if (joined != continuation)
    throw ValueError("token texts do not reconstruct the continuation");
}

std::vector<Candidate> Backend::generate(const GenerationRequest&) {
  throw PermanentError("backend '" + id() + "' has no generation capability");
}

LikelihoodResponse Backend::score_continuation(const LikelihoodRequest&) {
  throw PermanentError("backend '" + id() + "' has no echo-scoring support");
}

std::vector<double> Backend::embed(const std::string&) {
  throw PermanentError("backend '" + id() + "' has no embedding capability");
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt,
                                        std::mt19937_64& rng) {
  double cap = static_cast<double>(policy.base.count());
  for (int i = 1; i < attempt; ++i) cap *= policy.factor;
  std::uniform_real_distribution<double> dist(0.0, cap);
  return std::chrono::milliseconds(static_cast<long long>(dist(rng)));
}

std::vector<std::string> whitespace_tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::vector<double> hashing_embed(const std::string& text, std::size_t dim) {
  if (text.empty()) throw ValueError("cannot embed empty text");
  if (dim == 0) throw ValueError("embedding dimension must be >= 1");
  std::vector<double> vec(dim, 0.0);
  for (const auto& raw : whitespace_tokenize(text)) {
    std::string word;
    for (char c : raw)
      if (!std::isspace(static_cast<unsigned char>(c)))
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (word.empty()) continue;
    const std::uint64_t h = splitmix64(fnv1a64(word));
    const std::size_t slot = static_cast<std::size_t>(h % dim);
    const double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
    vec[slot] += sign;
  }
  double norm = 0.0;
  for (double v : vec) norm += v * v;
  if (norm == 0.0) {
    // Degenerate all-whitespace-ish input; fall back to a stable unit vector.
    vec[splitmix64(fnv1a64(text)) % dim] = 1.0;
    return vec;
  }
  norm = std::sqrt(norm);
  for (double& v : vec) v /= norm;
  return vec;
}

UniformBackend::UniformBackend(int vocab) : vocab_(vocab) {
  if (vocab_ < 2) throw ValueError("uniform backend vocabulary must be >= 2");
}

LikelihoodResponse UniformBackend::score_continuation(const LikelihoodRequest& req) {
  validate_likelihood_request(req);
  const double lp = -std::log(static_cast<double>(vocab_));
  LikelihoodResponse resp;
  resp.tokenizer_id = "whitespace";
  for (const auto& tok : whitespace_tokenize(req.continuation)) {
    TokenScore ts;
    ts.token = tok;
    ts.logprob = lp;
    if (req.top_k_alternatives >= 2) {
      for (int a = 0; a < req.top_k_alternatives; ++a)
        ts.top_alternatives.emplace_back("alt" + std::to_string(a), lp);
    }
    resp.token_scores.push_back(std::move(ts));
  }
  validate_likelihood_response(resp, req.continuation);
  return resp;
}

}  // namespace referi
