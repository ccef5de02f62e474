// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "wire.hpp"

namespace referi::wire {

using nlohmann::json;

json token_score_to_json(const TokenScore& ts) {
  json j;
  j["token"] = ts.token;
  j["logprob"] = ts.logprob;
  if (!ts.top_alternatives.empty()) {
    json alts = json::array();
    for (const auto& [tok, lp] : ts.top_alternatives) alts.push_back(json::array({tok, lp}));
    j["top_alternatives"] = std::move(alts);
  }
  return j;
}

TokenScore token_score_from_json(const json& j) {
  TokenScore ts;
  ts.token = j.at("token").get<std::string>();
  ts.logprob = j.at("logprob").get<double>();
  if (j.contains("top_alternatives")) {
    for (const auto& alt : j.at("top_alternatives"))
      ts.top_alternatives.emplace_back(alt.at(0).get<std::string>(), alt.at(1).get<double>());
  }
  return ts;
}

json candidate_to_json(const Candidate& c) {
  json j;
  j["response"] = c.response;
  j["index"] = c.index;
  if (c.gen_token_logprobs) {
    json toks = json::array();
    for (const auto& ts : *c.gen_token_logprobs) toks.push_back(token_score_to_json(ts));
    j["gen_token_logprobs"] = std::move(toks);
  }
  return j;
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.response = j.at("response").get<std::string>();
  c.index = j.at("index").get<int>();
  if (j.contains("gen_token_logprobs")) {
    std::vector<TokenScore> toks;
    for (const auto& t : j.at("gen_token_logprobs")) toks.push_back(token_score_from_json(t));
    c.gen_token_logprobs = std::move(toks);
  }
  return c;
}

json likelihood_response_to_json(const LikelihoodResponse& r) {
  json j;
  json toks = json::array();
  for (const auto& ts : r.token_scores) toks.push_back(token_score_to_json(ts));
  j["token_scores"] = std::move(toks);
  j["tokenizer_id"] = r.tokenizer_id;
  j["truncated"] = r.truncated;
  return j;
}

LikelihoodResponse likelihood_response_from_json(const json& j) {
  LikelihoodResponse r;
  for (const auto& t : j.at("token_scores")) r.token_scores.push_back(token_score_from_json(t));
  r.tokenizer_id = j.at("tokenizer_id").get<std::string>();
  r.truncated = j.at("truncated").get<bool>();
  return r;
}

namespace {
json request_header(const std::string& backend_id, const std::string& model_id,
                    const std::string& op) {
  json j;
  j["backend"] = backend_id;
  j["model"] = model_id;
  j["op"] = op;
  return j;
}
}  // namespace

std::string generation_key_material(const std::string& backend_id, const std::string& model_id,
                                    const GenerationRequest& req) {
  json j = request_header(backend_id, model_id, "generate");
  j["context"] = req.context;
  j["num_samples"] = req.num_samples;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens;
  if (req.seed) j["seed"] = *req.seed;
  j["want_logprobs"] = req.want_logprobs;
  return j.dump();
}

std::string likelihood_key_material(const std::string& backend_id, const std::string& model_id,
                                    const LikelihoodRequest& req) {
  json j = request_header(backend_id, model_id, "score");
  j["context"] = req.context;
  j["continuation"] = req.continuation;
  j["top_k_alternatives"] = req.top_k_alternatives;
  return j.dump();
}

std::string embed_key_material(const std::string& backend_id, const std::string& model_id,
                               const std::string& text) {
  json j = request_header(backend_id, model_id, "embed");
  j["text"] = text;
  return j.dump();
}

std::string encode_candidates(const std::vector<Candidate>& candidates) {
  json arr = json::array();
  for (const auto& c : candidates) arr.push_back(candidate_to_json(c));
  return arr.dump();
}

std::vector<Candidate> decode_candidates(const std::string& body) {
  json arr = json::parse(body);
  std::vector<Candidate> out;
  for (const auto& j : arr) out.push_back(candidate_from_json(j));
  return out;
}

std::string encode_likelihood(const LikelihoodResponse& resp) {
  return likelihood_response_to_json(resp).dump();
}

LikelihoodResponse decode_likelihood(const std::string& body) {
  return likelihood_response_from_json(json::parse(body));
}

std::string encode_embedding(const std::vector<double>& vec) {
  return json(vec).dump();
}

std::vector<double> decode_embedding(const std::string& body) {
  return json::parse(body).get<std::vector<double>>();
}

}  // namespace referi::wire
