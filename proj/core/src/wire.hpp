// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0
//
// Canonical JSON encoding of backend requests and responses. Request
// encodings double as cache/fixture key material, so field sets and types
// here are part of the on-disk format.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "referi/backend.hpp"
#include "referi/types.hpp"

namespace referi::wire {

nlohmann::json token_score_to_json(const TokenScore& ts);
TokenScore token_score_from_json(const nlohmann::json& j);

nlohmann::json candidate_to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j);

nlohmann::json likelihood_response_to_json(const LikelihoodResponse& r);
LikelihoodResponse likelihood_response_from_json(const nlohmann::json& j);

// Key material: canonical (sorted-key) JSON naming the backend, model, op
// and full request. Any field change changes the key.
std::string generation_key_material(const std::string& backend_id, const std::string& model_id,
                                    const GenerationRequest& req);
std::string likelihood_key_material(const std::string& backend_id, const std::string& model_id,
                                    const LikelihoodRequest& req);
std::string embed_key_material(const std::string& backend_id, const std::string& model_id,
                               const std::string& text);

std::string encode_candidates(const std::vector<Candidate>& candidates);
std::vector<Candidate> decode_candidates(const std::string& body);

std::string encode_likelihood(const LikelihoodResponse& resp);
LikelihoodResponse decode_likelihood(const std::string& body);

std::string encode_embedding(const std::vector<double>& vec);
std::vector<double> decode_embedding(const std::string& body);

}  // namespace referi::wire
