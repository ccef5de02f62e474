// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/fixture.hpp"

#include <fstream>
#include <sstream>

#include "referi/hash.hpp"
#include "wire.hpp"

namespace fs = std::filesystem;

namespace referi {

FixtureBackend::FixtureBackend(fs::path dir) : dir_(std::move(dir)) {
  const fs::path manifest = dir_ / "manifest.json";
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw PermanentError("fixture manifest not found: " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
    backend_id_ = j.at("backend_id").get<std::string>();
    model_id_ = j.at("model_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw PermanentError("fixture manifest unreadable: " + std::string(e.what()));
  }
}

std::string FixtureBackend::load_record(const std::string& key_material) const {
  const std::string key = sha256_hex(backend_id_ + std::string(1, '\0') + key_material);
  const fs::path file = dir_ / "records" / (key + ".json");
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw PermanentError("fixture '" + dir_.string() + "' has no record for request " + key);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Candidate> FixtureBackend::generate(const GenerationRequest& req) {
  validate_generation_request(req);
  return wire::decode_candidates(
      load_record(wire::generation_key_material(backend_id_, model_id_, req)));
}

LikelihoodResponse FixtureBackend::score_continuation(const LikelihoodRequest& req) {
  validate_likelihood_request(req);
  return wire::decode_likelihood(
      load_record(wire::likelihood_key_material(backend_id_, model_id_, req)));
}

std::vector<double> FixtureBackend::embed(const std::string& text) {
  if (text.empty()) throw ValueError("cannot embed empty text");
  return wire::decode_embedding(load_record(wire::embed_key_material(backend_id_, model_id_, text)));
}

}  // namespace referi
