// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/cache.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "referi/hash.hpp"
#include "wire.hpp"

namespace fs = std::filesystem;

namespace referi {

namespace {

std::string sanitize_ns(const std::string& ns) {
  std::string out;
  for (char c : ns) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')
      out.push_back(c);
    else
      out.push_back('_');
  }
  if (out.size() > 48) out.resize(48);
  // Disambiguate ids that collide after sanitizing.
  return out + "-" + sha256_hex(ns).substr(0, 8);
}

bool read_file(const fs::path& p, std::string& out) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

void write_atomic(const fs::path& file, const std::string& content) {
  fs::create_directories(file.parent_path());
  if (fs::exists(file)) return;  // already-present key: no-op
  const fs::path tmp = file.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) fs::remove(tmp, ec);
}

}  // namespace

ResponseCache::ResponseCache(fs::path root, bool enabled)
    : root_(std::move(root)), enabled_(enabled) {
  if (enabled_) fs::create_directories(root_);
}

fs::path ResponseCache::namespace_dir(const std::string& ns_id) const {
  return root_ / sanitize_ns(ns_id);
}

void ResponseCache::write_manifest(const std::string& ns_id, const std::string& backend_id,
                                   const std::string& model_id) {
  if (!enabled_) return;
  const fs::path dir = namespace_dir(ns_id);
  fs::create_directories(dir);
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) return;
  nlohmann::json j;
  j["backend_id"] = backend_id;
  j["model_id"] = model_id;
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
}

std::string ResponseCache::lookup_or_call(const std::string& ns_id,
                                          const std::string& key_material, const Op& op,
                                          const Validate& validate) {
  if (!enabled_) return op();

  const std::string key = sha256_hex(ns_id + std::string(1, '\0') + key_material);
  const fs::path file = namespace_dir(ns_id) / "records" / (key + ".json");

  std::promise<std::string> prom;
  std::shared_future<std::string> fut;
  bool leader = false;
  {
    std::unique_lock<std::mutex> lk(mu_);
    ++stats_.lookups;
    auto it = inflight_.find(key);
    if (it != inflight_.end()) {
      fut = it->second;
    } else {
      std::string content;
      if (read_file(file, content)) {
        if (!validate || validate(content)) return content;
        ++stats_.corrupt;
        std::cerr << "[referi] warning: corrupt cache entry " << file << ", refetching\n";
        std::error_code ec;
        fs::remove(file, ec);
      }
      ++stats_.misses;
      leader = true;
      fut = prom.get_future().share();
      inflight_.emplace(key, fut);
    }
  }

  if (!leader) return fut.get();

  std::string response;
  try {
    response = op();
  } catch (...) {
    prom.set_exception(std::current_exception());
    std::unique_lock<std::mutex> lk(mu_);
    inflight_.erase(key);
    throw;
  }
  write_atomic(file, response);
  prom.set_value(response);
  {
    std::unique_lock<std::mutex> lk(mu_);
    ++stats_.stored;
    inflight_.erase(key);
  }
  return response;
}

CacheStats ResponseCache::stats() const {
  std::unique_lock<std::mutex> lk(mu_);
  return stats_;
}

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner,
                               std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  cache_->write_manifest(inner_->id(), inner_->id(), inner_->model_id());
}

namespace {
bool parses(const std::string& body) {
  return nlohmann::json::accept(body);
}
}  // namespace

std::vector<Candidate> CachingBackend::generate(const GenerationRequest& req) {
  const std::string km = wire::generation_key_material(inner_->id(), inner_->model_id(), req);
  const std::string body = cache_->lookup_or_call(
      inner_->id(), km, [&] { return wire::encode_candidates(inner_->generate(req)); }, parses);
  return wire::decode_candidates(body);
}

LikelihoodResponse CachingBackend::score_continuation(const LikelihoodRequest& req) {
  const std::string km = wire::likelihood_key_material(inner_->id(), inner_->model_id(), req);
  const std::string body = cache_->lookup_or_call(
      inner_->id(), km, [&] { return wire::encode_likelihood(inner_->score_continuation(req)); },
      parses);
  return wire::decode_likelihood(body);
}

std::vector<double> CachingBackend::embed(const std::string& text) {
  const std::string km = wire::embed_key_material(inner_->id(), inner_->model_id(), text);
  const std::string body = cache_->lookup_or_call(
      inner_->id(), km, [&] { return wire::encode_embedding(inner_->embed(text)); }, parses);
  return wire::decode_embedding(body);
}

}  // namespace referi
