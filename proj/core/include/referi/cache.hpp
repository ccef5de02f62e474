// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "referi/backend.hpp"

namespace referi {

struct CacheStats {
  std::uint64_t lookups = 0;
  std::uint64_t misses = 0;   // actual backend invocations
  std::uint64_t stored = 0;
  std::uint64_t corrupt = 0;
  std::uint64_t hits() const { return lookups - misses; }
  double hit_rate() const {
    return lookups == 0 ? 0.0 : static_cast<double>(hits()) / static_cast<double>(lookups);
  }
};

/// Content-addressed response store: append-friendly key-value files under
/// one directory, one namespace per backend id. Keys are SHA-256 of
/// (backend id, model id, request bytes). Concurrent identical misses are
/// coalesced into a single backend call, so hit/miss counts are independent
/// of thread schedule. A write of an already-present key is a no-op;
/// corrupt entries are treated as misses with a logged warning.
class ResponseCache {
public:
  using Op = std::function<std::string()>;
  using Validate = std::function<bool(const std::string&)>;

  explicit ResponseCache(std::filesystem::path root, bool enabled = true);

  /// Returns the stored response for the key material, invoking `op` and
  /// persisting its result on a miss. `validate` guards against corrupt
  /// stored bodies. With the cache disabled, `op` runs directly and no
  /// lookup is counted.
  std::string lookup_or_call(const std::string& ns_id, const std::string& key_material,
                             const Op& op, const Validate& validate = nullptr);

  void write_manifest(const std::string& ns_id, const std::string& backend_id,
                      const std::string& model_id);

  CacheStats stats() const;
  bool enabled() const { return enabled_; }
  const std::filesystem::path& root() const { return root_; }

  /// Directory holding a namespace's manifest and records.
  std::filesystem::path namespace_dir(const std::string& ns_id) const;

private:
  std::filesystem::path root_;
  bool enabled_;
  mutable std::mutex mu_;
  CacheStats stats_;
  std::unordered_map<std::string, std::shared_future<std::string>> inflight_;
};

/// Decorator adding the response cache in front of any backend. Capability
/// surface and ids are the inner backend's own.
class CachingBackend final : public Backend {
public:
  CachingBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  std::string model_id() const override { return inner_->model_id(); }
  Capabilities capabilities() const override { return inner_->capabilities(); }

  std::vector<Candidate> generate(const GenerationRequest& req) override;
  LikelihoodResponse score_continuation(const LikelihoodRequest& req) override;
  std::vector<double> embed(const std::string& text) override;

  const ResponseCache& cache() const { return *cache_; }

private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

}  // namespace referi
