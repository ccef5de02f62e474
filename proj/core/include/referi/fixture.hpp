// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "referi/backend.hpp"

namespace referi {

/// Replay backend over a directory of request-hash -> response-body records
/// plus a manifest naming the recorded backend and model ids. The layout is
/// exactly what ResponseCache persists, so recording a run with the cache
/// enabled produces a replayable fixture. Any unrecorded request is a
/// permanent error, which guards tests against accidental live calls.
class FixtureBackend final : public Backend {
public:
  explicit FixtureBackend(std::filesystem::path dir);

  std::string id() const override { return backend_id_; }
  std::string model_id() const override { return model_id_; }
  Capabilities capabilities() const override {
    return Capabilities{true, true, true, false, true};
  }

  std::vector<Candidate> generate(const GenerationRequest& req) override;
  LikelihoodResponse score_continuation(const LikelihoodRequest& req) override;
  std::vector<double> embed(const std::string& text) override;

private:
  std::string load_record(const std::string& key_material) const;

  std::filesystem::path dir_;
  std::string backend_id_;
  std::string model_id_;
};

}  // namespace referi
