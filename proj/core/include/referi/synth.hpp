// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "referi/backend.hpp"
#include "referi/types.hpp"

namespace referi::synth {

struct SynthQuery {
  std::string id;
  std::string query;
  std::string gold;
};

/// Fully deterministic synthetic task + noisy scoring model. The backend
/// spec assigns candidate scores as a base plus a correctness bonus `delta`
/// on the backward channel plus zero-mean Gaussian noise `sigma` on the
/// forward channel; every draw is a pure function of (seed, query id,
/// candidate index), so runs replay bit-for-bit and expected accuracies can
/// be computed by direct simulation of the score distributions alone.
struct SynthSpec {
  std::string kind;  // "arithmetic" | "mapping"
  std::uint64_t seed = 0;
  int shots = 4;
  int size = 100;
  double sigma = 0.0;
  double delta = 0.0;
  double p_correct = 0.4;
  double forward_base = -10.0;
  double backward_base = -1.0;
  /// When set, the estimator ignores context entirely: conditioned and
  /// unconditioned backward logprobs coincide and all gains are zero.
  bool context_free = false;
  std::vector<Example> few_shot;
  std::vector<SynthQuery> dataset;
};

/// Builds the task content (few-shot examples, dataset rows) for a kind.
SynthSpec make_synth_spec(const std::string& kind, int size, int shots, double sigma,
                          double delta, double p_correct, std::uint64_t seed);

/// Writes few_shot.jsonl, dataset.jsonl and backend.json into `dir`.
void write_synth_task(const SynthSpec& spec, const std::filesystem::path& dir);

SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string synth_spec_to_json(const SynthSpec& spec);

// --- the constructed noise channels (shared with the accuracy simulation) ---

/// Uniform draw in (0,1] keyed by (seed, tag, id, k).
double noise_unit(std::uint64_t seed, const std::string& tag, const std::string& id, int k);
/// Whether candidate k for query id is correct under p_correct.
bool candidate_correct(const SynthSpec& spec, const std::string& id, int k);
/// sigma-scaled zero-mean Gaussian (Box-Muller over the keyed uniforms).
double forward_noise(const SynthSpec& spec, const std::string& id, int k);
/// Top-1 vs top-2 probability gap attached to answer tokens.
double answer_gap(const SynthSpec& spec, const std::string& id, int k);
/// Unconditioned backward base for a few-shot answer, in [-4, -3].
double uncond_base(const SynthSpec& spec, const std::string& answer);
/// The answer string candidate k asserts (gold when correct).
std::string candidate_answer(const SynthSpec& spec, const SynthQuery& q, int k);
/// The full response text of candidate k.
std::string candidate_text(const SynthSpec& spec, const SynthQuery& q, int k);
/// Total forward logprob of candidate k: min(0, forward_base + noise).
double forward_logprob(const SynthSpec& spec, const std::string& id, int k);
/// Backward gain (conditioned - unconditioned) of candidate k:
/// backward_base - delta * correct, or 0 in context-free mode.
double backward_gain(const SynthSpec& spec, const std::string& id, int k);

/// Backend realizing the spec: generates the candidate pool, scores forward
/// and backward requests per the noise model, answers judge prompts with
/// the first correct candidate's position, and embeds via feature hashing.
class SynthBackend final : public Backend {
public:
  explicit SynthBackend(SynthSpec spec);

  std::string id() const override;
  std::string model_id() const override { return "synth-noise-v1"; }
  Capabilities capabilities() const override {
    return Capabilities{true, true, true, false, true};
  }

  std::vector<Candidate> generate(const GenerationRequest& req) override;
  LikelihoodResponse score_continuation(const LikelihoodRequest& req) override;
  std::vector<double> embed(const std::string& text) override;

  const SynthSpec& spec() const { return spec_; }

private:
  const SynthQuery* find_query_by_id(const std::string& id) const;
  const SynthQuery* last_query_in(const std::string& text) const;

  SynthSpec spec_;
};

}  // namespace referi::synth
