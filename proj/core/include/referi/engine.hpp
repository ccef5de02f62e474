// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "referi/backend.hpp"
#include "referi/prompt.hpp"
#include "referi/types.hpp"

namespace referi {

/// Which backward variant enters the final score. The engine never mixes
/// variants within one run.
enum class BackwardMode { Full, Approx, None, BackwardOnly };

std::string to_string(BackwardMode mode);
BackwardMode backward_mode_from_string(const std::string& s);

struct EngineConfig {
  BackwardMode backward_mode = BackwardMode::Approx;
  int num_candidates = 5;  // K
  double temperature = 1.0;
  int max_tokens = 512;
  DemonstrationTemplate prompt_template = default_template();
  /// Answer span: the final contiguous span following the last occurrence
  /// of this marker.
  std::string answer_marker = "Answer:";
  /// Enable only for lossy backends; clamps -inf token logprobs.
  std::optional<double> logprob_floor;
  std::optional<std::uint64_t> seed;
  bool length_normalize_forward = false;
  bool reuse_header_in_backward = true;
  /// Reuse generation-time logprobs for the forward score; honored only
  /// when the estimation backend is declared identical to the generator.
  bool use_generation_logprobs = false;
  bool want_generation_logprobs = false;
  int concurrency = 8;
  /// Retain per-token backward terms in breakdowns (full mode), making
  /// selections auditable and token attribution possible.
  bool retain_backward_tokens = true;
};

struct TaskInstance {
  FewShotSet few_shot;
  std::string test_query;
  /// Evaluation-only; never enters any prompt or scoring context.
  std::optional<std::string> gold_answer;
};

struct Backends {
  std::shared_ptr<Backend> generator;
  std::shared_ptr<Backend> estimator;
  std::shared_ptr<Backend> embedder;  // required for BackwardMode::Approx
};

/// Structured failure naming the phase (generate, retrieval, forward,
/// backward, cotwp, judge) and the candidate involved, or -1.
class EngineError : public std::runtime_error {
public:
  EngineError(std::string phase, int candidate, const std::string& message)
      : std::runtime_error("[" + phase + (candidate >= 0 ? "/candidate " + std::to_string(candidate)
                                                         : std::string()) +
                           "] " + message),
        phase_(std::move(phase)),
        candidate_(candidate) {}
  const std::string& phase() const { return phase_; }
  int candidate() const { return candidate_; }

private:
  std::string phase_;
  int candidate_;
};

/// Samples K candidates for the task's forward context.
std::vector<Candidate> generate_candidates(const TaskInstance& task, const EngineConfig& cfg,
                                           Backend& generator);

/// The full procedure: generate K candidates (unless supplied), score each
/// forward and backward per the configured mode, combine, select. Every
/// breakdown is retained in the result.
SelectionResult run_referi(const TaskInstance& task, const EngineConfig& cfg,
                           const Backends& backends, std::vector<Candidate> candidates = {},
                           const std::vector<std::vector<double>>* example_embeddings = nullptr);

/// Ablation: forward confidence only; final == forward.
SelectionResult run_forward_only(const TaskInstance& task, const EngineConfig& cfg,
                                 const Backends& backends,
                                 std::vector<Candidate> candidates = {});

/// Uniform seeded choice; breakdowns carry no scores.
SelectionResult run_random_baseline(const TaskInstance& task, const EngineConfig& cfg,
                                    const Backends& backends, std::uint64_t seed,
                                    std::vector<Candidate> candidates = {});

/// Most frequent extracted answer wins; the selected index is the first
/// candidate carrying the winning answer. Count ties break to the answer
/// occurring first.
SelectionResult run_majority_vote(const TaskInstance& task, const EngineConfig& cfg,
                                  const Backends& backends,
                                  std::vector<Candidate> candidates = {});

/// Token-confidence-gap baseline: mean top-1 minus top-2 probability over
/// answer-span tokens under the few-shot-conditioned context.
SelectionResult run_cotwp_baseline(const TaskInstance& task, const EngineConfig& cfg,
                                   const Backends& backends,
                                   std::vector<Candidate> candidates = {});

/// Prompt-judge baseline: the generator is asked, at temperature 0, to pick
/// the best response index.
SelectionResult run_usc_baseline(const TaskInstance& task, const EngineConfig& cfg,
                                 const Backends& backends,
                                 std::vector<Candidate> candidates = {});

struct ExtractedAnswer {
  std::string text;   // trimmed span
  std::size_t begin;  // char range of the span in the response (untrimmed)
  std::size_t end;
};

/// The final contiguous span following the last occurrence of the marker.
std::optional<ExtractedAnswer> extract_answer(const std::string& response,
                                              const std::string& marker);

/// Renders the judge prompt listing all candidates.
std::string usc_judge_prompt(const std::string& test_query, std::span<const Candidate> candidates);

/// Lenient index extraction: the first integer in the judge output.
/// Out-of-range or absent integers are a parse failure (nullopt).
std::optional<int> parse_judge_index(const std::string& output, int num_candidates);

}  // namespace referi
