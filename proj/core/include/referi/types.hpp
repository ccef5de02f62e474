// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace referi {

/// Thrown when a value violates a domain invariant (empty text, positive
/// logprob, bad index, ...).
class ValueError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One few-shot demonstration: a (query, answer) pair. Both fields must be
/// non-empty after whitespace trimming.
struct Example {
  std::string query;
  std::string answer;
};

/// Validating constructor for Example.
Example make_example(std::string query, std::string answer);

/// Ordered list of demonstrations; order is stable and significant for
/// prompt rendering. Always holds at least one example.
class FewShotSet {
public:
  explicit FewShotSet(std::vector<Example> examples);

  const std::vector<Example>& examples() const { return examples_; }
  const Example& at(std::size_t i) const;
  std::size_t size() const { return examples_.size(); }

private:
  std::vector<Example> examples_;
};

/// Per-token likelihood in natural-log units as reported by an estimation
/// backend. `top_alternatives`, when present, is sorted by logprob
/// descending; the scored token is not required to be on top (sampling may
/// go off-argmax).
struct TokenScore {
  std::string token;
  double logprob = 0.0;
  std::vector<std::pair<std::string, double>> top_alternatives;
};

/// Validates logprob <= 0 and alternative ordering.
void validate_token_score(const TokenScore& ts);

/// One sampled response for the test query. `gen_token_logprobs` is present
/// only when the generation backend reported per-token logprobs (usable for
/// forward scoring when the estimation model equals the generation model).
struct Candidate {
  std::string response;
  int index = 0;
  std::optional<std::vector<TokenScore>> gen_token_logprobs;
};

Candidate make_candidate(std::string response, int index,
                         std::optional<std::vector<TokenScore>> gen_logprobs = std::nullopt);

/// Conditioned/unconditioned log-likelihood of one few-shot answer, the raw
/// material of the backward score.
struct PerExampleBackward {
  int example_index = 0;
  double conditioned_logprob = 0.0;
  double unconditioned_logprob = 0.0;
};

/// Per-candidate score decomposition. `final` always equals
/// `forward - <selected backward variant>` in plain double arithmetic;
/// both backward fields are absent only in the forward-only ablation.
struct ScoreBreakdown {
  double forward = 0.0;
  std::optional<double> backward_full;
  std::optional<double> backward_approx;
  double final = 0.0;
  std::vector<PerExampleBackward> per_example_backward;
  std::vector<TokenScore> forward_tokens;
  /// Token-level conditioned terms per example, retained by full-backward
  /// runs so selections stay auditable (and attributable).
  std::vector<std::pair<int, std::vector<TokenScore>>> backward_tokens;

  /// The backward value that entered `final`, if any.
  std::optional<double> backward_used() const {
    if (backward_full) return backward_full;
    return backward_approx;
  }
};

/// Outcome of a selection run. `breakdowns` is one per candidate for
/// score-based selectors and empty for score-free ones (random, majority
/// vote, prompt judge).
struct SelectionResult {
  int selected_index = 0;
  std::vector<ScoreBreakdown> breakdowns;
  bool tie_broken = false;
  std::map<std::string, std::string> metadata;
};

/// Checks SelectionResult invariants (valid index, maximal final, tie flag).
void validate_selection(const SelectionResult& result, std::size_t num_candidates);

/// Trims ASCII whitespace from both ends.
std::string trim(const std::string& s);

/// Canonical answer form used for correctness judgment and majority voting:
/// trim, lowercase, collapse internal whitespace runs to single spaces.
std::string canonical_answer(const std::string& s);

}  // namespace referi
