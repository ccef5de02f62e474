// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "referi/types.hpp"

namespace referi {

/// Forward confidence score: the raw sum of continuation token logprobs.
/// No length normalization by default; `length_normalize` divides by the
/// token count when explicitly requested.
/// Throws ValueError on an empty sequence or any non-finite logprob.
double forward_score(std::span<const TokenScore> token_logprobs, bool length_normalize = false);

/// Full backward consistency score: the mean over examples of
/// (conditioned - unconditioned) log-likelihood gain. Pairs are
/// (conditioned_logprob, unconditioned_logprob).
double backward_full_score(std::span<const std::pair<double, double>> per_example);

/// Convenience overload over the engine's per-example records.
double backward_full_score(std::span<const PerExampleBackward> per_example);

/// Approximated backward score from the single most relevant example:
/// conditioned - unconditioned, with no 1/N factor.
double backward_approx_score(double conditioned_logprob, double unconditioned_logprob);

/// Final selection score: forward - backward.
double final_score(double forward, double backward);

struct ArgmaxSelection {
  int index = 0;
  bool tie_broken = false;
};

/// Smallest index attaining the maximum; tie_broken is true iff the maximum
/// is attained more than once. Throws on an empty list or non-finite values.
ArgmaxSelection select_argmax(std::span<const double> finals);

/// Mean top-1 vs top-2 probability gap over answer-span tokens. Each token
/// must carry at least two top_alternatives. This is the one score defined
/// on probabilities rather than logprobs.
double cotwp_score(std::span<const TokenScore> answer_token_scores);

/// Applies a per-token floor to incoming logprobs, turning -inf from
/// hard-zero tokens into `floor`. NaN still rejects. Used only when a lossy
/// backend is declared; scoring otherwise refuses non-finite values.
std::vector<TokenScore> floor_token_scores(std::vector<TokenScore> tokens, double floor);

}  // namespace referi
