// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "referi/types.hpp"

namespace referi {

/// Token-level contrast of backward conditioned logprobs between the
/// correct and incorrect candidate groups, over the few-shot example
/// tokens. Tokens where the correct group scores lower are the "negative"
/// class (rendered red); the rest are "positive" (blue). Only the top 60%
/// of tokens by absolute difference are highlighted.
struct TokenAttribution {
  std::vector<std::string> tokens;
  std::vector<double> difference;  // mean(correct) - mean(incorrect), per token
  std::vector<bool> mask;          // ceil(0.6 * T) tokens, ties by position
  double red_ratio = 0.0;          // masked tokens with difference < 0, over T
};

/// The highlight rule alone: mask covers ceil(0.6*T) positions chosen by
/// descending absolute difference, ties broken by earlier position.
std::vector<bool> attribution_mask(const std::vector<double>& differences);

/// per_candidate_tokens[k] lists (token, conditioned logprob) concatenated
/// over all few-shot examples for candidate k; token sequences must align
/// across candidates. Requires at least one correct and one incorrect
/// candidate.
TokenAttribution token_attribution(
    const std::vector<std::vector<std::pair<std::string, double>>>& per_candidate_tokens,
    const std::vector<bool>& correct);

std::string render_attribution_text(const TokenAttribution& att);
std::string render_attribution_html(const TokenAttribution& att, const std::string& title);

}  // namespace referi
