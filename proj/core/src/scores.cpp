// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/scores.hpp"

#include <cmath>

namespace referi {

double forward_score(std::span<const TokenScore> token_logprobs, bool length_normalize) {
  if (token_logprobs.empty()) throw ValueError("empty response");
  double sum = 0.0;
  for (const auto& ts : token_logprobs) {
    if (!std::isfinite(ts.logprob)) throw ValueError("non-finite logprob");
    sum += ts.logprob;
  }
  if (length_normalize) sum /= static_cast<double>(token_logprobs.size());
  return sum;
}

double backward_full_score(std::span<const std::pair<double, double>> per_example) {
  if (per_example.empty()) throw ValueError("empty per-example list");
  double sum = 0.0;
  for (const auto& [cond, uncond] : per_example) {
    if (!std::isfinite(cond) || !std::isfinite(uncond))
      throw ValueError("non-finite logprob");
    sum += cond - uncond;
  }
  return sum / static_cast<double>(per_example.size());
}

double backward_full_score(std::span<const PerExampleBackward> per_example) {
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(per_example.size());
  for (const auto& pe : per_example)
    pairs.emplace_back(pe.conditioned_logprob, pe.unconditioned_logprob);
  return backward_full_score(std::span<const std::pair<double, double>>(pairs));
}

double backward_approx_score(double conditioned_logprob, double unconditioned_logprob) {
  if (!std::isfinite(conditioned_logprob) || !std::isfinite(unconditioned_logprob))
    throw ValueError("non-finite logprob");
  return conditioned_logprob - unconditioned_logprob;
}

double final_score(double forward, double backward) {
  if (!std::isfinite(forward) || !std::isfinite(backward))
    throw ValueError("non-finite score");
  return forward - backward;
}

ArgmaxSelection select_argmax(std::span<const double> finals) {
  if (finals.empty()) throw ValueError("empty score list");
  for (double v : finals)
    if (!std::isfinite(v)) throw ValueError("non-finite score");
  int best = 0;
  for (std::size_t j = 1; j < finals.size(); ++j)
    if (finals[j] > finals[best]) best = static_cast<int>(j);
  bool tie = false;
  for (std::size_t j = 0; j < finals.size(); ++j)
    if (static_cast<int>(j) != best && finals[j] == finals[best]) tie = true;
  return ArgmaxSelection{best, tie};
}

double cotwp_score(std::span<const TokenScore> answer_token_scores) {
  if (answer_token_scores.empty()) throw ValueError("empty answer span");
  double sum = 0.0;
  for (const auto& ts : answer_token_scores) {
    if (ts.top_alternatives.size() < 2) throw ValueError("insufficient top-k depth");
    const double p1 = std::exp(ts.top_alternatives[0].second);
    const double p2 = std::exp(ts.top_alternatives[1].second);
    sum += p1 - p2;
  }
  return sum / static_cast<double>(answer_token_scores.size());
}

std::vector<TokenScore> floor_token_scores(std::vector<TokenScore> tokens, double floor) {
  if (!std::isfinite(floor) || floor > 0.0) throw ValueError("logprob floor must be finite and <= 0");
  for (auto& ts : tokens) {
    if (std::isnan(ts.logprob)) throw ValueError("non-finite logprob");
    if (ts.logprob < floor) ts.logprob = floor;
  }
  return tokens;
}

}  // namespace referi
