// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <semaphore>

#include "referi/hash.hpp"
#include "referi/retrieval.hpp"
#include "referi/scores.hpp"

namespace referi {

std::string to_string(BackwardMode mode) {
  switch (mode) {
    case BackwardMode::Full: return "full";
    case BackwardMode::Approx: return "approx";
    case BackwardMode::None: return "forward";
    case BackwardMode::BackwardOnly: return "backward";
  }
  return "?";
}

BackwardMode backward_mode_from_string(const std::string& s) {
  if (s == "full") return BackwardMode::Full;
  if (s == "approx") return BackwardMode::Approx;
  if (s == "forward" || s == "none") return BackwardMode::None;
  if (s == "backward" || s == "backward-only") return BackwardMode::BackwardOnly;
  throw ValueError("unknown backward mode: " + s);
}

std::optional<ExtractedAnswer> extract_answer(const std::string& response,
                                              const std::string& marker) {
  if (marker.empty()) return std::nullopt;
  const std::size_t pos = response.rfind(marker);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t begin = pos + marker.size();
  std::size_t end = response.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(response[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(response[end - 1]))) --end;
  if (begin >= end) return std::nullopt;
  return ExtractedAnswer{response.substr(begin, end - begin), begin, end};
}

std::string usc_judge_prompt(const std::string& test_query,
                             std::span<const Candidate> candidates) {
  std::string prompt = "You are given a question and " + std::to_string(candidates.size()) +
                       " candidate responses.\n\nQuestion: " + test_query + "\n";
  for (std::size_t k = 0; k < candidates.size(); ++k)
    prompt += "\nResponse " + std::to_string(k) + ": " + candidates[k].response + "\n";
  prompt += "\nReply with only the index (0-" + std::to_string(candidates.size() - 1) +
            ") of the best response.";
  return prompt;
}

std::optional<int> parse_judge_index(const std::string& output, int num_candidates) {
  for (std::size_t i = 0; i < output.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(output[i]))) continue;
    std::size_t j = i;
    while (j < output.size() && std::isdigit(static_cast<unsigned char>(output[j]))) ++j;
    try {
      const int value = std::stoi(output.substr(i, j - i));
      if (value >= 0 && value < num_candidates) return value;
      return std::nullopt;  // an integer was named but points nowhere
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

namespace {

std::vector<TokenScore> apply_floor(std::vector<TokenScore> tokens,
                                    const std::optional<double>& floor) {
  if (floor) return floor_token_scores(std::move(tokens), *floor);
  for (const auto& ts : tokens)
    if (!std::isfinite(ts.logprob)) throw ValueError("non-finite logprob");
  return tokens;
}

bool same_backend(const Backends& backends) {
  return backends.generator && backends.estimator &&
         backends.generator->id() == backends.estimator->id();
}

/// Resolves the forward-score token source per the scoring-source rule:
/// generation-time logprobs only when the backends are declared identical,
/// otherwise a fresh estimation under the few-shot context.
std::vector<TokenScore> forward_tokens_for(const TaskInstance& task, const EngineConfig& cfg,
                                           const Backends& backends, const Candidate& cand,
                                           int top_k = 0) {
  if (!backends.estimator) throw ValueError("no estimation backend configured");
  const bool same = same_backend(backends);
  if (cfg.use_generation_logprobs && same && cand.gen_token_logprobs && top_k == 0)
    return apply_floor(*cand.gen_token_logprobs, cfg.logprob_floor);

  if (backends.estimator->capabilities().scoring) {
    const ScoringContext ctx =
        build_forward_context(task.few_shot, task.test_query, cand.response, cfg.prompt_template);
    LikelihoodRequest req{ctx.context, ctx.continuation, top_k};
    LikelihoodResponse resp = backends.estimator->score_continuation(req);
    if (resp.truncated) throw ValueError("estimator truncated the forward continuation");
    return apply_floor(std::move(resp.token_scores), cfg.logprob_floor);
  }

  if (same && cand.gen_token_logprobs && top_k == 0)
    return apply_floor(*cand.gen_token_logprobs, cfg.logprob_floor);
  throw PermanentError("backend '" + backends.estimator->id() + "' has no echo-scoring support");
}

std::pair<double, double> backward_pair_for(const TaskInstance& task, const EngineConfig& cfg,
                                            const Backends& backends, const Example& test_pair,
                                            std::size_t i,
                                            std::vector<TokenScore>* cond_tokens_out) {
  const auto [cond, uncond] = build_backward_contexts(task.few_shot, i, test_pair,
                                                      cfg.prompt_template,
                                                      cfg.reuse_header_in_backward);
  if (!backends.estimator->capabilities().scoring)
    throw PermanentError("backward scores unavailable: estimator has no echo-scoring support");
  LikelihoodResponse cr = backends.estimator->score_continuation(
      LikelihoodRequest{cond.context, cond.continuation, 0});
  LikelihoodResponse ur = backends.estimator->score_continuation(
      LikelihoodRequest{uncond.context, uncond.continuation, 0});
  auto ct = apply_floor(std::move(cr.token_scores), cfg.logprob_floor);
  auto ut = apply_floor(std::move(ur.token_scores), cfg.logprob_floor);
  const double c = forward_score(ct);
  const double u = forward_score(ut);
  if (cond_tokens_out) *cond_tokens_out = std::move(ct);
  return {c, u};
}

SelectionResult assemble(std::vector<ScoreBreakdown> breakdowns,
                         std::map<std::string, std::string> metadata) {
  std::vector<double> finals;
  finals.reserve(breakdowns.size());
  for (const auto& b : breakdowns) finals.push_back(b.final);
  const ArgmaxSelection sel = select_argmax(finals);
  SelectionResult result;
  result.selected_index = sel.index;
  result.tie_broken = sel.tie_broken;
  result.breakdowns = std::move(breakdowns);
  result.metadata = std::move(metadata);
  validate_selection(result, result.breakdowns.size());
  return result;
}

template <typename Fn>
std::vector<ScoreBreakdown> fan_out(const std::vector<Candidate>& candidates, int concurrency,
                                    Fn&& per_candidate) {
  std::counting_semaphore<> gate(std::max(1, concurrency));
  std::vector<std::future<ScoreBreakdown>> futures;
  futures.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    futures.push_back(std::async(std::launch::async, [&, k] {
      gate.acquire();
      struct Release {
        std::counting_semaphore<>& g;
        ~Release() { g.release(); }
      } release{gate};
      return per_candidate(k);
    }));
  }
  std::vector<ScoreBreakdown> breakdowns;
  breakdowns.reserve(candidates.size());
  for (std::size_t k = 0; k < futures.size(); ++k) {
    try {
      breakdowns.push_back(futures[k].get());
    } catch (const EngineError&) {
      for (std::size_t j = k + 1; j < futures.size(); ++j) {
        try { futures[j].get(); } catch (...) {}
      }
      throw;
    } catch (const std::exception& e) {
      for (std::size_t j = k + 1; j < futures.size(); ++j) {
        try { futures[j].get(); } catch (...) {}
      }
      throw EngineError("score", static_cast<int>(k), e.what());
    }
  }
  return breakdowns;
}

std::map<std::string, std::string> base_metadata(const EngineConfig& cfg,
                                                 const Backends& backends,
                                                 BackwardMode mode) {
  std::map<std::string, std::string> md;
  md["mode"] = to_string(mode);
  if (backends.generator) md["generator"] = backends.generator->id();
  if (backends.estimator) md["estimator"] = backends.estimator->id();
  if (backends.embedder) md["embedder"] = backends.embedder->id();
  if (cfg.seed) md["seed"] = std::to_string(*cfg.seed);
  return md;
}

SelectionResult score_and_select(const TaskInstance& task, const EngineConfig& cfg,
                                 const Backends& backends, std::vector<Candidate> candidates,
                                 BackwardMode mode,
                                 const std::vector<std::vector<double>>* example_embeddings) {
  if (candidates.empty()) {
    if (!backends.generator) throw EngineError("generate", -1, "no generation backend");
    try {
      candidates = generate_candidates(task, cfg, *backends.generator);
    } catch (const std::exception& e) {
      throw EngineError("generate", -1, e.what());
    }
  }
  if (candidates.empty()) throw EngineError("generate", -1, "no candidates to select from");

  std::map<std::string, std::string> metadata = base_metadata(cfg, backends, mode);

  // The approximated backward score depends on the test query only, so the
  // relevant example is resolved once for all candidates. The backward-only
  // ablation uses the same single-example variant.
  const bool approx_backward = mode == BackwardMode::Approx || mode == BackwardMode::BackwardOnly;
  int relevant = -1;
  if (approx_backward) {
    if (!backends.embedder)
      throw EngineError("retrieval", -1, "approx backward mode needs an embedding backend");
    try {
      const RelevanceResult rel =
          most_relevant(task.test_query, task.few_shot, *backends.embedder, example_embeddings);
      relevant = rel.selected_index;
      metadata["relevant_example"] = std::to_string(relevant);
    } catch (const std::exception& e) {
      throw EngineError("retrieval", -1, e.what());
    }
  }

  auto breakdowns = fan_out(candidates, cfg.concurrency, [&](std::size_t k) -> ScoreBreakdown {
    const Candidate& cand = candidates[k];
    ScoreBreakdown bd;

    if (mode != BackwardMode::BackwardOnly) {
      try {
        bd.forward_tokens = forward_tokens_for(task, cfg, backends, cand);
        bd.forward = forward_score(bd.forward_tokens, cfg.length_normalize_forward);
      } catch (const std::exception& e) {
        throw EngineError("forward", static_cast<int>(k), e.what());
      }
    }

    if (mode != BackwardMode::None) {
      const Example test_pair = make_example(task.test_query, cand.response);
      try {
        if (approx_backward) {
          auto [c, u] = backward_pair_for(task, cfg, backends, test_pair,
                                          static_cast<std::size_t>(relevant), nullptr);
          bd.per_example_backward.push_back(PerExampleBackward{relevant, c, u});
          bd.backward_approx = backward_approx_score(c, u);
        } else {
          for (std::size_t i = 0; i < task.few_shot.size(); ++i) {
            std::vector<TokenScore> cond_tokens;
            auto [c, u] = backward_pair_for(task, cfg, backends, test_pair, i,
                                            cfg.retain_backward_tokens ? &cond_tokens : nullptr);
            bd.per_example_backward.push_back(
                PerExampleBackward{static_cast<int>(i), c, u});
            if (cfg.retain_backward_tokens)
              bd.backward_tokens.emplace_back(static_cast<int>(i), std::move(cond_tokens));
          }
          bd.backward_full =
              backward_full_score(std::span<const PerExampleBackward>(bd.per_example_backward));
        }
      } catch (const EngineError&) {
        throw;
      } catch (const std::exception& e) {
        throw EngineError("backward", static_cast<int>(k), e.what());
      }
    }

    switch (mode) {
      case BackwardMode::None:
        bd.final = bd.forward;
        break;
      case BackwardMode::Full:
        bd.final = final_score(bd.forward, *bd.backward_full);
        break;
      case BackwardMode::Approx:
        bd.final = final_score(bd.forward, *bd.backward_approx);
        break;
      case BackwardMode::BackwardOnly:
        // Consistent with the final score's sign: final = 0 - backward.
        bd.forward = 0.0;
        bd.final = final_score(0.0, *bd.backward_approx);
        break;
    }
    return bd;
  });

  return assemble(std::move(breakdowns), std::move(metadata));
}

}  // namespace

std::vector<Candidate> generate_candidates(const TaskInstance& task, const EngineConfig& cfg,
                                           Backend& generator) {
  GenerationRequest req;
  req.context = build_generation_context(task.few_shot, task.test_query, cfg.prompt_template);
  req.num_samples = cfg.num_candidates;
  req.temperature = cfg.temperature;
  req.max_tokens = cfg.max_tokens;
  req.seed = cfg.seed;
  req.want_logprobs = cfg.want_generation_logprobs;
  validate_generation_request(req);

  std::vector<Candidate> out = generator.generate(req);
  if (static_cast<int>(out.size()) != cfg.num_candidates)
    throw PermanentError("backend returned " + std::to_string(out.size()) + " candidates, wanted " +
                         std::to_string(cfg.num_candidates));
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].index = static_cast<int>(k);
    if (out[k].response.empty()) throw ValueError("backend returned an empty candidate");
  }
  return out;
}

SelectionResult run_referi(const TaskInstance& task, const EngineConfig& cfg,
                           const Backends& backends, std::vector<Candidate> candidates,
                           const std::vector<std::vector<double>>* example_embeddings) {
  return score_and_select(task, cfg, backends, std::move(candidates), cfg.backward_mode,
                          example_embeddings);
}

SelectionResult run_forward_only(const TaskInstance& task, const EngineConfig& cfg,
                                 const Backends& backends, std::vector<Candidate> candidates) {
  return score_and_select(task, cfg, backends, std::move(candidates), BackwardMode::None,
                          nullptr);
}

SelectionResult run_random_baseline(const TaskInstance& task, const EngineConfig& cfg,
                                    const Backends& backends, std::uint64_t seed,
                                    std::vector<Candidate> candidates) {
  if (candidates.empty()) {
    if (!backends.generator) throw EngineError("generate", -1, "no generation backend");
    try {
      candidates = generate_candidates(task, cfg, *backends.generator);
    } catch (const std::exception& e) {
      throw EngineError("generate", -1, e.what());
    }
  }
  const std::size_t n = candidates.size();
  const double u = unit_from_bits(splitmix64(seed ^ 0xbadc0ffeULL));
  const int pick = static_cast<int>(std::min<std::size_t>(n - 1, static_cast<std::size_t>(u * n)));
  SelectionResult result;
  result.selected_index = pick;
  result.metadata["mode"] = "random";
  result.metadata["seed"] = std::to_string(seed);
  validate_selection(result, n);
  return result;
}

SelectionResult run_majority_vote(const TaskInstance& task, const EngineConfig& cfg,
                                  const Backends& backends, std::vector<Candidate> candidates) {
  if (candidates.empty()) {
    if (!backends.generator) throw EngineError("generate", -1, "no generation backend");
    try {
      candidates = generate_candidates(task, cfg, *backends.generator);
    } catch (const std::exception& e) {
      throw EngineError("generate", -1, e.what());
    }
  }
  struct Tally {
    int count = 0;
    int first_index = -1;
  };
  std::map<std::string, Tally> tallies;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto ans = extract_answer(candidates[k].response, cfg.answer_marker);
    if (!ans) continue;  // abstains
    Tally& t = tallies[canonical_answer(ans->text)];
    ++t.count;
    if (t.first_index < 0) t.first_index = static_cast<int>(k);
  }
  if (tallies.empty())
    throw EngineError("majority", -1, "every candidate abstained from answer extraction");
  const Tally* best = nullptr;
  for (const auto& [answer, tally] : tallies) {
    if (!best || tally.count > best->count ||
        (tally.count == best->count && tally.first_index < best->first_index))
      best = &tally;
  }
  SelectionResult result;
  result.selected_index = best->first_index;
  result.metadata["mode"] = "majority";
  validate_selection(result, candidates.size());
  return result;
}

SelectionResult run_cotwp_baseline(const TaskInstance& task, const EngineConfig& cfg,
                                   const Backends& backends, std::vector<Candidate> candidates) {
  if (candidates.empty()) {
    if (!backends.generator) throw EngineError("generate", -1, "no generation backend");
    try {
      candidates = generate_candidates(task, cfg, *backends.generator);
    } catch (const std::exception& e) {
      throw EngineError("generate", -1, e.what());
    }
  }

  std::vector<std::optional<double>> scores(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto span = extract_answer(candidates[k].response, cfg.answer_marker);
    if (!span) continue;  // excluded
    std::vector<TokenScore> tokens;
    try {
      tokens = forward_tokens_for(task, cfg, backends, candidates[k], 2);
    } catch (const std::exception& e) {
      throw EngineError("cotwp", static_cast<int>(k), e.what());
    }
    std::vector<TokenScore> answer_tokens;
    std::size_t offset = 0;
    for (const auto& ts : tokens) {
      const std::size_t tok_begin = offset;
      const std::size_t tok_end = offset + ts.token.size();
      offset = tok_end;
      if (tok_end <= span->begin || tok_begin >= span->end) continue;
      answer_tokens.push_back(ts);
    }
    if (answer_tokens.empty()) continue;
    try {
      scores[k] = cotwp_score(answer_tokens);
    } catch (const std::exception& e) {
      throw EngineError("cotwp", static_cast<int>(k), e.what());
    }
  }

  int best = -1;
  bool tie = false;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!scores[k]) continue;
    if (best < 0 || *scores[k] > *scores[best]) {
      best = static_cast<int>(k);
      tie = false;
    } else if (*scores[k] == *scores[best]) {
      tie = true;
    }
  }
  if (best < 0)
    throw EngineError("cotwp", -1, "every candidate was excluded (no answer span found)");

  SelectionResult result;
  result.selected_index = best;
  result.tie_broken = tie;
  result.metadata = base_metadata(cfg, backends, cfg.backward_mode);
  result.metadata["mode"] = "cotwp";
  for (std::size_t k = 0; k < scores.size(); ++k) {
    ScoreBreakdown bd;
    // Excluded candidates carry no usable span; park them below any real
    // gap so the stored breakdown still orders like the selection.
    bd.forward = scores[k] ? *scores[k] : -1.0;
    bd.final = bd.forward;
    result.breakdowns.push_back(std::move(bd));
  }
  validate_selection(result, candidates.size());
  return result;
}

SelectionResult run_usc_baseline(const TaskInstance& task, const EngineConfig& cfg,
                                 const Backends& backends, std::vector<Candidate> candidates) {
  if (!backends.generator) throw EngineError("generate", -1, "no generation backend");
  if (candidates.empty()) {
    try {
      candidates = generate_candidates(task, cfg, *backends.generator);
    } catch (const std::exception& e) {
      throw EngineError("generate", -1, e.what());
    }
  }

  GenerationRequest req;
  req.context = usc_judge_prompt(task.test_query, candidates);
  req.num_samples = 1;
  req.temperature = 0.0;  // deterministic judge
  req.max_tokens = 16;
  req.seed = cfg.seed;

  std::vector<Candidate> judged;
  try {
    judged = backends.generator->generate(req);
  } catch (const std::exception& e) {
    throw EngineError("judge", -1, e.what());
  }
  if (judged.empty()) throw EngineError("judge", -1, "judge returned no output");
  const std::string raw = judged.front().response;
  const auto index = parse_judge_index(raw, static_cast<int>(candidates.size()));
  if (!index) throw EngineError("judge", -1, "judge parse failure; raw output: '" + raw + "'");

  SelectionResult result;
  result.selected_index = *index;
  result.metadata["mode"] = "usc";
  result.metadata["judge_raw"] = raw;
  validate_selection(result, candidates.size());
  return result;
}

}  // namespace referi
