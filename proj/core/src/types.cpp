// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace referi {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string canonical_answer(const std::string& s) {
  std::string t = trim(s);
  std::string out;
  out.reserve(t.size());
  bool in_ws = false;
  for (char c : t) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

Example make_example(std::string query, std::string answer) {
  if (trim(query).empty()) throw ValueError("example query is empty");
  if (trim(answer).empty()) throw ValueError("example answer is empty");
  return Example{std::move(query), std::move(answer)};
}

FewShotSet::FewShotSet(std::vector<Example> examples) : examples_(std::move(examples)) {
  if (examples_.empty()) throw ValueError("few-shot set must hold at least one example");
  for (const auto& ex : examples_) {
    if (trim(ex.query).empty()) throw ValueError("example query is empty");
    if (trim(ex.answer).empty()) throw ValueError("example answer is empty");
  }
}

const Example& FewShotSet::at(std::size_t i) const {
  if (i >= examples_.size()) throw ValueError("example index out of range");
  return examples_[i];
}

void validate_token_score(const TokenScore& ts) {
  if (std::isnan(ts.logprob) || ts.logprob > 0.0)
    throw ValueError("token logprob must be <= 0");
  for (std::size_t i = 1; i < ts.top_alternatives.size(); ++i) {
    if (ts.top_alternatives[i - 1].second < ts.top_alternatives[i].second)
      throw ValueError("top_alternatives must be sorted by logprob descending");
  }
}

Candidate make_candidate(std::string response, int index,
                         std::optional<std::vector<TokenScore>> gen_logprobs) {
  if (response.empty()) throw ValueError("candidate response is empty");
  if (index < 0) throw ValueError("candidate index must be >= 0");
  if (gen_logprobs) {
    for (const auto& ts : *gen_logprobs) {
      if (!(ts.logprob <= 0.0)) throw ValueError("generation logprob must be <= 0");
    }
  }
  return Candidate{std::move(response), index, std::move(gen_logprobs)};
}

void validate_selection(const SelectionResult& result, std::size_t num_candidates) {
  if (num_candidates == 0) throw ValueError("selection over zero candidates");
  if (result.selected_index < 0 ||
      static_cast<std::size_t>(result.selected_index) >= num_candidates)
    throw ValueError("selected_index out of range");
  if (result.breakdowns.empty()) return;  // score-free selector
  if (result.breakdowns.size() != num_candidates)
    throw ValueError("breakdown count does not match candidate count");
  const double best = result.breakdowns[result.selected_index].final;
  bool tie = false;
  for (std::size_t j = 0; j < result.breakdowns.size(); ++j) {
    if (result.breakdowns[j].final > best) throw ValueError("selected final is not maximal");
    if (static_cast<int>(j) != result.selected_index && result.breakdowns[j].final == best)
      tie = true;
  }
  if (tie != result.tie_broken) throw ValueError("tie_broken flag inconsistent with finals");
}

}  // namespace referi
