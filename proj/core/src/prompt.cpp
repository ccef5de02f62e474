// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/prompt.hpp"

#include <vector>

namespace referi {

namespace {

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::string substitute(std::string block, const std::string& placeholder,
                       const std::string& value) {
  const std::size_t pos = block.find(placeholder);
  if (pos == std::string::npos) return block;
  block.replace(pos, placeholder.size(), value);
  return block;
}

}  // namespace

DemonstrationTemplate default_template() {
  return DemonstrationTemplate{"", "Q: {query}\nA: {answer}", "Q: {query}\nA: ", "\n\n"};
}

void validate_template(const DemonstrationTemplate& tpl) {
  if (count_occurrences(tpl.example_block, "{query}") != 1)
    throw ValueError("template: example_block must contain {query} exactly once");
  if (count_occurrences(tpl.example_block, "{answer}") != 1)
    throw ValueError("template: example_block must contain {answer} exactly once");
  if (tpl.example_block.find("{query}") > tpl.example_block.find("{answer}"))
    throw ValueError("template: {query} must precede {answer} in example_block");
  if (count_occurrences(tpl.query_block, "{query}") != 1)
    throw ValueError("template: query_block must contain {query} exactly once");
  if (tpl.query_block.find("{answer}") != std::string::npos)
    throw ValueError("template: query_block must not contain {answer}");
}

std::string render_demonstrations(const FewShotSet& X, const DemonstrationTemplate& tpl) {
  validate_template(tpl);
  std::string out;
  if (!tpl.header.empty()) {
    out += tpl.header;
    out += tpl.separator;
  }
  bool first = true;
  for (const auto& ex : X.examples()) {
    if (!first) out += tpl.separator;
    first = false;
    std::string block = substitute(tpl.example_block, "{query}", ex.query);
    block = substitute(block, "{answer}", ex.answer);
    out += block;
  }
  return out;
}

FewShotSet leave_one_out_replace(const FewShotSet& X, std::size_t i, const Example& test_pair) {
  if (i >= X.size()) throw ValueError("leave-one-out index out of range");
  std::vector<Example> examples = X.examples();
  examples[i] = test_pair;
  return FewShotSet(std::move(examples));
}

std::string build_generation_context(const FewShotSet& X, const std::string& test_query,
                                     const DemonstrationTemplate& tpl) {
  std::string context = render_demonstrations(X, tpl);
  context += tpl.separator;
  context += substitute(tpl.query_block, "{query}", test_query);
  return context;
}

ScoringContext build_forward_context(const FewShotSet& X, const std::string& test_query,
                                     const std::string& candidate,
                                     const DemonstrationTemplate& tpl) {
  if (candidate.empty()) throw ValueError("candidate response is empty");
  return ScoringContext{build_generation_context(X, test_query, tpl), candidate};
}

std::pair<ScoringContext, ScoringContext> build_backward_contexts(
    const FewShotSet& X, std::size_t i, const Example& test_pair,
    const DemonstrationTemplate& tpl, bool reuse_header) {
  if (i >= X.size()) throw ValueError("leave-one-out index out of range");
  const Example& target = X.at(i);

  const FewShotSet replaced = leave_one_out_replace(X, i, test_pair);
  std::string cond_ctx = render_demonstrations(replaced, tpl);
  cond_ctx += tpl.separator;
  cond_ctx += substitute(tpl.query_block, "{query}", target.query);

  std::string uncond_ctx;
  if (reuse_header && !tpl.header.empty()) {
    uncond_ctx += tpl.header;
    uncond_ctx += tpl.separator;
  }
  uncond_ctx += substitute(tpl.query_block, "{query}", target.query);

  return {ScoringContext{std::move(cond_ctx), target.answer},
          ScoringContext{std::move(uncond_ctx), target.answer}};
}

}  // namespace referi
