// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>

#include "referi/types.hpp"

namespace referi {

/// Literal prompt template for rendering demonstrations. Placeholders are
/// {query} and {answer}; text is treated byte-literally, no whitespace
/// normalization, so tokenizer-sensitive scoring is never silently altered.
struct DemonstrationTemplate {
  std::string header;         // task instruction; may be empty
  std::string example_block;  // must contain {query} then {answer}, once each
  std::string query_block;    // must contain {query} once and no {answer}
  std::string separator;      // between blocks
};

/// The default Q/A template used by the bundled tasks.
DemonstrationTemplate default_template();

/// Validates placeholder structure; throws ValueError on violation.
void validate_template(const DemonstrationTemplate& tpl);

/// Everything an estimator call needs: the exact conditioning string and the
/// continuation whose per-token logprobs are summed. context + continuation
/// is the exact concatenation the estimator sees.
struct ScoringContext {
  std::string context;
  std::string continuation;
};

/// Header (if any), then each example rendered via example_block in set
/// order, joined by separator.
std::string render_demonstrations(const FewShotSet& X, const DemonstrationTemplate& tpl);

/// Returns a set of the same length where position i holds test_pair and all
/// other positions hold their original examples in original order.
FewShotSet leave_one_out_replace(const FewShotSet& X, std::size_t i, const Example& test_pair);

/// Forward scoring context: demonstrations, separator, opened query block for
/// the test query; continuation is the candidate response text. Any
/// template-mandated answer prefix belongs to the context, not the
/// continuation.
ScoringContext build_forward_context(const FewShotSet& X, const std::string& test_query,
                                     const std::string& candidate,
                                     const DemonstrationTemplate& tpl);

/// The conditioning string alone (demonstrations + opened query block); this
/// is also the generation prompt, so generation and forward scoring share
/// one context byte-for-byte.
std::string build_generation_context(const FewShotSet& X, const std::string& test_query,
                                     const DemonstrationTemplate& tpl);

/// Conditioned and unconditioned contexts for the i-th example's answer.
/// Conditioned: demonstrations with (test query, candidate) swapped in at
/// position i, then the opened query block for q_i. Unconditioned: header
/// and the opened query block for q_i alone (header reuse can be disabled).
/// Both continuations are the identical string a_i.
std::pair<ScoringContext, ScoringContext> build_backward_contexts(
    const FewShotSet& X, std::size_t i, const Example& test_pair,
    const DemonstrationTemplate& tpl, bool reuse_header = true);

}  // namespace referi
