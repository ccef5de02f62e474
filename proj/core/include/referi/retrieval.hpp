// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "referi/backend.hpp"
#include "referi/types.hpp"

namespace referi {

/// Which few-shot example is most relevant to the test query, with the full
/// similarity profile. Ties break to the lowest index and are flagged.
struct RelevanceResult {
  int selected_index = 0;
  std::vector<double> similarities;
  bool tie_broken = false;
};

/// Cosine similarity. Throws on length mismatch or an all-zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

/// Embeds each example's raw query text once. Reused across test queries.
std::vector<std::vector<double>> embed_example_queries(const FewShotSet& X, Backend& embedder);

/// Embeds the test query and returns the argmax-cosine example. Raw query
/// text is embedded, never the rendered prompt. Precomputed example
/// embeddings may be supplied to avoid re-embedding per test query.
RelevanceResult most_relevant(const std::string& test_query, const FewShotSet& X,
                              Backend& embedder,
                              const std::vector<std::vector<double>>* example_embeddings = nullptr);

}  // namespace referi
