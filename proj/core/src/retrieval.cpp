// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/retrieval.hpp"

#include <cmath>

namespace referi {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) throw ValueError("cosine: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValueError("cosine: undefined similarity for zero vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

std::vector<std::vector<double>> embed_example_queries(const FewShotSet& X, Backend& embedder) {
  std::vector<std::vector<double>> out;
  out.reserve(X.size());
  for (const auto& ex : X.examples()) out.push_back(embedder.embed(ex.query));
  return out;
}

RelevanceResult most_relevant(const std::string& test_query, const FewShotSet& X,
                              Backend& embedder,
                              const std::vector<std::vector<double>>* example_embeddings) {
  std::vector<std::vector<double>> local;
  if (!example_embeddings) {
    local = embed_example_queries(X, embedder);
    example_embeddings = &local;
  }
  if (example_embeddings->size() != X.size())
    throw ValueError("example embedding count does not match few-shot size");

  const std::vector<double> qv = embedder.embed(test_query);
  RelevanceResult result;
  result.similarities.reserve(X.size());
  for (const auto& ev : *example_embeddings) result.similarities.push_back(cosine(qv, ev));

  int best = 0;
  for (std::size_t i = 1; i < result.similarities.size(); ++i)
    if (result.similarities[i] > result.similarities[best]) best = static_cast<int>(i);
  result.selected_index = best;
  for (std::size_t i = 0; i < result.similarities.size(); ++i)
    if (static_cast<int>(i) != best && result.similarities[i] == result.similarities[best])
      result.tie_broken = true;
  return result;
}

}  // namespace referi
