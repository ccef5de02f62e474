// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "referi/cache.hpp"
#include "referi/dataset.hpp"
#include "referi/engine.hpp"

namespace referi {

struct EvalOptions {
  /// Any of: referi, forward, backward, random, majority, cotwp, usc.
  std::vector<std::string> selectors{"referi", "random"};
  EngineConfig engine;
  int query_concurrency = 1;
  /// Wall-clock fields are emitted only on request; the report body is
  /// otherwise byte-reproducible for identical inputs.
  bool timings = false;
  std::string config_fingerprint;
};

struct SelectorOutcome {
  int selected_index = -1;
  bool tie_broken = false;
  std::optional<bool> correct;
  std::optional<std::string> extracted_answer;
  SelectionResult selection;
};

struct QueryRow {
  std::string id;
  bool failed = false;
  std::string fail_phase;
  std::string fail_error;
  std::string candidates_sha256;
  std::vector<std::string> candidate_answers;  // extracted; "" when absent
  std::vector<bool> pool_correct;              // empty when gold absent
  std::map<std::string, SelectorOutcome> results;
  double latency_ms = 0.0;
};

struct RunReport {
  std::vector<std::string> selectors;
  std::vector<QueryRow> rows;  // dataset order
  std::map<std::string, int> correct_counts;
  std::map<std::string, int> judged_counts;
  /// Averaged convention: mean correctness over every candidate in every
  /// pool, i.e. accuracy of no-selection averaging.
  double pool_average_accuracy = 0.0;
  int failures = 0;
  CacheStats cache;
  std::string config_fingerprint;
  double mean_latency_ms = 0.0;

  double accuracy(const std::string& selector) const;
};

/// Runs every selector over the dataset. Candidates are generated once per
/// query and shared across all selectors; per-query failures are recorded
/// and excluded from aggregates. Queries may run concurrently; rows are
/// emitted in dataset order regardless of completion order.
RunReport eval_run(const std::vector<DatasetRecord>& dataset, const FewShotSet& few_shot,
                   const EvalOptions& opts, const Backends& backends,
                   const ResponseCache* cache = nullptr);

/// Line-delimited records plus a human-readable summary footer.
void write_report(const RunReport& report, std::ostream& out, bool timings);
void write_report_file(const RunReport& report, const std::filesystem::path& path, bool timings);

/// Materialized slice of a written report needed for token attribution.
struct StoredQuery {
  std::string id;
  std::vector<bool> pool_correct;
  /// Per candidate: (token, conditioned logprob) concatenated across
  /// few-shot examples in example order.
  std::vector<std::vector<std::pair<std::string, double>>> backward_tokens;
};

StoredQuery load_stored_query(const std::filesystem::path& report_path,
                              const std::string& query_id);

}  // namespace referi
