// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <semaphore>
#include <sstream>

#include <json.hpp>

#include "referi/hash.hpp"
#include "referi/retrieval.hpp"

namespace referi {

using nlohmann::json;

namespace {

std::uint64_t query_seed(const EvalOptions& opts, const std::string& id) {
  const std::uint64_t base = opts.engine.seed.value_or(0);
  return splitmix64(base ^ fnv1a64(id));
}

SelectionResult dispatch_selector(const std::string& selector, const TaskInstance& task,
                                  const EngineConfig& cfg, const Backends& backends,
                                  const std::vector<Candidate>& candidates,
                                  const std::vector<std::vector<double>>* example_embeddings,
                                  std::uint64_t seed) {
  if (selector == "referi")
    return run_referi(task, cfg, backends, candidates, example_embeddings);
  if (selector == "forward") return run_forward_only(task, cfg, backends, candidates);
  if (selector == "backward") {
    EngineConfig alt = cfg;
    alt.backward_mode = BackwardMode::BackwardOnly;
    return run_referi(task, alt, backends, candidates, example_embeddings);
  }
  if (selector == "random")
    return run_random_baseline(task, cfg, backends, splitmix64(seed ^ 0x52414e44ULL), candidates);
  if (selector == "majority") return run_majority_vote(task, cfg, backends, candidates);
  if (selector == "cotwp") return run_cotwp_baseline(task, cfg, backends, candidates);
  if (selector == "usc") return run_usc_baseline(task, cfg, backends, candidates);
  throw ValueError("unknown selector: " + selector);
}

json breakdown_to_json(const ScoreBreakdown& bd) {
  json j;
  j["forward"] = bd.forward;
  if (bd.backward_full) j["backward_full"] = *bd.backward_full;
  if (bd.backward_approx) j["backward_approx"] = *bd.backward_approx;
  j["final"] = bd.final;
  if (!bd.per_example_backward.empty()) {
    json pe = json::array();
    for (const auto& p : bd.per_example_backward)
      pe.push_back(json::array({p.example_index, p.conditioned_logprob, p.unconditioned_logprob}));
    j["per_example_backward"] = std::move(pe);
  }
  if (!bd.forward_tokens.empty()) {
    json toks = json::array();
    for (const auto& ts : bd.forward_tokens) toks.push_back(json::array({ts.token, ts.logprob}));
    j["forward_tokens"] = std::move(toks);
  }
  if (!bd.backward_tokens.empty()) {
    json bt = json::array();
    for (const auto& [example, tokens] : bd.backward_tokens) {
      json toks = json::array();
      for (const auto& ts : tokens) toks.push_back(json::array({ts.token, ts.logprob}));
      bt.push_back(json{{"example", example}, {"tokens", std::move(toks)}});
    }
    j["backward_tokens"] = std::move(bt);
  }
  return j;
}

json row_to_json(const QueryRow& row, bool timings) {
  json j;
  j["record"] = row.failed ? "failure" : "query";
  j["id"] = row.id;
  if (row.failed) {
    j["phase"] = row.fail_phase;
    j["error"] = row.fail_error;
    return j;
  }
  j["candidates_sha256"] = row.candidates_sha256;
  if (!row.pool_correct.empty()) {
    json pc = json::array();
    for (bool b : row.pool_correct) pc.push_back(b);
    j["pool_correct"] = std::move(pc);
  }
  json results = json::object();
  for (const auto& [name, outcome] : row.results) {
    json r;
    r["selected_index"] = outcome.selected_index;
    r["tie_broken"] = outcome.tie_broken;
    if (outcome.correct)
      r["correct"] = *outcome.correct;
    if (outcome.extracted_answer) r["answer"] = *outcome.extracted_answer;
    if (!outcome.selection.metadata.empty()) r["metadata"] = outcome.selection.metadata;
    if (!outcome.selection.breakdowns.empty()) {
      json bds = json::array();
      for (const auto& bd : outcome.selection.breakdowns) bds.push_back(breakdown_to_json(bd));
      r["breakdowns"] = std::move(bds);
    }
    results[name] = std::move(r);
  }
  j["results"] = std::move(results);
  if (timings) j["latency_ms"] = row.latency_ms;
  return j;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

double RunReport::accuracy(const std::string& selector) const {
  auto judged = judged_counts.find(selector);
  if (judged == judged_counts.end() || judged->second == 0) return 0.0;
  auto correct = correct_counts.find(selector);
  const int c = correct == correct_counts.end() ? 0 : correct->second;
  return static_cast<double>(c) / static_cast<double>(judged->second);
}

RunReport eval_run(const std::vector<DatasetRecord>& dataset, const FewShotSet& few_shot,
                   const EvalOptions& opts, const Backends& backends,
                   const ResponseCache* cache) {
  if (dataset.empty()) throw ValueError("empty dataset");
  if (opts.selectors.empty()) throw ValueError("no selectors requested");
  if (!backends.generator) throw ValueError("no generation backend configured");

  // Few-shot query embeddings are a function of the few-shot set alone;
  // compute them once per run.
  std::vector<std::vector<double>> example_embeddings;
  const bool needs_embeddings =
      (opts.engine.backward_mode == BackwardMode::Approx ||
       opts.engine.backward_mode == BackwardMode::BackwardOnly) &&
      (std::count(opts.selectors.begin(), opts.selectors.end(), "referi") > 0 ||
       std::count(opts.selectors.begin(), opts.selectors.end(), "backward") > 0);
  if (needs_embeddings) {
    if (!backends.embedder) throw ValueError("approx backward mode needs an embedding backend");
    example_embeddings = embed_example_queries(few_shot, *backends.embedder);
  }

  std::vector<QueryRow> rows(dataset.size());

  auto process = [&](std::size_t qi) {
    const DatasetRecord& rec = dataset[qi];
    QueryRow& row = rows[qi];
    row.id = rec.id;
    const auto started = std::chrono::steady_clock::now();
    try {
      TaskInstance task{few_shot, rec.query, rec.gold};
      EngineConfig cfg = opts.engine;
      cfg.seed = query_seed(opts, rec.id);

      std::vector<Candidate> candidates;
      try {
        candidates = generate_candidates(task, cfg, *backends.generator);
      } catch (const EngineError&) {
        throw;
      } catch (const std::exception& e) {
        throw EngineError("generate", -1, e.what());
      }

      {
        json texts = json::array();
        for (const auto& c : candidates) texts.push_back(c.response);
        row.candidates_sha256 = sha256_hex(texts.dump());
      }
      for (const auto& c : candidates) {
        const auto ans = extract_answer(c.response, cfg.answer_marker);
        row.candidate_answers.push_back(ans ? ans->text : "");
        if (rec.gold)
          row.pool_correct.push_back(ans && canonical_answer(ans->text) ==
                                                canonical_answer(*rec.gold));
      }

      for (const auto& selector : opts.selectors) {
        SelectorOutcome outcome;
        outcome.selection =
            dispatch_selector(selector, task, cfg, backends, candidates,
                              example_embeddings.empty() ? nullptr : &example_embeddings,
                              *cfg.seed);
        outcome.selected_index = outcome.selection.selected_index;
        outcome.tie_broken = outcome.selection.tie_broken;
        const auto ans =
            extract_answer(candidates[outcome.selected_index].response, cfg.answer_marker);
        if (ans) outcome.extracted_answer = ans->text;
        if (rec.gold)
          outcome.correct = ans && canonical_answer(ans->text) == canonical_answer(*rec.gold);
        row.results.emplace(selector, std::move(outcome));
      }
    } catch (const EngineError& e) {
      row.failed = true;
      row.fail_phase = e.phase();
      row.fail_error = e.what();
      row.results.clear();
    } catch (const std::exception& e) {
      row.failed = true;
      row.fail_phase = "unknown";
      row.fail_error = e.what();
      row.results.clear();
    }
    row.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
  };

  const int bound = std::max(1, opts.query_concurrency);
  if (bound == 1) {
    for (std::size_t qi = 0; qi < dataset.size(); ++qi) process(qi);
  } else {
    std::counting_semaphore<> gate(bound);
    std::vector<std::future<void>> futures;
    futures.reserve(dataset.size());
    for (std::size_t qi = 0; qi < dataset.size(); ++qi) {
      futures.push_back(std::async(std::launch::async, [&, qi] {
        gate.acquire();
        struct Release {
          std::counting_semaphore<>& g;
          ~Release() { g.release(); }
        } release{gate};
        process(qi);
      }));
    }
    for (auto& f : futures) f.get();
  }

  RunReport report;
  report.selectors = opts.selectors;
  report.config_fingerprint = opts.config_fingerprint;
  int pool_total = 0, pool_correct_total = 0;
  double latency_total = 0.0;
  for (auto& row : rows) {
    latency_total += row.latency_ms;
    if (row.failed) {
      ++report.failures;
      continue;
    }
    for (bool b : row.pool_correct) {
      ++pool_total;
      if (b) ++pool_correct_total;
    }
    for (const auto& [name, outcome] : row.results) {
      if (!outcome.correct) continue;
      ++report.judged_counts[name];
      if (*outcome.correct) ++report.correct_counts[name];
    }
  }
  report.pool_average_accuracy =
      pool_total == 0 ? 0.0 : static_cast<double>(pool_correct_total) / pool_total;
  report.mean_latency_ms = dataset.empty() ? 0.0 : latency_total / dataset.size();
  if (cache) report.cache = cache->stats();
  report.rows = std::move(rows);
  return report;
}

void write_report(const RunReport& report, std::ostream& out, bool timings) {
  for (const auto& row : report.rows) out << row_to_json(row, timings).dump() << "\n";

  std::string selector_list;
  for (const auto& s : report.selectors) {
    if (!selector_list.empty()) selector_list += ",";
    selector_list += s;
  }
  out << "# selectors: " << selector_list << "\n";
  for (const auto& s : report.selectors) {
    auto judged = report.judged_counts.find(s);
    const int total = judged == report.judged_counts.end() ? 0 : judged->second;
    auto correct = report.correct_counts.find(s);
    const int c = correct == report.correct_counts.end() ? 0 : correct->second;
    out << "# selector " << s << ": accuracy " << fmt4(report.accuracy(s)) << " (" << c << "/"
        << total << ")\n";
  }
  out << "# pool_average_accuracy " << fmt4(report.pool_average_accuracy) << "\n";
  out << "# failures " << report.failures << "\n";
  if (report.cache.lookups > 0 || report.cache.misses > 0) {
    out << "# cache: lookups " << report.cache.lookups << " misses " << report.cache.misses
        << " hit_rate " << fmt4(report.cache.hit_rate()) << "\n";
  }
  if (!report.config_fingerprint.empty())
    out << "# config_fingerprint " << report.config_fingerprint << "\n";
  if (timings) out << "# mean_latency_ms " << fmt4(report.mean_latency_ms) << "\n";
}

void write_report_file(const RunReport& report, const std::filesystem::path& path, bool timings) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValueError("cannot write report: " + path.string());
  write_report(report, out, timings);
}

StoredQuery load_stored_query(const std::filesystem::path& report_path,
                              const std::string& query_id) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) throw ValueError("report not found: " + report_path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      continue;
    }
    if (j.value("record", "") != "query" || j.value("id", "") != query_id) continue;

    StoredQuery sq;
    sq.id = query_id;
    if (j.contains("pool_correct"))
      for (const auto& b : j["pool_correct"]) sq.pool_correct.push_back(b.get<bool>());

    if (!j.contains("results"))
      throw ValueError("query row carries no selector results: " + query_id);
    for (const auto& [name, r] : j["results"].items()) {
      if (!r.contains("breakdowns")) continue;
      std::vector<std::vector<std::pair<std::string, double>>> per_candidate;
      bool complete = true;
      for (const auto& bd : r["breakdowns"]) {
        if (!bd.contains("backward_tokens")) {
          complete = false;
          break;
        }
        std::vector<std::pair<std::string, double>> tokens;
        for (const auto& ex : bd["backward_tokens"])
          for (const auto& t : ex["tokens"])
            tokens.emplace_back(t.at(0).get<std::string>(), t.at(1).get<double>());
        per_candidate.push_back(std::move(tokens));
      }
      if (complete && !per_candidate.empty()) {
        sq.backward_tokens = std::move(per_candidate);
        return sq;
      }
    }
    throw ValueError("query '" + query_id +
                     "' has no retained backward token terms (run eval with --mode full)");
  }
  throw ValueError("query id not found in report: " + query_id);
}

}  // namespace referi
