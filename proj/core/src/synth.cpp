// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>

#include <json.hpp>

#include "referi/hash.hpp"

namespace referi::synth {

using nlohmann::json;

namespace {

const std::regex kCandidateRe("Attempt ([0-9]+) on (q[0-9]+):");
constexpr const char* kJudgeMarker = "best response";

std::uint64_t keyed_bits(std::uint64_t seed, const std::string& tag, const std::string& id,
                         int k) {
  std::string material = std::to_string(seed);
  material += '\x1f';
  material += tag;
  material += '\x1f';
  material += id;
  material += '\x1f';
  material += std::to_string(k);
  return splitmix64(fnv1a64(material) ^ splitmix64(seed));
}

std::vector<std::string> target_vocab() {
  return {"mara", "toff", "gleb", "quix", "vorn", "shey", "plim", "drub"};
}

std::string source_symbol(std::uint64_t seed, int i) {
  static const std::string cons = "bdfgklmnprstvz";
  static const std::string vowel = "aeiou";
  const std::uint64_t h = splitmix64(seed ^ (0xabcdULL + static_cast<std::uint64_t>(i) * 7919));
  std::string s;
  s += cons[h % cons.size()];
  s += vowel[(h >> 8) % vowel.size()];
  s += cons[(h >> 16) % cons.size()];
  s += vowel[(h >> 24) % vowel.size()];
  s += cons[(h >> 32) % cons.size()];
  return s + std::to_string(i);
}

}  // namespace

double noise_unit(std::uint64_t seed, const std::string& tag, const std::string& id, int k) {
  return unit_from_bits(keyed_bits(seed, tag, id, k));
}

bool candidate_correct(const SynthSpec& spec, const std::string& id, int k) {
  return noise_unit(spec.seed, "correct", id, k) < spec.p_correct;
}

double forward_noise(const SynthSpec& spec, const std::string& id, int k) {
  const double u1 = noise_unit(spec.seed, "eps1", id, k);
  const double u2 = noise_unit(spec.seed, "eps2", id, k);
  return spec.sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double answer_gap(const SynthSpec& spec, const std::string& id, int k) {
  return 0.1 + 0.8 * noise_unit(spec.seed, "gap", id, k);
}

double uncond_base(const SynthSpec& spec, const std::string& answer) {
  return -3.0 - noise_unit(spec.seed, "uncond", answer, 0);
}

std::string candidate_answer(const SynthSpec& spec, const SynthQuery& q, int k) {
  if (candidate_correct(spec, q.id, k)) return q.gold;
  const std::uint64_t h = keyed_bits(spec.seed, "wrong", q.id, k);
  if (spec.kind == "arithmetic") {
    const long gold = std::stol(q.gold);
    long off = 1 + static_cast<long>(h % 9);
    if ((h >> 8) & 1) off = -off;
    long wrong = gold + off;
    if (wrong < 0) wrong = gold + std::labs(off);
    return std::to_string(wrong);
  }
  const auto vocab = target_vocab();
  std::vector<std::string> others;
  for (const auto& t : vocab)
    if (t != q.gold) others.push_back(t);
  return others[h % others.size()];
}

std::string candidate_text(const SynthSpec& spec, const SynthQuery& q, int k) {
  return "Attempt " + std::to_string(k) + " on " + q.id +
         ": follow the worked pattern. Answer: " + candidate_answer(spec, q, k);
}

double forward_logprob(const SynthSpec& spec, const std::string& id, int k) {
  return std::min(0.0, spec.forward_base + forward_noise(spec, id, k));
}

double backward_gain(const SynthSpec& spec, const std::string& id, int k) {
  if (spec.context_free) return 0.0;
  return spec.backward_base - spec.delta * (candidate_correct(spec, id, k) ? 1.0 : 0.0);
}

SynthSpec make_synth_spec(const std::string& kind, int size, int shots, double sigma,
                          double delta, double p_correct, std::uint64_t seed) {
  if (kind != "arithmetic" && kind != "mapping")
    throw ValueError("synth kind must be 'arithmetic' or 'mapping'");
  if (size < 1) throw ValueError("synth size must be >= 1");
  if (shots < 1) throw ValueError("synth shots must be >= 1");
  if (sigma < 0.0 || delta < 0.0) throw ValueError("sigma and delta must be >= 0");
  if (!(p_correct > 0.0 && p_correct < 1.0)) throw ValueError("p_correct must be in (0,1)");

  SynthSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.shots = shots;
  spec.size = size;
  spec.sigma = sigma;
  spec.delta = delta;
  spec.p_correct = p_correct;

  if (kind == "mapping") {
    const auto targets = target_vocab();
    if (shots > static_cast<int>(targets.size()))
      throw ValueError("mapping task supports at most " + std::to_string(targets.size()) +
                       " shots");
    // Few-shot pairs use distinct sources and distinct targets so every
    // demonstration answer is a unique string.
    std::vector<std::string> shuffled = targets;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[keyed_bits(seed, "shuffle", "t", static_cast<int>(i)) % i]);
    for (int i = 0; i < shots; ++i) {
      const std::string src = source_symbol(seed, -(i + 1));
      spec.few_shot.push_back(Example{
          "In the glyph language, what does the symbol '" + src + "' map to?", shuffled[i]});
    }
    for (int i = 0; i < size; ++i) {
      SynthQuery q;
      q.id = "q" + std::to_string(i);
      const std::string src = source_symbol(seed, i);
      q.query = "[" + q.id + "] In the glyph language, what does the symbol '" + src +
                "' map to?";
      q.gold = targets[keyed_bits(seed, "gold", q.id, 0) % targets.size()];
      spec.dataset.push_back(std::move(q));
    }
  } else {
    // Two-digit addition with templated reasoning; few-shot sums distinct.
    std::vector<long> used_sums;
    for (int i = 0; i < shots; ++i) {
      long a = 0, b = 0, s = 0;
      for (int attempt = 0;; ++attempt) {
        const std::uint64_t h = keyed_bits(seed, "fewshot", std::to_string(i), attempt);
        a = 10 + static_cast<long>(h % 90);
        b = 10 + static_cast<long>((h >> 16) % 90);
        s = a + b;
        if (std::find(used_sums.begin(), used_sums.end(), s) == used_sums.end()) break;
      }
      used_sums.push_back(s);
      const long tens = (a / 10 + b / 10) * 10;
      const long ones = (a % 10) + (b % 10);
      spec.few_shot.push_back(
          Example{"What is " + std::to_string(a) + " + " + std::to_string(b) + "?",
                  "Tens give " + std::to_string(tens) + " and ones give " + std::to_string(ones) +
                      ", so the total is " + std::to_string(s) + ". Answer: " +
                      std::to_string(s)});
    }
    for (int i = 0; i < size; ++i) {
      SynthQuery q;
      q.id = "q" + std::to_string(i);
      const std::uint64_t h = keyed_bits(seed, "row", q.id, 0);
      const long a = 10 + static_cast<long>(h % 90);
      const long b = 10 + static_cast<long>((h >> 16) % 90);
      q.query = "[" + q.id + "] What is " + std::to_string(a) + " + " + std::to_string(b) + "?";
      q.gold = std::to_string(a + b);
      spec.dataset.push_back(std::move(q));
    }
  }
  return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json j;
  j["type"] = "synth_backend";
  j["kind"] = spec.kind;
  j["seed"] = spec.seed;
  j["shots"] = spec.shots;
  j["size"] = spec.size;
  j["sigma"] = spec.sigma;
  j["delta"] = spec.delta;
  j["p_correct"] = spec.p_correct;
  j["forward_base"] = spec.forward_base;
  j["backward_base"] = spec.backward_base;
  j["context_free"] = spec.context_free;
  json fs = json::array();
  for (const auto& ex : spec.few_shot) fs.push_back({{"query", ex.query}, {"answer", ex.answer}});
  j["few_shot"] = std::move(fs);
  json ds = json::array();
  for (const auto& q : spec.dataset)
    ds.push_back({{"id", q.id}, {"query", q.query}, {"gold", q.gold}});
  j["dataset"] = std::move(ds);
  return j.dump(2);
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("synth spec not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValueError("synth spec unreadable: " + std::string(e.what()));
  }
  SynthSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.shots = j.at("shots").get<int>();
  spec.size = j.at("size").get<int>();
  spec.sigma = j.at("sigma").get<double>();
  spec.delta = j.at("delta").get<double>();
  spec.p_correct = j.at("p_correct").get<double>();
  spec.forward_base = j.value("forward_base", -10.0);
  spec.backward_base = j.value("backward_base", -1.0);
  spec.context_free = j.value("context_free", false);
  for (const auto& ex : j.at("few_shot"))
    spec.few_shot.push_back(
        Example{ex.at("query").get<std::string>(), ex.at("answer").get<std::string>()});
  for (const auto& q : j.at("dataset"))
    spec.dataset.push_back(SynthQuery{q.at("id").get<std::string>(),
                                      q.at("query").get<std::string>(),
                                      q.at("gold").get<std::string>()});
  if (spec.sigma < 0 || spec.delta < 0 || spec.forward_base > 0 || spec.backward_base > 0)
    throw ValueError("synth spec noise parameters out of range");
  return spec;
}

void write_synth_task(const SynthSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "few_shot.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& ex : spec.few_shot) {
      json j{{"query", ex.query}, {"answer", ex.answer}};
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir / "dataset.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& q : spec.dataset) {
      json j{{"id", q.id}, {"query", q.query}, {"gold", q.gold}};
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir / "backend.json", std::ios::binary | std::ios::trunc);
    out << synth_spec_to_json(spec) << "\n";
  }
}

SynthBackend::SynthBackend(SynthSpec spec) : spec_(std::move(spec)) {
  if (spec_.few_shot.empty() || spec_.dataset.empty())
    throw ValueError("synth spec carries no task content");
}

std::string SynthBackend::id() const {
  return "synth:" + spec_.kind + ":s" + std::to_string(spec_.seed) +
         (spec_.context_free ? ":ctxfree" : "");
}

const SynthQuery* SynthBackend::find_query_by_id(const std::string& id) const {
  for (const auto& q : spec_.dataset)
    if (q.id == id) return &q;
  return nullptr;
}

const SynthQuery* SynthBackend::last_query_in(const std::string& text) const {
  static const std::regex id_re("\\[(q[0-9]+)\\]");
  const SynthQuery* found = nullptr;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), id_re);
       it != std::sregex_iterator(); ++it) {
    if (const SynthQuery* q = find_query_by_id((*it)[1].str())) found = q;
  }
  return found;
}

std::vector<Candidate> SynthBackend::generate(const GenerationRequest& req) {
  validate_generation_request(req);

  // Judge prompts list candidate texts and ask for the best response index;
  // the synthetic judge reports the first correct one.
  if (req.context.find(kJudgeMarker) != std::string::npos &&
      std::regex_search(req.context, kCandidateRe)) {
    int position = 0;
    int answer = 0;
    for (auto it = std::sregex_iterator(req.context.begin(), req.context.end(), kCandidateRe);
         it != std::sregex_iterator(); ++it, ++position) {
      const int k = std::stoi((*it)[1].str());
      const std::string qid = (*it)[2].str();
      if (candidate_correct(spec_, qid, k)) {
        answer = position;
        break;
      }
    }
    return {Candidate{std::to_string(answer), 0, std::nullopt}};
  }

  const SynthQuery* q = last_query_in(req.context);
  if (!q) throw PermanentError("synthetic backend does not recognize the generation context");

  std::vector<Candidate> out;
  for (int k = 0; k < req.num_samples; ++k) {
    Candidate c;
    c.response = candidate_text(spec_, *q, k);
    c.index = k;
    if (req.want_logprobs) {
      const std::size_t split = c.response.rfind("Answer:");
      const std::string head = c.response.substr(0, split + 7);
      const std::string tail = c.response.substr(split + 7);
      c.gen_token_logprobs = std::vector<TokenScore>{
          TokenScore{head, forward_logprob(spec_, q->id, k), {}},
          TokenScore{tail, 0.0, {}}};
    }
    out.push_back(std::move(c));
  }
  return out;
}

LikelihoodResponse SynthBackend::score_continuation(const LikelihoodRequest& req) {
  validate_likelihood_request(req);
  LikelihoodResponse resp;
  resp.tokenizer_id = "synth-spans";

  std::smatch m;
  if (std::regex_search(req.continuation, m, kCandidateRe)) {
    // Forward request: the continuation is a candidate response.
    const int k = std::stoi(m[1].str());
    const SynthQuery* q = find_query_by_id(m[2].str());
    if (!q) throw PermanentError("synthetic backend does not know query " + m[2].str());

    const std::size_t split = req.continuation.rfind("Answer:");
    TokenScore head;
    head.token = req.continuation.substr(0, split + 7);
    head.logprob = forward_logprob(spec_, q->id, k);
    TokenScore tail;
    tail.token = req.continuation.substr(split + 7);
    tail.logprob = 0.0;
    if (req.top_k_alternatives >= 2) {
      const double gap = answer_gap(spec_, q->id, k);
      const double p1 = 0.5 + gap / 2.0;
      const double p2 = 0.5 - gap / 2.0;
      head.top_alternatives = {{head.token, std::log(0.9)}, {"#", std::log(0.05)}};
      tail.top_alternatives = {{tail.token, std::log(p1)}, {"#", std::log(p2)}};
    }
    resp.token_scores = {std::move(head), std::move(tail)};
    validate_likelihood_response(resp, req.continuation);
    return resp;
  }

  // Backward request: the continuation is one few-shot answer.
  for (const auto& ex : spec_.few_shot) {
    if (req.continuation != ex.answer) continue;
    double lp = uncond_base(spec_, ex.answer);
    std::smatch ctx_match;
    if (!spec_.context_free && std::regex_search(req.context, ctx_match, kCandidateRe)) {
      const int k = std::stoi(ctx_match[1].str());
      lp += backward_gain(spec_, ctx_match[2].str(), k);
    }
    TokenScore ts;
    ts.token = req.continuation;
    ts.logprob = lp;
    if (req.top_k_alternatives >= 2)
      ts.top_alternatives = {{ts.token, std::log(0.6)}, {"#", std::log(0.3)}};
    resp.token_scores = {std::move(ts)};
    validate_likelihood_response(resp, req.continuation);
    return resp;
  }

  throw PermanentError("synthetic backend cannot interpret the continuation");
}

std::vector<double> SynthBackend::embed(const std::string& text) {
  return hashing_embed(text, 64);
}

}  // namespace referi::synth
