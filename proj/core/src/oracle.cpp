// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "referi/hash.hpp"

namespace referi {

namespace {

constexpr std::size_t kMaxJointSize = 100000;

double uniform_positive(std::mt19937_64& rng) {
  // Bounded away from zero so every table entry stays strictly positive.
  return 0.2 + 0.8 * unit_from_bits(rng());
}

}  // namespace

ExactJointOracle::ExactJointOracle(const OracleShape& shape, std::uint64_t seed)
    : shape_(shape), seed_(seed) {
  if (shape_.num_examples < 1) throw ValueError("oracle needs at least one example");
  auto check = [](const OracleVarShape& v, const char* what) {
    if (v.slots < 1 || v.slots > 5) throw ValueError(std::string(what) + ": slots must be in [1,5]");
    if (v.alphabet < 2 || v.alphabet > 6)
      throw ValueError(std::string(what) + ": alphabet must be in [2,6]");
  };
  check(shape_.query, "query");
  check(shape_.answer, "answer");
  check(shape_.response, "response");

  auto add_var = [&](Var::Role role, int example, const OracleVarShape& vs,
                     const std::string& prefix) {
    Var v;
    v.role = role;
    v.example = example;
    v.first_slot = static_cast<int>(slots_.size());
    v.slots = vs.slots;
    const int var_index = static_cast<int>(vars_.size());
    for (int s = 0; s < vs.slots; ++s) {
      Slot slot;
      slot.var = var_index;
      slot.alphabet = vs.alphabet;
      for (int val = 0; val < vs.alphabet; ++val) {
        std::string atom = prefix + "S" + std::to_string(s) + "V" + std::to_string(val);
        slot.atoms.push_back(atom);
        atom_map_[atom] = {static_cast<int>(slots_.size()), val};
      }
      slots_.push_back(std::move(slot));
    }
    vars_.push_back(v);
  };

  for (int i = 0; i < shape_.num_examples; ++i)
    add_var(Var::Role::Query, i, shape_.query, "Q" + std::to_string(i));
  for (int i = 0; i < shape_.num_examples; ++i)
    add_var(Var::Role::Answer, i, shape_.answer, "A" + std::to_string(i));
  add_var(Var::Role::Response, -1, shape_.response, "R");

  std::size_t total = 1;
  strides_.assign(slots_.size(), 0);
  for (std::size_t s = slots_.size(); s-- > 0;) {
    strides_[s] = total;
    total *= static_cast<std::size_t>(slots_[s].alphabet);
    if (total > kMaxJointSize) throw ValueError("oracle joint space exceeds 10^5 entries");
  }
  table_.assign(total, 0.0);
  build_table(seed);
}

void ExactJointOracle::build_table(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x5eedf00dULL));

  const int n = shape_.num_examples;
  auto domain = [](const OracleVarShape& v) {
    std::size_t d = 1;
    for (int s = 0; s < v.slots; ++s) d *= static_cast<std::size_t>(v.alphabet);
    return d;
  };
  const std::size_t qd = domain(shape_.query);
  const std::size_t ad = domain(shape_.answer);
  const std::size_t rd = domain(shape_.response);

  auto normalize = [](std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
  };

  std::vector<double> pr(rd);
  for (auto& v : pr) v = uniform_positive(rng);
  normalize(pr);

  std::vector<std::vector<double>> pq(n, std::vector<double>(qd));
  for (auto& row : pq) {
    for (auto& v : row) v = uniform_positive(rng);
    normalize(row);
  }

  // P(a_i | q_i, r): one normalized row per (example, query value, response value).
  std::vector<std::vector<std::vector<double>>> pa(
      n, std::vector<std::vector<double>>(qd * rd, std::vector<double>(ad)));
  for (auto& per_example : pa) {
    for (auto& row : per_example) {
      for (auto& v : row) v = uniform_positive(rng);
      normalize(row);
    }
  }

  // Flatten the DAG factors into the explicit joint table.
  std::vector<int> digits(slots_.size(), 0);
  auto value_of = [&](const Var& var) {
    std::size_t v = 0;
    for (int s = 0; s < var.slots; ++s)
      v = v * static_cast<std::size_t>(slots_[var.first_slot + s].alphabet) +
          static_cast<std::size_t>(digits[var.first_slot + s]);
    return v;
  };
  const Var& rvar = vars_.back();
  for (std::size_t e = 0; e < table_.size(); ++e) {
    const std::size_t rv = value_of(rvar);
    double p = pr[rv];
    for (int i = 0; i < n; ++i) {
      const std::size_t qv = value_of(vars_[i]);
      const std::size_t av = value_of(vars_[n + i]);
      p *= pq[i][qv];
      p *= pa[i][qv * rd + rv][av];
    }
    table_[e] = p;
    for (std::size_t s = slots_.size(); s-- > 0;) {
      if (++digits[s] < slots_[s].alphabet) break;
      digits[s] = 0;
    }
  }

  // Global renormalization keeps the table an exact distribution regardless
  // of factor rounding.
  double total = 0.0, comp = 0.0;
  for (double v : table_) {
    const double y = v - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  for (double& v : table_) v /= total;
}

double ExactJointOracle::table_total() const {
  double total = 0.0, comp = 0.0;
  for (double v : table_) {
    const double y = v - comp;
    const double t = total + y;
    comp = (t - total) - y;
    total = t;
  }
  return total;
}

std::vector<int> ExactJointOracle::entry_assignment(std::size_t entry) const {
  std::vector<int> digits(slots_.size(), 0);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    digits[s] = static_cast<int>((entry / strides_[s]) %
                                 static_cast<std::size_t>(slots_[s].alphabet));
  }
  return digits;
}

std::string ExactJointOracle::render_value(int var, const std::vector<int>& slot_values) const {
  const Var& v = vars_[var];
  std::string out;
  for (int s = 0; s < v.slots; ++s) {
    if (s > 0) out += " ";
    out += slots_[v.first_slot + s].atoms[slot_values[s]];
  }
  return out;
}

ExactJointOracle::SlotBindings ExactJointOracle::parse_atoms(const std::string& text) const {
  SlotBindings bindings;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    const std::string word = text.substr(start, i - start);
    auto it = atom_map_.find(word);
    if (it == atom_map_.end()) continue;  // template boilerplate
    const auto [slot, value] = it->second;
    auto existing = bindings.find(slot);
    if (existing != bindings.end() && existing->second != value)
      throw PermanentError("oracle context binds one slot to two values: " + word);
    bindings[slot] = value;
  }
  return bindings;
}

double ExactJointOracle::marginal(const SlotBindings& bindings) const {
  std::vector<int> bound(slots_.size(), -1);
  for (const auto& [slot, value] : bindings) {
    if (slot < 0 || slot >= static_cast<int>(slots_.size()))
      throw ValueError("slot id out of range");
    bound[slot] = value;
  }
  double sum = 0.0;
  std::vector<int> digits(slots_.size(), 0);
  for (std::size_t e = 0; e < table_.size(); ++e) {
    bool ok = true;
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      if (bound[s] >= 0 && digits[s] != bound[s]) {
        ok = false;
        break;
      }
    }
    if (ok) sum += table_[e];
    for (std::size_t s = slots_.size(); s-- > 0;) {
      if (++digits[s] < slots_[s].alphabet) break;
      digits[s] = 0;
    }
  }
  return sum;
}

double ExactJointOracle::log_marginal(const SlotBindings& bindings) const {
  return std::log(marginal(bindings));
}

double ExactJointOracle::log_conditional(const SlotBindings& given,
                                         const SlotBindings& target) const {
  SlotBindings merged = given;
  for (const auto& [slot, value] : target) {
    auto it = merged.find(slot);
    if (it != merged.end() && it->second != value)
      throw ValueError("target binding conflicts with given binding");
    merged[slot] = value;
  }
  return std::log(marginal(merged)) - std::log(marginal(given));
}

double ExactJointOracle::true_log_response_prob(const std::string& response_text) const {
  return log_marginal(bindings_for_response(response_text));
}

ExactJointOracle::SlotBindings ExactJointOracle::bindings_for_response(
    const std::string& response_text) const {
  SlotBindings b = parse_atoms(response_text);
  const Var& rvar = vars_.back();
  for (int s = 0; s < rvar.slots; ++s)
    if (!b.count(rvar.first_slot + s))
      throw ValueError("response text does not bind every response slot");
  for (const auto& [slot, _] : b)
    if (slots_[slot].var != static_cast<int>(vars_.size()) - 1)
      throw ValueError("response text binds non-response atoms");
  return b;
}

ExactJointOracle::SlotBindings ExactJointOracle::bindings_for_example(int i,
                                                                      const Example& ex) const {
  if (i < 0 || i >= shape_.num_examples) throw ValueError("example index out of range");
  SlotBindings b = parse_atoms(ex.query);
  SlotBindings ba = parse_atoms(ex.answer);
  b.insert(ba.begin(), ba.end());
  const Var& qv = vars_[i];
  const Var& av = vars_[shape_.num_examples + i];
  for (int s = 0; s < qv.slots; ++s)
    if (!b.count(qv.first_slot + s)) throw ValueError("example text misses a query slot");
  for (int s = 0; s < av.slots; ++s)
    if (!b.count(av.first_slot + s)) throw ValueError("example text misses an answer slot");
  return b;
}

FewShotSet ExactJointOracle::sample_few_shot(std::uint64_t seed) const {
  std::mt19937_64 rng(splitmix64(seed ^ 0xfe57a11ULL));
  const double u = unit_from_bits(rng());
  double acc = 0.0;
  std::size_t chosen = table_.size() - 1;
  for (std::size_t e = 0; e < table_.size(); ++e) {
    acc += table_[e];
    if (u <= acc) {
      chosen = e;
      break;
    }
  }
  const std::vector<int> digits = entry_assignment(chosen);
  std::vector<Example> examples;
  const int n = shape_.num_examples;
  for (int i = 0; i < n; ++i) {
    const Var& qv = vars_[i];
    const Var& av = vars_[n + i];
    std::vector<int> qvals(digits.begin() + qv.first_slot,
                           digits.begin() + qv.first_slot + qv.slots);
    std::vector<int> avals(digits.begin() + av.first_slot,
                           digits.begin() + av.first_slot + av.slots);
    examples.push_back(Example{render_value(i, qvals), render_value(n + i, avals)});
  }
  return FewShotSet(std::move(examples));
}

std::vector<Candidate> ExactJointOracle::generate(const GenerationRequest& req) {
  validate_generation_request(req);
  const SlotBindings bound = parse_atoms(req.context);

  const Var& rvar = vars_.back();
  std::size_t rdomain = 1;
  for (int s = 0; s < rvar.slots; ++s)
    rdomain *= static_cast<std::size_t>(slots_[rvar.first_slot + s].alphabet);

  // Conditional over full response tuples given the parsed context.
  std::vector<double> probs(rdomain, 0.0);
  std::vector<std::vector<int>> values(rdomain);
  const double denom = marginal(bound);
  for (std::size_t v = 0; v < rdomain; ++v) {
    std::vector<int> slot_values(rvar.slots, 0);
    std::size_t rest = v;
    for (int s = rvar.slots; s-- > 0;) {
      slot_values[s] = static_cast<int>(rest % slots_[rvar.first_slot + s].alphabet);
      rest /= static_cast<std::size_t>(slots_[rvar.first_slot + s].alphabet);
    }
    SlotBindings merged = bound;
    for (int s = 0; s < rvar.slots; ++s) merged[rvar.first_slot + s] = slot_values[s];
    probs[v] = marginal(merged) / denom;
    values[v] = std::move(slot_values);
  }

  // Temperature: 0 selects the mode, otherwise p^(1/T) renormalized.
  std::vector<double> weights = probs;
  if (req.temperature == 0.0) {
    const std::size_t best =
        std::distance(weights.begin(), std::max_element(weights.begin(), weights.end()));
    std::fill(weights.begin(), weights.end(), 0.0);
    weights[best] = 1.0;
  } else if (req.temperature != 1.0) {
    double total = 0.0;
    for (double& w : weights) {
      w = std::pow(w, 1.0 / req.temperature);
      total += w;
    }
    for (double& w : weights) w /= total;
  }

  std::mt19937_64 rng(splitmix64((req.seed ? *req.seed : seed_) ^ 0x9e11e7a7ULL));
  std::vector<Candidate> out;
  for (int k = 0; k < req.num_samples; ++k) {
    const double u = unit_from_bits(rng());
    double acc = 0.0;
    std::size_t chosen = rdomain - 1;
    for (std::size_t v = 0; v < rdomain; ++v) {
      acc += weights[v];
      if (u <= acc) {
        chosen = v;
        break;
      }
    }
    Candidate c;
    c.response = render_value(static_cast<int>(vars_.size()) - 1, values[chosen]);
    c.index = k;
    if (req.want_logprobs) {
      // Chain-rule logprobs of the sampled tuple under the untempered model.
      std::vector<TokenScore> toks;
      SlotBindings ctx = bound;
      for (int s = 0; s < rvar.slots; ++s) {
        const int slot = rvar.first_slot + s;
        SlotBindings target{{slot, values[chosen][s]}};
        TokenScore ts;
        ts.token = (s == 0 ? "" : " ") + slots_[slot].atoms[values[chosen][s]];
        ts.logprob = log_conditional(ctx, target);
        toks.push_back(std::move(ts));
        ctx[slot] = values[chosen][s];
      }
      c.gen_token_logprobs = std::move(toks);
    }
    out.push_back(std::move(c));
  }
  return out;
}

LikelihoodResponse ExactJointOracle::score_continuation(const LikelihoodRequest& req) {
  validate_likelihood_request(req);
  SlotBindings bound = parse_atoms(req.context);

  LikelihoodResponse resp;
  resp.tokenizer_id = "oracle-atoms";
  for (const std::string& raw : whitespace_tokenize(req.continuation)) {
    std::string word = trim(raw);
    auto it = atom_map_.find(word);
    if (it == atom_map_.end())
      throw PermanentError("oracle cannot tokenize continuation atom: '" + word + "'");
    const auto [slot, value] = it->second;
    if (bound.count(slot))
      throw PermanentError("continuation rebinds a slot already fixed by the context");

    TokenScore ts;
    ts.token = raw;
    ts.logprob = log_conditional(bound, SlotBindings{{slot, value}});

    if (req.top_k_alternatives > 0) {
      const double denom = marginal(bound);
      std::vector<std::pair<std::string, double>> alts;
      for (int v = 0; v < slots_[slot].alphabet; ++v) {
        SlotBindings merged = bound;
        merged[slot] = v;
        alts.emplace_back(slots_[slot].atoms[v], std::log(marginal(merged) / denom));
      }
      std::stable_sort(alts.begin(), alts.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      if (static_cast<int>(alts.size()) > req.top_k_alternatives)
        alts.resize(static_cast<std::size_t>(req.top_k_alternatives));
      ts.top_alternatives = std::move(alts);
    }

    bound[slot] = value;
    resp.token_scores.push_back(std::move(ts));
  }
  validate_likelihood_response(resp, req.continuation);
  return resp;
}

std::string ExactJointOracle::id() const {
  return "oracle:s" + std::to_string(seed_) + ":n" + std::to_string(shape_.num_examples);
}

OracleShape ExactJointOracle::random_shape(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x0a0b0c0dULL));
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  OracleShape shape;
  shape.num_examples = 1;
  shape.query = OracleVarShape{1, pick(2, 4)};
  shape.answer = OracleVarShape{pick(1, 2), pick(2, 3)};
  shape.response = OracleVarShape{pick(1, 2), pick(2, 4)};
  return shape;
}

std::shared_ptr<ExactJointOracle> ExactJointOracle::random_instance(std::uint64_t seed) {
  return std::make_shared<ExactJointOracle>(random_shape(seed), seed);
}

std::shared_ptr<ExactJointOracle> ExactJointOracle::from_spec_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("oracle spec not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValueError("oracle spec unreadable: " + std::string(e.what()));
  }
  OracleShape shape;
  shape.num_examples = j.value("num_examples", 1);
  auto read_var = [&](const char* key, OracleVarShape fallback) {
    if (!j.contains(key)) return fallback;
    OracleVarShape v;
    v.slots = j[key].value("slots", 1);
    v.alphabet = j[key].value("alphabet", 3);
    return v;
  };
  shape.query = read_var("query", shape.query);
  shape.answer = read_var("answer", shape.answer);
  shape.response = read_var("response", shape.response);
  const std::uint64_t seed = j.value("seed", 0ULL);
  return std::make_shared<ExactJointOracle>(shape, seed);
}

}  // namespace referi
