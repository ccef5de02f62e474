// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "referi/backend.hpp"
#include "referi/types.hpp"

namespace referi {

/// Shape of one oracle variable: a value is a tuple of `slots` atoms, each
/// slot ranging over `alphabet` symbols.
struct OracleVarShape {
  int slots = 1;
  int alphabet = 2;
};

struct OracleShape {
  int num_examples = 1;
  OracleVarShape query{1, 3};
  OracleVarShape answer{1, 3};
  OracleVarShape response{1, 3};
};

/// Test backend holding an explicit finite joint distribution over a
/// few-shot-set realization X = {(q_i, a_i)} and a response r for a fixed
/// test query, so every conditional the scores require is exactly
/// computable by marginal sums and Bayes' rule holds by construction.
///
/// The joint factors as P(r) * prod_i P(q_i) * prod_i P(a_i | q_i, r) with
/// random strictly positive factors drawn from the seed, then normalizes to
/// an explicit table. With one example this makes the mean-of-gains
/// backward decomposition exactly equal to log P(X|y) - log P(X), so the
/// full selection score reproduces log P(y) to float precision.
///
/// Text protocol: every (variable, slot, value) triple has a unique atom
/// token ("Q0S0V2", "A1S0V1", "RS1V0"); values render as space-joined
/// atoms, the fixed test query renders as "QT", and anything else in a
/// prompt (template boilerplate) is ignored when conditioning.
class ExactJointOracle final : public Backend {
public:
  ExactJointOracle(const OracleShape& shape, std::uint64_t seed);

  /// Randomized single-example instance family used by the verification
  /// suites.
  static OracleShape random_shape(std::uint64_t seed);
  static std::shared_ptr<ExactJointOracle> random_instance(std::uint64_t seed);

  /// Loads {seed, num_examples, query/answer/response shapes} from a JSON
  /// spec file.
  static std::shared_ptr<ExactJointOracle> from_spec_file(const std::filesystem::path& path);

  std::string id() const override;
  std::string model_id() const override { return "exact-joint"; }
  Capabilities capabilities() const override {
    return Capabilities{true, true, false, false, true};
  }

  std::vector<Candidate> generate(const GenerationRequest& req) override;
  LikelihoodResponse score_continuation(const LikelihoodRequest& req) override;

  // Direct-enumeration surface: the independent route used to verify the
  // scoring pipeline from outside.

  /// Partial assignment: global slot id -> value.
  using SlotBindings = std::map<int, int>;

  int num_examples() const { return shape_.num_examples; }
  std::size_t table_size() const { return table_.size(); }
  /// Compensated total of the table; 1 within 1e-12 by construction.
  double table_total() const;
  /// Probability of one fully specified table entry.
  double entry_probability(std::size_t entry) const { return table_[entry]; }
  /// Full slot assignment of one table entry.
  std::vector<int> entry_assignment(std::size_t entry) const;

  /// Scans any text for known atoms and returns the bindings they impose.
  SlotBindings parse_atoms(const std::string& text) const;
  /// log of the marginal probability of a partial assignment.
  double log_marginal(const SlotBindings& bindings) const;
  /// log P(target | given) by marginal ratio.
  double log_conditional(const SlotBindings& given, const SlotBindings& target) const;

  /// log P(r) for a rendered response text: the true candidate likelihood,
  /// since the fixed test query carries no information.
  double true_log_response_prob(const std::string& response_text) const;

  std::string test_query_text() const { return "QT"; }
  /// Draws one few-shot realization from the marginal of X.
  FewShotSet sample_few_shot(std::uint64_t seed) const;

  /// Bindings covering all slots of example i for a rendered Example.
  SlotBindings bindings_for_example(int i, const Example& ex) const;
  /// Bindings covering all response slots for a rendered response.
  SlotBindings bindings_for_response(const std::string& response_text) const;

private:
  struct Slot {
    int var = 0;       // index into vars_
    int alphabet = 0;
    std::vector<std::string> atoms;  // one per value
  };
  struct Var {
    enum class Role { Query, Answer, Response } role;
    int example = -1;  // for Query/Answer
    int first_slot = 0;
    int slots = 0;
  };

  std::string render_value(int var, const std::vector<int>& slot_values) const;
  double marginal(const SlotBindings& bindings) const;
  void build_table(std::uint64_t seed);

  OracleShape shape_;
  std::uint64_t seed_;
  std::vector<Var> vars_;
  std::vector<Slot> slots_;
  std::vector<std::size_t> strides_;
  std::map<std::string, std::pair<int, int>> atom_map_;  // atom -> (slot, value)
  std::vector<double> table_;
};

}  // namespace referi
