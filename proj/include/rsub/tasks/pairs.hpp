#pragma once

#include <array>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "rsub/common/seed.hpp"
#include "rsub/tasks/tasks.hpp"

namespace rsub {

enum class BehaviorClass { kYesYes = 0, kYesNo = 1, kNoYes = 2, kNoNo = 3 };
inline constexpr int kNumBehaviorClasses = 4;

std::string_view to_string(BehaviorClass c);
BehaviorClass behavior_class(Label base, Label counterfactual);

struct CounterfactualPair {
  Profile source_profile;
  Profile target_profile;
  EncodedPrompt source;
  EncodedPrompt target;
  Label base = Label::kNo;
  Label counterfactual = Label::kNo;
  BehaviorClass behavior = BehaviorClass::kNoNo;

  /// Target prompt carrying the source's name token.
  EncodedPrompt swapped() const { return swap_name_token(target, source); }
  bool operator==(const CounterfactualPair&) const = default;
};

/// Batched decision oracle, one label per prompt.
using DecisionOracle = std::function<std::vector<Label>(std::span<const EncodedPrompt>)>;

struct PairSamplerConfig {
  int n_per_class = 5;          // per institution
  int draw_budget = 10000;      // draws per institution before giving up on a class
  int candidate_batch = 64;
  bool best_effort = false;     // return partial classes instead of failing
};

/// Rejection-samples pairs until every institution holds exactly n pairs per
/// behavior class. Output is grouped by institution, classes in enum order.
std::vector<CounterfactualPair> make_counterfactual_pairs(const TaskSpec& spec,
                                                          Template t, const DecisionOracle& oracle,
                                                          const PairSamplerConfig& config,
                                                          SeedStream& rng);

struct PairSplits {
  std::vector<CounterfactualPair> train;
  std::vector<CounterfactualPair> dev;
  std::vector<CounterfactualPair> test;
};

/// Deterministic shuffle, then consecutive train/dev/test slices. Sizes larger
/// than what remains are clipped.
PairSplits split_pairs(std::vector<CounterfactualPair> pairs, std::size_t n_train,
                       std::size_t n_dev, std::size_t n_test, SeedStream& rng);

std::array<int, 4> class_counts(std::span<const CounterfactualPair> pairs);

}  // namespace rsub
