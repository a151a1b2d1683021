#include "rsub/tasks/pairs.hpp"

#include <algorithm>

#include "rsub/common/error.hpp"

namespace rsub {

std::string_view to_string(BehaviorClass c) {
  switch (c) {
    case BehaviorClass::kYesYes: return "Yes->Yes";
    case BehaviorClass::kYesNo: return "Yes->No";
    case BehaviorClass::kNoYes: return "No->Yes";
    case BehaviorClass::kNoNo: return "No->No";
  }
  return "?";
}

BehaviorClass behavior_class(Label base, Label counterfactual) {
  if (base == Label::kYes) {
    return counterfactual == Label::kYes ? BehaviorClass::kYesYes : BehaviorClass::kYesNo;
  }
  return counterfactual == Label::kYes ? BehaviorClass::kNoYes : BehaviorClass::kNoNo;
}

std::vector<CounterfactualPair> make_counterfactual_pairs(const TaskSpec& spec,
                                                          Template t, const DecisionOracle& oracle,
                                                          const PairSamplerConfig& config,
                                                          SeedStream& rng) {
  require(config.n_per_class >= 1 && config.candidate_batch >= 1 && config.draw_budget >= 1,
          ErrorKind::kContract, "pair sampler: sizes must be positive");
  const bool explicit_mode = t == Template::kExplicitRace;
  std::vector<CounterfactualPair> out;
  for (int inst = 0; inst < spec.num_institutions(); ++inst) {
    std::array<std::vector<CounterfactualPair>, 4> buckets;
    auto all_full = [&] {
      return std::all_of(buckets.begin(), buckets.end(), [&](const auto& b) {
        return static_cast<int>(b.size()) >= config.n_per_class;
      });
    };
    int draws = 0;
    while (!all_full() && draws < config.draw_budget) {
      const int n = std::min(config.candidate_batch, config.draw_budget - draws);
      std::vector<CounterfactualPair> cand(n);
      std::vector<EncodedPrompt> queries;
      queries.reserve(2 * n);
      for (auto& c : cand) {
        c.target_profile = sample_profile(spec, rng, explicit_mode);
        c.target_profile.institution = inst;
        c.source_profile = sample_profile(spec, rng, explicit_mode);
        c.source_profile.institution = inst;
        c.target = render_prompt(c.target_profile, t);
        c.source = render_prompt(c.source_profile, t);
        queries.push_back(c.target);
        queries.push_back(c.swapped());
      }
      const auto labels = oracle(queries);
      require(labels.size() == queries.size(), ErrorKind::kContract,
              "oracle returned the wrong number of labels");
      for (int i = 0; i < n; ++i) {
        auto& c = cand[i];
        c.base = labels[2 * i];
        c.counterfactual = labels[2 * i + 1];
        c.behavior = behavior_class(c.base, c.counterfactual);
        auto& bucket = buckets[static_cast<int>(c.behavior)];
        if (static_cast<int>(bucket.size()) < config.n_per_class) bucket.push_back(c);
      }
      draws += n;
    }
    for (int c = 0; c < kNumBehaviorClasses; ++c) {
      if (static_cast<int>(buckets[c].size()) < config.n_per_class && !config.best_effort) {
        fail(ErrorKind::kSaturation,
             "pair sampler: " + spec.institutions[inst] + " class " +
                 std::string(to_string(static_cast<BehaviorClass>(c))) + " has " +
                 std::to_string(buckets[c].size()) + " of " + std::to_string(config.n_per_class) +
                 " pairs after " + std::to_string(draws) + " draws");
      }
      out.insert(out.end(), buckets[c].begin(), buckets[c].end());
    }
  }
  return out;
}

PairSplits split_pairs(std::vector<CounterfactualPair> pairs, std::size_t n_train,
                       std::size_t n_dev, std::size_t n_test, SeedStream& rng) {
  // Fisher-Yates with our own draws so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = pairs.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next() % i);
    std::swap(pairs[i - 1], pairs[j]);
  }
  PairSplits s;
  std::size_t at = 0;
  auto take = [&](std::size_t n, std::vector<CounterfactualPair>& dst) {
    const std::size_t m = std::min(n, pairs.size() - at);
    dst.assign(pairs.begin() + static_cast<long>(at), pairs.begin() + static_cast<long>(at + m));
    at += m;
  };
  take(n_train, s.train);
  take(n_dev, s.dev);
  take(n_test, s.test);
  return s;
}

std::array<int, 4> class_counts(std::span<const CounterfactualPair> pairs) {
  std::array<int, 4> c{};
  for (const auto& p : pairs) ++c[static_cast<int>(p.behavior)];
  return c;
}

}  // namespace rsub
