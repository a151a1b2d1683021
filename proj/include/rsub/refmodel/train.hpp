#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rsub/refmodel/model.hpp"
#include "rsub/refmodel/teacher.hpp"

namespace rsub {

struct TrainConfig {
  int n_train = 20000;
  int batch = 64;
  double learning_rate = 3e-4;
  int max_epochs = 10;
  double target_agreement = 0.97;
  int n_heldout = 2000;
  std::vector<Setting> settings = {Setting{}};

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LabeledPrompt {
  Profile profile;
  EncodedPrompt prompt;
  Label label = Label::kNo;
};

/// Teacher-labeled prompts, each setting drawn uniformly from `settings`.
std::vector<LabeledPrompt> make_teacher_dataset(const Teacher& teacher,
                                                const std::vector<Setting>& settings, int n,
                                                SeedStream& rng);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0;
  double heldout_agreement = 0;
};

struct TrainResult {
  ModelWeights weights;
  std::vector<EpochRecord> history;
  double heldout_agreement = 0;
};

double agreement(const ModelWeights& w, const std::vector<LabeledPrompt>& data);

/// Trains until held-out agreement reaches the target. Throws kDivergence
/// (with the final metrics) when the epoch budget runs out or the loss is
/// non-finite.
TrainResult train_reference(const ModelConfig& config, const Teacher& teacher,
                            const TrainConfig& train, std::uint64_t seed,
                            const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace rsub
