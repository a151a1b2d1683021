#include "rsub/refmodel/train.hpp"

#include <cmath>
#include <numeric>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"
#include "rsub/numerics/adam.hpp"

namespace rsub {

nlohmann::json TrainConfig::to_json() const {
  std::vector<std::string> ids;
  for (const auto& s : settings) ids.push_back(s.id());
  return {{"n_train", n_train},       {"batch", batch},         {"learning_rate", learning_rate},
          {"max_epochs", max_epochs}, {"target_agreement", target_agreement},
          {"n_heldout", n_heldout},   {"settings", ids}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.n_train = j.value("n_train", c.n_train);
  c.batch = j.value("batch", c.batch);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.target_agreement = j.value("target_agreement", c.target_agreement);
  c.n_heldout = j.value("n_heldout", c.n_heldout);
  if (j.contains("settings")) {
    c.settings.clear();
    for (const auto& s : j["settings"]) c.settings.push_back(Setting::parse(s.get<std::string>()));
  }
  return c;
}

std::vector<LabeledPrompt> make_teacher_dataset(const Teacher& teacher,
                                                const std::vector<Setting>& settings, int n,
                                                SeedStream& rng) {
  require(!settings.empty(), ErrorKind::kContract, "training needs at least one setting");
  const TaskSpec adm = TaskSpec::admissions(), hir = TaskSpec::hiring();
  std::vector<LabeledPrompt> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Setting& s =
        settings.size() == 1 ? settings[0]
                             : settings[rng.uniform_int(0, static_cast<int>(settings.size()) - 1)];
    LabeledPrompt lp;
    lp.profile = sample_profile(s.family == Family::kAdmissions ? adm : hir, rng, s.explicit_mode());
    lp.prompt = render_prompt(lp.profile, s.tmpl);
    lp.label = teacher.label(lp.profile);
    out.push_back(lp);
  }
  return out;
}

double agreement(const ModelWeights& w, const std::vector<LabeledPrompt>& data) {
  std::vector<EncodedPrompt> prompts;
  prompts.reserve(data.size());
  for (const auto& d : data) prompts.push_back(d.prompt);
  const auto got = decide_all(w, prompts);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += got[i] == data[i].label;
  return data.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train_reference(const ModelConfig& config, const Teacher& teacher,
                            const TrainConfig& train, std::uint64_t seed,
                            const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  require(train.n_train >= 1 && train.batch >= 1 && train.max_epochs >= 1, ErrorKind::kContract,
          "training sizes must be positive");
  SeedStream data_rng(derive_seed(seed, "train/data"));
  SeedStream heldout_rng(derive_seed(seed, "train/heldout"));
  SeedStream shuffle_rng(derive_seed(seed, "train/shuffle"));
  const auto data = make_teacher_dataset(teacher, train.settings, train.n_train, data_rng);
  const auto heldout = make_teacher_dataset(teacher, train.settings, train.n_heldout, heldout_rng);

  TrainResult result;
  result.weights = ModelWeights::initialize(config, derive_seed(seed, "train/init"));
  Adam opt({.learning_rate = train.learning_rate});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EncodedPrompt> batch;
  std::vector<int> targets;
  for (int epoch = 1; epoch <= train.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.next() % i)]);
    }
    double loss_sum = 0;
    std::size_t steps = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(train.batch)) {
      const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(train.batch));
      batch.clear();
      targets.clear();
      for (std::size_t k = at; k < end; ++k) {
        const auto& lp = data[order[k]];
        batch.push_back(lp.prompt);
        targets.push_back(lp.label == Label::kYes ? config.yes_id : config.no_id);
      }
      ad::Tape tape;
      Graph g(tape, result.weights, true);
      const std::size_t T = readout_length(batch);
      ad::Var x = g.run_to(batch, T, config.layers);
      ad::Var loss = ad::cross_entropy(g.logits(x, final_rows(batch, T)), targets);
      const double l = loss.value()[0];
      if (!std::isfinite(l)) {
        fail(ErrorKind::kDivergence, "non-finite training loss at epoch " + std::to_string(epoch) +
                                         " step " + std::to_string(steps));
      }
      opt.step(result.weights.params, tape.backward(loss));
      loss_sum += l;
      ++steps;
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(steps), agreement(result.weights, heldout)};
    result.history.push_back(rec);
    result.heldout_agreement = rec.heldout_agreement;
    if (on_epoch) on_epoch(rec);
    if (rec.heldout_agreement >= train.target_agreement) break;
  }

  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : result.history) {
    history.push_back(
        {{"epoch", h.epoch}, {"mean_loss", h.mean_loss}, {"heldout_agreement", h.heldout_agreement}});
  }
  result.weights.meta = {{"teacher", teacher.to_json()},
                         {"train", train.to_json()},
                         {"seed", seed},
                         {"history", history},
                         {"heldout_agreement", result.heldout_agreement}};
  if (result.heldout_agreement < train.target_agreement) {
    fail(ErrorKind::kDivergence,
         "held-out agreement " + std::to_string(result.heldout_agreement) + " below target " +
             std::to_string(train.target_agreement) + " after " +
             std::to_string(result.history.size()) + " epochs (final loss " +
             std::to_string(result.history.back().mean_loss) + ")");
  }
  return result;
}

}  // namespace rsub
