#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsub/interventions/interventions.hpp"
#include "rsub/refmodel/model.hpp"
#include "rsub/tasks/pairs.hpp"

namespace rsub {

struct DasConfig {
  int k = 16;
  bool mask_mode = false;
  int epochs = 1;
  int batch = 32;
  double rotation_lr = 1e-4;
  double mask_lr = 1e-3;
  double warmup_fraction = 0.1;
  double temperature_start = 1.0;
  double temperature_end = 0.01;
  Tap tap{};
  std::uint64_t seed = 0;
  int log_every = 10;

  /// Settings sized for the desk-scale model: the defaults above move a
  /// 64-dim rotation too little in 63 steps.
  static DasConfig desk();
  nlohmann::json to_json() const;
  static DasConfig from_json(const nlohmann::json& j);
};

/// Decision of the model on the target prompt carrying the source's name.
/// Throws kDatasetIntegrity when it differs from the stored label.
Label interchange_oracle(const ModelWeights& w, const CounterfactualPair& pair);
/// Batched recomputation; returns the number of pairs whose stored label matches.
std::size_t verify_pairs(const ModelWeights& w, std::span<const CounterfactualPair> pairs);

/// Residual streams of a pair set at one tap, computed once and reused by
/// every loss and evaluation at that tap.
class TapCache {
 public:
  TapCache(const ModelWeights& w, std::span<const CounterfactualPair> pairs, Tap tap,
           std::size_t chunk = 256);

  std::size_t size() const { return labels_.size(); }
  const Tap& tap() const { return tap_; }
  /// Whether the tap can influence the readout of any target.
  bool affects_readout() const { return affects_; }

  /// Mean two-way cross-entropy of the DII-intervened Yes/No logits against the
  /// counterfactual labels, for rows `idx`. `rotated_dii` maps (target rows,
  /// source rows) to the replaced rows on the tape.
  ad::Var loss(Graph& g, std::span<const std::size_t> idx,
               const std::function<ad::Var(ad::Var, ad::Var)>& rotated_dii) const;
  std::vector<Label> dii_decisions(const Subspace& s) const;
  double iia(const Subspace& s) const;
  /// Fraction of pairs whose counterfactual label equals the base label.
  double trivial_baseline() const;

  const ModelWeights& weights() const { return w_; }

 private:
  ad::Var dii_logits(Graph& g, std::span<const std::size_t> idx,
                     const std::function<ad::Var(ad::Var, ad::Var)>& rotated_dii,
                     std::vector<int>* classes) const;

  const ModelWeights& w_;
  Tap tap_;
  std::size_t T_ = 0;
  bool affects_ = true;
  Tensor residual_;  // n * T rows
  Tensor targets_;   // n x d tap rows
  Tensor sources_;   // n x d tap rows
  std::vector<Label> labels_;
  std::vector<Label> base_;
  std::vector<int> final_pos_;
};

/// das_loss for a fixed subspace over all pairs of the cache.
double das_loss(const TapCache& cache, const Subspace& s);

struct DasLogEntry {
  int step = 0;
  int epoch = 0;
  double loss = 0;
  std::optional<double> dev_iia;
  double orthonormality_residual = 0;
};

struct DasResult {
  Subspace subspace;
  std::vector<DasLogEntry> log;
  std::vector<double> dev_iia_per_epoch;
  double final_dev_iia = 0;
};

std::string log_to_jsonl(const std::vector<DasLogEntry>& log);

/// Trains the rotation (and mask) at config.tap. Throws kDivergence on a
/// non-finite loss.
DasResult train_das(const ModelWeights& w, std::span<const CounterfactualPair> train,
                    std::span<const CounterfactualPair> dev, const DasConfig& config);
/// Same, reusing caches that were built at config.tap.
DasResult train_das(const TapCache& train, const TapCache& dev, const DasConfig& config);

/// Fraction of pairs where the DII run agrees with the counterfactual label.
double iia_eval(const ModelWeights& w, const Subspace& s, std::span<const CounterfactualPair> pairs);

/// Basis of the first k columns of r0 * cayley(skew(upper)).
Tensor rotation_matrix(const Tensor& r0, const Tensor& upper);
/// Random orthogonal start for the rotation, d x d.
Tensor initial_rotation(std::size_t d, std::uint64_t seed);

}  // namespace rsub
