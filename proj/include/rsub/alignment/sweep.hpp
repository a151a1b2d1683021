#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsub/alignment/das.hpp"

namespace rsub {

struct SweepCell {
  Tap tap;
  double dev_iia = 0;
  double test_iia = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  bool trained = false;  // false when the tap cannot reach the readout
};

struct SweepResult {
  std::vector<SweepCell> cells;  // layer-major
  Tap best;
  std::optional<Subspace> best_subspace;
  double trivial_baseline = 0;

  const SweepCell& cell(Tap t) const;
  std::string to_csv() const;
};

/// One subspace per (layer, position) cell. Cells whose position lies after
/// every final position cannot change a decision and are scored without
/// training. Best tap = max dev IIA, ties to larger layer, then later position.
SweepResult location_sweep(const ModelWeights& w, std::span<const CounterfactualPair> train,
                           std::span<const CounterfactualPair> dev,
                           std::span<const CounterfactualPair> test, const DasConfig& config,
                           std::span<const int> layers, std::span<const int> positions);

/// Full grid: layers 0..L, positions 0..context-1.
SweepResult location_sweep(const ModelWeights& w, std::span<const CounterfactualPair> train,
                           std::span<const CounterfactualPair> dev,
                           std::span<const CounterfactualPair> test, const DasConfig& config);

}  // namespace rsub
