#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsub/tasks/tasks.hpp"

namespace rsub {

/// n_profiles x 4 decisions (1 = Yes), race columns in roster order.
class DecisionTable {
 public:
  using Row = std::array<std::uint8_t, 4>;

  DecisionTable() = default;
  explicit DecisionTable(std::vector<Row> rows);
  /// Decisions in panel order: four consecutive entries per profile.
  static DecisionTable from_flat(std::span<const Label> decisions);

  std::size_t rows() const { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_[i]; }
  const std::vector<Row>& data() const { return rows_; }
  bool empty() const { return rows_.empty(); }

 private:
  std::vector<Row> rows_;
};

/// 100 x mean over rows of the population standard deviation of the row.
double bias_score(const DecisionTable& t);
/// 100 x (mean(after) - mean(before)) over all cells, in percentage points.
double outcome_delta(const DecisionTable& before, const DecisionTable& after);
std::array<double, 4> acceptance_by_race(const DecisionTable& t);

/// Two-sided Welch unequal-variance t-test p-value.
double welch_t_test(std::span<const double> a, std::span<const double> b);

using PMatrix = std::array<std::array<std::optional<double>, 4>, 4>;

struct TrialSet {
  std::vector<std::array<double, 4>> rates;  // one row per trial
  /// Per-race rates across trials.
  std::vector<double> race_series(Race r) const;
  std::array<double, 4> mean_rates() const;
};

struct TrialAggregate {
  TrialSet trials;
  PMatrix p_matrix;  // diagonal empty
  std::vector<DecisionTable> tables;
};

/// Produces the decision table of one trial from its panel size and seed.
using TrialRunner = std::function<DecisionTable(std::size_t panel_size, std::uint64_t seed)>;

/// Independent panels per trial with seeds derived from `seed`, merged in trial order.
TrialAggregate trial_aggregate(const TrialRunner& runner, int n_trials, std::size_t panel_size,
                               std::uint64_t seed);
PMatrix pairwise_p_values(const TrialSet& t);

nlohmann::json p_matrix_to_json(const PMatrix& p);

struct MetricRecord {
  double bias_score = 0;
  std::optional<double> outcome_delta;
  std::array<double, 4> rates{};
  std::optional<PMatrix> p_matrix;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  nlohmann::json intervention;

  nlohmann::json to_json() const;
  static MetricRecord from_json(const nlohmann::json& j);
};

PMatrix p_matrix_from_json(const nlohmann::json& j);

/// Metric record of a table; `before` supplies the outcome delta reference.
MetricRecord make_record(const DecisionTable& t, const DecisionTable* before, std::uint64_t seed,
                         nlohmann::json intervention);

}  // namespace rsub
