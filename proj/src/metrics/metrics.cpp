#include "rsub/metrics/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"

namespace rsub {

DecisionTable::DecisionTable(std::vector<Row> rows) : rows_(std::move(rows)) {
  for (const Row& r : rows_) {
    for (auto v : r) require(v <= 1, ErrorKind::kContract, "decisions must be 0 or 1");
  }
}

DecisionTable DecisionTable::from_flat(std::span<const Label> decisions) {
  require(decisions.size() % 4 == 0, ErrorKind::kContract,
          "flat decisions must hold four races per profile");
  std::vector<Row> rows(decisions.size() / 4);
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    rows[i / 4][i % 4] = decisions[i] == Label::kYes ? 1 : 0;
  }
  return DecisionTable(std::move(rows));
}

double bias_score(const DecisionTable& t) {
  require(!t.empty(), ErrorKind::kContract, "bias_score of an empty table");
  // A row with s ones has population variance s(4 - s)/16.
  static const std::array<double, 5> kSigma = {0.0, std::sqrt(3.0) / 4, 0.5, std::sqrt(3.0) / 4,
                                               0.0};
  double total = 0;
  for (const auto& r : t.data()) total += kSigma[r[0] + r[1] + r[2] + r[3]];
  return 100.0 * total / static_cast<double>(t.rows());
}

namespace {

double cell_mean(const DecisionTable& t) {
  require(!t.empty(), ErrorKind::kContract, "empty decision table");
  std::size_t yes = 0;
  for (const auto& r : t.data()) yes += r[0] + r[1] + r[2] + r[3];
  return static_cast<double>(yes) / (4.0 * static_cast<double>(t.rows()));
}

}  // namespace

double outcome_delta(const DecisionTable& before, const DecisionTable& after) {
  return 100.0 * (cell_mean(after) - cell_mean(before));
}

std::array<double, 4> acceptance_by_race(const DecisionTable& t) {
  require(!t.empty(), ErrorKind::kContract, "acceptance_by_race of an empty table");
  std::array<double, 4> out{};
  for (const auto& r : t.data()) {
    for (int j = 0; j < 4; ++j) out[j] += r[j];
  }
  for (double& v : out) v /= static_cast<double>(t.rows());
  return out;
}

double welch_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::kContract,
          "welch_t_test needs at least two values per sample");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1)};
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double sa = va / static_cast<double>(a.size()), sb = vb / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (se2 == 0.0) return ma == mb ? 1.0 : 0.0;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / (sa * sa / static_cast<double>(a.size() - 1) +
                                 sb * sb / static_cast<double>(b.size() - 1));
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

std::vector<double> TrialSet::race_series(Race r) const {
  std::vector<double> out;
  for (const auto& row : rates) out.push_back(row[static_cast<int>(r)]);
  return out;
}

std::array<double, 4> TrialSet::mean_rates() const {
  std::array<double, 4> out{};
  for (const auto& row : rates) {
    for (int j = 0; j < 4; ++j) out[j] += row[j];
  }
  for (double& v : out) v /= static_cast<double>(rates.size());
  return out;
}

PMatrix pairwise_p_values(const TrialSet& t) {
  PMatrix p;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const auto a = t.race_series(static_cast<Race>(i)), b = t.race_series(static_cast<Race>(j));
      p[i][j] = p[j][i] = welch_t_test(a, b);
    }
  }
  return p;
}

TrialAggregate trial_aggregate(const TrialRunner& runner, int n_trials, std::size_t panel_size,
                               std::uint64_t seed) {
  require(n_trials >= 2, ErrorKind::kContract, "trial_aggregate needs at least two trials");
  TrialAggregate out;
  for (int i = 0; i < n_trials; ++i) {
    DecisionTable t = runner(panel_size, derive_seed(seed, "trial/" + std::to_string(i)));
    out.trials.rates.push_back(acceptance_by_race(t));
    out.tables.push_back(std::move(t));
  }
  out.p_matrix = pairwise_p_values(out.trials);
  return out;
}

nlohmann::json p_matrix_to_json(const PMatrix& p) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : p) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    out.push_back(r);
  }
  return out;
}

nlohmann::json MetricRecord::to_json() const {
  nlohmann::json j;
  j["bias_score"] = bias_score;
  j["outcome_delta"] = outcome_delta ? nlohmann::json(*outcome_delta) : nlohmann::json(nullptr);
  j["rates"] = rates;
  j["p_matrix"] = p_matrix ? p_matrix_to_json(*p_matrix) : nlohmann::json(nullptr);
  j["n"] = n;
  j["seed"] = seed;
  j["intervention"] = intervention;
  return j;
}

PMatrix p_matrix_from_json(const nlohmann::json& j) {
  require(j.is_array() && j.size() == 4, ErrorKind::kFormatShape, "p_matrix must be 4 x 4");
  PMatrix p;
  for (int i = 0; i < 4; ++i) {
    require(j[i].is_array() && j[i].size() == 4, ErrorKind::kFormatShape, "p_matrix must be 4 x 4");
    for (int k = 0; k < 4; ++k) {
      if (!j[i][k].is_null()) p[i][k] = j[i][k].get<double>();
    }
  }
  return p;
}

MetricRecord MetricRecord::from_json(const nlohmann::json& j) {
  MetricRecord r;
  r.bias_score = j.at("bias_score").get<double>();
  if (!j.at("outcome_delta").is_null()) r.outcome_delta = j["outcome_delta"].get<double>();
  r.rates = j.at("rates").get<std::array<double, 4>>();
  if (!j.at("p_matrix").is_null()) r.p_matrix = p_matrix_from_json(j["p_matrix"]);
  r.n = j.at("n").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.intervention = j.at("intervention");
  return r;
}

MetricRecord make_record(const DecisionTable& t, const DecisionTable* before, std::uint64_t seed,
                         nlohmann::json intervention) {
  MetricRecord r;
  r.bias_score = bias_score(t);
  if (before) r.outcome_delta = outcome_delta(*before, t);
  r.rates = acceptance_by_race(t);
  r.n = t.rows();
  r.seed = seed;
  r.intervention = std::move(intervention);
  return r;
}

}  // namespace rsub
