#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rsub/alignment/das.hpp"
#include "rsub/alignment/sweep.hpp"
#include "rsub/metrics/metrics.hpp"
#include "rsub/refmodel/train.hpp"

namespace rsub {

struct PairConfig {
  int n_per_class = 0;  // 0: enough per institution to fill the splits
  int n_train = 2000;
  int n_dev = 1024;
  int n_test = 900;
  int draw_budget = 10000;
  bool best_effort = false;

  nlohmann::json to_json() const;
  static PairConfig from_json(const nlohmann::json& j);
};

/// Everything a pipeline run depends on. The output directory and report
/// formats only route files and are left out of the serialized form.
struct RunConfig {
  Family family = Family::kAdmissions;
  Template tmpl = Template::kFreeTextA;
  Suffix suffix;
  std::string teacher = "biased";  // or "null"
  ModelConfig model;
  TrainConfig train;
  DasConfig das = DasConfig::desk();
  PairConfig pairs;
  std::optional<Tap> tap;  // empty: best tap from the sweep
  std::uint64_t seed = 1;
  int panel_size = 2000;
  int n_trials = 5;
  std::filesystem::path out = "rsub_out";
  std::vector<std::string> formats = {"json", "csv", "svg"};

  Setting setting() const { return {family, tmpl}; }
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& j);
};

struct DerivedSeeds {
  std::uint64_t data = 0;
  std::uint64_t model = 0;
  std::uint64_t das = 0;
  std::uint64_t panel = 0;

  static DerivedSeeds from_master(std::uint64_t master);
  nlohmann::json to_json() const;
};

Teacher make_teacher(const RunConfig& c);
TrainResult train_model(const RunConfig& c,
                        const std::function<void(const EpochRecord&)>& on_epoch = {});

std::uint64_t panel_seed(const RunConfig& c, const Setting& s);
std::vector<PanelRow> make_panel(const RunConfig& c, const Setting& s);
/// Balanced pairs labeled by the model, split train/dev/test.
PairSplits make_pairs(const ModelWeights& w, const RunConfig& c, const Setting& s);

struct ReportRow {
  std::string method;
  std::string setting;
  MetricRecord metrics;
};

struct Report {
  std::string kind;
  nlohmann::json config;
  nlohmann::json seeds;
  std::uint64_t panel_seed = 0;
  std::vector<ReportRow> rows;
  nlohmann::json extras = nlohmann::json::object();

  const ReportRow& row(std::string_view method) const;
  nlohmann::json to_json() const;
  static Report from_json(const nlohmann::json& j);
};

/// Original plus the six suffix strategies on one shared panel.
std::vector<Suffix> audit_strategies();
Report run_prompt_audit(const RunConfig& c, const ModelWeights& w);

/// Original, Race Avg, Race Proj, Full Avg and Random Proj on one shared
/// panel of `setting`. IIA of the subspace and of a random one of equal k go
/// to extras when test pairs are given.
Report run_debias(const RunConfig& c, const ModelWeights& w, const Subspace& s,
                  std::span<const CounterfactualPair> test_pairs, const Setting& setting);
Report run_debias(const RunConfig& c, const ModelWeights& w, const Subspace& s,
                  std::span<const CounterfactualPair> test_pairs);

struct Transfer {
  std::string name;
  Setting source;
  Setting target;
};
std::vector<Transfer> canonical_transfers();

/// Sweep over every layer at the name and final positions of a setting.
SweepResult role_sweep(const ModelWeights& w, const PairSplits& pairs, const RunConfig& c,
                       const Setting& s);
/// Maps a tap by token role: name position to name position, final to final.
Tap map_tap(Tap t, const Setting& from, const Setting& to);

/// Applies the source setting's subspace to the target setting.
Report run_transfer(const RunConfig& c, const ModelWeights& w, const Transfer& t);

/// Writes <stem>.json / .csv / .svg into `dir`; returns the written paths.
std::vector<std::filesystem::path> emit_report(const Report& r,
                                               const std::vector<std::string>& formats,
                                               const std::filesystem::path& dir,
                                               const std::string& stem);
std::string report_csv(const Report& r);
std::string report_svg(const Report& r);

/// CLI entry point; returns the process exit status.
int cmd_dispatch(int argc, char** argv);

}  // namespace rsub
