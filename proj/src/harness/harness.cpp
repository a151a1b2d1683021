#include "rsub/harness/harness.hpp"

#include <cmath>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"

namespace rsub {

nlohmann::json PairConfig::to_json() const {
  return {{"n_per_class", n_per_class}, {"n_train", n_train},         {"n_dev", n_dev},
          {"n_test", n_test},           {"draw_budget", draw_budget}, {"best_effort", best_effort}};
}

PairConfig PairConfig::from_json(const nlohmann::json& j) {
  PairConfig c;
  c.n_per_class = j.value("n_per_class", c.n_per_class);
  c.n_train = j.value("n_train", c.n_train);
  c.n_dev = j.value("n_dev", c.n_dev);
  c.n_test = j.value("n_test", c.n_test);
  c.draw_budget = j.value("draw_budget", c.draw_budget);
  c.best_effort = j.value("best_effort", c.best_effort);
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {{"family", to_string(family)},
          {"template", to_string(tmpl)},
          {"suffix", suffix.label()},
          {"teacher", teacher},
          {"model", model.to_json()},
          {"train", train.to_json()},
          {"das", das.to_json()},
          {"pairs", pairs.to_json()},
          {"tap", tap ? nlohmann::json(tap->to_string()) : nlohmann::json("best-from-sweep")},
          {"seed", seed},
          {"panel_size", panel_size},
          {"n_trials", n_trials}};
}

namespace {

nlohmann::json merged(nlohmann::json defaults, const nlohmann::json& j, const char* key) {
  if (j.contains(key)) {
    require(j[key].is_object(), ErrorKind::kUsage, std::string("config '") + key + "' must be an object");
    defaults.update(j[key]);
  }
  return defaults;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::kUsage, "config must be a JSON object");
  RunConfig c;
  try {
    if (j.contains("family")) c.family = family_from_string(j["family"].get<std::string>());
    if (j.contains("template")) c.tmpl = template_from_string(j["template"].get<std::string>());
    if (j.contains("suffix")) c.suffix = Suffix::parse(j["suffix"].get<std::string>());
    c.teacher = j.value("teacher", c.teacher);
    c.model = ModelConfig::from_json(merged(c.model.to_json(), j, "model"));
    c.train = TrainConfig::from_json(merged(c.train.to_json(), j, "train"));
    c.das = DasConfig::from_json(merged(c.das.to_json(), j, "das"));
    c.pairs = PairConfig::from_json(merged(c.pairs.to_json(), j, "pairs"));
    if (j.contains("tap") && j["tap"] != "best-from-sweep") c.tap = Tap::parse(j["tap"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.panel_size = j.value("panel_size", c.panel_size);
    c.n_trials = j.value("n_trials", c.n_trials);
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("formats")) c.formats = j["formats"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kUsage, std::string("bad config: ") + e.what());
  }
  require(c.teacher == "biased" || c.teacher == "null", ErrorKind::kUsage,
          "teacher must be 'biased' or 'null'");
  require(c.panel_size > 0 && c.n_trials >= 2, ErrorKind::kUsage,
          "panel_size must be positive and n_trials at least 2");
  c.model.validate();
  return c;
}

DerivedSeeds DerivedSeeds::from_master(std::uint64_t master) {
  return {derive_seed(master, "data"), derive_seed(master, "model"), derive_seed(master, "das"),
          derive_seed(master, "panel")};
}

nlohmann::json DerivedSeeds::to_json() const {
  return {{"data", data}, {"model", model}, {"das", das}, {"panel", panel}};
}

Teacher make_teacher(const RunConfig& c) {
  const std::uint64_t s = DerivedSeeds::from_master(c.seed).data;
  return c.teacher == "null" ? Teacher::unbiased(s) : Teacher::biased(s);
}

TrainResult train_model(const RunConfig& c, const std::function<void(const EpochRecord&)>& on_epoch) {
  return train_reference(c.model, make_teacher(c), c.train, DerivedSeeds::from_master(c.seed).model,
                         on_epoch);
}

std::uint64_t panel_seed(const RunConfig& c, const Setting& s) {
  return derive_seed(DerivedSeeds::from_master(c.seed).panel, s.id());
}

std::vector<PanelRow> make_panel(const RunConfig& c, const Setting& s) {
  SeedStream rng(panel_seed(c, s));
  return make_eval_panel(TaskSpec::for_family(s.family), NameRoster::builtin(), c.panel_size, s.tmpl,
                         rng);
}

PairSplits make_pairs(const ModelWeights& w, const RunConfig& c, const Setting& s) {
  const TaskSpec spec = TaskSpec::for_family(s.family);
  PairSamplerConfig pc;
  const int total = c.pairs.n_train + c.pairs.n_dev + c.pairs.n_test;
  const int per_inst_class = 4 * spec.num_institutions();
  pc.n_per_class = c.pairs.n_per_class > 0 ? c.pairs.n_per_class
                                           : (total + per_inst_class - 1) / per_inst_class;
  pc.draw_budget = c.pairs.draw_budget;
  pc.best_effort = c.pairs.best_effort;
  SeedStream rng(derive_seed(DerivedSeeds::from_master(c.seed).data, "pairs/" + s.id()));
  auto pairs = make_counterfactual_pairs(
      spec, s.tmpl, [&](std::span<const EncodedPrompt> p) { return decide_all(w, p); }, pc, rng);
  return split_pairs(std::move(pairs), static_cast<std::size_t>(c.pairs.n_train),
                     static_cast<std::size_t>(c.pairs.n_dev), static_cast<std::size_t>(c.pairs.n_test),
                     rng);
}

const ReportRow& Report::row(std::string_view method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  fail(ErrorKind::kUsage, "report has no row '" + std::string(method) + "'");
}

nlohmann::json Report::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"method", r.method}, {"setting", r.setting}, {"metrics", r.metrics.to_json()}});
  }
  return {{"kind", kind}, {"config", config}, {"seeds", seeds}, {"panel_seed", panel_seed},
          {"rows", rs},   {"extras", extras}};
}

Report Report::from_json(const nlohmann::json& j) {
  Report r;
  try {
    r.kind = j.at("kind").get<std::string>();
    r.config = j.at("config");
    r.seeds = j.at("seeds");
    r.panel_seed = j.at("panel_seed").get<std::uint64_t>();
    for (const auto& row : j.at("rows")) {
      r.rows.push_back({row.at("method").get<std::string>(), row.at("setting").get<std::string>(),
                        MetricRecord::from_json(row.at("metrics"))});
    }
    r.extras = j.at("extras");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormatShape, std::string("bad report: ") + e.what());
  }
  return r;
}

namespace {

Report new_report(const RunConfig& c, std::string kind, const Setting& s) {
  Report r;
  r.kind = std::move(kind);
  r.config = c.to_json();
  r.seeds = DerivedSeeds::from_master(c.seed).to_json();
  r.panel_seed = panel_seed(c, s);
  return r;
}

DecisionTable panel_decisions(const ModelWeights& w, std::span<const EncodedPrompt> prompts,
                              const InterventionSpec& spec) {
  if (spec.kind == InterventionKind::kNone) return DecisionTable::from_flat(decide_all(w, prompts));
  return DecisionTable::from_flat(run_with_intervention(w, prompts, spec).decisions);
}

// Per-race rates of independent panels for the p-value matrix.
TrialAggregate trials(const RunConfig& c, const ModelWeights& w, const Setting& s) {
  TrialRunner runner = [&](std::size_t n, std::uint64_t seed) {
    SeedStream rng(seed);
    auto panel = make_eval_panel(TaskSpec::for_family(s.family), NameRoster::builtin(),
                                 static_cast<int>(n), s.tmpl, rng);
    return DecisionTable::from_flat(decide_all(w, flatten_prompts(panel)));
  };
  return trial_aggregate(runner, c.n_trials, static_cast<std::size_t>(c.panel_size),
                         panel_seed(c, s));
}

}  // namespace

std::vector<Suffix> audit_strategies() {
  return {Suffix::none(),  {SuffixKind::kSimple, 0}, {SuffixKind::kNoAffirmative, 0},
          Suffix::very(1), Suffix::very(2),          Suffix::very(4),
          {SuffixKind::kIllegal, 0}};
}

Report run_prompt_audit(const RunConfig& c, const ModelWeights& w) {
  const Setting s = c.setting();
  Report r = new_report(c, "prompt-audit", s);
  const auto base = flatten_prompts(make_panel(c, s));
  std::optional<DecisionTable> original;
  for (const Suffix& suffix : audit_strategies()) {
    std::vector<EncodedPrompt> prompts;
    prompts.reserve(base.size());
    for (const auto& p : base) prompts.push_back(append_fairness_suffix(p, suffix));
    DecisionTable t = DecisionTable::from_flat(decide_all(w, prompts));
    if (!original) original = t;
    MetricRecord m = make_record(t, &*original, r.panel_seed, {{"suffix", suffix.label()}});
    if (suffix == Suffix::none()) {
      const TrialAggregate agg = trials(c, w, s);
      m.p_matrix = agg.p_matrix;
      r.extras["trial_rates"] = agg.trials.rates;
    }
    r.rows.push_back({suffix.label(), s.id(), std::move(m)});
  }
  return r;
}

Report run_debias(const RunConfig& c, const ModelWeights& w, const Subspace& s,
                  std::span<const CounterfactualPair> test_pairs, const Setting& setting) {
  s.validate_for(w.config);
  Report r = new_report(c, "debias", setting);
  auto prompts = flatten_prompts(make_panel(c, setting));
  for (auto& p : prompts) p = append_fairness_suffix(p, c.suffix);
  SeedStream rng(derive_seed(DerivedSeeds::from_master(c.seed).das, "random/" + s.tap().to_string()));
  const Subspace random = random_subspace(s.d(), s.k(), rng, s.tap());

  std::optional<DecisionTable> original;
  for (InterventionKind kind : {InterventionKind::kNone, InterventionKind::kRaceAverage,
                                InterventionKind::kRaceProject, InterventionKind::kFullAverage,
                                InterventionKind::kRandomProject}) {
    InterventionSpec spec;
    spec.kind = kind;
    spec.tap = s.tap();
    if (kind == InterventionKind::kRaceAverage || kind == InterventionKind::kRaceProject) spec.subspace = s;
    if (kind == InterventionKind::kRandomProject) spec.subspace = random;
    DecisionTable t = panel_decisions(w, prompts, spec);
    if (!original) original = t;
    r.rows.push_back({std::string(to_string(kind)), setting.id(),
                      make_record(t, &*original, r.panel_seed, spec.to_json())});
  }
  r.extras["tap"] = s.tap().to_string();
  r.extras["k"] = s.k();
  r.extras["subspace_run_id"] = s.run_id();
  if (!test_pairs.empty()) {
    r.extras["test_iia"] = iia_eval(w, s, test_pairs);
    r.extras["random_iia"] = iia_eval(w, random, test_pairs);
    r.extras["n_test_pairs"] = test_pairs.size();
  }
  return r;
}

Report run_debias(const RunConfig& c, const ModelWeights& w, const Subspace& s,
                  std::span<const CounterfactualPair> test_pairs) {
  return run_debias(c, w, s, test_pairs, c.setting());
}

std::vector<Transfer> canonical_transfers() {
  return {
      {"free-to-list", {Family::kAdmissions, Template::kFreeTextA}, {Family::kAdmissions, Template::kListB}},
      {"admissions-to-hiring",
       {Family::kAdmissions, Template::kFreeTextA},
       {Family::kHiring, Template::kFreeTextA}},
      {"implicit-to-explicit",
       {Family::kAdmissions, Template::kFreeTextA},
       {Family::kAdmissions, Template::kExplicitRace}},
  };
}

namespace {

struct Roles {
  int name = 0;
  int final = 0;
};

Roles roles(const Setting& s) {
  SeedStream rng(0);
  const EncodedPrompt e = render_prompt(sample_profile(TaskSpec::for_family(s.family), rng,
                                                       s.explicit_mode()),
                                        s.tmpl);
  return {e.name_pos, e.final_pos};
}

}  // namespace

Tap map_tap(Tap t, const Setting& from, const Setting& to) {
  const Roles a = roles(from), b = roles(to);
  if (t.position == a.name) return {t.layer, b.name};
  if (t.position == a.final) return {t.layer, b.final};
  return t;
}

SweepResult role_sweep(const ModelWeights& w, const PairSplits& pairs, const RunConfig& c,
                       const Setting& s) {
  const Roles r = roles(s);
  std::vector<int> layers(static_cast<std::size_t>(w.config.layers + 1));
  for (int l = 0; l <= w.config.layers; ++l) layers[static_cast<std::size_t>(l)] = l;
  std::vector<int> positions{r.name, r.final};
  DasConfig das = c.das;
  das.seed = derive_seed(DerivedSeeds::from_master(c.seed).das, "sweep/" + s.id());
  return location_sweep(w, pairs.train, pairs.dev, pairs.test, das, layers, positions);
}

Report run_transfer(const RunConfig& c, const ModelWeights& w, const Transfer& t) {
  const PairSplits source_pairs = make_pairs(w, c, t.source);
  Subspace source;
  if (c.tap) {
    DasConfig das = c.das;
    das.tap = *c.tap;
    das.seed = derive_seed(DerivedSeeds::from_master(c.seed).das, "das/" + t.source.id());
    source = train_das(w, source_pairs.train, source_pairs.dev, das).subspace;
  } else {
    source = *role_sweep(w, source_pairs, c, t.source).best_subspace;
  }
  const PairSplits target_pairs =
      t.target == t.source ? source_pairs : make_pairs(w, c, t.target);
  const Tap target_tap = map_tap(source.tap(), t.source, t.target);
  const Subspace moved(source.basis(), target_tap, source.provenance(), source.run_id());

  Report r = run_debias(c, w, moved, target_pairs.test, t.target);
  r.kind = "generalization";
  for (auto& row : r.rows) row.setting = t.source.id() + "->" + t.target.id();
  r.extras["transfer"] = t.name;
  r.extras["source_setting"] = t.source.id();
  r.extras["target_setting"] = t.target.id();
  r.extras["source_tap"] = source.tap().to_string();
  r.extras["target_tap"] = target_tap.to_string();
  r.extras["transfer_iia"] = r.extras["test_iia"];

  const SweepResult own = role_sweep(w, target_pairs, c, t.target);
  r.extras["target_own_tap"] = own.best.to_string();
  r.extras["target_own_iia"] = own.cell(own.best).test_iia;
  r.extras["target_trivial_baseline"] = own.trivial_baseline;
  return r;
}

}  // namespace rsub
