#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"
#include "rsub/common/tensor_file.hpp"
#include "rsub/harness/harness.hpp"
#include "rsub/tasks/dataset_io.hpp"

namespace rsub {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> family;
  std::optional<std::string> tmpl;
  std::optional<std::string> tap;
  std::optional<int> k;
  std::optional<std::string> out;
  std::optional<std::string> formats;
  std::optional<std::string> teacher;
  std::optional<std::string> transfer;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON run configuration; flags override it");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--family", f.family, "admissions | hiring")
      ->check(CLI::IsMember({"admissions", "hiring"}));
  app->add_option("--template", f.tmpl, "free | list | explicit")
      ->check(CLI::IsMember({"free", "list", "explicit"}));
  app->add_option("--tap", f.tap, "LAYER:POS (default: best tap from the sweep)");
  app->add_option("--k", f.k, "Subspace dimension")->check(CLI::NonNegativeNumber);
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--formats", f.formats, "Comma-separated report formats: json,csv,svg");
  app->add_option("--teacher", f.teacher, "biased | null")->check(CLI::IsMember({"biased", "null"}));
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= s.size()) {
    const auto comma = s.find(',', at);
    const std::string part = s.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
    if (!part.empty()) out.push_back(part);
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

RunConfig resolve(const Flags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (f.config) {
    require(fs::exists(*f.config), ErrorKind::kDependency, "config file " + *f.config + " not found");
    try {
      j = nlohmann::json::parse(read_file(*f.config));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kUsage, "config " + *f.config + " is not valid JSON: " + e.what());
    }
  }
  if (f.seed) j["seed"] = *f.seed;
  if (f.family) j["family"] = *f.family;
  if (f.tmpl) j["template"] = *f.tmpl;
  if (f.tap) j["tap"] = *f.tap;
  if (f.k) j["das"]["k"] = *f.k;
  if (f.out) j["out"] = *f.out;
  if (f.formats) j["formats"] = split_commas(*f.formats);
  if (f.teacher) j["teacher"] = *f.teacher;
  RunConfig c = RunConfig::from_json(j);
  for (const auto& fmt : c.formats) {
    require(fmt == "json" || fmt == "csv" || fmt == "svg", ErrorKind::kUsage,
            "unknown report format '" + fmt + "'");
  }
  return c;
}

fs::path need(const RunConfig& c, const std::string& name, const std::string& producer) {
  const fs::path p = c.out / name;
  require(fs::exists(p), ErrorKind::kDependency,
          "missing " + p.string() + "; run `rsub " + producer + "` first");
  return p;
}

ModelWeights load_model(const RunConfig& c) {
  return load_weights(need(c, "model.rsub", "train-ref"), &c.model);
}

void write_pairs(const RunConfig& c, const PairSplits& s) {
  const auto& roster = NameRoster::builtin();
  write_file_atomic(c.out / "pairs_train.jsonl", pairs_to_jsonl(s.train, roster, c.seed, "train"));
  write_file_atomic(c.out / "pairs_dev.jsonl", pairs_to_jsonl(s.dev, roster, c.seed, "dev"));
  write_file_atomic(c.out / "pairs_test.jsonl", pairs_to_jsonl(s.test, roster, c.seed, "test"));
}

void announce(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) std::printf("wrote %s\n", p.string().c_str());
}

void cmd_gen_data(const RunConfig& c) {
  const auto& roster = NameRoster::builtin();
  const Teacher teacher = make_teacher(c);
  SeedStream rng(derive_seed(DerivedSeeds::from_master(c.seed).model, "train/data"));
  const auto data = make_teacher_dataset(teacher, c.train.settings, c.train.n_train, rng);
  std::string lines;
  for (const auto& d : data) {
    lines += nlohmann::json{{"profile", to_json(d.profile, roster)},
                            {"prompt", to_json(d.prompt)},
                            {"label", to_string(d.label)}}
                 .dump();
    lines += '\n';
  }
  write_file_atomic(c.out / "teacher_train.jsonl", lines);
  const auto panel = make_panel(c, c.setting());
  write_file_atomic(c.out / "panel.jsonl", panel_to_jsonl(panel, roster, panel_seed(c, c.setting())));
  write_file_atomic(c.out / "teacher.json", teacher.to_json().dump(2) + "\n");
  write_file_atomic(c.out / "config.json", c.to_json().dump(2) + "\n");
  std::printf("wrote %zu teacher-labeled prompts and a %d-profile panel to %s\n", data.size(),
              c.panel_size, c.out.string().c_str());
}

void cmd_train_ref(const RunConfig& c) {
  TrainResult r = train_model(c, [](const EpochRecord& e) {
    std::printf("epoch %d  loss %.4f  held-out agreement %.4f\n", e.epoch, e.mean_loss,
                e.heldout_agreement);
    std::fflush(stdout);
  });
  save_weights(r.weights, c.out / "model.rsub");
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : r.history) {
    log.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"heldout_agreement", e.heldout_agreement}});
  }
  write_file_atomic(c.out / "train_log.json", log.dump(2) + "\n");
  std::printf("wrote %s\n", (c.out / "model.rsub").string().c_str());
}

void cmd_sweep(const RunConfig& c) {
  const ModelWeights w = load_model(c);
  const PairSplits pairs = make_pairs(w, c, c.setting());
  write_pairs(c, pairs);
  DasConfig das = c.das;
  das.seed = derive_seed(DerivedSeeds::from_master(c.seed).das, "sweep/" + c.setting().id());
  const SweepResult r = location_sweep(w, pairs.train, pairs.dev, pairs.test, das);
  write_file_atomic(c.out / "sweep.csv", r.to_csv());
  nlohmann::json errors = nlohmann::json::object();
  for (const auto& cell : r.cells) {
    if (cell.error) errors[cell.tap.to_string()] = *cell.error;
  }
  write_file_atomic(c.out / "sweep.json",
                    nlohmann::json{{"best", r.best.to_string()},
                                   {"best_dev_iia", r.cell(r.best).dev_iia},
                                   {"best_test_iia", r.cell(r.best).test_iia},
                                   {"trivial_baseline", r.trivial_baseline},
                                   {"errors", errors},
                                   {"config", c.to_json()}}
                            .dump(2) + "\n");
  save_subspace(*r.best_subspace, c.out / "subspace.rsub");
  std::printf("best tap %s  dev IIA %.4f  test IIA %.4f\n", r.best.to_string().c_str(),
              r.cell(r.best).dev_iia, r.cell(r.best).test_iia);
}

Tap chosen_tap(const RunConfig& c) {
  if (c.tap) return *c.tap;
  const auto sweep = nlohmann::json::parse(read_file(need(c, "sweep.json", "sweep")));
  return Tap::parse(sweep.at("best").get<std::string>());
}

void cmd_train_das(const RunConfig& c) {
  const ModelWeights w = load_model(c);
  DasConfig das = c.das;
  das.tap = chosen_tap(c);
  das.seed = derive_seed(DerivedSeeds::from_master(c.seed).das, "das/" + c.setting().id());
  const PairSplits pairs = make_pairs(w, c, c.setting());
  write_pairs(c, pairs);
  const DasResult r = train_das(w, pairs.train, pairs.dev, das);
  save_subspace(r.subspace, c.out / "subspace.rsub");
  write_file_atomic(c.out / "das_log.jsonl", log_to_jsonl(r.log));
  std::printf("tap %s  k %zu  dev IIA %.4f  test IIA %.4f\n", das.tap.to_string().c_str(),
              r.subspace.k(), r.final_dev_iia, iia_eval(w, r.subspace, pairs.test));
}

void cmd_audit(const RunConfig& c) {
  const ModelWeights w = load_model(c);
  announce(emit_report(run_prompt_audit(c, w), c.formats, c.out, "audit"));
}

void cmd_debias(const RunConfig& c) {
  const ModelWeights w = load_model(c);
  const Subspace s = load_subspace(need(c, "subspace.rsub", "train-das"));
  if (c.tap && *c.tap != s.tap()) {
    fail(ErrorKind::kDependency, "subspace.rsub was trained at " + s.tap().to_string() +
                                     "; run `rsub train-das --tap " + c.tap->to_string() + "` first");
  }
  const auto test = pairs_from_jsonl(read_file(need(c, "pairs_test.jsonl", "train-das")));
  announce(emit_report(run_debias(c, w, s, test), c.formats, c.out, "debias"));
}

void cmd_generalize(const RunConfig& c, const std::optional<std::string>& only) {
  const ModelWeights w = load_model(c);
  bool any = false;
  for (const Transfer& t : canonical_transfers()) {
    if (only && *only != t.name) continue;
    any = true;
    announce(emit_report(run_transfer(c, w, t), c.formats, c.out, "generalize_" + t.name));
  }
  require(any, ErrorKind::kUsage, "unknown transfer '" + only.value_or("") +
                                      "' (free-to-list, admissions-to-hiring, implicit-to-explicit)");
}

void cmd_report(const RunConfig& c) {
  require(fs::is_directory(c.out), ErrorKind::kDependency, "no output directory " + c.out.string());
  std::vector<fs::path> sources;
  for (const auto& e : fs::directory_iterator(c.out)) {
    const std::string name = e.path().filename().string();
    if (name == "audit.json" || name == "debias.json" ||
        (name.starts_with("generalize_") && name.ends_with(".json"))) {
      sources.push_back(e.path());
    }
  }
  require(!sources.empty(), ErrorKind::kDependency,
          "no reports in " + c.out.string() + "; run audit-prompts, debias or generalize first");
  std::sort(sources.begin(), sources.end());
  for (const auto& p : sources) {
    Report r;
    try {
      r = Report::from_json(nlohmann::json::parse(read_file(p)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kFormatShape, p.string() + ": " + e.what());
    }
    announce(emit_report(r, c.formats, c.out, p.stem().string()));
  }
}

}  // namespace

int cmd_dispatch(int argc, char** argv) {
  CLI::App app{"Race-subspace audit and debiasing pipeline for a desk-scale decision model", "rsub"};
  app.require_subcommand(1, 1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"gen-data", "Write the teacher-labeled training set and the evaluation panel"},
      {"train-ref", "Train the reference model against the teacher"},
      {"sweep", "Train one subspace per (layer, position) and pick the best tap"},
      {"train-das", "Train the race subspace at one tap"},
      {"audit-prompts", "Compare fairness suffix strategies on a shared panel"},
      {"debias", "Compare interventions with the trained subspace"},
      {"generalize", "Apply subspaces across templates, families and explicitness"},
      {"report", "Re-emit existing reports in the requested formats"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub, flags);
    subs[cmd.name] = sub;
  }
  subs["audit-prompts"]->alias("audit");
  subs["generalize"]->add_option("--transfer", flags.transfer, "Run only this transfer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::kUsage);
  }

  try {
    const RunConfig c = resolve(flags);
    if (subs["gen-data"]->parsed()) cmd_gen_data(c);
    if (subs["train-ref"]->parsed()) cmd_train_ref(c);
    if (subs["sweep"]->parsed()) cmd_sweep(c);
    if (subs["train-das"]->parsed()) cmd_train_das(c);
    if (subs["audit-prompts"]->parsed()) cmd_audit(c);
    if (subs["debias"]->parsed()) cmd_debias(c);
    if (subs["generalize"]->parsed()) cmd_generalize(c, flags.transfer);
    if (subs["report"]->parsed()) cmd_report(c);
    return 0;
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", to_string(e.kind())},
                                {"message", e.what()},
                                {"exit_code", exit_code(e.kind())}}
                     .dump()
              << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}, {"exit_code", 1}}.dump()
              << '\n';
    return 1;
  }
}

}  // namespace rsub
