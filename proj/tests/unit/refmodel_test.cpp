#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"
#include "rsub/common/tensor_file.hpp"
#include "rsub/numerics/linalg.hpp"
#include "rsub/refmodel/model.hpp"
#include "rsub/refmodel/teacher.hpp"
#include "rsub/refmodel/train.hpp"

namespace rsub {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "rsub_refmodel_test";
  fs::create_directories(dir);
  return dir / name;
}

ModelConfig small_config() {
  ModelConfig c;
  c.layers = 2;
  c.d_model = 16;
  c.heads = 2;
  return c;
}

TEST(Teacher, MaximalApplicantAccepted) {
  TeacherRule r = TeacherRule::unbiased(Family::kAdmissions, 3);
  Profile p{Family::kAdmissions, 0, 5, std::nullopt, {400, 8, 3}};
  for (int i = 0; i < 20; ++i) {
    p.institution = i;
    EXPECT_EQ(teacher_label(p, r), Label::kYes);
  }
}

TEST(Teacher, UnbiasedIgnoresRace) {
  TeacherRule r = TeacherRule::unbiased(Family::kHiring, 3);
  SeedStream rng(2);
  TaskSpec spec = TaskSpec::hiring();
  NameRoster roster = NameRoster::builtin();
  for (int i = 0; i < 500; ++i) {
    auto v = race_variants(sample_profile(spec, rng), roster, rng);
    for (int k = 1; k < 4; ++k) EXPECT_EQ(teacher_label(v[k], r), teacher_label(v[0], r));
  }
}

TEST(Teacher, RuleInvariants) {
  for (Family f : {Family::kAdmissions, Family::kHiring}) {
    TeacherRule r = TeacherRule::biased(f, 9);
    EXPECT_NO_THROW(r.validate());
    for (double t : r.thresholds) {
      EXPECT_GE(t, 0.4);
      EXPECT_LE(t, 0.6);
    }
    EXPECT_EQ(TeacherRule::from_json(r.to_json()).thresholds, r.thresholds);
  }
}

// Monte-Carlo oracle: acceptance per race over 10,000 uniform profiles, each
// scored under all four races.
std::array<double, 4> simulated_rates(const TeacherRule& rule, std::uint64_t seed) {
  SeedStream rng(seed);
  TaskSpec spec = TaskSpec::for_family(rule.family);
  std::array<double, 4> yes{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Profile p = sample_profile(spec, rng);
    double s = 0;
    const auto z = normalized_qualifications(p);
    for (int j = 0; j < 3; ++j) s += rule.weights[j] * z[j];
    for (int r = 0; r < 4; ++r) yes[r] += s + rule.offsets[r] > rule.thresholds[p.institution];
  }
  for (double& v : yes) v = 100.0 * v / n;
  return yes;
}

TEST(Teacher, AdmissionsGapCalibrated) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto rates = simulated_rates(TeacherRule::biased(Family::kAdmissions, seed), 77 + seed);
    const double gap = rates[3] - rates[1];
    EXPECT_GE(gap, 10.0);
    EXPECT_LE(gap, 20.0);
    EXPECT_GT(rates[3], rates[0]);
    EXPECT_GT(rates[0], rates[2]);
    EXPECT_GT(rates[2], rates[1]);
  }
}

TEST(Teacher, HiringOrdering) {
  const auto rates = simulated_rates(TeacherRule::biased(Family::kHiring, 1), 5);
  EXPECT_GT(std::min(rates[3], rates[0]), std::max(rates[1], rates[2]) + 5.0);
}

TEST(Decide, Examples) {
  EXPECT_EQ(decide({2.0f, 1.0f}), Label::kYes);
  EXPECT_EQ(decide({1.0f, 1.0f}), Label::kNo);
  SeedStream rng(1);
  for (int i = 0; i < 100; ++i) {
    LogitPair l{static_cast<float>(rng.normal()), static_cast<float>(rng.normal())};
    const float c = static_cast<float>(rng.uniform_real(-4, 4));
    // Compare after rounding, so the shift itself is exact in float.
    LogitPair base{std::round(l.yes * 64) / 64, std::round(l.no * 64) / 64};
    EXPECT_EQ(decide(base), decide({base.yes + std::round(c), base.no + std::round(c)}));
  }
  EXPECT_THROW(decide({NAN, 0.0f}), Error);
}

EncodedPrompt sample_prompt(std::uint64_t seed) {
  SeedStream rng(seed);
  return render_prompt(sample_profile(TaskSpec::admissions(), rng), Template::kFreeTextA);
}

TEST(Forward, DeterministicWithTraceShape) {
  ModelWeights w = ModelWeights::initialize(ModelConfig{}, 3);
  EncodedPrompt e = sample_prompt(4);
  ForwardResult a = forward_with_taps(w, e), b = forward_with_taps(w, e);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.logits.yes, b.logits.yes);
  EXPECT_EQ(a.trace.layers, 5);
  EXPECT_EQ(a.trace.positions, 16);
  EXPECT_EQ(a.trace.data.size(), 5u * 16u * 64u);
  // The batched readout agrees with the traced one.
  const auto batch = yes_no_logits(w, std::span(&e, 1));
  EXPECT_NEAR(batch[0].yes, a.logits.yes, 1e-5);
}

TEST(Forward, ZeroWeightsTie) {
  ModelWeights w = ModelWeights::zeros(ModelConfig{});
  ForwardResult r = forward_with_taps(w, sample_prompt(1));
  EXPECT_EQ(r.logits.yes, r.logits.no);
  EXPECT_EQ(decide(r.logits), Label::kNo);
}

TEST(Forward, CausalMaskIgnoresTrailingTokens) {
  ModelWeights w = ModelWeights::initialize(ModelConfig{}, 8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    EncodedPrompt e = sample_prompt(s), f = e;
    for (int t = e.final_pos + 1; t < 16; ++t) f.tokens[t] = tok::kNameBase + 3 * t;
    ForwardResult a = forward_with_taps(w, e), b = forward_with_taps(w, f);
    EXPECT_EQ(a.logits.yes, b.logits.yes);
    EXPECT_EQ(a.logits.no, b.logits.no);
  }
}

TEST(Forward, RejectsOutOfVocab) {
  ModelWeights w = ModelWeights::initialize(ModelConfig{}, 8);
  EncodedPrompt e = sample_prompt(1);
  e.tokens[9] = 999;
  EXPECT_THROW(forward_with_taps(w, e), Error);
}

TEST(Forward, ModelGradientMatchesFiniteDifference) {
  ModelWeights w = ModelWeights::initialize(small_config(), 5);
  for (auto& [name, t] : w.params) {
    if (!name.ends_with("norm")) {
      for (float& v : t.values()) v *= 10.0f;  // larger weights so gradients are not tiny
    }
  }
  std::vector<EncodedPrompt> batch{sample_prompt(1), sample_prompt(2), sample_prompt(3)};
  std::vector<int> targets{tok::kYes, tok::kNo, tok::kYes};
  auto loss_with = [&](const ModelWeights& m, ad::Tape& tape, bool trainable) {
    Graph g(tape, m, trainable);
    ad::Var x = g.run_to(batch, 8, m.config.layers);
    return ad::cross_entropy(g.logits(x, final_rows(batch, 8)), targets);
  };
  ad::Tape tape;
  auto grads = tape.backward(loss_with(w, tape, true));
  for (const std::string name : {"block0.wqkv", "block1.w1", "tok_emb", "block0.attn_norm"}) {
    auto f = [&](const Tensor& v) {
      ModelWeights m = w;
      m.params[name] = v;
      ad::Tape t;
      return static_cast<double>(loss_with(m, t, false).value()[0]);
    };
    // Coordinates the loss actually depends on.
    std::vector<std::size_t> coords;
    const Tensor& g = grads.at(name);
    SeedStream rng(3);
    while (coords.size() < 50) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(g.size()) - 1));
      if (g[i] != 0.0f) coords.push_back(i);
    }
    Tensor fd = finite_difference_gradient(f, w.params.at(name), 1e-2, coords);
    double num = 0, den = 0;
    for (auto i : coords) {
      num += (g[i] - fd[i]) * (g[i] - fd[i]);
      den += fd[i] * fd[i];
    }
    EXPECT_LE(std::sqrt(num / den), 1e-3) << name;
  }
}

TEST(WeightFile, RoundTripBitExact) {
  ModelWeights w = ModelWeights::initialize(ModelConfig{}, 12);
  w.meta = {{"note", "x"}};
  const auto path = temp_path("rt.rsub");
  save_weights(w, path);
  ModelWeights r = load_weights(path);
  EXPECT_EQ(r.config, w.config);
  EXPECT_EQ(r.params, w.params);
  EXPECT_EQ(r.meta, w.meta);
}

ErrorKind load_error(const fs::path& path, const ModelConfig* expected = nullptr) {
  try {
    load_weights(path, expected);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kContract;
}

TEST(WeightFile, DistinctLoadErrors) {
  ModelWeights w = ModelWeights::initialize(small_config(), 12);
  const auto path = temp_path("err.rsub");
  save_weights(w, path);
  const std::string bytes = read_file(path);

  auto write = [&](const std::string& b) {
    std::ofstream(path, std::ios::binary | std::ios::trunc).write(b.data(), static_cast<long>(b.size()));
  };
  std::string bad = bytes;
  bad[0] = 'X';
  write(bad);
  EXPECT_EQ(load_error(path), ErrorKind::kFormatVersion);

  bad = bytes;
  bad[4] = 7;
  write(bad);
  EXPECT_EQ(load_error(path), ErrorKind::kFormatVersion);

  write(bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(load_error(path), ErrorKind::kFormatTruncated);

  bad = bytes;
  bad[bytes.size() - 100] ^= 0x5a;
  write(bad);
  EXPECT_EQ(load_error(path), ErrorKind::kFormatChecksum);

  write(bytes);
  ModelConfig other = small_config();
  other.d_model = 32;
  EXPECT_EQ(load_error(path, &other), ErrorKind::kFormatShape);
  EXPECT_EQ(load_error(temp_path("missing.rsub")), ErrorKind::kIo);
}

TEST(Train, DeterministicAndLogged) {
  TrainConfig tc;
  tc.n_train = 256;
  tc.n_heldout = 64;
  tc.max_epochs = 1;
  tc.target_agreement = 0.0;
  tc.batch = 32;
  auto a = train_reference(small_config(), Teacher::biased(1), tc, 42);
  auto b = train_reference(small_config(), Teacher::biased(1), tc, 42);
  EXPECT_EQ(a.weights.params, b.weights.params);
  EXPECT_EQ(a.history.size(), 1u);
  EXPECT_TRUE(a.weights.meta.contains("teacher"));
  auto c = train_reference(small_config(), Teacher::biased(1), tc, 43);
  EXPECT_NE(a.weights.params, c.weights.params);
}

TEST(Train, BudgetExhaustionIsDivergence) {
  TrainConfig tc;
  tc.n_train = 64;
  tc.n_heldout = 64;
  tc.max_epochs = 1;
  tc.target_agreement = 1.01;
  try {
    train_reference(small_config(), Teacher::biased(1), tc, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
    EXPECT_NE(std::string(e.what()).find("agreement"), std::string::npos);
  }
}

TEST(Train, MixtureDatasetCoversSettings) {
  SeedStream rng(1);
  std::vector<Setting> settings{{Family::kAdmissions, Template::kFreeTextA},
                                {Family::kHiring, Template::kFreeTextA},
                                {Family::kAdmissions, Template::kExplicitRace}};
  auto data = make_teacher_dataset(Teacher::biased(1), settings, 300, rng);
  int hiring = 0, expl = 0;
  for (const auto& d : data) {
    hiring += d.profile.family == Family::kHiring;
    expl += d.prompt.tmpl == Template::kExplicitRace;
  }
  EXPECT_GT(hiring, 60);
  EXPECT_GT(expl, 60);
}

}  // namespace
}  // namespace rsub
