#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <filesystem>

#include "rsub/common/error.hpp"
#include "rsub/interventions/interventions.hpp"

namespace rsub {
namespace {

Subspace axis_subspace(std::size_t d, std::vector<std::size_t> axes) {
  Tensor b = Tensor::zeros(d, axes.size());
  for (std::size_t j = 0; j < axes.size(); ++j) b.at(axes[j], j) = 1.0f;
  return Subspace(OrthonormalBasis(b), {0, 0});
}

std::vector<float> random_vector(std::size_t d, SeedStream& rng) {
  std::vector<float> v(d);
  for (float& x : v) x = static_cast<float>(rng.normal());
  return v;
}

void expect_near(std::span<const float> a, std::span<const float> b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << i;
}

TEST(Projection, AxisExample) {
  Subspace s = axis_subspace(2, {0});
  std::vector<float> v{3, 4};
  expect_near(project(s, v), std::vector<float>{3, 0}, 0);
  expect_near(complement_project(s, v), std::vector<float>{0, 4}, 0);
}

TEST(Projection, FullBasisIsIdentity) {
  SeedStream rng(1);
  Subspace s = random_subspace(10, 10, rng);
  auto v = random_vector(10, rng);
  expect_near(project(s, v), v, 1e-5);
}

TEST(Projection, ProjectorAlgebra) {
  SeedStream rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, 64));
    Subspace s = random_subspace(64, k, rng);
    auto v = random_vector(64, rng);
    auto p = project(s, v);
    auto q = complement_project(s, v);
    expect_near(project(s, p), p, 1e-5);
    expect_near(project(s, q), std::vector<float>(64, 0.0f), 1e-5);
    std::vector<float> sum(64);
    for (int i = 0; i < 64; ++i) sum[i] = p[i] + q[i];
    expect_near(sum, v, 1e-5);
  }
}

TEST(Dii, Examples) {
  Subspace s = axis_subspace(2, {0});
  expect_near(dii_replace(std::vector<float>{3, 4}, std::vector<float>{7, 9}, s),
              std::vector<float>{7, 4}, 0);
  Subspace empty(OrthonormalBasis::empty(2), {0, 0});
  expect_near(dii_replace(std::vector<float>{3, 4}, std::vector<float>{7, 9}, empty),
              std::vector<float>{3, 4}, 0);
  Subspace full = axis_subspace(2, {0, 1});
  expect_near(dii_replace(std::vector<float>{3, 4}, std::vector<float>{7, 9}, full),
              std::vector<float>{7, 9}, 0);
  EXPECT_THROW(dii_replace(std::vector<float>{3, 4, 5}, std::vector<float>{7, 9}, s), Error);
}

TEST(Dii, ExchangeConservationAndProjectionIdentity) {
  SeedStream rng(3);
  for (int t = 0; t < 200; ++t) {
    Subspace s = random_subspace(64, 16, rng);
    auto a = random_vector(64, rng), b = random_vector(64, rng);
    auto ab = dii_replace(a, b, s), ba = dii_replace(b, a, s);
    for (int i = 0; i < 64; ++i) EXPECT_NEAR(ab[i] + ba[i], a[i] + b[i], 1e-4);
    expect_near(complement_project(s, a), dii_replace(a, std::vector<float>(64, 0.0f), s), 1e-6);
    expect_near(dii_replace(a, a, s), a, 1e-5);
  }
}

Tensor random_rows(std::size_t n, std::size_t d, SeedStream& rng) {
  Tensor t = Tensor::zeros(n, d);
  for (float& v : t.values()) v = static_cast<float>(rng.normal());
  return t;
}

TEST(RaceAverage, GroupsShareSubspaceComponent) {
  SeedStream rng(4);
  Subspace s = random_subspace(16, 4, rng);
  Tensor reps = random_rows(12, 16, rng);
  for (AverageScope scope : {AverageScope::kBatch, AverageScope::kPerProfileVariants}) {
    Tensor out = batch_race_average(reps, s, scope);
    Tensor p = project_rows(s, out);
    const std::size_t group = scope == AverageScope::kBatch ? 12 : 4;
    for (std::size_t i = 0; i < 12; ++i) {
      expect_near(p.row(i), p.row(i - i % group), 1e-5);
    }
    Tensor c_in = complement_rows(s, reps), c_out = complement_rows(s, out);
    expect_near(c_in.values(), c_out.values(), 1e-5);
  }
  Tensor same = Tensor::zeros(5, 16);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 16; ++j) same.at(i, j) = static_cast<float>(j);
  }
  expect_near(batch_race_average(same, s, AverageScope::kBatch).values(), same.values(), 1e-5);
  EXPECT_THROW(batch_race_average(random_rows(6, 16, rng), s, AverageScope::kPerProfileVariants),
               Error);
}

TEST(FullAverage, Examples) {
  Tensor t = Tensor::matrix(2, 2, {0, 2, 2, 0});
  EXPECT_EQ(full_average(t), Tensor::matrix(2, 2, {1, 1, 1, 1}));
  Tensor same = Tensor::matrix(3, 2, {1, 5, 1, 5, 1, 5});
  EXPECT_EQ(full_average(same), same);
}

TEST(RandomSubspace, OrthonormalDeterministicAndSpread) {
  SeedStream a(7), b(7);
  Subspace s1 = random_subspace(64, 16, a), s2 = random_subspace(64, 16, b);
  EXPECT_EQ(s1.basis().columns(), s2.basis().columns());
  EXPECT_LT(s1.basis().orthonormality_residual(), 1e-5);
  EXPECT_EQ(s1.provenance(), "random");
  SeedStream rng(8);
  int above = 0;
  for (int t = 0; t < 100; ++t) {
    Subspace x = random_subspace(64, 16, rng), y = random_subspace(64, 16, rng);
    Eigen::MatrixXd bx(64, 16), by(64, 16);
    for (int i = 0; i < 64; ++i) {
      for (int j = 0; j < 16; ++j) {
        bx(i, j) = x.basis().columns().at(i, j);
        by(i, j) = y.basis().columns().at(i, j);
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(bx.transpose() * by);
    // About 1% of independent pairs reach 0.9; none reach 0.95 in 5,000 draws.
    EXPECT_LT(svd.singularValues()(0), 0.95);
    above += svd.singularValues()(0) >= 0.9;
  }
  EXPECT_LE(above, 5);
}

class RunIntervention : public ::testing::Test {
 protected:
  void SetUp() override {
    w_ = ModelWeights::initialize(ModelConfig{}, 5);
    for (auto& [name, t] : w_.params) {
      if (!name.ends_with("norm")) {
        for (float& v : t.values()) v *= 20.0f;
      }
    }
    SeedStream rng(6);
    auto panel = make_eval_panel(TaskSpec::admissions(), NameRoster::builtin(), 10,
                                 Template::kFreeTextA, rng);
    prompts_ = flatten_prompts(panel);
  }
  ModelWeights w_;
  std::vector<EncodedPrompt> prompts_;
};

TEST_F(RunIntervention, EmptyProjectionAndSelfDiiAreIdentity) {
  const auto base = yes_no_logits(w_, prompts_);
  InterventionSpec proj{InterventionKind::kRaceProject, {2, 7},
                        Subspace(OrthonormalBasis::empty(64), {2, 7})};
  auto r = run_with_intervention(w_, prompts_, proj);
  SeedStream rng(1);
  InterventionSpec dii{InterventionKind::kDii, {1, 3}, random_subspace(64, 16, rng, {1, 3})};
  auto q = run_with_intervention(w_, prompts_, dii, prompts_);
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    EXPECT_EQ(r.logits[i].yes, base[i].yes);
    EXPECT_NEAR(q.logits[i].yes, base[i].yes, 1e-4);
    EXPECT_EQ(q.decisions[i], decide(base[i]));
  }
  EXPECT_THROW(run_with_intervention(w_, prompts_, dii), Error);
}

TEST_F(RunIntervention, FullAverageEqualizesTapAndIsLocal) {
  InterventionSpec spec{InterventionKind::kFullAverage, {2, 7}, std::nullopt};
  auto r = run_with_intervention(w_, prompts_, spec, {}, true);
  auto base = run_with_intervention(w_, prompts_, InterventionSpec{InterventionKind::kNone, {2, 7}},
                                    {}, true);
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    expect_near(r.traces[i].at(2, 7), r.traces[0].at(2, 7), 1e-6);
    for (int l = 0; l <= 2; ++l) {
      for (int p = 0; p < 16; ++p) {
        if (l == 2 && p == 7) continue;
        expect_near(r.traces[i].at(l, p), base.traces[i].at(l, p), 0);
      }
    }
    EXPECT_EQ(r.decisions[i], r.decisions[0]);
  }
  // The unintervened traced run matches the single-prompt forward.
  ForwardResult f = forward_with_taps(w_, prompts_[3]);
  expect_near(f.trace.data, base.traces[3].data, 1e-5);
}

TEST_F(RunIntervention, RandomProjectNeedsRandomProvenance) {
  SeedStream rng(2);
  Subspace r = random_subspace(64, 8, rng, {1, 7});
  Subspace trained(r.basis(), r.tap(), "trained");
  EXPECT_NO_THROW(run_with_intervention(w_, prompts_, {InterventionKind::kRandomProject, {1, 7}, r}));
  EXPECT_THROW(run_with_intervention(w_, prompts_, {InterventionKind::kRandomProject, {1, 7}, trained}),
               Error);
}

TEST(SubspaceFile, RoundTrip) {
  SeedStream rng(3);
  Subspace s = random_subspace(64, 16, rng, {3, 7});
  Subspace t(s.basis(), s.tap(), "trained", "run-1");
  auto path = std::filesystem::temp_directory_path() / "rsub_subspace_test.rsub";
  save_subspace(t, path);
  Subspace u = load_subspace(path);
  EXPECT_EQ(u.basis().columns(), t.basis().columns());
  EXPECT_EQ(u.tap(), t.tap());
  EXPECT_EQ(u.run_id(), "run-1");
  Subspace e(OrthonormalBasis::empty(64), {1, 7}, "trained");
  save_subspace(e, path);
  EXPECT_EQ(load_subspace(path).k(), 0u);
}

TEST(TapParse, Forms) {
  EXPECT_EQ(Tap::parse("3:7"), (Tap{3, 7}));
  EXPECT_THROW(Tap::parse("x"), Error);
}

}  // namespace
}  // namespace rsub
