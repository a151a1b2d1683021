#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <set>

#include "rsub/common/error.hpp"
#include "rsub/tasks/dataset_io.hpp"
#include "rsub/tasks/pairs.hpp"
#include "rsub/tasks/tasks.hpp"

namespace rsub {
namespace {

double chi_square(const std::vector<int>& counts) {
  double n = 0;
  for (int c : counts) n += c;
  const double e = n / counts.size();
  double x = 0;
  for (int c : counts) x += (c - e) * (c - e) / e;
  return x;
}

double critical(std::size_t bins) {
  boost::math::chi_squared dist(static_cast<double>(bins - 1));
  return boost::math::quantile(boost::math::complement(dist, 0.001));
}

TEST(Roster, BuiltinIsValid) {
  NameRoster r = NameRoster::builtin();
  std::set<std::string> all;
  for (Race race : kAllRaces) {
    EXPECT_EQ(r.names(race).size(), 100u);
    all.insert(r.names(race).begin(), r.names(race).end());
  }
  EXPECT_EQ(all.size(), 400u);
  EXPECT_EQ(NameRoster::race_of(17), Race::kAsian);
  EXPECT_EQ(NameRoster::race_of(399), Race::kWhite);
}

TEST(Roster, FileMatchesBuiltin) {
  NameRoster f = NameRoster::load(std::string(RSUB_DATA_DIR) + "/roster.json");
  NameRoster b = NameRoster::builtin();
  for (Race race : kAllRaces) EXPECT_EQ(f.names(race), b.names(race));
}

TEST(Roster, RejectsDuplicatesAndShortLists) {
  auto names = NameRoster::builtin();
  std::array<std::vector<std::string>, 4> lists;
  for (Race race : kAllRaces) lists[static_cast<int>(race)] = names.names(race);
  auto dup = lists;
  dup[1][0] = dup[0][0];
  EXPECT_THROW(NameRoster{dup}, Error);
  auto shrt = lists;
  shrt[2].pop_back();
  EXPECT_THROW(NameRoster{shrt}, Error);
  EXPECT_THROW(NameRoster::from_json_text(R"({"asian": []})"), Error);
}

TEST(SampleProfile, DomainsAndDeterminism) {
  for (Family f : {Family::kAdmissions, Family::kHiring}) {
    TaskSpec spec = TaskSpec::for_family(f);
    SeedStream a(5), b(5);
    const auto dom = qualification_domains(f);
    for (int i = 0; i < 2000; ++i) {
      Profile p = sample_profile(spec, a);
      EXPECT_EQ(p, sample_profile(spec, b));
      for (int q = 0; q < 3; ++q) {
        EXPECT_GE(p.quals[q], dom[q].lo);
        EXPECT_LE(p.quals[q], dom[q].hi);
      }
      EXPECT_LT(p.institution, spec.num_institutions());
    }
  }
}

TEST(SampleProfile, ChiSquareUniformity) {
  TaskSpec adm = TaskSpec::admissions(), hir = TaskSpec::hiring();
  SeedStream rng(11);
  std::vector<int> ec(9), let(4), bucket(31), race(4), exp(21), deg(4), ref(4);
  for (int i = 0; i < 10000; ++i) {
    Profile p = sample_profile(adm, rng);
    ++ec[p.quals[1]];
    ++let[p.quals[2]];
    ++race[static_cast<int>(p.race())];
    Profile h = sample_profile(hir, rng);
    ++exp[h.quals[0]];
    ++deg[h.quals[1]];
    ++ref[h.quals[2]];
  }
  for (const auto* c : {&ec, &let, &race, &exp, &deg, &ref}) {
    EXPECT_LT(chi_square(*c), critical(c->size()));
  }
}

TEST(SampleProfile, GpaIsContinuousToHundredths) {
  TaskSpec adm = TaskSpec::admissions();
  SeedStream rng(12);
  std::set<int> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(sample_profile(adm, rng).quals[0]);
  EXPECT_GT(seen.size(), 290u);
  EXPECT_GE(*seen.begin(), 100);
  EXPECT_LE(*seen.rbegin(), 400);
}

TEST(RaceVariants, SharedQualificationsOneRaceEach) {
  NameRoster roster = NameRoster::builtin();
  TaskSpec spec = TaskSpec::admissions();
  SeedStream rng(3);
  for (int i = 0; i < 100; ++i) {
    Profile p = sample_profile(spec, rng);
    auto v = race_variants(p, roster, rng);
    for (int r = 0; r < 4; ++r) {
      EXPECT_EQ(v[r].quals, p.quals);
      EXPECT_EQ(v[r].institution, p.institution);
      EXPECT_EQ(static_cast<int>(v[r].race()), r);
    }
    EXPECT_EQ(v[static_cast<int>(p.race())], p);
  }
}

TEST(RaceVariants, WhiteNamedProfileKept) {
  Profile p{Family::kAdmissions, 2, NameRoster::name_id(Race::kWhite, 4), std::nullopt, {250, 1, 1}};
  SeedStream rng(1);
  auto v = race_variants(p, NameRoster::builtin(), rng);
  EXPECT_EQ(v[3], p);
}

TEST(RenderPrompt, FreeTextAExample) {
  Profile p{Family::kAdmissions, 3, 17, std::nullopt, {340, 5, 2}};
  EncodedPrompt e = render_prompt(p, Template::kFreeTextA);
  std::array<int, 16> want{tok::kBos, tok::kTplA, tok::kUniBase + 3, tok::name(17),
                           tok::kGpaBase + 24, tok::kEcBase + 5, tok::kLetterBase + 2, tok::kAsk};
  EXPECT_EQ(e.tokens, want);
  EXPECT_EQ(e.name_pos, 3);
  EXPECT_EQ(e.final_pos, 7);
}

TEST(RenderPrompt, ListBSameContentDifferentOrder) {
  SeedStream rng(9);
  for (Family f : {Family::kAdmissions, Family::kHiring}) {
    TaskSpec spec = TaskSpec::for_family(f);
    for (int i = 0; i < 50; ++i) {
      Profile p = sample_profile(spec, rng);
      auto a = render_prompt(p, Template::kFreeTextA), b = render_prompt(p, Template::kListB);
      std::multiset<int> ca(a.tokens.begin(), a.tokens.end()), cb(b.tokens.begin(), b.tokens.end());
      ca.erase(tok::kTplA);
      cb.erase(tok::kTplB);
      EXPECT_EQ(ca, cb);
      EXPECT_NE(a.tokens, b.tokens);
      EXPECT_EQ(b.tokens[1], tok::kTplB);
      EXPECT_EQ(b.tokens[b.name_pos], tok::name(*p.name_id));
    }
  }
}

TEST(RenderPrompt, ExplicitRaceReplacesName) {
  Profile p{Family::kAdmissions, 3, std::nullopt, Race::kWhite, {340, 5, 2}};
  EncodedPrompt e = render_prompt(p, Template::kExplicitRace);
  EXPECT_EQ(e.tokens[3], tok::race(Race::kWhite));
  EXPECT_EQ(e.tokens[4], tok::kGpaBase + 24);
  Profile named{Family::kAdmissions, 3, 17, std::nullopt, {340, 5, 2}};
  EXPECT_THROW(render_prompt(named, Template::kExplicitRace), Error);
  EXPECT_THROW(render_prompt(p, Template::kFreeTextA), Error);
}

TEST(RenderPrompt, GpaBuckets) {
  EXPECT_EQ(tok::gpa_bucket(100), 0);
  EXPECT_EQ(tok::gpa_bucket(340), 24);
  EXPECT_EQ(tok::gpa_bucket(346), 25);
  EXPECT_EQ(tok::gpa_bucket(400), 30);
  EXPECT_EQ(tok::kGpaBase + 30, tok::kEcBase - 1);
  EXPECT_EQ(tok::kNameBase + 400, tok::kYes);
}

TEST(Suffix, Mechanics) {
  Profile p{Family::kAdmissions, 0, 5, std::nullopt, {300, 2, 1}};
  EncodedPrompt e = render_prompt(p, Template::kFreeTextA);
  EXPECT_EQ(append_fairness_suffix(e, Suffix::none()), e);
  auto v2 = append_fairness_suffix(e, Suffix::very(2));
  EXPECT_EQ(std::count(v2.tokens.begin(), v2.tokens.end(), tok::kVery), 2);
  EXPECT_EQ(v2.tokens[v2.final_pos], tok::kAsk);
  EXPECT_EQ(v2.final_pos, 10);
  auto s = append_fairness_suffix(e, {SuffixKind::kSimple, 0});
  EXPECT_EQ(s.tokens.size(), e.tokens.size());
  EXPECT_EQ(s.tokens[7], tok::kSimple);
  EXPECT_EQ(s.name_pos, e.name_pos);
  try {
    append_fairness_suffix(append_fairness_suffix(e, Suffix::very(4)), Suffix::very(4));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kContextLength);
  }
}

TEST(Panel, SizesBalanceDeterminism) {
  NameRoster roster = NameRoster::builtin();
  TaskSpec spec = TaskSpec::admissions();
  SeedStream a(21), b(21);
  auto p1 = make_eval_panel(spec, roster, 400, Template::kFreeTextA, a);
  auto p2 = make_eval_panel(spec, roster, 400, Template::kFreeTextA, b);
  auto flat = flatten_prompts(p1);
  EXPECT_EQ(flat.size(), 1600u);
  std::array<int, 4> per_race{};
  for (const auto& row : p1) {
    for (int r = 0; r < 4; ++r) ++per_race[static_cast<int>(row.variants[r].race())];
  }
  for (int c : per_race) EXPECT_EQ(c, 400);
  EXPECT_EQ(flat, flatten_prompts(p2));
}

// Decision rule on the name token alone, enough to produce all four classes.
std::vector<Label> toy_oracle(std::span<const EncodedPrompt> prompts) {
  std::vector<Label> out;
  for (const auto& e : prompts) {
    const int name = e.tokens[e.name_pos] - tok::kNameBase;
    const int ec = e.tokens[5] - tok::kEcBase;
    out.push_back((name / 100 + ec) % 2 ? Label::kYes : Label::kNo);
  }
  return out;
}

TEST(Pairs, BalancedPerInstitution) {
  TaskSpec spec = TaskSpec::admissions();
  SeedStream rng(4);
  PairSamplerConfig cfg;
  cfg.n_per_class = 5;
  auto pairs = make_counterfactual_pairs(spec, Template::kFreeTextA, toy_oracle, cfg, rng);
  ASSERT_EQ(pairs.size(), 400u);
  std::map<int, std::array<int, 4>> per;
  for (const auto& p : pairs) {
    ++per[p.target_profile.institution][static_cast<int>(p.behavior)];
    EXPECT_EQ(p.behavior, behavior_class(p.base, p.counterfactual));
    std::array<EncodedPrompt, 2> q{p.target, p.swapped()};
    auto labels = toy_oracle(q);
    EXPECT_EQ(labels[0], p.base);
    EXPECT_EQ(labels[1], p.counterfactual);
  }
  EXPECT_EQ(per.size(), 20u);
  for (const auto& [inst, c] : per) EXPECT_EQ(c, (std::array<int, 4>{5, 5, 5, 5}));
  EXPECT_EQ(class_counts(pairs), (std::array<int, 4>{100, 100, 100, 100}));
}

TEST(Pairs, SaturationNamesInstitutionAndClass) {
  TaskSpec spec = TaskSpec::admissions();
  SeedStream rng(4);
  auto never_flip = [](std::span<const EncodedPrompt> ps) {
    return std::vector<Label>(ps.size(), Label::kYes);
  };
  PairSamplerConfig cfg;
  cfg.n_per_class = 2;
  cfg.draw_budget = 300;
  try {
    make_counterfactual_pairs(spec, Template::kFreeTextA, never_flip, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSaturation);
    EXPECT_NE(std::string(e.what()).find("Harvard University"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("Yes->No"), std::string::npos);
  }
  cfg.best_effort = true;
  SeedStream rng2(4);
  auto partial = make_counterfactual_pairs(spec, Template::kFreeTextA, never_flip, cfg, rng2);
  EXPECT_EQ(partial.size(), 40u);
}

TEST(Pairs, SplitAndJsonRoundTrip) {
  TaskSpec spec = TaskSpec::admissions();
  SeedStream rng(4);
  PairSamplerConfig cfg;
  cfg.n_per_class = 2;
  auto pairs = make_counterfactual_pairs(spec, Template::kListB, toy_oracle, cfg, rng);
  SeedStream s1(8), s2(8);
  auto a = split_pairs(pairs, 100, 30, 1000, s1);
  auto b = split_pairs(pairs, 100, 30, 1000, s2);
  EXPECT_EQ(a.train.size(), 100u);
  EXPECT_EQ(a.dev.size(), 30u);
  EXPECT_EQ(a.test.size(), 30u);
  EXPECT_EQ(a.train, b.train);
  const auto text = pairs_to_jsonl(a.train, NameRoster::builtin(), 8, "train");
  EXPECT_EQ(pairs_from_jsonl(text), a.train);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 100);
}

TEST(Setting, Ids) {
  Setting s{Family::kHiring, Template::kFreeTextA};
  EXPECT_EQ(s.id(), "hiring-free");
  EXPECT_EQ(Setting::parse("admissions-explicit"),
            (Setting{Family::kAdmissions, Template::kExplicitRace}));
  EXPECT_THROW(Setting::parse("admissions"), Error);
}

}  // namespace
}  // namespace rsub

namespace rsub {
namespace {

TEST(Suffix, LabelRoundTrip) {
  for (Suffix s : {Suffix::none(), Suffix{SuffixKind::kSimple, 0}, Suffix{SuffixKind::kNoAffirmative, 0},
                   Suffix::very(1), Suffix::very(4), Suffix{SuffixKind::kIllegal, 0}}) {
    EXPECT_EQ(Suffix::parse(s.label()), s) << s.label();
  }
  EXPECT_THROW(Suffix::parse("Very(x)"), Error);
  EXPECT_THROW(Suffix::parse("Loud"), Error);
}

}  // namespace
}  // namespace rsub
