#include "rsub/refmodel/teacher.hpp"

#include <cmath>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"

namespace rsub {

namespace {

// Offsets in race order (Asian, Black, Latino, White).
constexpr std::array<double, 4> kAdmissionsOffsets = {0.02, -0.04, -0.02, 0.04};
constexpr std::array<double, 4> kHiringOffsets = {0.03, -0.03, -0.03, 0.03};
constexpr std::array<double, 3> kWeights = {0.5, 0.3, 0.2};

TeacherRule make_rule(Family f, std::uint64_t seed, std::array<double, 4> offsets) {
  TeacherRule r;
  r.family = f;
  r.weights = kWeights;
  r.offsets = offsets;
  SeedStream rng(derive_seed(seed, f == Family::kAdmissions ? "tau/admissions" : "tau/hiring"));
  const int n = TaskSpec::for_family(f).num_institutions();
  for (int i = 0; i < n; ++i) r.thresholds.push_back(rng.uniform_real(0.4, 0.6));
  return r;
}

}  // namespace

TeacherRule TeacherRule::biased(Family f, std::uint64_t seed) {
  return make_rule(f, seed, f == Family::kAdmissions ? kAdmissionsOffsets : kHiringOffsets);
}

TeacherRule TeacherRule::unbiased(Family f, std::uint64_t seed) {
  return make_rule(f, seed, {0, 0, 0, 0});
}

void TeacherRule::validate() const {
  double s = 0;
  for (double w : weights) s += w;
  require(std::abs(s - 1.0) < 1e-9, ErrorKind::kContract, "teacher weights must sum to 1");
  for (double b : offsets) {
    require(b >= -0.2 && b <= 0.2, ErrorKind::kContract, "teacher offset outside [-0.2, 0.2]");
  }
  require(static_cast<int>(thresholds.size()) == TaskSpec::for_family(family).num_institutions(),
          ErrorKind::kContract, "teacher needs one threshold per institution");
  for (double t : thresholds) {
    require(t >= 0.3 && t <= 0.7, ErrorKind::kContract, "teacher threshold outside [0.3, 0.7]");
  }
}

nlohmann::json TeacherRule::to_json() const {
  return {{"family", to_string(family)},
          {"weights", weights},
          {"offsets", offsets},
          {"thresholds", thresholds}};
}

TeacherRule TeacherRule::from_json(const nlohmann::json& j) {
  TeacherRule r;
  r.family = family_from_string(j.at("family").get<std::string>());
  r.weights = j.at("weights").get<std::array<double, 3>>();
  r.offsets = j.at("offsets").get<std::array<double, 4>>();
  r.thresholds = j.at("thresholds").get<std::vector<double>>();
  r.validate();
  return r;
}

std::array<double, 3> normalized_qualifications(const Profile& p) {
  if (p.family == Family::kAdmissions) {
    return {(p.quals[0] / 100.0 - 1.0) / 3.0, p.quals[1] / 8.0, p.quals[2] / 3.0};
  }
  return {p.quals[0] / 20.0, p.quals[1] / 3.0, p.quals[2] / 3.0};
}

double teacher_score(const Profile& p, const TeacherRule& rule) {
  require(p.family == rule.family, ErrorKind::kContract, "teacher family does not match profile");
  const auto z = normalized_qualifications(p);
  double s = 0;
  for (int i = 0; i < 3; ++i) s += rule.weights[i] * z[i];
  return s + rule.offsets[static_cast<int>(p.race())];
}

Label teacher_label(const Profile& p, const TeacherRule& rule) {
  const double tau = rule.thresholds.at(static_cast<std::size_t>(p.institution));
  return teacher_score(p, rule) > tau ? Label::kYes : Label::kNo;
}

Teacher Teacher::biased(std::uint64_t seed) {
  return {TeacherRule::biased(Family::kAdmissions, seed), TeacherRule::biased(Family::kHiring, seed)};
}

Teacher Teacher::unbiased(std::uint64_t seed) {
  return {TeacherRule::unbiased(Family::kAdmissions, seed),
          TeacherRule::unbiased(Family::kHiring, seed)};
}

nlohmann::json Teacher::to_json() const {
  return {{"admissions", admissions.to_json()}, {"hiring", hiring.to_json()}};
}

Teacher Teacher::from_json(const nlohmann::json& j) {
  return {TeacherRule::from_json(j.at("admissions")), TeacherRule::from_json(j.at("hiring"))};
}

}  // namespace rsub
