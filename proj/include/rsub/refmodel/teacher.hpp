#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "rsub/tasks/tasks.hpp"

namespace rsub {

/// Biased decision rule: Yes iff w . z(p) + offset[race] > threshold[institution].
struct TeacherRule {
  Family family = Family::kAdmissions;
  std::array<double, 3> weights{};
  std::array<double, 4> offsets{};  // race order
  std::vector<double> thresholds;   // per institution

  /// Calibrated offsets; thresholds drawn uniformly in [0.4, 0.6] from `seed`.
  static TeacherRule biased(Family f, std::uint64_t seed);
  /// Same weights and thresholds with every offset zero.
  static TeacherRule unbiased(Family f, std::uint64_t seed);

  void validate() const;
  nlohmann::json to_json() const;
  static TeacherRule from_json(const nlohmann::json& j);
};

/// Min-max normalized qualifications in [0, 1].
std::array<double, 3> normalized_qualifications(const Profile& p);
double teacher_score(const Profile& p, const TeacherRule& rule);
Label teacher_label(const Profile& p, const TeacherRule& rule);

/// One rule per family.
struct Teacher {
  TeacherRule admissions;
  TeacherRule hiring;

  static Teacher biased(std::uint64_t seed);
  static Teacher unbiased(std::uint64_t seed);
  const TeacherRule& rule(Family f) const { return f == Family::kAdmissions ? admissions : hiring; }
  Label label(const Profile& p) const { return teacher_label(p, rule(p.family)); }
  nlohmann::json to_json() const;
  static Teacher from_json(const nlohmann::json& j);
};

}  // namespace rsub
