#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsub/common/seed.hpp"
#include "rsub/tasks/encoding.hpp"
#include "rsub/tasks/roster.hpp"

namespace rsub {

enum class Family { kAdmissions, kHiring };
enum class Template { kFreeTextA, kListB, kExplicitRace };
enum class Label { kNo = 0, kYes = 1 };

std::string_view to_string(Family f);
std::string_view to_string(Template t);
std::string_view to_string(Label l);
Family family_from_string(std::string_view s);
/// Accepts "free", "list", "explicit" and the full template names.
Template template_from_string(std::string_view s);

/// A family together with its institutions and variable domains.
struct TaskSpec {
  Family family = Family::kAdmissions;
  std::vector<std::string> institutions;

  static TaskSpec admissions();
  static TaskSpec hiring();
  static TaskSpec for_family(Family f);
  int num_institutions() const { return static_cast<int>(institutions.size()); }
};

/// Qualification tuple. Admissions: GPA in hundredths, ECs, letters.
/// Hiring: years of experience, degree level, referrals.
using Qualifications = std::array<int, 3>;

struct QualDomain {
  int lo;
  int hi;
};
/// Integer domains of the three qualifications (GPA in hundredths).
std::array<QualDomain, 3> qualification_domains(Family f);
std::string_view degree_name(int level);

struct Profile {
  Family family = Family::kAdmissions;
  int institution = 0;
  std::optional<int> name_id;
  std::optional<Race> explicit_race;
  Qualifications quals{};

  Race race() const;
  bool operator==(const Profile&) const = default;
};

/// Draws institution, name and qualifications uniformly. With `explicit_mode`
/// the profile carries a uniformly drawn race tag instead of a name.
Profile sample_profile(const TaskSpec& spec, SeedStream& rng, bool explicit_mode = false);

/// One profile per race with p's qualifications; p's own race keeps p.
std::array<Profile, 4> race_variants(const Profile& p, const NameRoster& roster, SeedStream& rng);

struct EncodedPrompt {
  std::array<int, tok::kContextLength> tokens{};
  Template tmpl = Template::kFreeTextA;
  int name_pos = 0;
  int final_pos = 0;

  bool operator==(const EncodedPrompt&) const = default;
};

int template_name_position(Template t);
EncodedPrompt render_prompt(const Profile& p, Template t);

/// Copy of `target` whose name (or race) token is taken from `source`.
EncodedPrompt swap_name_token(const EncodedPrompt& target, const EncodedPrompt& source);

enum class SuffixKind { kNone, kSimple, kNoAffirmative, kVery, kIllegal };
struct Suffix {
  SuffixKind kind = SuffixKind::kNone;
  int repeat = 0;  // Very(k) only

  std::string label() const;
  static Suffix none() { return {}; }
  static Suffix very(int k) { return {SuffixKind::kVery, k}; }
  /// Inverse of label().
  static Suffix parse(std::string_view label);
  bool operator==(const Suffix&) const = default;
};

/// Inserts the suffix tokens before ASK. Throws kContextLength on overflow.
EncodedPrompt append_fairness_suffix(const EncodedPrompt& e, const Suffix& s);

struct PanelRow {
  Profile base;
  std::array<Profile, 4> variants;
  std::array<EncodedPrompt, 4> prompts;  // race order
};

std::vector<PanelRow> make_eval_panel(const TaskSpec& spec, const NameRoster& roster,
                                      int n_profiles, Template t, SeedStream& rng);
/// All panel prompts, row-major (4 per profile).
std::vector<EncodedPrompt> flatten_prompts(const std::vector<PanelRow>& panel);

/// A (family, template) combination that the model may be trained and audited on.
struct Setting {
  Family family = Family::kAdmissions;
  Template tmpl = Template::kFreeTextA;

  std::string id() const;
  static Setting parse(std::string_view id);
  bool explicit_mode() const { return tmpl == Template::kExplicitRace; }
  bool operator==(const Setting&) const = default;
};

}  // namespace rsub
