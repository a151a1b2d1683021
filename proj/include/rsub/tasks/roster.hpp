#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rsub {

enum class Race { kAsian = 0, kBlack = 1, kLatino = 2, kWhite = 3 };
inline constexpr int kNumRaces = 4;
inline constexpr std::array<Race, 4> kAllRaces = {Race::kAsian, Race::kBlack, Race::kLatino,
                                                   Race::kWhite};

std::string_view to_string(Race r);
/// Lower-case key as used in roster files ("asian", ...).
std::string_view roster_key(Race r);
Race race_from_string(std::string_view s);

const std::array<std::array<const char*, 100>, 4>& builtin_roster_names();

/// Four disjoint lists of 100 names. Name ids are race * 100 + index.
class NameRoster {
 public:
  static constexpr int kNamesPerRace = 100;
  static constexpr int kNumNames = kNumRaces * kNamesPerRace;

  explicit NameRoster(std::array<std::vector<std::string>, 4> names);
  static NameRoster builtin();
  /// JSON object with keys asian/black/latino/white. Throws kIo or kDatasetIntegrity.
  static NameRoster load(const std::filesystem::path& path);
  static NameRoster from_json_text(std::string_view text);

  const std::string& name(int name_id) const;
  static Race race_of(int name_id);
  static int name_id(Race r, int index) { return static_cast<int>(r) * kNamesPerRace + index; }
  const std::vector<std::string>& names(Race r) const { return names_[static_cast<int>(r)]; }

 private:
  std::array<std::vector<std::string>, 4> names_;
};

}  // namespace rsub
