#include "rsub/tasks/roster.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "rsub/common/error.hpp"

namespace rsub {

std::string_view to_string(Race r) {
  switch (r) {
    case Race::kAsian: return "Asian";
    case Race::kBlack: return "Black";
    case Race::kLatino: return "Latino";
    case Race::kWhite: return "White";
  }
  return "?";
}

std::string_view roster_key(Race r) {
  switch (r) {
    case Race::kAsian: return "asian";
    case Race::kBlack: return "black";
    case Race::kLatino: return "latino";
    case Race::kWhite: return "white";
  }
  return "?";
}

Race race_from_string(std::string_view s) {
  for (Race r : kAllRaces) {
    if (s == to_string(r) || s == roster_key(r)) return r;
  }
  fail(ErrorKind::kContract, "unknown race '" + std::string(s) + "'");
}

NameRoster::NameRoster(std::array<std::vector<std::string>, 4> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (Race r : kAllRaces) {
    const auto& list = names_[static_cast<int>(r)];
    require(list.size() == kNamesPerRace, ErrorKind::kDatasetIntegrity,
            "roster: race " + std::string(roster_key(r)) + " has " + std::to_string(list.size()) +
                " names, expected 100");
    for (const auto& n : list) {
      require(seen.insert(n).second, ErrorKind::kDatasetIntegrity,
              "roster: name '" + n + "' appears more than once");
    }
  }
}

NameRoster NameRoster::builtin() {
  std::array<std::vector<std::string>, 4> names;
  const auto& raw = builtin_roster_names();
  for (int r = 0; r < kNumRaces; ++r) names[r].assign(raw[r].begin(), raw[r].end());
  return NameRoster(std::move(names));
}

NameRoster NameRoster::from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kDatasetIntegrity, std::string("roster: invalid JSON: ") + e.what());
  }
  require(j.is_object() && j.size() == 4, ErrorKind::kDatasetIntegrity,
          "roster: expected an object with exactly 4 race keys");
  std::array<std::vector<std::string>, 4> names;
  for (Race r : kAllRaces) {
    const std::string key(roster_key(r));
    require(j.contains(key) && j[key].is_array(), ErrorKind::kDatasetIntegrity,
            "roster: missing array for '" + key + "'");
    for (const auto& n : j[key]) {
      require(n.is_string(), ErrorKind::kDatasetIntegrity, "roster: non-string name under " + key);
      names[static_cast<int>(r)].push_back(n.get<std::string>());
    }
  }
  return NameRoster(std::move(names));
}

NameRoster NameRoster::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open roster " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

const std::string& NameRoster::name(int name_id) const {
  require(name_id >= 0 && name_id < kNumNames, ErrorKind::kContract,
          "name id out of range: " + std::to_string(name_id));
  return names_[name_id / kNamesPerRace][name_id % kNamesPerRace];
}

Race NameRoster::race_of(int name_id) {
  require(name_id >= 0 && name_id < kNumNames, ErrorKind::kContract,
          "name id out of range: " + std::to_string(name_id));
  return static_cast<Race>(name_id / kNamesPerRace);
}

}  // namespace rsub
