#include "rsub/tasks/dataset_io.hpp"

#include <sstream>

#include "rsub/common/error.hpp"

namespace rsub {

using nlohmann::json;

json to_json(const Profile& p, const NameRoster& roster) {
  json j;
  j["family"] = to_string(p.family);
  j["institution"] = p.institution;
  j["race"] = to_string(p.race());
  if (p.name_id) {
    j["name_id"] = *p.name_id;
    j["name"] = roster.name(*p.name_id);
  }
  if (p.explicit_race) j["explicit_race"] = to_string(*p.explicit_race);
  j["quals"] = p.quals;
  return j;
}

Profile profile_from_json(const json& j) {
  Profile p;
  p.family = family_from_string(j.at("family").get<std::string>());
  p.institution = j.at("institution").get<int>();
  if (j.contains("name_id")) p.name_id = j["name_id"].get<int>();
  if (j.contains("explicit_race")) {
    p.explicit_race = race_from_string(j["explicit_race"].get<std::string>());
  }
  p.quals = j.at("quals").get<Qualifications>();
  return p;
}

json to_json(const EncodedPrompt& e) {
  return {{"tokens", e.tokens},
          {"template", to_string(e.tmpl)},
          {"name_pos", e.name_pos},
          {"final_pos", e.final_pos}};
}

EncodedPrompt prompt_from_json(const json& j) {
  EncodedPrompt e;
  e.tokens = j.at("tokens").get<std::array<int, tok::kContextLength>>();
  e.tmpl = template_from_string(j.at("template").get<std::string>());
  e.name_pos = j.at("name_pos").get<int>();
  e.final_pos = j.at("final_pos").get<int>();
  return e;
}

std::string pairs_to_jsonl(std::span<const CounterfactualPair> pairs, const NameRoster& roster,
                           std::uint64_t seed, std::string_view split) {
  std::ostringstream os;
  for (const auto& p : pairs) {
    json j;
    j["split"] = split;
    j["seed"] = seed;
    j["source_profile"] = to_json(p.source_profile, roster);
    j["target_profile"] = to_json(p.target_profile, roster);
    j["source"] = to_json(p.source);
    j["target"] = to_json(p.target);
    j["base_label"] = to_string(p.base);
    j["counterfactual_label"] = to_string(p.counterfactual);
    j["behavior"] = to_string(p.behavior);
    os << j.dump() << '\n';
  }
  return os.str();
}

std::string panel_to_jsonl(std::span<const PanelRow> panel, const NameRoster& roster,
                           std::uint64_t seed) {
  std::ostringstream os;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    json j;
    j["row"] = i;
    j["seed"] = seed;
    j["base"] = to_json(panel[i].base, roster);
    for (int r = 0; r < kNumRaces; ++r) {
      json v = to_json(panel[i].variants[r], roster);
      v["prompt"] = to_json(panel[i].prompts[r]);
      j["variants"].push_back(v);
    }
    os << j.dump() << '\n';
  }
  return os.str();
}

std::vector<CounterfactualPair> pairs_from_jsonl(std::string_view text) {
  std::vector<CounterfactualPair> out;
  std::istringstream is{std::string(text)};
  std::string line;
  auto label = [](const json& v) { return v.get<std::string>() == "Yes" ? Label::kYes : Label::kNo; };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CounterfactualPair p;
      p.source_profile = profile_from_json(j.at("source_profile"));
      p.target_profile = profile_from_json(j.at("target_profile"));
      p.source = prompt_from_json(j.at("source"));
      p.target = prompt_from_json(j.at("target"));
      p.base = label(j.at("base_label"));
      p.counterfactual = label(j.at("counterfactual_label"));
      p.behavior = behavior_class(p.base, p.counterfactual);
      out.push_back(p);
    } catch (const json::exception& e) {
      fail(ErrorKind::kDatasetIntegrity, std::string("bad pair line: ") + e.what());
    }
  }
  return out;
}

}  // namespace rsub
