#pragma once

#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "rsub/tasks/pairs.hpp"
#include "rsub/tasks/tasks.hpp"

namespace rsub {

nlohmann::json to_json(const Profile& p, const NameRoster& roster);
nlohmann::json to_json(const EncodedPrompt& e);
EncodedPrompt prompt_from_json(const nlohmann::json& j);
Profile profile_from_json(const nlohmann::json& j);

/// One JSON object per line; every line carries `seed`.
std::string pairs_to_jsonl(std::span<const CounterfactualPair> pairs, const NameRoster& roster,
                           std::uint64_t seed, std::string_view split);
std::string panel_to_jsonl(std::span<const PanelRow> panel, const NameRoster& roster,
                           std::uint64_t seed);
std::vector<CounterfactualPair> pairs_from_jsonl(std::string_view text);

}  // namespace rsub
