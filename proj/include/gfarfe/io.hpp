#pragma once

#include <string>

#include <json.hpp>

#include "gfarfe/explore.hpp"
#include "gfarfe/mdp.hpp"
#include "gfarfe/plan.hpp"

namespace gfarfe {

// Versioned JSON documents. Keys are emitted in sorted order, so the same
// in-memory value always serializes to the same bytes.

nlohmann::json to_json(const TabularMdp& mdp);                 // "mdp-v1"
TabularMdp mdp_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const RewardFunction& reward);          // "reward-v1"
RewardFunction reward_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const Policy& policy);                  // "policy-v1"
Policy policy_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const FittedFn& fn);                    // "fclass-v1"

nlohmann::json to_json(const ExplorationArtifacts& artifacts); // "gfarfe-artifacts-v1"
ExplorationArtifacts artifacts_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const PlanResult& result, const PlanConfig& cfg); // "gfarfe-plan-v1"
Policy policy_from_plan_or_policy_json(const nlohmann::json& doc);

std::string read_text_file(const std::string& path);           // throws IoError
void write_text_file(const std::string& path, const std::string& text);
nlohmann::json read_json_file(const std::string& path);        // throws IoError/ConfigError

} // namespace gfarfe
