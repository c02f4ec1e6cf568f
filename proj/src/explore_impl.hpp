#pragma once

#include <string>
#include <vector>

#include "gfarfe/explore.hpp"

namespace gfarfe::detail {

/// Shared episode loop behind all explorers. Baselines are configurations
/// of this loop, not forks, so any performance difference between them is
/// attributable to exploration alone.
struct ExploreOptions {
    WeightMode weight_mode = WeightMode::Variance;
    bool uniform_actions = false;
    std::string explorer_tag = "gfarfe";
    /// Reward-aware skyline only: adds the true reward to the regression
    /// target and records the exact value of each episode's greedy policy.
    const RewardFunction* true_reward = nullptr;
    std::vector<double>* policy_values = nullptr;
};

ExplorationArtifacts explore_impl(const TabularMdp& env, const ExploreConfig& cfg,
                                  const ExploreOptions& options);

} // namespace gfarfe::detail
