#pragma once

#include <cstdint>
#include <vector>

#include "gfarfe/explore.hpp"

namespace gfarfe {

/// Sensitivity-style control: identical loop with all weights forced to 1
/// and the epistemic multiplier off.
ExplorationArtifacts explore_unweighted(const TabularMdp& env, const ExploreConfig& cfg);

/// Null baseline: uniform-random actions, unit weights, same artifact shape.
ExplorationArtifacts explore_uniform(const TabularMdp& env, int episodes, std::uint64_t seed);

struct SkylineCurve {
    /// Exact value of each episode's greedy policy under the true reward.
    std::vector<double> policy_values;
};

/// Reward-aware optimistic reference: the same loop and bonuses with the
/// true reward in place of the intrinsic one.
SkylineCurve skyline_ucb(const TabularMdp& env, const RewardFunction& reward, int episodes,
                         const ExploreConfig& cfg);

} // namespace gfarfe
