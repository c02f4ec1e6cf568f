#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfarfe/fclass.hpp"
#include "gfarfe/mdp.hpp"

namespace gfarfe {

struct ExploreConfig {
    int episodes = 0;      // K
    double beta = 1.0;     // exploration confidence radius
    double alpha = 1.0;    // weight floor
    double gamma = 0.0;    // epistemic weight multiplier
    double lambda = 1.0;   // ridge regularizer
    double log_n_v = 0.0;  // optimistic-value-class cover proxy
    double log_n_f = 0.0;  // value-class cover proxy
    FnClassSpec fclass;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class WeightMode { Variance, Unit };

std::string to_string(WeightMode mode);

/// Everything recorded at one visited (episode, stage) pair.
struct StageLog {
    int stage = 0;
    int state = 0;
    int action = 0;
    int next_state = 0;
    double bonus = 0.0;            // b at the visited pair
    double intrinsic_reward = 0.0; // r = b/2 at the visited pair
    double f_hat = 0.0;            // fitted value at the visited pair
    double q_value = 0.0;          // min{f_hat + bonus, 1}
    double sigma = 0.0;            // aleatoric weight branch
    double sigma_epistemic = 0.0;  // gamma * sqrt(uncertainty) branch
    double sigma_bar = 0.0;        // recorded weight, max of branches and alpha
};

struct EpisodeLog {
    double intrinsic_value = 0.0; // V_{k,1} at the episode's initial state
    std::vector<StageLog> steps;
};

/// Output of one exploration run: the per-stage datasets used by planning
/// plus a per-(episode, stage) audit trail. All explorers emit this same
/// shape so the planning phase is shared byte-for-byte.
struct ExplorationArtifacts {
    std::string explorer = "gfarfe";
    WeightMode weight_mode = WeightMode::Variance;
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int episodes = 0;
    ExploreConfig config; // echo of what actually ran
    std::vector<StageDataset> stage_datasets; // [horizon]
    std::vector<EpisodeLog> episode_logs;     // [episodes]

    /// View of the first k episodes, identical to what a fresh run with
    /// budget k and the same seed would have produced.
    ExplorationArtifacts prefix(int k) const;
};

/// Phase I. The environment argument carries transitions and the initial
/// distribution only; no reward can flow in through this signature.
ExplorationArtifacts explore(const TabularMdp& env, const ExploreConfig& cfg);

} // namespace gfarfe
