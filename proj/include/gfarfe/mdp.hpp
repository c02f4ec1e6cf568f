#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfarfe/rng.hpp"

namespace gfarfe {

/// Episodic MDP with stage-indexed transitions. Rewards are deliberately
/// kept out of this type: exploration code that only receives a TabularMdp
/// has no way to observe any reward signal.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    /// Row-major [horizon][states][actions][states]; each row is a
    /// probability vector over next states.
    std::vector<double> probs;
    /// Distribution of the initial state, length num_states.
    std::vector<double> initial_dist;

    double prob(int h, int s, int a, int s2) const {
        return probs[static_cast<std::size_t>(((h * num_states + s) * num_actions + a)) *
                         num_states +
                     s2];
    }
    const double* row(int h, int s, int a) const {
        return probs.data() +
               static_cast<std::size_t>(((h * num_states + s) * num_actions + a)) * num_states;
    }
    double* mutable_row(int h, int s, int a) {
        return probs.data() +
               static_cast<std::size_t>(((h * num_states + s) * num_actions + a)) * num_states;
    }

    /// Checks shapes, nonnegativity and row sums; rows with |sum-1| <= 1e-9
    /// are renormalized, anything worse throws std::invalid_argument.
    void validate_and_normalize();
};

enum class RewardScale { TotalBounded, PerStep };

struct RewardFunction {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    RewardScale scale_mode = RewardScale::TotalBounded;
    /// Row-major [horizon][states][actions], entries in [0, 1].
    std::vector<double> values;

    double at(int h, int s, int a) const {
        return values[static_cast<std::size_t>((h * num_states + s)) * num_actions + a];
    }
    double& at(int h, int s, int a) {
        return values[static_cast<std::size_t>((h * num_states + s)) * num_actions + a];
    }

    /// Shape/range checks plus, in total-bounded mode, an exact max-reward
    /// DP over the given dynamics verifying no trajectory collects more
    /// than 1. Throws std::invalid_argument on violation.
    void validate(const TabularMdp& mdp) const;

    /// Per-step rewards divided by horizon; result is total-bounded.
    RewardFunction rescaled_to_total_bounded() const;
};

/// Largest total reward any trajectory can collect (expectation replaced
/// by a max over reachable next states).
double max_trajectory_reward(const TabularMdp& mdp, const RewardFunction& r);

/// Deterministic stage-indexed policy.
struct Policy {
    int horizon = 0;
    int num_states = 0;
    std::vector<int> actions; // [horizon][states]

    int at(int h, int s) const { return actions[static_cast<std::size_t>(h) * num_states + s]; }
    int& at(int h, int s) { return actions[static_cast<std::size_t>(h) * num_states + s]; }
};

enum class ValueFlavor { Optimal, TruncatedOptimal, PolicyValue };

struct ValueTables {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;
    ValueFlavor flavor = ValueFlavor::Optimal;
    std::vector<double> v; // [horizon+1][states], final stage all zero
    std::vector<double> q; // [horizon][states][actions]

    double v_at(int h, int s) const { return v[static_cast<std::size_t>(h) * num_states + s]; }
    double q_at(int h, int s, int a) const {
        return q[static_cast<std::size_t>((h * num_states + s)) * num_actions + a];
    }
    /// E_{s ~ mu} V_1(s).
    double initial_value(const std::vector<double>& mu) const;
};

/// Exact optimal values by backward induction.
ValueTables value_iteration(const TabularMdp& mdp, const RewardFunction& r);

/// Backward induction with a per-stage clip of Q at 1; the reward need not
/// be total-bounded.
ValueTables truncated_value_iteration(const TabularMdp& mdp, const RewardFunction& r);

/// Greedy policy from Q tables, ties broken toward the lowest action index.
Policy greedy_policy(const ValueTables& tables);

/// Exact V^pi tables under a fixed policy.
ValueTables policy_value_tables(const TabularMdp& mdp, const RewardFunction& r, const Policy& pi);

/// E_{s1 ~ mu} V_1^pi(s1), computed exactly.
double evaluate_policy(const TabularMdp& mdp, const RewardFunction& r, const Policy& pi);

/// Dirichlet(concentration) transition rows and initial distribution,
/// deterministic in the seed.
TabularMdp make_random_mdp(std::uint64_t seed, int num_states, int num_actions, int horizon,
                           double concentration);

/// RiverSwim-style chain: action 1 (RIGHT) advances with prob 1-slip and
/// retreats otherwise, action 0 (LEFT) always retreats; start state 0.
/// Requires 0 <= slip < 0.5 and horizon >= length.
TabularMdp make_chain_mdp(int length, int horizon, double slip);

/// Heteroscedastic testbed: from the start state, action 0 enters a
/// deterministic chain and action 1 enters a cloud of `branch_len` states
/// with near-uniform next-state noise. Cloud action 1 drifts toward the
/// cloud's last state with probability `drift`, otherwise resamples
/// uniformly; cloud action 0 is pure uniform noise.
TabularMdp make_two_branch_mdp(int branch_len, int horizon, double drift);

struct TransitionStep {
    int stage = 0;
    int state = 0;
    int action = 0;
    int next_state = 0;
};

/// One episode under pi; consumes exactly 1 + horizon draws from rng.
std::vector<TransitionStep> rollout(const TabularMdp& mdp, const Policy& pi, Rng& rng);

int sample_initial_state(const TabularMdp& mdp, Rng& rng);
int sample_next_state(const TabularMdp& mdp, int h, int s, int a, Rng& rng);

/// Stage-state occupancy d[h][s] under a deterministic policy (forward DP).
std::vector<double> occupancy(const TabularMdp& mdp, const Policy& pi);

/// Same, under the uniform-random policy.
std::vector<double> uniform_policy_occupancy(const TabularMdp& mdp);

/// Occupancy over (h, s, a) under the uniform-random policy.
std::vector<double> uniform_policy_visit_dist(const TabularMdp& mdp);

} // namespace gfarfe
