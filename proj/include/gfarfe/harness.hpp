#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfarfe/baselines.hpp"
#include "gfarfe/eluder.hpp"
#include "gfarfe/explore.hpp"
#include "gfarfe/plan.hpp"

namespace gfarfe {

struct EnvSpec {
    std::string kind = "chain"; // chain | random | two_branch | file
    int horizon = 10;
    // chain
    int length = 6;
    double slip = 0.1;
    // random
    int num_states = 5;
    int num_actions = 2;
    double concentration = 1.0;
    std::uint64_t gen_seed = 0;
    // two_branch
    int branch_len = 4;
    double drift = 0.5;
    // file
    std::string path;

    TabularMdp build() const;
};

struct RewardSuiteSpec {
    std::string kind = "goals_final"; // goals_final | goals_all | random | none
    int count = 0;                    // random
    std::uint64_t seed = 0;
};

struct NamedReward {
    std::string id;
    RewardFunction reward;
};

/// Realizes the suite against a concrete environment; every reward is
/// total-bounded on that environment.
std::vector<NamedReward> build_reward_suite(const RewardSuiteSpec& spec, const TabularMdp& env);

struct ExperimentConfig {
    EnvSpec env;
    std::vector<std::string> explorers = {"gfarfe"};
    std::vector<int> k_grid;
    int explore_episodes = 0; // single-run budget for the explore subcommand
    RewardSuiteSpec rewards;
    std::vector<std::uint64_t> seeds = {1};
    double epsilon = 0.1;
    double delta = 0.05;
    std::vector<double> scales = {1.0};
    std::string fclass_kind = "tabular";
    int jobs = 1;

    void validate() const; // throws ConfigError naming the offending field
    static ExperimentConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    FnClassSpec make_fclass(const TabularMdp& env) const;
};

struct MetricRow {
    std::uint64_t seed = 0;
    std::string explorer;
    int k = 0;
    std::string reward_id;
    double subopt = 0.0;
    double dim = 0.0;
    double sigma_sum = 0.0;
    double wallclock_s = 0.0;
};

struct SweepResult {
    std::vector<MetricRow> rows;
    nlohmann::json summary;
};

/// One exploration run per (seed, explorer, scale) up to max(K grid), with
/// prefix checkpoints planned against every reward at every grid point.
/// Rows are canonically sorted, so parallel execution never changes bytes.
SweepResult run_sweep(const ExperimentConfig& cfg);

/// Fixed column order: seed,explorer,K,reward_id,subopt,dim,sigma_sum,wallclock_s
std::string rows_to_csv(const std::vector<MetricRow>& rows);

/// Hash of the CSV with the wallclock column dropped from every line.
std::uint64_t csv_determinism_hash(const std::string& csv);

/// Writes metrics.csv and summary.json; throws IoError if the directory
/// cannot be created or written.
void write_sweep_outputs(const SweepResult& result, const std::string& out_dir);

struct ScalingFit {
    std::string explorer;
    std::string reward_id; // "__all__" pools every reward in the suite
    double slope = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    bool estimable = false;
    int points = 0;
};

/// Least-squares slope of log(median subopt) vs log K per (explorer,
/// reward), medians taken across seeds, with a seed-bootstrap CI. Grid
/// points whose median is at or below the 1e-4 floor are dropped; fewer
/// than 4 surviving points makes the fit not-estimable.
std::vector<ScalingFit> fit_scaling(const std::vector<MetricRow>& rows);

} // namespace gfarfe
