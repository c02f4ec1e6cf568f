#pragma once

#include "gfarfe/explore.hpp"

namespace gfarfe {

struct PlanConfig {
    double beta = 1.0;   // planning confidence radius
    double lambda = 1.0;
    FnClassSpec fclass;

    void validate() const;
};

struct PlanResult {
    Policy policy;
    std::vector<double> v_hat;   // [horizon+1][states]
    std::vector<double> q_hat;   // [horizon][states][actions]
    std::vector<double> bonuses; // [horizon][states][actions]
    std::vector<FittedFn> fitted; // per stage
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;

    double v_at(int h, int s) const { return v_hat[static_cast<std::size_t>(h) * num_states + s]; }
    double q_at(int h, int s, int a) const {
        return q_hat[static_cast<std::size_t>((h * num_states + s)) * num_actions + a];
    }
    double bonus_at(int h, int s, int a) const {
        return bonuses[static_cast<std::size_t>((h * num_states + s)) * num_actions + a];
    }
};

/// Phase II. A pure function of (artifacts, reward, config): the recorded
/// datasets and weights are frozen, no environment handle is taken, and
/// repeated calls return identical results. Per-step rewards are rescaled
/// by 1/horizon before planning.
PlanResult plan(const ExplorationArtifacts& artifacts, const RewardFunction& reward,
                const PlanConfig& cfg);

/// Calibration knobs derived from the covering-number proxies:
///   beta_explore = max(1, scale * sqrt(H * logN_V))
///   beta_plan    = max(1, scale * sqrt(H * logN_F))
///   alpha        = 1 / sqrt(H)
///   gamma        = sqrt(scale^2 * logN_V)
/// logN_V resolves the radius that appears inside its own composition by
/// two fixed-point iterations starting from 1. `scale` absorbs the
/// constants the theory leaves unspecified; it rescales the confidence
/// unit sqrt(logN) coherently, so the log_n_* fields below are the
/// effective (overridden) covers to run with, and log_n_*_proxy keep the
/// raw discretization-bound values for reporting.
struct Calibration {
    double beta_explore = 1.0;
    double beta_plan = 1.0;
    double alpha = 1.0;
    double gamma = 0.0;
    double log_n_v = 0.0;
    double log_n_f = 0.0;
    double log_n_v_proxy = 0.0;
    double log_n_f_proxy = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    double scale = 1.0;
};

Calibration calibrate_betas(const FnClassSpec& spec, int horizon, double epsilon, double delta,
                            double scale);

} // namespace gfarfe
