#include "gfarfe/baselines.hpp"

#include "explore_impl.hpp"

namespace gfarfe {

ExplorationArtifacts explore_unweighted(const TabularMdp& env, const ExploreConfig& cfg) {
    ExploreConfig unit = cfg;
    unit.gamma = 0.0;
    detail::ExploreOptions options;
    options.weight_mode = WeightMode::Unit;
    options.explorer_tag = "unweighted";
    return detail::explore_impl(env, unit, options);
}

ExplorationArtifacts explore_uniform(const TabularMdp& env, int episodes, std::uint64_t seed) {
    ExploreConfig cfg;
    cfg.episodes = episodes;
    cfg.seed = seed;
    cfg.fclass = FnClassSpec::tabular(env.num_states, env.num_actions);
    detail::ExploreOptions options;
    options.weight_mode = WeightMode::Unit;
    options.uniform_actions = true;
    options.explorer_tag = "uniform";
    return detail::explore_impl(env, cfg, options);
}

SkylineCurve skyline_ucb(const TabularMdp& env, const RewardFunction& reward, int episodes,
                         const ExploreConfig& cfg) {
    ExploreConfig run = cfg;
    run.episodes = episodes;
    SkylineCurve curve;
    detail::ExploreOptions options;
    options.explorer_tag = "skyline";
    options.true_reward = &reward;
    options.policy_values = &curve.policy_values;
    detail::explore_impl(env, run, options);
    return curve;
}

} // namespace gfarfe
