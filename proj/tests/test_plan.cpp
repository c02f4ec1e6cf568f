#include <doctest.h>

#include <cmath>

#include "gfarfe/explore.hpp"
#include "gfarfe/io.hpp"
#include "gfarfe/plan.hpp"

using namespace gfarfe;

namespace {

ExploreConfig calibrated_config(const TabularMdp& env, int episodes, std::uint64_t seed,
                                double scale, double epsilon = 0.1) {
    const auto spec = FnClassSpec::tabular(env.num_states, env.num_actions);
    const auto cal = calibrate_betas(spec, env.horizon, epsilon, 0.05, scale);
    ExploreConfig cfg;
    cfg.episodes = episodes;
    cfg.beta = cal.beta_explore;
    cfg.alpha = cal.alpha;
    cfg.gamma = cal.gamma;
    cfg.lambda = 1.0;
    cfg.log_n_v = cal.log_n_v;
    cfg.log_n_f = cal.log_n_f;
    cfg.fclass = spec;
    cfg.seed = seed;
    return cfg;
}

RewardFunction goal_reward(const TabularMdp& env, int h, int s) {
    RewardFunction r;
    r.horizon = env.horizon;
    r.num_states = env.num_states;
    r.num_actions = env.num_actions;
    r.values.assign(static_cast<std::size_t>(env.horizon) * env.num_states * env.num_actions, 0.0);
    for (int a = 0; a < env.num_actions; ++a) r.at(h, s, a) = 1.0;
    return r;
}

} // namespace

TEST_CASE("empty artifacts give a pure-bonus plan") {
    const auto env = make_chain_mdp(4, 5, 0.0);
    const auto cfg = calibrated_config(env, 0, 1, 1.0);
    const auto art = explore(env, cfg);
    PlanConfig pcfg;
    pcfg.beta = 2.0;
    pcfg.lambda = 1.0;
    pcfg.fclass = cfg.fclass;
    const auto result = plan(art, goal_reward(env, 4, 3), pcfg);
    const double expected = std::min(pcfg.beta / std::sqrt(pcfg.lambda), 1.0);
    for (double b : result.bonuses) CHECK(b == doctest::Approx(expected));
    for (int h = 0; h < env.horizon; ++h)
        for (int s = 0; s < env.num_states; ++s) {
            CHECK(result.v_at(h, s) == doctest::Approx(1.0)); // bonus saturates the clip
            CHECK(result.policy.at(h, s) == 0);               // ties break low
        }
}

TEST_CASE("zero reward leaves only bonuses") {
    const auto env = make_chain_mdp(4, 5, 0.1);
    const auto art = explore(env, calibrated_config(env, 64, 3, 0.25));
    PlanConfig pcfg;
    pcfg.beta = 1.0;
    pcfg.lambda = 1.0;
    pcfg.fclass = art.config.fclass;
    RewardFunction zero = goal_reward(env, 0, 0);
    for (auto& v : zero.values) v = 0.0;
    const auto result = plan(art, zero, pcfg);
    for (int h = 0; h < env.horizon; ++h)
        for (int s = 0; s < env.num_states; ++s) {
            double bonus_bound = 0.0;
            for (int hh = h; hh < env.horizon; ++hh) {
                double best = 0.0;
                for (int ss = 0; ss < env.num_states; ++ss)
                    for (int a = 0; a < env.num_actions; ++a)
                        best = std::max(best, result.bonus_at(hh, ss, a));
                bonus_bound += best;
            }
            CHECK(result.v_at(h, s) <= std::min(1.0, bonus_bound) + 1e-9);
        }
}

TEST_CASE("planning recovers the optimal chain policy with enough data") {
    const auto env = make_chain_mdp(4, 6, 0.0);
    const auto art = explore(env, calibrated_config(env, 1024, 7, 0.05, 1.0));
    PlanConfig pcfg;
    pcfg.beta = 1.0;
    pcfg.lambda = 1.0;
    pcfg.fclass = art.config.fclass;
    const auto reward = goal_reward(env, 5, 3);
    const auto result = plan(art, reward, pcfg);
    const auto optimal = value_iteration(env, reward);
    CHECK(evaluate_policy(env, reward, result.policy) ==
          doctest::Approx(optimal.initial_value(env.initial_dist)).epsilon(1e-9));
}

TEST_CASE("single-cell plan saturates the clip") {
    TabularMdp env;
    env.num_states = 1;
    env.num_actions = 1;
    env.horizon = 1;
    env.probs = {1.0};
    env.initial_dist = {1.0};
    env.validate_and_normalize();
    const auto art = explore(env, calibrated_config(env, 8, 9, 1.0));
    PlanConfig pcfg;
    pcfg.beta = 1.0;
    pcfg.lambda = 1.0;
    pcfg.fclass = art.config.fclass;
    const auto result = plan(art, goal_reward(env, 0, 0), pcfg);
    // The regression sees eight observations of reward 1, so the fitted
    // value is close to 1 and the bonus pushes the clipped Q to exactly 1.
    CHECK(result.v_at(0, 0) == doctest::Approx(1.0));
    CHECK(result.q_at(0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("plan is a pure function of its inputs") {
    const auto env = make_chain_mdp(5, 8, 0.1);
    const auto art = explore(env, calibrated_config(env, 128, 13, 0.25));
    PlanConfig pcfg;
    pcfg.beta = 1.5;
    pcfg.lambda = 1.0;
    pcfg.fclass = art.config.fclass;
    const auto reward = goal_reward(env, 7, 4);
    const auto a = plan(art, reward, pcfg);
    const auto b = plan(art, reward, pcfg);
    CHECK(to_json(a, pcfg).dump() == to_json(b, pcfg).dump());
}

TEST_CASE("per-step rewards are rescaled before planning") {
    const auto env = make_chain_mdp(3, 4, 0.0);
    const auto art = explore(env, calibrated_config(env, 256, 17, 0.25));
    PlanConfig pcfg;
    pcfg.beta = 1.0;
    pcfg.lambda = 1.0;
    pcfg.fclass = art.config.fclass;
    RewardFunction per_step = goal_reward(env, 3, 2);
    per_step.scale_mode = RewardScale::PerStep;
    RewardFunction scaled = per_step.rescaled_to_total_bounded();
    const auto a = plan(art, per_step, pcfg);
    const auto b = plan(art, scaled, pcfg);
    CHECK(to_json(a, pcfg).dump() == to_json(b, pcfg).dump());
}

TEST_CASE("plan optimism on a well-explored chain") {
    const auto env = make_chain_mdp(4, 6, 0.1);
    const auto spec = FnClassSpec::tabular(env.num_states, env.num_actions);
    const auto cal = calibrate_betas(spec, env.horizon, 0.1, 0.05, 1.0);
    const auto art = explore(env, calibrated_config(env, 512, 19, 1.0));
    PlanConfig pcfg;
    pcfg.beta = cal.beta_plan;
    pcfg.lambda = 1.0;
    pcfg.fclass = spec;
    const auto reward = goal_reward(env, 5, 3);
    const auto result = plan(art, reward, pcfg);
    const auto optimal = value_iteration(env, reward);
    for (int h = 0; h < env.horizon; ++h)
        for (int s = 0; s < env.num_states; ++s)
            CHECK(result.v_at(h, s) >= optimal.v_at(h, s) - 1e-9);
}

TEST_CASE("calibration formulas") {
    SUBCASE("horizon scaling of alpha") {
        const auto spec = FnClassSpec::tabular(3, 2);
        const auto a = calibrate_betas(spec, 4, 0.3, 0.1, 1.0);
        const auto b = calibrate_betas(spec, 8, 0.3, 0.1, 1.0);
        CHECK(a.alpha == doctest::Approx(0.5));
        CHECK(b.alpha == doctest::Approx(a.alpha / std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("single-cell horizon one") {
        const auto spec = FnClassSpec::tabular(1, 1);
        const auto cal = calibrate_betas(spec, 1, 1.0, 0.1, 1.0);
        CHECK(cal.alpha == doctest::Approx(1.0));
        CHECK(cal.gamma == doctest::Approx(std::sqrt(cal.log_n_v)).epsilon(1e-12));
        CHECK(cal.beta_explore ==
              doctest::Approx(std::max(1.0, std::sqrt(cal.log_n_v))).epsilon(1e-12));
    }
    SUBCASE("spreadsheet recomputation of the stated formulas") {
        const auto spec = FnClassSpec::tabular(10, 4);
        const int horizon = 8;
        const double eps = 0.1, scale = 0.25;
        const auto cal = calibrate_betas(spec, horizon, eps, 0.05, scale);
        // Reproduce the documented pipeline: two fixed-point rounds for the
        // radius multiplier inside the optimistic-class cover, then the
        // scale knob applied to the confidence unit.
        const auto log_cover = [&](double e) { return 10.0 * 4.0 * std::log(1.0 + 1.0 / e); };
        double mult = 1.0, log_n_v = 0.0;
        for (int i = 0; i < 2; ++i) {
            log_n_v = log_cover(eps / 2.0) + log_cover(eps / (2.0 * mult));
            mult = std::max(1.0, 2.0 * std::max(1.0, scale * std::sqrt(horizon * log_n_v)));
        }
        const double eff_v = scale * scale * log_n_v;
        const double eff_f = scale * scale * log_cover(eps);
        CHECK(cal.log_n_f_proxy == doctest::Approx(log_cover(eps)).epsilon(1e-12));
        CHECK(cal.log_n_v_proxy == doctest::Approx(log_n_v).epsilon(1e-12));
        CHECK(cal.log_n_v == doctest::Approx(eff_v).epsilon(1e-12));
        CHECK(cal.log_n_f == doctest::Approx(eff_f).epsilon(1e-12));
        CHECK(cal.beta_explore ==
              doctest::Approx(std::max(1.0, std::sqrt(horizon * eff_v))).epsilon(1e-12));
        CHECK(cal.beta_plan ==
              doctest::Approx(std::max(1.0, std::sqrt(horizon * eff_f))).epsilon(1e-12));
        CHECK(cal.gamma == doctest::Approx(std::sqrt(eff_v)).epsilon(1e-12));
        CHECK(cal.alpha == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-12));
    }
}
