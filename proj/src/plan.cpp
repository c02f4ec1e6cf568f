#include "gfarfe/plan.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfarfe {

void PlanConfig::validate() const {
    if (!(beta >= 1.0)) throw std::invalid_argument("plan config: beta must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("plan config: lambda must be > 0");
    fclass.validate();
}

PlanResult plan(const ExplorationArtifacts& artifacts, const RewardFunction& reward_in,
                const PlanConfig& cfg) {
    cfg.validate();
    const int S = artifacts.num_states, A = artifacts.num_actions, H = artifacts.horizon;
    if (cfg.fclass.num_states != S || cfg.fclass.num_actions != A)
        throw std::invalid_argument("plan: function class shape does not match artifacts");
    if (reward_in.horizon != H || reward_in.num_states != S || reward_in.num_actions != A)
        throw std::invalid_argument("plan: reward shape does not match artifacts");
    if (static_cast<int>(artifacts.stage_datasets.size()) != H && artifacts.episodes > 0)
        throw std::invalid_argument("plan: artifacts are missing stage datasets");

    const RewardFunction reward = reward_in.scale_mode == RewardScale::PerStep
                                      ? reward_in.rescaled_to_total_bounded()
                                      : reward_in;

    PlanResult out;
    out.num_states = S;
    out.num_actions = A;
    out.horizon = H;
    out.v_hat.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    out.q_hat.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    out.bonuses.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    out.fitted.resize(H);
    out.policy.horizon = H;
    out.policy.num_states = S;
    out.policy.actions.assign(static_cast<std::size_t>(H) * S, 0);

    std::vector<double> targets;
    for (int h = H - 1; h >= 0; --h) {
        StageDataset data;
        data.stage = h;
        data.lambda = cfg.lambda;
        if (h < static_cast<int>(artifacts.stage_datasets.size()))
            data.entries = artifacts.stage_datasets[h].entries;

        StageModel model(cfg.fclass, h, cfg.lambda);
        for (const auto& e : data.entries) model.append(e);

        targets.resize(data.entries.size());
        for (std::size_t i = 0; i < data.entries.size(); ++i) {
            const auto& e = data.entries[i];
            targets[i] = reward.at(h, e.state, e.action) +
                         out.v_hat[static_cast<std::size_t>(h + 1) * S + e.next_state];
        }
        out.fitted[h] = model.fit(targets);

        for (int s = 0; s < S; ++s) {
            double best = -1.0;
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const std::size_t c = static_cast<std::size_t>((h * S + s)) * A + a;
                const double b = std::min(cfg.beta * model.uncertainty(s, a), 1.0);
                out.bonuses[c] = b;
                const double q = std::min(out.fitted[h].eval(s, a) + b, 1.0);
                out.q_hat[c] = q;
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            out.v_hat[static_cast<std::size_t>(h) * S + s] = best;
            out.policy.at(h, s) = best_a;
        }
    }
    return out;
}

Calibration calibrate_betas(const FnClassSpec& spec, int horizon, double epsilon, double delta,
                            double scale) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("calibrate: epsilon must be in (0, 1]");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("calibrate: delta must be in (0, 1)");
    if (!(scale > 0.0)) throw std::invalid_argument("calibrate: scale must be > 0");
    if (horizon < 1) throw std::invalid_argument("calibrate: horizon must be >= 1");

    const double h = static_cast<double>(horizon);
    Calibration cal;
    cal.epsilon = epsilon;
    cal.delta = delta;
    cal.scale = scale;

    // The optimistic-class cover depends on the radius multiplier, which in
    // turn depends on the cover; two iterations settle the log-scale loop.
    double radius_multiplier = 1.0;
    CoverProxy cover{};
    for (int iter = 0; iter < 2; ++iter) {
        cover = cover_proxy(spec, epsilon, radius_multiplier);
        const double beta_e = std::max(1.0, scale * std::sqrt(h * cover.log_n_v));
        radius_multiplier = std::max(1.0, 2.0 * beta_e);
    }
    cal.log_n_v_proxy = cover.log_n_v;
    cal.log_n_f_proxy = cover.log_n_f;
    // `scale` multiplies the confidence unit sqrt(logN) everywhere it
    // enters the algorithm, so the effective covers carried into configs
    // are scale^2 times the proxies. At scale 1 the raw theory values keep
    // every estimate clipped for any tractable K; shrinking the radii but
    // not the regression weights would do the same through the weights.
    cal.log_n_v = scale * scale * cal.log_n_v_proxy;
    cal.log_n_f = scale * scale * cal.log_n_f_proxy;
    cal.beta_explore = std::max(1.0, std::sqrt(h * cal.log_n_v));
    cal.beta_plan = std::max(1.0, std::sqrt(h * cal.log_n_f));
    cal.alpha = 1.0 / std::sqrt(h);
    cal.gamma = std::sqrt(cal.log_n_v);
    return cal;
}

} // namespace gfarfe
