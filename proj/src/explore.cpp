#include "gfarfe/explore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "explore_impl.hpp"

namespace gfarfe {

void ExploreConfig::validate() const {
    if (episodes < 0) throw std::invalid_argument("explore config: episodes must be >= 0");
    if (!(beta >= 1.0)) throw std::invalid_argument("explore config: beta must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("explore config: alpha must be > 0");
    if (!(gamma >= 0.0)) throw std::invalid_argument("explore config: gamma must be >= 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("explore config: lambda must be > 0");
    if (log_n_v < 0.0 || log_n_f < 0.0)
        throw std::invalid_argument("explore config: cover proxies must be >= 0");
    fclass.validate();
}

std::string to_string(WeightMode mode) {
    return mode == WeightMode::Variance ? "variance" : "unit";
}

ExplorationArtifacts ExplorationArtifacts::prefix(int k) const {
    if (k < 0 || k > episodes) throw std::invalid_argument("prefix: episode count out of range");
    ExplorationArtifacts out = *this;
    out.episodes = k;
    out.config.episodes = k;
    out.episode_logs.resize(static_cast<std::size_t>(k));
    for (auto& data : out.stage_datasets)
        data.entries.resize(std::min(data.entries.size(), static_cast<std::size_t>(k)));
    return out;
}

ExplorationArtifacts explore(const TabularMdp& env, const ExploreConfig& cfg) {
    return detail::explore_impl(env, cfg, detail::ExploreOptions{});
}

namespace detail {

ExplorationArtifacts explore_impl(const TabularMdp& env, const ExploreConfig& cfg,
                                  const ExploreOptions& options) {
    cfg.validate();
    const int S = env.num_states, A = env.num_actions, H = env.horizon;
    if (cfg.fclass.num_states != S || cfg.fclass.num_actions != A)
        throw std::invalid_argument("explore: function class shape does not match environment");
    if (options.true_reward) options.true_reward->validate(env);

    ExplorationArtifacts art;
    art.explorer = options.explorer_tag;
    art.weight_mode = options.weight_mode;
    art.num_states = S;
    art.num_actions = A;
    art.horizon = H;
    art.episodes = cfg.episodes;
    art.config = cfg;

    std::vector<StageModel> models;
    models.reserve(H);
    for (int h = 0; h < H; ++h) models.emplace_back(cfg.fclass, h, cfg.lambda);

    const std::size_t cells = static_cast<std::size_t>(S) * A;
    std::vector<std::vector<double>> bonus(H, std::vector<double>(cells, 0.0));
    std::vector<std::vector<double>> qvals(H, std::vector<double>(cells, 0.0));
    std::vector<std::vector<double>> values(H + 1, std::vector<double>(S, 0.0));
    std::vector<std::vector<int>> greedy(H, std::vector<int>(S, 0));
    std::vector<FittedFn> fits(H);
    std::vector<double> targets;

    for (int k = 1; k <= cfg.episodes; ++k) {
        if (!options.uniform_actions) {
            // Backward pass: optimistic intrinsic value iteration over the
            // data collected in episodes 1..k-1.
            std::fill(values[H].begin(), values[H].end(), 0.0);
            for (int h = H - 1; h >= 0; --h) {
                const StageModel& model = models[h];
                for (int s = 0; s < S; ++s)
                    for (int a = 0; a < A; ++a)
                        bonus[h][static_cast<std::size_t>(s) * A + a] =
                            2.0 * cfg.beta * model.uncertainty(s, a);
                const auto& entries = model.dataset().entries;
                targets.resize(entries.size());
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    const auto& e = entries[i];
                    double r = 0.5 * bonus[h][static_cast<std::size_t>(e.state) * A + e.action];
                    if (options.true_reward) r = options.true_reward->at(h, e.state, e.action);
                    targets[i] = r + values[h + 1][e.next_state];
                }
                fits[h] = model.fit(targets);
                for (int s = 0; s < S; ++s) {
                    double best = -1.0, best_bonus = -1.0;
                    int best_a = 0;
                    for (int a = 0; a < A; ++a) {
                        const std::size_t c = static_cast<std::size_t>(s) * A + a;
                        const double q = std::min(fits[h].eval(s, a) + bonus[h][c], 1.0);
                        qvals[h][c] = q;
                        // Clipping at 1 ties many actions exactly; break the
                        // tie toward the larger bonus, otherwise a fixed
                        // lowest-index rule replays one trajectory forever.
                        if (q > best || (q == best && bonus[h][c] > best_bonus)) {
                            best = q;
                            best_bonus = bonus[h][c];
                            best_a = a;
                        }
                    }
                    values[h][s] = best;
                    greedy[h][s] = best_a;
                }
            }
        }

        // Forward pass: roll the greedy policy, record weights, grow the
        // datasets by exactly one entry per stage.
        Rng traj(cfg.seed, static_cast<std::uint64_t>(k), "trajectory");
        int s = sample_initial_state(env, traj);
        EpisodeLog log;
        log.intrinsic_value = options.uniform_actions ? 0.0 : values[0][s];
        log.steps.reserve(H);
        for (int h = 0; h < H; ++h) {
            const int a = options.uniform_actions ? static_cast<int>(traj.next_below(A))
                                                  : greedy[h][s];
            const int s2 = sample_next_state(env, h, s, a, traj);
            StageLog step;
            step.stage = h;
            step.state = s;
            step.action = a;
            step.next_state = s2;
            if (!options.uniform_actions) {
                const std::size_t c = static_cast<std::size_t>(s) * A + a;
                step.bonus = bonus[h][c];
                step.intrinsic_reward = options.true_reward
                                            ? options.true_reward->at(h, s, a)
                                            : 0.5 * step.bonus;
                step.f_hat = fits[h].eval(s, a);
                step.q_value = qvals[h][c];
                step.sigma = 2.0 * std::sqrt(cfg.log_n_v * std::min(step.f_hat, 1.0));
                // The bonus table already holds 2*beta*D on the k-1 prefix.
                step.sigma_epistemic =
                    cfg.gamma * std::sqrt(step.bonus / (2.0 * cfg.beta));
            }
            step.sigma_bar = options.weight_mode == WeightMode::Variance
                                 ? std::max({step.sigma_epistemic, step.sigma, cfg.alpha})
                                 : 1.0;
            models[h].append({s, a, s2, step.sigma_bar});
            log.steps.push_back(step);
            s = s2;
        }
        art.episode_logs.push_back(std::move(log));

        if (options.policy_values && options.true_reward) {
            Policy pi;
            pi.horizon = H;
            pi.num_states = S;
            pi.actions.assign(static_cast<std::size_t>(H) * S, 0);
            for (int h = 0; h < H; ++h)
                for (int st = 0; st < S; ++st) pi.at(h, st) = greedy[h][st];
            options.policy_values->push_back(evaluate_policy(env, *options.true_reward, pi));
        }
    }

    art.stage_datasets.reserve(H);
    for (int h = 0; h < H; ++h) art.stage_datasets.push_back(models[h].dataset());
    return art;
}

} // namespace detail

} // namespace gfarfe
