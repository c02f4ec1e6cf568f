#include "gfarfe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include "gfarfe/errors.hpp"
#include "gfarfe/io.hpp"

namespace gfarfe {

using nlohmann::json;

TabularMdp EnvSpec::build() const {
    if (kind == "chain") return make_chain_mdp(length, horizon, slip);
    if (kind == "random") return make_random_mdp(gen_seed, num_states, num_actions, horizon, concentration);
    if (kind == "two_branch") return make_two_branch_mdp(branch_len, horizon, drift);
    if (kind == "file") return mdp_from_json(read_json_file(path));
    throw ConfigError("env.kind: unknown environment kind \"" + kind + "\"");
}

std::vector<NamedReward> build_reward_suite(const RewardSuiteSpec& spec, const TabularMdp& env) {
    const int S = env.num_states, A = env.num_actions, H = env.horizon;
    std::vector<NamedReward> suite;
    const auto goal_reward = [&](int h, int s) {
        RewardFunction r;
        r.horizon = H;
        r.num_states = S;
        r.num_actions = A;
        r.values.assign(static_cast<std::size_t>(H) * S * A, 0.0);
        for (int a = 0; a < A; ++a) r.at(h, s, a) = 1.0;
        return r;
    };
    if (spec.kind == "goals_final") {
        for (int s = 0; s < S; ++s)
            suite.push_back({"goal_h" + std::to_string(H) + "_s" + std::to_string(s),
                             goal_reward(H - 1, s)});
    } else if (spec.kind == "goals_all") {
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                suite.push_back({"goal_h" + std::to_string(h + 1) + "_s" + std::to_string(s),
                                 goal_reward(h, s)});
    } else if (spec.kind == "random") {
        for (int i = 0; i < spec.count; ++i) {
            Rng rng(spec.seed, static_cast<std::uint64_t>(i), "reward-suite");
            RewardFunction r;
            r.horizon = H;
            r.num_states = S;
            r.num_actions = A;
            r.values.resize(static_cast<std::size_t>(H) * S * A);
            for (auto& v : r.values) v = rng.next_double();
            // Normalize by the exact worst-case trajectory total so the
            // result is total-bounded (and tight).
            const double worst = max_trajectory_reward(env, r);
            for (auto& v : r.values) v /= worst;
            suite.push_back({"rand_" + std::to_string(i), std::move(r)});
        }
    } else if (spec.kind != "none") {
        throw ConfigError("rewards.suite: unknown suite kind \"" + spec.kind + "\"");
    }
    for (auto& item : suite) item.reward.validate(env);
    return suite;
}

void ExperimentConfig::validate() const {
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (k_grid[i] <= k_grid[i - 1]) throw ConfigError("k_grid: must be strictly increasing");
    for (int k : k_grid)
        if (k < 0) throw ConfigError("k_grid: entries must be >= 0");
    if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
    if (explorers.empty()) throw ConfigError("explorers: need at least one explorer");
    for (const auto& e : explorers)
        if (e != "gfarfe" && e != "unweighted" && e != "uniform")
            throw ConfigError("explorers: unknown explorer \"" + e + "\"");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon: must be in (0, 1]");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta: must be in (0, 1)");
    if (scales.empty()) throw ConfigError("scales: need at least one scale");
    for (double s : scales)
        if (!(s > 0.0)) throw ConfigError("scales: entries must be > 0");
    if (jobs < 1) throw ConfigError("jobs: must be >= 1");
    if (explore_episodes < 0) throw ConfigError("K: must be >= 0");
    if (fclass_kind != "tabular" && fclass_kind != "linear_onehot" && fclass_kind != "ensemble")
        throw ConfigError("fclass: unknown kind \"" + fclass_kind + "\"");
}

FnClassSpec ExperimentConfig::make_fclass(const TabularMdp& env) const {
    if (fclass_kind == "tabular") return FnClassSpec::tabular(env.num_states, env.num_actions);
    if (fclass_kind == "linear_onehot")
        return FnClassSpec::linear(LinearFeatures::one_hot(env.num_states, env.num_actions));
    EnsembleParams params;
    params.seed = seeds.empty() ? 0 : seeds.front();
    return FnClassSpec::bootstrap_ensemble(LinearFeatures::one_hot(env.num_states, env.num_actions),
                                           params);
}

namespace {

template <typename T>
T field(const json& doc, const std::string& key, const T& fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key + ": has the wrong type");
    }
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig cfg;
    if (doc.contains("env")) {
        const auto& env = doc.at("env");
        cfg.env.kind = field<std::string>(env, "kind", cfg.env.kind);
        cfg.env.horizon = field<int>(env, "horizon", cfg.env.horizon);
        cfg.env.length = field<int>(env, "length", cfg.env.length);
        cfg.env.slip = field<double>(env, "slip", cfg.env.slip);
        cfg.env.num_states = field<int>(env, "S", cfg.env.num_states);
        cfg.env.num_actions = field<int>(env, "A", cfg.env.num_actions);
        cfg.env.concentration = field<double>(env, "concentration", cfg.env.concentration);
        cfg.env.gen_seed = field<std::uint64_t>(env, "seed", cfg.env.gen_seed);
        cfg.env.branch_len = field<int>(env, "branch_len", cfg.env.branch_len);
        cfg.env.drift = field<double>(env, "drift", cfg.env.drift);
        cfg.env.path = field<std::string>(env, "path", cfg.env.path);
    }
    cfg.explorers = field<std::vector<std::string>>(doc, "explorers", cfg.explorers);
    if (doc.contains("explorer")) cfg.explorers = {field<std::string>(doc, "explorer", "gfarfe")};
    cfg.k_grid = field<std::vector<int>>(doc, "k_grid", cfg.k_grid);
    cfg.explore_episodes = field<int>(doc, "K", cfg.explore_episodes);
    if (doc.contains("rewards")) {
        const auto& rw = doc.at("rewards");
        cfg.rewards.kind = field<std::string>(rw, "suite", cfg.rewards.kind);
        cfg.rewards.count = field<int>(rw, "count", cfg.rewards.count);
        cfg.rewards.seed = field<std::uint64_t>(rw, "seed", cfg.rewards.seed);
    }
    cfg.seeds = field<std::vector<std::uint64_t>>(doc, "seeds", cfg.seeds);
    if (doc.contains("seed")) cfg.seeds = {field<std::uint64_t>(doc, "seed", 1)};
    cfg.epsilon = field<double>(doc, "epsilon", cfg.epsilon);
    cfg.delta = field<double>(doc, "delta", cfg.delta);
    cfg.scales = field<std::vector<double>>(doc, "scales", cfg.scales);
    if (doc.contains("scale")) cfg.scales = {field<double>(doc, "scale", 1.0)};
    cfg.fclass_kind = field<std::string>(doc, "fclass", cfg.fclass_kind);
    cfg.jobs = field<int>(doc, "jobs", cfg.jobs);
    cfg.validate();
    return cfg;
}

json ExperimentConfig::to_json() const {
    json doc;
    json env;
    env["kind"] = this->env.kind;
    env["horizon"] = this->env.horizon;
    if (this->env.kind == "chain") {
        env["length"] = this->env.length;
        env["slip"] = this->env.slip;
    } else if (this->env.kind == "random") {
        env["S"] = this->env.num_states;
        env["A"] = this->env.num_actions;
        env["concentration"] = this->env.concentration;
        env["seed"] = this->env.gen_seed;
    } else if (this->env.kind == "two_branch") {
        env["branch_len"] = this->env.branch_len;
        env["drift"] = this->env.drift;
    } else if (this->env.kind == "file") {
        env["path"] = this->env.path;
    }
    doc["env"] = std::move(env);
    doc["explorers"] = explorers;
    doc["k_grid"] = k_grid;
    if (explore_episodes > 0) doc["K"] = explore_episodes;
    doc["rewards"] = json{{"suite", rewards.kind}, {"count", rewards.count}, {"seed", rewards.seed}};
    doc["seeds"] = seeds;
    doc["epsilon"] = epsilon;
    doc["delta"] = delta;
    doc["scales"] = scales;
    doc["fclass"] = fclass_kind;
    doc["jobs"] = jobs;
    return doc;
}

namespace {

struct SweepCell {
    std::uint64_t seed = 0;
    std::string explorer;
    double scale = 1.0;
    std::string row_tag;
};

std::string format_scale(double scale) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", scale);
    return buf;
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

SweepResult run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.k_grid.empty()) throw ConfigError("k_grid: sweep requires at least one K");
    const TabularMdp env = cfg.env.build();
    const FnClassSpec spec = cfg.make_fclass(env);
    const auto suite = build_reward_suite(cfg.rewards, env);
    const int k_max = cfg.k_grid.back();

    // Exact optimal values, one DP per reward.
    std::vector<double> optimal_values;
    optimal_values.reserve(suite.size());
    for (const auto& item : suite)
        optimal_values.push_back(value_iteration(env, item.reward).initial_value(env.initial_dist));

    std::map<double, Calibration> calibrations;
    for (double scale : cfg.scales)
        calibrations[scale] = calibrate_betas(spec, env.horizon, cfg.epsilon, cfg.delta, scale);

    std::vector<SweepCell> cells;
    for (std::uint64_t seed : cfg.seeds)
        for (const auto& explorer : cfg.explorers)
            for (double scale : cfg.scales) {
                SweepCell cell{seed, explorer, scale, explorer};
                if (cfg.scales.size() > 1 && explorer != "uniform")
                    cell.row_tag += ":" + format_scale(scale);
                cells.push_back(std::move(cell));
                // The uniform explorer ignores the calibration; one cell is enough.
                if (explorer == "uniform") break;
            }

    std::vector<std::vector<MetricRow>> cell_rows(cells.size());
    std::atomic<std::size_t> next_cell{0};

    const auto run_cell = [&](std::size_t index) {
        const SweepCell& cell = cells[index];
        const Calibration& cal = calibrations.at(cell.scale);
        ExploreConfig ecfg;
        ecfg.episodes = k_max;
        ecfg.beta = cal.beta_explore;
        ecfg.alpha = cal.alpha;
        ecfg.gamma = cal.gamma;
        ecfg.lambda = 1.0;
        ecfg.log_n_v = cal.log_n_v;
        ecfg.log_n_f = cal.log_n_f;
        ecfg.fclass = spec;
        ecfg.seed = cell.seed;

        ExplorationArtifacts artifacts;
        if (cell.explorer == "gfarfe")
            artifacts = explore(env, ecfg);
        else if (cell.explorer == "unweighted")
            artifacts = explore_unweighted(env, ecfg);
        else
            artifacts = explore_uniform(env, k_max, cell.seed);

        PlanConfig pcfg;
        pcfg.beta = cal.beta_plan;
        pcfg.lambda = ecfg.lambda;
        pcfg.fclass = spec;

        for (int k : cfg.k_grid) {
            const auto checkpoint = artifacts.prefix(k);
            double dim = std::numeric_limits<double>::quiet_NaN();
            if (spec.kind != FnClassKind::Ensemble)
                dim = eluder_dim(spec, checkpoint.stage_datasets, cal.alpha).aggregate;
            double sigma_sum = 0.0;
            for (const auto& ep : checkpoint.episode_logs)
                for (const auto& st : ep.steps) sigma_sum += st.sigma * st.sigma;
            for (std::size_t ri = 0; ri < suite.size(); ++ri) {
                const auto start = std::chrono::steady_clock::now();
                const PlanResult result = plan(checkpoint, suite[ri].reward, pcfg);
                const double value = evaluate_policy(env, suite[ri].reward, result.policy);
                const double elapsed =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                MetricRow row;
                row.seed = cell.seed;
                row.explorer = cell.row_tag;
                row.k = k;
                row.reward_id = suite[ri].id;
                row.subopt = optimal_values[ri] - value;
                row.dim = dim;
                row.sigma_sum = sigma_sum;
                row.wallclock_s = elapsed;
                cell_rows[index].push_back(std::move(row));
            }
        }
    };

    const int workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next_cell.fetch_add(1);
                    if (i >= cells.size()) return;
                    run_cell(i);
                }
            });
        for (auto& t : pool) t.join();
    }

    SweepResult result;
    for (auto& rows : cell_rows)
        for (auto& row : rows) result.rows.push_back(std::move(row));
    std::sort(result.rows.begin(), result.rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.seed, a.explorer, a.k, a.reward_id) <
               std::tie(b.seed, b.explorer, b.k, b.reward_id);
    });
    for (const auto& row : result.rows)
        if (row.subopt < -1e-9)
            throw std::logic_error("sweep: negative suboptimality for reward " + row.reward_id);

    json calib = json::array();
    for (const auto& [scale, cal] : calibrations)
        calib.push_back(json{{"scale", scale},
                             {"beta_explore", cal.beta_explore},
                             {"beta_plan", cal.beta_plan},
                             {"alpha", cal.alpha},
                             {"gamma", cal.gamma},
                             {"log_n_v", cal.log_n_v},
                             {"log_n_f", cal.log_n_f},
                             {"log_n_v_proxy", cal.log_n_v_proxy},
                             {"log_n_f_proxy", cal.log_n_f_proxy},
                             {"epsilon", cal.epsilon},
                             {"delta", cal.delta},
                             {"cover_is_proxy", true}});
    json fits = json::array();
    for (const auto& fit : fit_scaling(result.rows))
        fits.push_back(json{{"explorer", fit.explorer},
                            {"reward_id", fit.reward_id},
                            {"slope", fit.slope},
                            {"ci_lo", fit.ci_lo},
                            {"ci_hi", fit.ci_hi},
                            {"estimable", fit.estimable},
                            {"points", fit.points}});
    result.summary["config"] = cfg.to_json();
    result.summary["calibration"] = std::move(calib);
    result.summary["scaling"] = std::move(fits);
    result.summary["rows"] = result.rows.size();
    result.summary["csv_hash"] = csv_determinism_hash(rows_to_csv(result.rows));
    return result;
}

std::string rows_to_csv(const std::vector<MetricRow>& rows) {
    std::string out = "seed,explorer,K,reward_id,subopt,dim,sigma_sum,wallclock_s\n";
    char buf[256];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%llu,%s,%d,%s,%.17g,%.17g,%.17g,%.6g\n",
                      static_cast<unsigned long long>(row.seed), row.explorer.c_str(), row.k,
                      row.reward_id.c_str(), row.subopt, row.dim, row.sigma_sum, row.wallclock_s);
        out += buf;
    }
    return out;
}

std::uint64_t csv_determinism_hash(const std::string& csv) {
    std::string stripped;
    stripped.reserve(csv.size());
    std::size_t line_start = 0;
    while (line_start < csv.size()) {
        std::size_t line_end = csv.find('\n', line_start);
        if (line_end == std::string::npos) line_end = csv.size();
        const std::string_view line(csv.data() + line_start, line_end - line_start);
        const std::size_t last_comma = line.rfind(',');
        stripped.append(line.substr(0, last_comma == std::string_view::npos ? line.size() : last_comma));
        stripped.push_back('\n');
        line_start = line_end + 1;
    }
    return fnv1a(stripped);
}

void write_sweep_outputs(const SweepResult& result, const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
    write_text_file(out_dir + "/metrics.csv", rows_to_csv(result.rows));
    write_text_file(out_dir + "/summary.json", result.summary.dump(2) + "\n");
}

std::vector<ScalingFit> fit_scaling(const std::vector<MetricRow>& rows) {
    constexpr double kFloor = 1e-4;
    constexpr int kBootstrap = 500;

    // Group rows by (explorer, reward_id), plus a pooled group per explorer.
    std::map<std::pair<std::string, std::string>, std::vector<const MetricRow*>> groups;
    std::set<std::uint64_t> seed_set;
    for (const auto& row : rows) {
        groups[{row.explorer, row.reward_id}].push_back(&row);
        groups[{row.explorer, "__all__"}].push_back(&row);
        seed_set.insert(row.seed);
    }
    const std::vector<std::uint64_t> seeds(seed_set.begin(), seed_set.end());

    const auto slope_of = [&](const std::vector<const MetricRow*>& grp,
                              const std::vector<std::uint64_t>& seed_sample, int* points_out) {
        // Multiset medians: rows of a seed enter once per appearance in the sample.
        std::map<std::uint64_t, int> multiplicity;
        for (auto s : seed_sample) ++multiplicity[s];
        std::map<int, std::vector<double>> by_k;
        for (const MetricRow* row : grp) {
            const auto it = multiplicity.find(row->seed);
            if (it == multiplicity.end()) continue;
            for (int c = 0; c < it->second; ++c) by_k[row->k].push_back(row->subopt);
        }
        std::vector<double> xs, ys;
        for (const auto& [k, vals] : by_k) {
            const double med = median_of(vals);
            if (med > kFloor && k > 0) {
                xs.push_back(std::log(static_cast<double>(k)));
                ys.push_back(std::log(med));
            }
        }
        if (points_out) *points_out = static_cast<int>(xs.size());
        if (xs.size() < 4) return std::numeric_limits<double>::quiet_NaN();
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= xs.size();
        my /= ys.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        return sxx > 0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
    };

    std::vector<ScalingFit> fits;
    for (const auto& [key, grp] : groups) {
        ScalingFit fit;
        fit.explorer = key.first;
        fit.reward_id = key.second;
        fit.slope = slope_of(grp, seeds, &fit.points);
        fit.estimable = !std::isnan(fit.slope);
        if (fit.estimable && seeds.size() > 1) {
            Rng rng(fnv1a(fit.explorer) ^ fnv1a(fit.reward_id), 0, "scaling-bootstrap");
            std::vector<double> slopes;
            for (int b = 0; b < kBootstrap; ++b) {
                std::vector<std::uint64_t> sample;
                for (std::size_t i = 0; i < seeds.size(); ++i)
                    sample.push_back(seeds[rng.next_below(static_cast<std::uint32_t>(seeds.size()))]);
                const double s = slope_of(grp, sample, nullptr);
                if (!std::isnan(s)) slopes.push_back(s);
            }
            if (slopes.size() >= 10) {
                std::sort(slopes.begin(), slopes.end());
                fit.ci_lo = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
                fit.ci_hi = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
            } else {
                fit.ci_lo = fit.ci_hi = fit.slope;
            }
        } else {
            fit.ci_lo = fit.ci_hi = fit.slope;
        }
        fits.push_back(std::move(fit));
    }
    return fits;
}

} // namespace gfarfe
