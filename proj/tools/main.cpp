#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfarfe/errors.hpp"
#include "gfarfe/harness.hpp"
#include "gfarfe/io.hpp"

using namespace gfarfe;
using nlohmann::json;

namespace {

ExperimentConfig load_config(const std::string& path, std::uint64_t seed_override, bool has_seed) {
    ExperimentConfig cfg = ExperimentConfig::from_json(read_json_file(path));
    if (has_seed) cfg.seeds = {seed_override};
    return cfg;
}

int run_explore(const std::string& config_path, const std::string& out_dir,
                std::uint64_t seed_override, bool has_seed) {
    const ExperimentConfig cfg = load_config(config_path, seed_override, has_seed);
    const TabularMdp env = cfg.env.build();
    const FnClassSpec spec = cfg.make_fclass(env);
    int episodes = cfg.explore_episodes;
    if (episodes == 0 && !cfg.k_grid.empty()) episodes = cfg.k_grid.back();
    const Calibration cal =
        calibrate_betas(spec, env.horizon, cfg.epsilon, cfg.delta, cfg.scales.front());

    ExploreConfig ecfg;
    ecfg.episodes = episodes;
    ecfg.beta = cal.beta_explore;
    ecfg.alpha = cal.alpha;
    ecfg.gamma = cal.gamma;
    ecfg.lambda = 1.0;
    ecfg.log_n_v = cal.log_n_v;
    ecfg.log_n_f = cal.log_n_f;
    ecfg.fclass = spec;
    ecfg.seed = cfg.seeds.front();

    const std::string explorer = cfg.explorers.front();
    ExplorationArtifacts artifacts;
    if (explorer == "gfarfe")
        artifacts = explore(env, ecfg);
    else if (explorer == "unweighted")
        artifacts = explore_unweighted(env, ecfg);
    else
        artifacts = explore_uniform(env, episodes, ecfg.seed);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir);
    write_text_file(out_dir + "/artifacts.json", to_json(artifacts).dump() + "\n");
    write_text_file(out_dir + "/mdp.json", to_json(env).dump() + "\n");
    json info;
    info["episodes"] = episodes;
    info["explorer"] = explorer;
    info["calibration"] = json{{"beta_explore", cal.beta_explore}, {"beta_plan", cal.beta_plan},
                               {"alpha", cal.alpha},               {"gamma", cal.gamma},
                               {"log_n_v", cal.log_n_v},           {"log_n_f", cal.log_n_f},
                               {"cover_is_proxy", true}};
    write_text_file(out_dir + "/explore_summary.json", info.dump(2) + "\n");
    std::printf("wrote %s/artifacts.json (%d episodes)\n", out_dir.c_str(), episodes);
    return 0;
}

int run_plan(const std::string& artifacts_path, const std::string& reward_path,
             const std::string& out_path, double beta, double scale, double lambda) {
    const ExplorationArtifacts artifacts = artifacts_from_json(read_json_file(artifacts_path));
    const RewardFunction reward = reward_from_json(read_json_file(reward_path));
    PlanConfig cfg;
    cfg.lambda = lambda;
    cfg.fclass = artifacts.config.fclass;
    if (beta > 0.0)
        cfg.beta = beta;
    else
        cfg.beta = std::max(1.0, scale * std::sqrt(static_cast<double>(artifacts.horizon) *
                                                   artifacts.config.log_n_f));
    const PlanResult result = plan(artifacts, reward, cfg);
    write_text_file(out_path, to_json(result, cfg).dump() + "\n");
    std::printf("wrote %s (beta_plan=%g)\n", out_path.c_str(), cfg.beta);
    return 0;
}

int run_eval(const std::string& policy_path, const std::string& mdp_path,
             const std::string& reward_path) {
    const Policy pi = policy_from_plan_or_policy_json(read_json_file(policy_path));
    const TabularMdp mdp = mdp_from_json(read_json_file(mdp_path));
    RewardFunction reward = reward_from_json(read_json_file(reward_path));
    reward = reward.rescaled_to_total_bounded();
    reward.validate(mdp);
    const double value = evaluate_policy(mdp, reward, pi);
    const double optimal = value_iteration(mdp, reward).initial_value(mdp.initial_dist);
    json out;
    out["policy_value"] = value;
    out["optimal_value"] = optimal;
    out["suboptimality"] = optimal - value;
    std::printf("%s\n", out.dump(2).c_str());
    return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& out_dir,
                  std::uint64_t seed_override, bool has_seed) {
    const ExperimentConfig cfg = load_config(config_path, seed_override, has_seed);
    const SweepResult result = run_sweep(cfg);
    write_sweep_outputs(result, out_dir);
    std::printf("wrote %s/metrics.csv (%zu rows) and %s/summary.json\n", out_dir.c_str(),
                result.rows.size(), out_dir.c_str());
    return 0;
}

int run_dim(const std::string& artifacts_path, double alpha_override) {
    const ExplorationArtifacts artifacts = artifacts_from_json(read_json_file(artifacts_path));
    const double alpha = alpha_override > 0.0 ? alpha_override : artifacts.config.alpha;
    const DimReport report = eluder_dim(artifacts.config.fclass, artifacts.stage_datasets, alpha);
    std::printf("stage,K,dim\n");
    for (std::size_t h = 0; h < report.per_stage.size(); ++h)
        std::printf("%zu,%d,%.17g\n", h + 1, report.episodes, report.per_stage[h]);
    std::printf("aggregate,%d,%.17g\n", report.episodes, report.aggregate);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward-free exploration with uncertainty-weighted regression"};
    app.require_subcommand(1);

    std::string config_path, out_dir, artifacts_path, reward_path, out_path, policy_path, mdp_path;
    std::uint64_t seed_override = 0;
    double beta = 0.0, scale = 1.0, lambda = 1.0, alpha = 0.0;

    auto* cmd_explore = app.add_subcommand("explore", "Run the exploration phase");
    cmd_explore->add_option("--config", config_path)->required();
    cmd_explore->add_option("--out", out_dir)->required();
    auto* explore_seed = cmd_explore->add_option("--seed", seed_override);

    auto* cmd_plan = app.add_subcommand("plan", "Plan against a reward from saved artifacts");
    cmd_plan->add_option("--artifacts", artifacts_path)->required();
    cmd_plan->add_option("--reward", reward_path)->required();
    cmd_plan->add_option("--out", out_path)->required();
    cmd_plan->add_option("--beta", beta, "Explicit planning radius (overrides --scale)");
    cmd_plan->add_option("--scale", scale, "Radius scale applied to the calibrated value");
    cmd_plan->add_option("--lambda", lambda);

    auto* cmd_eval = app.add_subcommand("eval", "Exactly evaluate a policy");
    cmd_eval->add_option("--policy", policy_path)->required();
    cmd_eval->add_option("--mdp", mdp_path)->required();
    cmd_eval->add_option("--reward", reward_path)->required();

    auto* cmd_sweep = app.add_subcommand("sweep", "Seeded sweep over the K grid");
    cmd_sweep->add_option("--config", config_path)->required();
    cmd_sweep->add_option("--out", out_dir)->required();
    auto* sweep_seed = cmd_sweep->add_option("--seed", seed_override);

    auto* cmd_dim = app.add_subcommand("dim", "Eluder dimension of recorded sequences");
    cmd_dim->add_option("--artifacts", artifacts_path)->required();
    cmd_dim->add_option("--alpha", alpha);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_explore->parsed())
            return run_explore(config_path, out_dir, seed_override, !explore_seed->empty());
        if (cmd_plan->parsed()) return run_plan(artifacts_path, reward_path, out_path, beta, scale, lambda);
        if (cmd_eval->parsed()) return run_eval(policy_path, mdp_path, reward_path);
        if (cmd_sweep->parsed())
            return run_sweep_cmd(config_path, out_dir, seed_override, !sweep_seed->empty());
        if (cmd_dim->parsed()) return run_dim(artifacts_path, alpha);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
