#include "gfarfe/io.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "gfarfe/errors.hpp"

namespace gfarfe {

namespace {

using nlohmann::json;

void expect_format(const json& doc, const std::string& format) {
    if (!doc.is_object() || !doc.contains("format") || doc.at("format") != format)
        throw ConfigError("expected a \"" + format + "\" document");
}

json tensor3(const std::vector<double>& flat, int d0, int d1, int d2) {
    json out = json::array();
    std::size_t idx = 0;
    for (int i = 0; i < d0; ++i) {
        json mi = json::array();
        for (int j = 0; j < d1; ++j) {
            json mj = json::array();
            for (int k = 0; k < d2; ++k) mj.push_back(flat[idx++]);
            mi.push_back(std::move(mj));
        }
        out.push_back(std::move(mi));
    }
    return out;
}

std::vector<double> flatten(const json& arr, std::size_t expected, const char* what) {
    std::vector<double> out;
    out.reserve(expected);
    const std::function<void(const json&)> walk = [&](const json& node) {
        if (node.is_array())
            for (const auto& child : node) walk(child);
        else if (node.is_number())
            out.push_back(node.get<double>());
        else
            throw ConfigError(std::string(what) + ": expected nested numeric arrays");
    };
    walk(arr);
    if (out.size() != expected)
        throw ConfigError(std::string(what) + ": expected " + std::to_string(expected) +
                          " entries, found " + std::to_string(out.size()));
    return out;
}

} // namespace

json to_json(const TabularMdp& mdp) {
    json doc;
    doc["format"] = "mdp-v1";
    doc["S"] = mdp.num_states;
    doc["A"] = mdp.num_actions;
    doc["H"] = mdp.horizon;
    json p = json::array();
    for (int h = 0; h < mdp.horizon; ++h) {
        json ph = json::array();
        for (int s = 0; s < mdp.num_states; ++s) {
            json ps = json::array();
            for (int a = 0; a < mdp.num_actions; ++a) {
                json row = json::array();
                const double* r = mdp.row(h, s, a);
                for (int s2 = 0; s2 < mdp.num_states; ++s2) row.push_back(r[s2]);
                ps.push_back(std::move(row));
            }
            ph.push_back(std::move(ps));
        }
        p.push_back(std::move(ph));
    }
    doc["P"] = std::move(p);
    doc["mu"] = mdp.initial_dist;
    return doc;
}

TabularMdp mdp_from_json(const json& doc) {
    expect_format(doc, "mdp-v1");
    TabularMdp mdp;
    try {
        mdp.num_states = doc.at("S").get<int>();
        mdp.num_actions = doc.at("A").get<int>();
        mdp.horizon = doc.at("H").get<int>();
        mdp.probs = flatten(doc.at("P"),
                            static_cast<std::size_t>(mdp.horizon) * mdp.num_states *
                                mdp.num_actions * mdp.num_states,
                            "mdp P");
        mdp.initial_dist =
            flatten(doc.at("mu"), static_cast<std::size_t>(mdp.num_states), "mdp mu");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mdp-v1: ") + e.what());
    }
    mdp.validate_and_normalize();
    return mdp;
}

json to_json(const RewardFunction& reward) {
    json doc;
    doc["format"] = "reward-v1";
    doc["H"] = reward.horizon;
    doc["S"] = reward.num_states;
    doc["A"] = reward.num_actions;
    doc["scale_mode"] = reward.scale_mode == RewardScale::TotalBounded ? "total-bounded" : "per-step";
    doc["r"] = tensor3(reward.values, reward.horizon, reward.num_states, reward.num_actions);
    return doc;
}

RewardFunction reward_from_json(const json& doc) {
    expect_format(doc, "reward-v1");
    RewardFunction r;
    try {
        r.horizon = doc.at("H").get<int>();
        r.num_states = doc.at("S").get<int>();
        r.num_actions = doc.at("A").get<int>();
        const std::string mode = doc.at("scale_mode").get<std::string>();
        if (mode == "total-bounded")
            r.scale_mode = RewardScale::TotalBounded;
        else if (mode == "per-step")
            r.scale_mode = RewardScale::PerStep;
        else
            throw ConfigError("reward-v1: scale_mode must be total-bounded or per-step");
        r.values = flatten(doc.at("r"),
                           static_cast<std::size_t>(r.horizon) * r.num_states * r.num_actions,
                           "reward r");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("reward-v1: ") + e.what());
    }
    return r;
}

json to_json(const Policy& policy) {
    json doc;
    doc["format"] = "policy-v1";
    doc["H"] = policy.horizon;
    doc["S"] = policy.num_states;
    json rows = json::array();
    for (int h = 0; h < policy.horizon; ++h) {
        json row = json::array();
        for (int s = 0; s < policy.num_states; ++s) row.push_back(policy.at(h, s));
        rows.push_back(std::move(row));
    }
    doc["actions"] = std::move(rows);
    return doc;
}

Policy policy_from_json(const json& doc) {
    expect_format(doc, "policy-v1");
    Policy p;
    try {
        p.horizon = doc.at("H").get<int>();
        p.num_states = doc.at("S").get<int>();
        const auto& rows = doc.at("actions");
        for (const auto& row : rows)
            for (const auto& v : row) p.actions.push_back(v.get<int>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("policy-v1: ") + e.what());
    }
    if (p.actions.size() != static_cast<std::size_t>(p.horizon) * p.num_states)
        throw ConfigError("policy-v1: actions shape mismatch");
    return p;
}

json to_json(const FittedFn& fn) {
    json doc;
    doc["format"] = "fclass-v1";
    doc["kind"] = to_string(fn.kind);
    doc["L"] = fn.value_bound;
    doc["S"] = fn.num_states;
    doc["A"] = fn.num_actions;
    switch (fn.kind) {
        case FnClassKind::Tabular:
            doc["values"] = fn.cell_values;
            break;
        case FnClassKind::Linear: {
            doc["dim"] = fn.features.dim;
            doc["theta"] = std::vector<double>(fn.theta.data(), fn.theta.data() + fn.theta.size());
            break;
        }
        case FnClassKind::Ensemble: {
            doc["dim"] = fn.features.dim;
            json members = json::array();
            for (const auto& m : fn.member_theta)
                members.push_back(std::vector<double>(m.data(), m.data() + m.size()));
            doc["members"] = std::move(members);
            break;
        }
    }
    return doc;
}

namespace {

json fclass_spec_to_json(const FnClassSpec& spec) {
    json doc;
    doc["kind"] = to_string(spec.kind);
    doc["L"] = spec.value_bound;
    doc["S"] = spec.num_states;
    doc["A"] = spec.num_actions;
    if (spec.kind != FnClassKind::Tabular) {
        doc["dim"] = spec.features.dim;
        doc["phi"] = spec.features.phi;
    }
    if (spec.kind == FnClassKind::Ensemble) {
        doc["members"] = spec.ensemble.members;
        doc["resample_ratio"] = spec.ensemble.resample_ratio;
        doc["ens_scale"] = spec.ensemble.scale;
        doc["ens_seed"] = spec.ensemble.seed;
    }
    return doc;
}

FnClassSpec fclass_spec_from_json(const json& doc) {
    FnClassSpec spec;
    spec.kind = fn_class_kind_from_string(doc.at("kind").get<std::string>());
    spec.value_bound = doc.at("L").get<double>();
    spec.num_states = doc.at("S").get<int>();
    spec.num_actions = doc.at("A").get<int>();
    if (spec.kind != FnClassKind::Tabular) {
        spec.features.dim = doc.at("dim").get<int>();
        spec.features.num_states = spec.num_states;
        spec.features.num_actions = spec.num_actions;
        spec.features.phi = doc.at("phi").get<std::vector<double>>();
    }
    if (spec.kind == FnClassKind::Ensemble) {
        spec.ensemble.members = doc.at("members").get<int>();
        spec.ensemble.resample_ratio = doc.at("resample_ratio").get<double>();
        spec.ensemble.scale = doc.at("ens_scale").get<double>();
        spec.ensemble.seed = doc.at("ens_seed").get<std::uint64_t>();
    }
    spec.validate();
    return spec;
}

} // namespace

json to_json(const ExplorationArtifacts& art) {
    json doc;
    doc["format"] = "gfarfe-artifacts-v1";
    doc["explorer"] = art.explorer;
    doc["weight_mode"] = to_string(art.weight_mode);
    doc["S"] = art.num_states;
    doc["A"] = art.num_actions;
    doc["H"] = art.horizon;
    doc["K"] = art.episodes;
    json cfg;
    cfg["episodes"] = art.config.episodes;
    cfg["beta"] = art.config.beta;
    cfg["alpha"] = art.config.alpha;
    cfg["gamma"] = art.config.gamma;
    cfg["lambda"] = art.config.lambda;
    cfg["log_n_v"] = art.config.log_n_v;
    cfg["log_n_f"] = art.config.log_n_f;
    cfg["seed"] = art.config.seed;
    cfg["fclass"] = fclass_spec_to_json(art.config.fclass);
    doc["config"] = std::move(cfg);
    json stages = json::array();
    for (const auto& data : art.stage_datasets) {
        json stage;
        stage["h"] = data.stage;
        stage["lambda"] = data.lambda;
        json entries = json::array();
        for (const auto& e : data.entries)
            entries.push_back(json{{"s", e.state}, {"a", e.action}, {"s2", e.next_state},
                                   {"w", e.weight}});
        stage["entries"] = std::move(entries);
        stages.push_back(std::move(stage));
    }
    doc["stages"] = std::move(stages);
    json episodes = json::array();
    for (const auto& ep : art.episode_logs) {
        json e;
        e["v1"] = ep.intrinsic_value;
        json steps = json::array();
        for (const auto& st : ep.steps)
            steps.push_back(json{{"h", st.stage},
                                 {"s", st.state},
                                 {"a", st.action},
                                 {"s2", st.next_state},
                                 {"b", st.bonus},
                                 {"r", st.intrinsic_reward},
                                 {"f", st.f_hat},
                                 {"q", st.q_value},
                                 {"sigma", st.sigma},
                                 {"sigma_epi", st.sigma_epistemic},
                                 {"sigma_bar", st.sigma_bar}});
        e["steps"] = std::move(steps);
        episodes.push_back(std::move(e));
    }
    doc["episodes"] = std::move(episodes);
    return doc;
}

ExplorationArtifacts artifacts_from_json(const json& doc) {
    expect_format(doc, "gfarfe-artifacts-v1");
    ExplorationArtifacts art;
    try {
        art.explorer = doc.at("explorer").get<std::string>();
        art.weight_mode =
            doc.at("weight_mode") == "variance" ? WeightMode::Variance : WeightMode::Unit;
        art.num_states = doc.at("S").get<int>();
        art.num_actions = doc.at("A").get<int>();
        art.horizon = doc.at("H").get<int>();
        art.episodes = doc.at("K").get<int>();
        const auto& cfg = doc.at("config");
        art.config.episodes = cfg.at("episodes").get<int>();
        art.config.beta = cfg.at("beta").get<double>();
        art.config.alpha = cfg.at("alpha").get<double>();
        art.config.gamma = cfg.at("gamma").get<double>();
        art.config.lambda = cfg.at("lambda").get<double>();
        art.config.log_n_v = cfg.at("log_n_v").get<double>();
        art.config.log_n_f = cfg.at("log_n_f").get<double>();
        art.config.seed = cfg.at("seed").get<std::uint64_t>();
        art.config.fclass = fclass_spec_from_json(cfg.at("fclass"));
        for (const auto& stage : doc.at("stages")) {
            StageDataset data;
            data.stage = stage.at("h").get<int>();
            data.lambda = stage.at("lambda").get<double>();
            for (const auto& e : stage.at("entries"))
                data.entries.push_back({e.at("s").get<int>(), e.at("a").get<int>(),
                                        e.at("s2").get<int>(), e.at("w").get<double>()});
            art.stage_datasets.push_back(std::move(data));
        }
        for (const auto& e : doc.at("episodes")) {
            EpisodeLog ep;
            ep.intrinsic_value = e.at("v1").get<double>();
            for (const auto& st : e.at("steps")) {
                StageLog s;
                s.stage = st.at("h").get<int>();
                s.state = st.at("s").get<int>();
                s.action = st.at("a").get<int>();
                s.next_state = st.at("s2").get<int>();
                s.bonus = st.at("b").get<double>();
                s.intrinsic_reward = st.at("r").get<double>();
                s.f_hat = st.at("f").get<double>();
                s.q_value = st.at("q").get<double>();
                s.sigma = st.at("sigma").get<double>();
                s.sigma_epistemic = st.at("sigma_epi").get<double>();
                s.sigma_bar = st.at("sigma_bar").get<double>();
                ep.steps.push_back(s);
            }
            art.episode_logs.push_back(std::move(ep));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("gfarfe-artifacts-v1: ") + e.what());
    }
    return art;
}

json to_json(const PlanResult& result, const PlanConfig& cfg) {
    json doc;
    doc["format"] = "gfarfe-plan-v1";
    doc["beta"] = cfg.beta;
    doc["lambda"] = cfg.lambda;
    doc["policy"] = to_json(result.policy);
    json v = json::array();
    for (int h = 0; h <= result.horizon; ++h) {
        json row = json::array();
        for (int s = 0; s < result.num_states; ++s)
            row.push_back(result.v_hat[static_cast<std::size_t>(h) * result.num_states + s]);
        v.push_back(std::move(row));
    }
    doc["v_hat"] = std::move(v);
    doc["q_hat"] = tensor3(result.q_hat, result.horizon, result.num_states, result.num_actions);
    doc["bonuses"] = tensor3(result.bonuses, result.horizon, result.num_states, result.num_actions);
    json fitted = json::array();
    for (const auto& fn : result.fitted) fitted.push_back(to_json(fn));
    doc["fitted"] = std::move(fitted);
    return doc;
}

Policy policy_from_plan_or_policy_json(const json& doc) {
    if (doc.is_object() && doc.contains("format") && doc.at("format") == "gfarfe-plan-v1")
        return policy_from_json(doc.at("policy"));
    return policy_from_json(doc);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
}

} // namespace gfarfe
