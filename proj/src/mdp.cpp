#include "gfarfe/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfarfe {

namespace {

void normalize_row(double* row, int n, const char* what) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (row[i] < 0.0) throw std::invalid_argument(std::string(what) + ": negative entry");
        sum += row[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": row sum deviates from 1 by more than 1e-9");
    for (int i = 0; i < n; ++i) row[i] /= sum;
}

} // namespace

void TabularMdp::validate_and_normalize() {
    if (num_states < 1 || num_actions < 1 || horizon < 1)
        throw std::invalid_argument("mdp: dimensions must be >= 1");
    const std::size_t expected =
        static_cast<std::size_t>(horizon) * num_states * num_actions * num_states;
    if (probs.size() != expected) throw std::invalid_argument("mdp: transition tensor shape mismatch");
    if (initial_dist.size() != static_cast<std::size_t>(num_states))
        throw std::invalid_argument("mdp: initial distribution shape mismatch");
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) normalize_row(mutable_row(h, s, a), num_states, "mdp transitions");
    normalize_row(initial_dist.data(), num_states, "mdp initial distribution");
}

void RewardFunction::validate(const TabularMdp& mdp) const {
    if (horizon != mdp.horizon || num_states != mdp.num_states || num_actions != mdp.num_actions)
        throw std::invalid_argument("reward: shape does not match mdp");
    if (values.size() != static_cast<std::size_t>(horizon) * num_states * num_actions)
        throw std::invalid_argument("reward: value tensor shape mismatch");
    for (double v : values)
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("reward: entries must lie in [0, 1]");
    if (scale_mode == RewardScale::TotalBounded) {
        const double worst = max_trajectory_reward(mdp, *this);
        if (worst > 1.0 + 1e-9)
            throw std::invalid_argument("reward: total-bounded mode but a trajectory can collect " +
                                        std::to_string(worst));
    }
}

RewardFunction RewardFunction::rescaled_to_total_bounded() const {
    RewardFunction out = *this;
    if (scale_mode == RewardScale::PerStep) {
        for (double& v : out.values) v /= static_cast<double>(horizon);
        out.scale_mode = RewardScale::TotalBounded;
    }
    return out;
}

double max_trajectory_reward(const TabularMdp& mdp, const RewardFunction& r) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    std::vector<double> best(S, 0.0), next(S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double m = -1.0;
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.row(h, s, a);
                double reach = 0.0;
                for (int s2 = 0; s2 < S; ++s2)
                    if (row[s2] > 0.0) reach = std::max(reach, best[s2]);
                m = std::max(m, r.at(h, s, a) + reach);
            }
            next[s] = m;
        }
        std::swap(best, next);
    }
    double out = 0.0;
    for (int s = 0; s < S; ++s)
        if (mdp.initial_dist[s] > 0.0) out = std::max(out, best[s]);
    return out;
}

double ValueTables::initial_value(const std::vector<double>& mu) const {
    double out = 0.0;
    for (int s = 0; s < num_states; ++s) out += mu[s] * v_at(0, s);
    return out;
}

namespace {

void check_shapes(const TabularMdp& mdp, const RewardFunction& r) {
    if (r.horizon != mdp.horizon || r.num_states != mdp.num_states ||
        r.num_actions != mdp.num_actions)
        throw std::invalid_argument("reward/mdp shape mismatch");
}

ValueTables backward_induction(const TabularMdp& mdp, const RewardFunction& r, bool clip_at_one) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    ValueTables t;
    t.horizon = H;
    t.num_states = S;
    t.num_actions = A;
    t.flavor = clip_at_one ? ValueFlavor::TruncatedOptimal : ValueFlavor::Optimal;
    t.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    t.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double best = -1.0;
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.row(h, s, a);
                double ev = 0.0;
                for (int s2 = 0; s2 < S; ++s2) ev += row[s2] * t.v_at(h + 1, s2);
                double qv = r.at(h, s, a) + ev;
                if (clip_at_one) qv = std::min(qv, 1.0);
                t.q[static_cast<std::size_t>((h * S + s)) * A + a] = qv;
                if (qv > best) best = qv;
            }
            t.v[static_cast<std::size_t>(h) * S + s] = best;
        }
    }
    return t;
}

} // namespace

ValueTables value_iteration(const TabularMdp& mdp, const RewardFunction& r) {
    check_shapes(mdp, r);
    return backward_induction(mdp, r, /*clip_at_one=*/false);
}

ValueTables truncated_value_iteration(const TabularMdp& mdp, const RewardFunction& r) {
    check_shapes(mdp, r);
    return backward_induction(mdp, r, /*clip_at_one=*/true);
}

Policy greedy_policy(const ValueTables& t) {
    Policy pi;
    pi.horizon = t.horizon;
    pi.num_states = t.num_states;
    pi.actions.assign(static_cast<std::size_t>(t.horizon) * t.num_states, 0);
    for (int h = 0; h < t.horizon; ++h)
        for (int s = 0; s < t.num_states; ++s) {
            int best = 0;
            for (int a = 1; a < t.num_actions; ++a)
                if (t.q_at(h, s, a) > t.q_at(h, s, best)) best = a;
            pi.at(h, s) = best;
        }
    return pi;
}

ValueTables policy_value_tables(const TabularMdp& mdp, const RewardFunction& r, const Policy& pi) {
    check_shapes(mdp, r);
    if (pi.horizon != mdp.horizon || pi.num_states != mdp.num_states)
        throw std::invalid_argument("policy/mdp shape mismatch");
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    ValueTables t;
    t.horizon = H;
    t.num_states = S;
    t.num_actions = A;
    t.flavor = ValueFlavor::PolicyValue;
    t.v.assign(static_cast<std::size_t>(H + 1) * S, 0.0);
    t.q.assign(static_cast<std::size_t>(H) * S * A, 0.0);
    for (int h = H - 1; h >= 0; --h)
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.row(h, s, a);
                double ev = 0.0;
                for (int s2 = 0; s2 < S; ++s2) ev += row[s2] * t.v_at(h + 1, s2);
                t.q[static_cast<std::size_t>((h * S + s)) * A + a] = r.at(h, s, a) + ev;
            }
            t.v[static_cast<std::size_t>(h) * S + s] = t.q_at(h, s, pi.at(h, s));
        }
    return t;
}

double evaluate_policy(const TabularMdp& mdp, const RewardFunction& r, const Policy& pi) {
    return policy_value_tables(mdp, r, pi).initial_value(mdp.initial_dist);
}

TabularMdp make_random_mdp(std::uint64_t seed, int num_states, int num_actions, int horizon,
                           double concentration) {
    if (!(concentration > 0.0)) throw std::invalid_argument("make_random_mdp: concentration must be > 0");
    TabularMdp m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.horizon = horizon;
    m.probs.resize(static_cast<std::size_t>(horizon) * num_states * num_actions * num_states);
    Rng rng(seed, 0, "mdp-gen");
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < num_states; ++s)
            for (int a = 0; a < num_actions; ++a) {
                auto row = rng.next_dirichlet(concentration, num_states);
                std::copy(row.begin(), row.end(), m.mutable_row(h, s, a));
            }
    m.initial_dist = rng.next_dirichlet(concentration, num_states);
    m.validate_and_normalize();
    return m;
}

TabularMdp make_chain_mdp(int length, int horizon, double slip) {
    if (length < 1) throw std::invalid_argument("make_chain_mdp: length must be >= 1");
    if (!(slip >= 0.0 && slip < 0.5)) throw std::invalid_argument("make_chain_mdp: slip must be in [0, 0.5)");
    if (horizon < length) throw std::invalid_argument("make_chain_mdp: horizon must be >= length");
    TabularMdp m;
    m.num_states = length;
    m.num_actions = 2;
    m.horizon = horizon;
    m.probs.assign(static_cast<std::size_t>(horizon) * length * 2 * length, 0.0);
    m.initial_dist.assign(length, 0.0);
    m.initial_dist[0] = 1.0;
    for (int h = 0; h < horizon; ++h)
        for (int s = 0; s < length; ++s) {
            const int left = std::max(s - 1, 0);
            const int right = std::min(s + 1, length - 1);
            m.mutable_row(h, s, 0)[left] = 1.0;
            m.mutable_row(h, s, 1)[right] += 1.0 - slip;
            m.mutable_row(h, s, 1)[left] += slip;
        }
    m.validate_and_normalize();
    return m;
}

TabularMdp make_two_branch_mdp(int branch_len, int horizon, double drift) {
    if (branch_len < 1) throw std::invalid_argument("make_two_branch_mdp: branch_len must be >= 1");
    if (!(drift >= 0.0 && drift <= 1.0)) throw std::invalid_argument("make_two_branch_mdp: drift must be in [0, 1]");
    // State 0 is the start; 1..branch_len is the deterministic chain;
    // branch_len+1..2*branch_len is the noisy cloud.
    const int S = 2 * branch_len + 1;
    const int clean_first = 1, clean_last = branch_len;
    const int cloud_first = branch_len + 1, cloud_last = 2 * branch_len;
    TabularMdp m;
    m.num_states = S;
    m.num_actions = 2;
    m.horizon = horizon;
    m.probs.assign(static_cast<std::size_t>(horizon) * S * 2 * S, 0.0);
    m.initial_dist.assign(S, 0.0);
    m.initial_dist[0] = 1.0;
    const double unif = 1.0 / static_cast<double>(branch_len);
    for (int h = 0; h < horizon; ++h) {
        m.mutable_row(h, 0, 0)[clean_first] = 1.0;
        for (int c = cloud_first; c <= cloud_last; ++c) m.mutable_row(h, 0, 1)[c] = unif;
        for (int s = clean_first; s <= clean_last; ++s) {
            m.mutable_row(h, s, 0)[std::min(s + 1, clean_last)] = 1.0;
            m.mutable_row(h, s, 1)[s] = 1.0;
        }
        for (int s = cloud_first; s <= cloud_last; ++s) {
            for (int c = cloud_first; c <= cloud_last; ++c) {
                m.mutable_row(h, s, 0)[c] += unif;
                m.mutable_row(h, s, 1)[c] += (1.0 - drift) * unif;
            }
            m.mutable_row(h, s, 1)[std::min(s + 1, cloud_last)] += drift;
        }
    }
    m.validate_and_normalize();
    return m;
}

int sample_initial_state(const TabularMdp& mdp, Rng& rng) {
    return rng.next_categorical(mdp.initial_dist);
}

int sample_next_state(const TabularMdp& mdp, int h, int s, int a, Rng& rng) {
    const double* row = mdp.row(h, s, a);
    const double u = rng.next_double();
    double cum = 0.0;
    for (int s2 = 0; s2 + 1 < mdp.num_states; ++s2) {
        cum += row[s2];
        if (u < cum) return s2;
    }
    return mdp.num_states - 1;
}

std::vector<TransitionStep> rollout(const TabularMdp& mdp, const Policy& pi, Rng& rng) {
    if (pi.horizon != mdp.horizon || pi.num_states != mdp.num_states)
        throw std::invalid_argument("rollout: policy/mdp shape mismatch");
    std::vector<TransitionStep> traj;
    traj.reserve(mdp.horizon);
    int s = sample_initial_state(mdp, rng);
    for (int h = 0; h < mdp.horizon; ++h) {
        const int a = pi.at(h, s);
        if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("rollout: action out of range");
        const int s2 = sample_next_state(mdp, h, s, a, rng);
        traj.push_back({h, s, a, s2});
        s = s2;
    }
    return traj;
}

std::vector<double> occupancy(const TabularMdp& mdp, const Policy& pi) {
    const int S = mdp.num_states, H = mdp.horizon;
    std::vector<double> d(static_cast<std::size_t>(H) * S, 0.0);
    for (int s = 0; s < S; ++s) d[s] = mdp.initial_dist[s];
    for (int h = 0; h + 1 < H; ++h)
        for (int s = 0; s < S; ++s) {
            const double mass = d[static_cast<std::size_t>(h) * S + s];
            if (mass == 0.0) continue;
            const double* row = mdp.row(h, s, pi.at(h, s));
            for (int s2 = 0; s2 < S; ++s2)
                d[static_cast<std::size_t>(h + 1) * S + s2] += mass * row[s2];
        }
    return d;
}

std::vector<double> uniform_policy_occupancy(const TabularMdp& mdp) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    std::vector<double> d(static_cast<std::size_t>(H) * S, 0.0);
    for (int s = 0; s < S; ++s) d[s] = mdp.initial_dist[s];
    const double inv_a = 1.0 / static_cast<double>(A);
    for (int h = 0; h + 1 < H; ++h)
        for (int s = 0; s < S; ++s) {
            const double mass = d[static_cast<std::size_t>(h) * S + s];
            if (mass == 0.0) continue;
            for (int a = 0; a < A; ++a) {
                const double* row = mdp.row(h, s, a);
                for (int s2 = 0; s2 < S; ++s2)
                    d[static_cast<std::size_t>(h + 1) * S + s2] += mass * inv_a * row[s2];
            }
        }
    return d;
}

std::vector<double> uniform_policy_visit_dist(const TabularMdp& mdp) {
    const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
    const auto d = uniform_policy_occupancy(mdp);
    std::vector<double> out(static_cast<std::size_t>(H) * S * A, 0.0);
    const double inv = 1.0 / static_cast<double>(A * H);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                out[static_cast<std::size_t>((h * S + s)) * A + a] =
                    d[static_cast<std::size_t>(h) * S + s] * inv;
    return out;
}

} // namespace gfarfe
