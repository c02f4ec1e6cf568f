#include "gfarfe/fclass.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gfarfe/rng.hpp"

namespace gfarfe {

std::string to_string(FnClassKind kind) {
    switch (kind) {
        case FnClassKind::Tabular: return "tabular";
        case FnClassKind::Linear: return "linear";
        case FnClassKind::Ensemble: return "ensemble";
    }
    return "unknown";
}

FnClassKind fn_class_kind_from_string(const std::string& name) {
    if (name == "tabular") return FnClassKind::Tabular;
    if (name == "linear" || name == "linear_onehot") return FnClassKind::Linear;
    if (name == "ensemble") return FnClassKind::Ensemble;
    throw std::invalid_argument("unknown function class: " + name);
}

LinearFeatures LinearFeatures::one_hot(int num_states, int num_actions) {
    LinearFeatures f;
    f.dim = num_states * num_actions;
    f.num_states = num_states;
    f.num_actions = num_actions;
    f.phi.assign(static_cast<std::size_t>(f.dim) * f.dim, 0.0);
    for (int i = 0; i < f.dim; ++i) f.phi[static_cast<std::size_t>(i) * f.dim + i] = 1.0;
    return f;
}

void LinearFeatures::validate() const {
    if (dim < 1 || num_states < 1 || num_actions < 1)
        throw std::invalid_argument("features: dimensions must be >= 1");
    if (phi.size() != static_cast<std::size_t>(num_states) * num_actions * dim)
        throw std::invalid_argument("features: tensor shape mismatch");
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a)
            if (at(s, a).norm() > 1.0 + 1e-9)
                throw std::invalid_argument("features: ||phi(s,a)|| exceeds 1");
}

FnClassSpec FnClassSpec::tabular(int num_states, int num_actions, double value_bound) {
    FnClassSpec spec;
    spec.kind = FnClassKind::Tabular;
    spec.num_states = num_states;
    spec.num_actions = num_actions;
    spec.value_bound = value_bound;
    spec.validate();
    return spec;
}

FnClassSpec FnClassSpec::linear(LinearFeatures features) {
    FnClassSpec spec;
    spec.kind = FnClassKind::Linear;
    spec.num_states = features.num_states;
    spec.num_actions = features.num_actions;
    spec.features = std::move(features);
    spec.validate();
    return spec;
}

FnClassSpec FnClassSpec::bootstrap_ensemble(LinearFeatures features, EnsembleParams params) {
    FnClassSpec spec;
    spec.kind = FnClassKind::Ensemble;
    spec.num_states = features.num_states;
    spec.num_actions = features.num_actions;
    spec.features = std::move(features);
    spec.ensemble = params;
    spec.validate();
    return spec;
}

int FnClassSpec::parameter_count() const {
    return kind == FnClassKind::Tabular ? num_states * num_actions : features.dim;
}

void FnClassSpec::validate() const {
    if (!(value_bound > 0.0)) throw std::invalid_argument("function class: value bound must be > 0");
    if (num_states < 1 || num_actions < 1)
        throw std::invalid_argument("function class: state/action counts must be >= 1");
    if (kind != FnClassKind::Tabular) features.validate();
    if (kind == FnClassKind::Ensemble && ensemble.members < 2)
        throw std::invalid_argument("ensemble: needs at least 2 members");
}

double FittedFn::raw(int s, int a) const {
    switch (kind) {
        case FnClassKind::Tabular:
            return cell_values[static_cast<std::size_t>(s) * num_actions + a];
        case FnClassKind::Linear:
            return features.at(s, a).dot(theta);
        case FnClassKind::Ensemble: {
            double sum = 0.0;
            for (const auto& m : member_theta) sum += features.at(s, a).dot(m);
            return sum / static_cast<double>(member_theta.size());
        }
    }
    return 0.0;
}

double FittedFn::eval(int s, int a) const {
    return std::clamp(raw(s, a), 0.0, value_bound);
}

double FittedFn::member_spread(int s, int a) const {
    if (kind != FnClassKind::Ensemble || member_theta.size() < 2) return 0.0;
    const auto phi = features.at(s, a);
    double mean = 0.0;
    for (const auto& m : member_theta) mean += phi.dot(m);
    mean /= static_cast<double>(member_theta.size());
    double ss = 0.0;
    for (const auto& m : member_theta) {
        const double d = phi.dot(m) - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(member_theta.size() - 1));
}

// ---------------------------------------------------------------------------
// StageModel
// ---------------------------------------------------------------------------

StageModel::StageModel(FnClassSpec spec, int stage, double lambda) : spec_(std::move(spec)) {
    spec_.validate();
    if (lambda < 0.0) throw std::invalid_argument("stage model: lambda must be >= 0");
    data_.stage = stage;
    data_.lambda = lambda;
    if (spec_.kind == FnClassKind::Tabular) {
        cell_weight_.assign(static_cast<std::size_t>(spec_.num_states) * spec_.num_actions, 0.0);
    } else {
        if (!(lambda > 0.0))
            throw std::invalid_argument("stage model: lambda must be > 0 for linear classes");
        const int d = spec_.features.dim;
        precision_ = lambda * Eigen::MatrixXd::Identity(d, d);
        precision_inv_ = (1.0 / lambda) * Eigen::MatrixXd::Identity(d, d);
    }
}

void StageModel::append(const StageEntry& entry) {
    if (!(entry.weight > 0.0)) throw std::invalid_argument("stage entry: weight must be > 0");
    if (entry.state < 0 || entry.state >= spec_.num_states || entry.action < 0 ||
        entry.action >= spec_.num_actions)
        throw std::invalid_argument("stage entry: state/action out of range");
    data_.entries.push_back(entry);
    const double w = 1.0 / (entry.weight * entry.weight);
    if (spec_.kind == FnClassKind::Tabular) {
        cell_weight_[static_cast<std::size_t>(entry.state) * spec_.num_actions + entry.action] += w;
        return;
    }
    const auto phi = spec_.features.at(entry.state, entry.action);
    precision_.selfadjointView<Eigen::Lower>().rankUpdate(phi, w);
    precision_ = precision_.selfadjointView<Eigen::Lower>();
    if (++appends_since_refactor_ >= 64) {
        refactor();
    } else {
        // Sherman-Morrison rank-1 update of the inverse.
        const Eigen::VectorXd u = precision_inv_ * phi;
        precision_inv_.noalias() -= (w / (1.0 + w * phi.dot(u))) * u * u.transpose();
    }
}

void StageModel::refactor() {
    const int d = spec_.features.dim;
    precision_inv_ = precision_.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
    appends_since_refactor_ = 0;
}

double StageModel::uncertainty_sq(int s, int a) const {
    const double lambda = data_.lambda;
    if (spec_.kind == FnClassKind::Tabular) {
        if (!(lambda > 0.0)) throw std::invalid_argument("uncertainty: lambda must be > 0");
        const double L = spec_.value_bound;
        const double w = cell_weight_[static_cast<std::size_t>(s) * spec_.num_actions + a];
        return (L * L) / (w * L * L + lambda);
    }
    if (spec_.kind == FnClassKind::Linear) {
        if (!(lambda > 0.0)) throw std::invalid_argument("uncertainty: lambda must be > 0");
        const auto phi = spec_.features.at(s, a);
        return phi.dot(precision_inv_ * phi);
    }
    if (member_cache_size_ != size()) {
        member_cache_ = ensemble_uncertainty_members(spec_, data_);
        member_cache_size_ = size();
    }
    const auto& members = member_cache_;
    const auto phi = spec_.features.at(s, a);
    double mean = 0.0;
    for (const auto& m : members) mean += phi.dot(m);
    mean /= static_cast<double>(members.size());
    double ss = 0.0;
    for (const auto& m : members) {
        const double d = phi.dot(m) - mean;
        ss += d * d;
    }
    const double sd = spec_.ensemble.scale * std::sqrt(ss / static_cast<double>(members.size() - 1));
    const double floor = 1e-12;
    return std::max(sd, floor) * std::max(sd, floor);
}

double StageModel::uncertainty(int s, int a) const { return std::sqrt(uncertainty_sq(s, a)); }

namespace {

Eigen::VectorXd weighted_ridge_theta(const LinearFeatures& features, const StageDataset& data,
                                     std::span<const double> targets) {
    const int d = features.dim;
    Eigen::MatrixXd precision = data.lambda * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < data.entries.size(); ++i) {
        const auto& e = data.entries[i];
        const double w = 1.0 / (e.weight * e.weight);
        const auto phi = features.at(e.state, e.action);
        precision.selfadjointView<Eigen::Lower>().rankUpdate(phi, w);
        rhs.noalias() += phi * (targets[i] * w);
    }
    precision = precision.selfadjointView<Eigen::Lower>();
    return precision.ldlt().solve(rhs);
}

} // namespace

FittedFn StageModel::fit(std::span<const double> targets) const {
    return fit_weighted(spec_, data_, targets);
}

FittedFn fit_weighted(const FnClassSpec& spec, const StageDataset& data,
                      std::span<const double> targets) {
    if (targets.size() != data.entries.size())
        throw std::invalid_argument("fit_weighted: one target per entry required");
    if (data.lambda < 0.0) throw std::invalid_argument("fit_weighted: lambda must be >= 0");
    for (double y : targets)
        if (y < 0.0) throw std::invalid_argument("fit_weighted: targets must be nonnegative");
    for (const auto& e : data.entries)
        if (!(e.weight > 0.0)) throw std::invalid_argument("fit_weighted: weights must be > 0");

    FittedFn fn;
    fn.kind = spec.kind;
    fn.value_bound = spec.value_bound;
    fn.num_states = spec.num_states;
    fn.num_actions = spec.num_actions;

    switch (spec.kind) {
        case FnClassKind::Tabular: {
            const std::size_t cells = static_cast<std::size_t>(spec.num_states) * spec.num_actions;
            std::vector<double> wsum(cells, 0.0), ysum(cells, 0.0);
            for (std::size_t i = 0; i < data.entries.size(); ++i) {
                const auto& e = data.entries[i];
                const double w = 1.0 / (e.weight * e.weight);
                const std::size_t c = static_cast<std::size_t>(e.state) * spec.num_actions + e.action;
                wsum[c] += w;
                ysum[c] += w * targets[i];
            }
            fn.cell_values.assign(cells, 0.0);
            for (std::size_t c = 0; c < cells; ++c) {
                const double denom = data.lambda + wsum[c];
                fn.cell_values[c] = denom > 0.0 ? ysum[c] / denom : 0.0;
            }
            return fn;
        }
        case FnClassKind::Linear: {
            if (!(data.lambda > 0.0))
                throw std::invalid_argument("fit_weighted: linear class requires lambda > 0");
            fn.features = spec.features;
            fn.theta = weighted_ridge_theta(spec.features, data, targets);
            return fn;
        }
        case FnClassKind::Ensemble: {
            if (!(data.lambda > 0.0))
                throw std::invalid_argument("fit_weighted: ensemble class requires lambda > 0");
            fn.features = spec.features;
            const int n = static_cast<int>(data.entries.size());
            const int draws =
                static_cast<int>(std::llround(spec.ensemble.resample_ratio * n));
            const double prior_sd = 1.0 / std::sqrt(data.lambda);
            for (int m = 0; m < spec.ensemble.members; ++m) {
                Rng rng(spec.ensemble.seed, static_cast<std::uint64_t>(n) * 1000 + m, "ens-fit");
                StageDataset boot;
                boot.stage = data.stage;
                boot.lambda = data.lambda;
                std::vector<double> boot_targets;
                for (int j = 0; j < draws; ++j) {
                    const auto idx = rng.next_below(static_cast<std::uint32_t>(n));
                    boot.entries.push_back(data.entries[idx]);
                    boot_targets.push_back(targets[idx]);
                }
                Eigen::VectorXd prior(spec.features.dim);
                for (int i = 0; i < spec.features.dim; ++i) prior[i] = prior_sd * rng.next_normal();
                // Solve against residual targets, then add the prior back:
                // theta = argmin sum (phi' th - y)^2 / w^2 + lambda ||th - prior||^2.
                std::vector<double> shifted(boot_targets.size());
                for (std::size_t i = 0; i < boot.entries.size(); ++i) {
                    const auto& e = boot.entries[i];
                    shifted[i] = boot_targets[i] - spec.features.at(e.state, e.action).dot(prior);
                }
                // Residuals may be negative; bypass the nonnegative-target check.
                const int d = spec.features.dim;
                Eigen::MatrixXd precision = boot.lambda * Eigen::MatrixXd::Identity(d, d);
                Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
                for (std::size_t i = 0; i < boot.entries.size(); ++i) {
                    const auto& e = boot.entries[i];
                    const double w = 1.0 / (e.weight * e.weight);
                    const auto phi = spec.features.at(e.state, e.action);
                    precision.selfadjointView<Eigen::Lower>().rankUpdate(phi, w);
                    rhs.noalias() += phi * (shifted[i] * w);
                }
                precision = precision.selfadjointView<Eigen::Lower>();
                fn.member_theta.push_back(prior + precision.ldlt().solve(rhs).eval());
            }
            return fn;
        }
    }
    throw std::logic_error("fit_weighted: unreachable");
}

std::vector<Eigen::VectorXd> ensemble_uncertainty_members(const FnClassSpec& spec,
                                                          const StageDataset& data) {
    if (spec.kind != FnClassKind::Ensemble)
        throw std::invalid_argument("ensemble members requested for a non-ensemble class");
    if (!(data.lambda > 0.0)) throw std::invalid_argument("ensemble: lambda must be > 0");
    const int d = spec.features.dim;
    const int n = static_cast<int>(data.entries.size());
    const int draws = static_cast<int>(std::llround(spec.ensemble.resample_ratio * n));
    const double prior_sd = 1.0 / std::sqrt(data.lambda);
    std::vector<Eigen::VectorXd> members;
    members.reserve(spec.ensemble.members);
    for (int m = 0; m < spec.ensemble.members; ++m) {
        Rng rng(spec.ensemble.seed, static_cast<std::uint64_t>(n) * 1000 + m, "ens-unc");
        Eigen::MatrixXd precision = data.lambda * Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
        // Randomized prior plus weight-matched target noise: the member
        // parameters are then draws whose spread matches the ridge
        // uncertainty, up to bootstrap noise.
        Eigen::VectorXd prior(d);
        for (int i = 0; i < d; ++i) prior[i] = prior_sd * rng.next_normal();
        for (int j = 0; j < draws; ++j) {
            const auto& e = data.entries[rng.next_below(static_cast<std::uint32_t>(n))];
            const double w = 1.0 / (e.weight * e.weight);
            const auto phi = spec.features.at(e.state, e.action);
            const double noise = e.weight * rng.next_normal();
            precision.selfadjointView<Eigen::Lower>().rankUpdate(phi, w);
            rhs.noalias() += phi * ((noise - phi.dot(prior)) * w);
        }
        precision = precision.selfadjointView<Eigen::Lower>();
        members.push_back(prior + precision.ldlt().solve(rhs).eval());
    }
    return members;
}

namespace {

StageModel replay(const FnClassSpec& spec, const StageDataset& data) {
    StageModel model(spec, data.stage, data.lambda);
    for (const auto& e : data.entries) model.append(e);
    return model;
}

} // namespace

double uncertainty_sq(const FnClassSpec& spec, int s, int a, const StageDataset& data) {
    return replay(spec, data).uncertainty_sq(s, a);
}

double uncertainty(const FnClassSpec& spec, int s, int a, const StageDataset& data) {
    return std::sqrt(uncertainty_sq(spec, s, a, data));
}

CoverProxy cover_proxy(const FnClassSpec& spec, double epsilon, double beta) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("cover_proxy: epsilon must be in (0,1]");
    if (!(beta >= 1.0)) throw std::invalid_argument("cover_proxy: beta must be >= 1");
    const double L = spec.value_bound;
    const int p = spec.parameter_count();
    const auto log_cover = [&](double eps) {
        if (spec.kind == FnClassKind::Tabular) return p * std::log(1.0 + L / eps);
        return p * std::log(1.0 + 2.0 * L * std::sqrt(static_cast<double>(p)) / eps);
    };
    CoverProxy out;
    out.epsilon = epsilon;
    out.beta = beta;
    out.log_n_f = log_cover(epsilon);
    // Bonus functions are parameterized by the same statistics as the class
    // (per-cell counts, or the ridge matrix); reuse the discretization bound
    // with the class's own parameter count.
    out.log_n_v = log_cover(epsilon / 2.0) + log_cover(epsilon / (2.0 * beta));
    return out;
}

} // namespace gfarfe
