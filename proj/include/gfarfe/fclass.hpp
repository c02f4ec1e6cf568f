#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gfarfe {

// ---------------------------------------------------------------------------
// Function-class selection
// ---------------------------------------------------------------------------

enum class FnClassKind { Tabular, Linear, Ensemble };

std::string to_string(FnClassKind kind);
FnClassKind fn_class_kind_from_string(const std::string& name);

/// Feature map phi(s, a) with ||phi||_2 <= 1, verified on construction.
struct LinearFeatures {
    int dim = 0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> phi; // [states][actions][dim]

    static LinearFeatures one_hot(int num_states, int num_actions);

    Eigen::Map<const Eigen::VectorXd> at(int s, int a) const {
        return Eigen::Map<const Eigen::VectorXd>(
            phi.data() + static_cast<std::size_t>((s * num_actions + a)) * dim, dim);
    }
    void validate() const;
};

struct EnsembleParams {
    int members = 10;
    double resample_ratio = 1.0; // bootstrap draw count as a fraction of n
    double scale = 1.0;          // multiplier on the member-spread uncertainty
    std::uint64_t seed = 0;
};

struct FnClassSpec {
    FnClassKind kind = FnClassKind::Tabular;
    double value_bound = 1.0; // L; evaluations are clamped to [0, L]
    int num_states = 0;
    int num_actions = 0;
    LinearFeatures features; // linear / ensemble
    EnsembleParams ensemble;

    static FnClassSpec tabular(int num_states, int num_actions, double value_bound = 1.0);
    static FnClassSpec linear(LinearFeatures features);
    static FnClassSpec bootstrap_ensemble(LinearFeatures features, EnsembleParams params = {});

    /// Number of free parameters of the class (cells or feature dimension).
    int parameter_count() const;
    void validate() const;
};

// ---------------------------------------------------------------------------
// Stage data
// ---------------------------------------------------------------------------

struct StageEntry {
    int state = 0;
    int action = 0;
    int next_state = 0;
    double weight = 1.0; // sigma-bar recorded at collection time
};

/// Ordered per-stage history. Order matters: uncertainty at episode k is
/// always evaluated against the prefix collected before k.
struct StageDataset {
    int stage = 0;
    double lambda = 1.0;
    std::vector<StageEntry> entries;
};

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

struct FittedFn {
    FnClassKind kind = FnClassKind::Tabular;
    double value_bound = 1.0;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> cell_values;        // tabular
    LinearFeatures features;                // linear / ensemble
    Eigen::VectorXd theta;                  // linear
    std::vector<Eigen::VectorXd> member_theta; // ensemble

    /// Prediction clamped to [0, value_bound].
    double eval(int s, int a) const;
    double raw(int s, int a) const;
    /// Sample standard deviation of member predictions (ensemble only).
    double member_spread(int s, int a) const;
};

// ---------------------------------------------------------------------------
// Incremental per-stage engine
// ---------------------------------------------------------------------------

/// Holds one stage's dataset together with the sufficient statistics needed
/// for O(1)-ish uncertainty queries: per-cell weighted counts for the
/// tabular class, and the ridge matrix with an incrementally maintained
/// inverse for the linear classes (rank-1 updates, refactored from scratch
/// every 64 appends to bound drift).
class StageModel {
public:
    StageModel(FnClassSpec spec, int stage, double lambda);

    void append(const StageEntry& entry);
    int size() const { return static_cast<int>(data_.entries.size()); }
    const StageDataset& dataset() const { return data_; }
    const FnClassSpec& spec() const { return spec_; }

    /// Bonus-oracle value (uncertainty) for this stage's current data.
    double uncertainty(int s, int a) const;
    double uncertainty_sq(int s, int a) const;

    /// Weighted ridge fit against the given targets (one per entry).
    FittedFn fit(std::span<const double> targets) const;

private:
    FnClassSpec spec_;
    StageDataset data_;
    std::vector<double> cell_weight_;   // tabular: sum of 1/weight^2 per cell
    Eigen::MatrixXd precision_;         // linear: lambda*I + sum phi phi^T / w^2
    Eigen::MatrixXd precision_inv_;
    int appends_since_refactor_ = 0;
    // Ensemble members, rebuilt when the dataset version moves on. The
    // engine is confined to one logical thread per run.
    mutable std::vector<Eigen::VectorXd> member_cache_;
    mutable int member_cache_size_ = -1;

    void refactor();
};

// ---------------------------------------------------------------------------
// Pure operations (rebuild the engine from the dataset; used by tests,
// planning and the dimension computation)
// ---------------------------------------------------------------------------

FittedFn fit_weighted(const FnClassSpec& spec, const StageDataset& data,
                      std::span<const double> targets);

double uncertainty(const FnClassSpec& spec, int s, int a, const StageDataset& data);
double uncertainty_sq(const FnClassSpec& spec, int s, int a, const StageDataset& data);

/// Ensemble member parameters for coverage uncertainty: bootstrap resamples
/// with randomized priors and weight-matched target noise, so the member
/// spread at (s, a) tracks the exact ridge uncertainty. Deterministic in
/// (ensemble seed, dataset size).
std::vector<Eigen::VectorXd> ensemble_uncertainty_members(const FnClassSpec& spec,
                                                          const StageDataset& data);

// ---------------------------------------------------------------------------
// Covering-number proxies
// ---------------------------------------------------------------------------

/// Explicit discretization-bound proxies for log covering numbers. These
/// are stand-ins with the right monotone structure, not tight constants,
/// and are flagged as such wherever they are reported.
struct CoverProxy {
    double log_n_f = 0.0;   // value-function class at resolution epsilon
    double log_n_v = 0.0;   // optimistic value class: log N_F(eps/2) + log N_B(eps/2beta)
    double epsilon = 0.0;
    double beta = 1.0;
    bool proxy = true;
};

CoverProxy cover_proxy(const FnClassSpec& spec, double epsilon, double beta);

} // namespace gfarfe
