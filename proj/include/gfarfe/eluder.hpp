#pragma once

#include <span>
#include <vector>

#include "gfarfe/fclass.hpp"

namespace gfarfe {

/// Realized-sequence eluder dimension of recorded exploration data:
/// per stage, the prefix-ordered sum of clipped, weight-normalized
/// uncertainties; the aggregate averages over stages.
struct DimReport {
    std::vector<double> per_stage;
    double aggregate = 0.0;
    int episodes = 0;
    double alpha = 0.0;
};

/// Requires an exact uncertainty oracle; the ensemble class is rejected.
/// Every weight in the datasets must be >= alpha.
DimReport eluder_dim(const FnClassSpec& spec, std::span<const StageDataset> stage_datasets,
                     double alpha);

} // namespace gfarfe
