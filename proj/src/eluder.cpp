#include "gfarfe/eluder.hpp"

#include <algorithm>
#include <stdexcept>

namespace gfarfe {

DimReport eluder_dim(const FnClassSpec& spec, std::span<const StageDataset> stage_datasets,
                     double alpha) {
    if (spec.kind == FnClassKind::Ensemble)
        throw std::invalid_argument("eluder_dim: the ensemble oracle is approximate; "
                                    "dimension needs an exact class");
    if (!(alpha > 0.0)) throw std::invalid_argument("eluder_dim: alpha must be > 0");

    DimReport report;
    report.alpha = alpha;
    for (const auto& data : stage_datasets) {
        report.episodes = std::max(report.episodes, static_cast<int>(data.entries.size()));
        StageModel model(spec, data.stage, data.lambda);
        double dim = 0.0;
        for (const auto& entry : data.entries) {
            if (entry.weight < alpha - 1e-12)
                throw std::invalid_argument("eluder_dim: entry weight below alpha");
            const double d2 = model.uncertainty_sq(entry.state, entry.action);
            dim += std::min(1.0, d2 / (entry.weight * entry.weight));
            model.append(entry);
        }
        report.per_stage.push_back(dim);
    }
    if (!report.per_stage.empty()) {
        double total = 0.0;
        for (double d : report.per_stage) total += d;
        report.aggregate = total / static_cast<double>(report.per_stage.size());
    }
    return report;
}

} // namespace gfarfe
