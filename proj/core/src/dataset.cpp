#include "subsel/dataset.hpp"

#include <cmath>

namespace subsel {

Dataset Dataset::subset_rows(std::span<const std::size_t> idx) const {
    Dataset out;
    out.task = task;
    out.num_classes = num_classes;
    out.features = numkit::DenseMatrix(idx.size(), dim());
    out.targets.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= n()) throw ContractError("subset_rows: index out of range");
        auto r = features.row(idx[i]);
        for (std::size_t j = 0; j < dim(); ++j) out.features(i, j) = r[j];
        out.targets[i] = targets[idx[i]];
    }
    return out;
}

void Dataset::validate() const {
    if (n() < 1) throw ContractError("dataset: needs at least one row");
    if (targets.size() != n()) throw ContractError("dataset: target length mismatch");
    if (!features.all_finite()) throw ContractError("dataset: non-finite feature");
    for (double t : targets) {
        if (!std::isfinite(t)) throw ContractError("dataset: non-finite target");
    }
    if (task == Task::classification) {
        if (num_classes < 2) throw ContractError("dataset: classification needs >= 2 classes");
        for (double t : targets) {
            if (t < 0.0 || t >= static_cast<double>(num_classes) || t != std::floor(t)) {
                throw ContractError("dataset: class label out of [0, k)");
            }
        }
    }
}

} // namespace subsel
