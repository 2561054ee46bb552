#ifndef SUBSEL_DATASET_HPP
#define SUBSEL_DATASET_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "subsel/errors.hpp"
#include "subsel/numkit.hpp"

namespace subsel {

enum class Task { regression, classification };

// A single point: feature view plus target. For classification the target
// is the encoded class index stored as a double.
struct Datapoint {
    std::span<const double> x;
    double y = 0.0;
};

// The candidate universe: n x d features, n targets, task kind.
struct Dataset {
    numkit::DenseMatrix features;
    std::vector<double> targets;
    Task task = Task::regression;
    std::size_t num_classes = 0; // 0 for regression, k >= 2 otherwise

    std::size_t n() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    std::span<const double> row(std::size_t i) const { return features.row(i); }
    Datapoint point(std::size_t i) const { return {features.row(i), targets[i]}; }

    // Materialize the rows named by idx, in order.
    Dataset subset_rows(std::span<const std::size_t> idx) const;

    void validate() const; // n >= 1, finite features/targets, labels in [0, k)
};

} // namespace subsel

#endif
