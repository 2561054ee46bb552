#ifndef SUBSEL_EVALUATORS_HPP
#define SUBSEL_EVALUATORS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "subsel/dataset.hpp"

namespace subsel::eval {

enum class EnsembleMode { random_forest, gradient_boosted };

struct TreeEnsembleConfig {
    EnsembleMode mode = EnsembleMode::random_forest;
    std::size_t n_trees = 10;
    double max_features_fraction = 1.0; // resampled per split (forest) / per tree (boosted)
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    bool bootstrap = false; // forest only; boosted trees always see the full subset
    std::size_t max_depth = 6;
    double learning_rate = 0.1; // boosted shrinkage
    std::uint64_t seed = 0;

    void validate() const;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;              // leaf mean (regression / residual)
    std::vector<double> class_probs; // leaf class frequencies (classification)
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf_for(std::span<const double> x) const;
    double predict_value(std::span<const double> x) const { return leaf_for(x).value; }
};

struct TreeEnsemble {
    TreeEnsembleConfig config;
    Task task = Task::regression;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    double base_score = 0.0; // boosted offset (training mean)
    std::vector<DecisionTree> trees;
};

// Deterministic given config.seed. Splits scan every candidate threshold at
// sample midpoints; variance reduction for regression, Gini for
// classification; ties to lowest feature index then lowest threshold.
TreeEnsemble fit_tree_ensemble(const TreeEnsembleConfig& cfg, const Dataset& data,
                               std::span<const std::size_t> subset);

// Regression: forest mean / boosted base + lr * sum. Classification: argmax class.
std::vector<double> predict(const TreeEnsemble& ensemble, const numkit::DenseMatrix& features);
// Classification only: n x k class probabilities (tree-averaged leaf frequencies).
numkit::DenseMatrix predict_proba(const TreeEnsemble& ensemble,
                                  const numkit::DenseMatrix& features);

enum class MetricKind { rmse, accuracy, logloss };

MetricKind metric_from_name(const std::string& name);

// rmse over values; accuracy over class labels; logloss treats predictions as
// P(class 1) against 0/1 targets, probabilities clipped to [1e-12, 1 - 1e-12].
double evaluate(std::span<const double> predictions, std::span<const double> targets,
                MetricKind metric);
// Multiclass log-loss from a probability matrix.
double evaluate_logloss(const numkit::DenseMatrix& probs, std::span<const double> targets);

nlohmann::json ensemble_to_json(const TreeEnsemble& ensemble);
TreeEnsemble ensemble_from_json(const nlohmann::json& j);

} // namespace subsel::eval

#endif
