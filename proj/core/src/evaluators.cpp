#include "subsel/evaluators.hpp"

#include <algorithm>
#include <cmath>

#include "subsel/rng.hpp"

namespace subsel::eval {

namespace {

constexpr double kMinSplitGain = 1e-12;

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Builds one tree over (values of data rows, targets y) where `samples`
// holds positions into y / row_ids.
class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, std::span<const std::size_t> row_ids,
                std::span<const double> y, const TreeEnsembleConfig& cfg, std::size_t num_classes,
                bool classification, Rng rng)
        : data_(data), row_ids_(row_ids), y_(y), cfg_(cfg), num_classes_(num_classes),
          classification_(classification), rng_(std::move(rng)) {}

    DecisionTree build() {
        DecisionTree tree;
        std::vector<std::size_t> samples(row_ids_.size());
        for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = i;
        grow(tree, samples, 0);
        return tree;
    }

private:
    double feature_at(std::size_t sample, std::size_t f) const {
        return data_.features(row_ids_[sample], f);
    }

    int make_leaf(DecisionTree& tree, const std::vector<std::size_t>& samples) {
        TreeNode node;
        if (classification_) {
            node.class_probs.assign(num_classes_, 0.0);
            for (std::size_t s : samples)
                node.class_probs[static_cast<std::size_t>(y_[s])] += 1.0;
            double best = -1.0;
            for (std::size_t c = 0; c < num_classes_; ++c) {
                node.class_probs[c] /= static_cast<double>(samples.size());
                if (node.class_probs[c] > best) {
                    best = node.class_probs[c];
                    node.value = static_cast<double>(c);
                }
            }
        } else {
            double sum = 0.0;
            for (std::size_t s : samples) sum += y_[s];
            node.value = sum / static_cast<double>(samples.size());
        }
        tree.nodes.push_back(std::move(node));
        return static_cast<int>(tree.nodes.size() - 1);
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t d = data_.dim();
        auto want = static_cast<std::size_t>(std::llround(cfg_.max_features_fraction * static_cast<double>(d)));
        want = std::clamp<std::size_t>(want, 1, d);
        if (want == d) {
            std::vector<std::size_t> all(d);
            for (std::size_t j = 0; j < d; ++j) all[j] = j;
            return all;
        }
        auto picked = rng_.sample_without_replacement(d, want);
        std::sort(picked.begin(), picked.end());
        return picked;
    }

    SplitChoice best_split(const std::vector<std::size_t>& samples,
                           const std::vector<std::size_t>& features) {
        SplitChoice best;
        const std::size_t n = samples.size();
        std::vector<std::size_t> order(samples);
        std::vector<double> counts_left, counts_right;

        for (std::size_t f : features) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = feature_at(a, f);
                const double vb = feature_at(b, f);
                if (va != vb) return va < vb;
                return a < b;
            });

            if (classification_) {
                counts_left.assign(num_classes_, 0.0);
                counts_right.assign(num_classes_, 0.0);
                double sq_right = 0.0;
                for (std::size_t s : order) counts_right[static_cast<std::size_t>(y_[s])] += 1.0;
                for (double c : counts_right) sq_right += c * c;
                const double parent_score =
                    static_cast<double>(n) - sq_right / static_cast<double>(n);
                double sq_left = 0.0;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    const auto cls = static_cast<std::size_t>(y_[order[i]]);
                    sq_left += 2.0 * counts_left[cls] + 1.0;
                    sq_right += -2.0 * counts_right[cls] + 1.0;
                    counts_left[cls] += 1.0;
                    counts_right[cls] -= 1.0;
                    const double lo = feature_at(order[i], f);
                    const double hi = feature_at(order[i + 1], f);
                    if (lo == hi) continue;
                    const std::size_t nl = i + 1;
                    const std::size_t nr = n - nl;
                    if (nl < cfg_.min_samples_leaf || nr < cfg_.min_samples_leaf) continue;
                    // weighted Gini, count form: n_c - sum c_i^2 / n_c
                    const double child_score = (static_cast<double>(nl) - sq_left / static_cast<double>(nl)) +
                                               (static_cast<double>(nr) - sq_right / static_cast<double>(nr));
                    const double gain = parent_score - child_score;
                    if (gain > best.gain + kMinSplitGain ||
                        (!best.found && gain > kMinSplitGain)) {
                        best = {true, f, 0.5 * (lo + hi), gain};
                    }
                }
            } else {
                double sum_right = 0.0, sq_right = 0.0;
                for (std::size_t s : order) {
                    sum_right += y_[s];
                    sq_right += y_[s] * y_[s];
                }
                const double parent_sse =
                    sq_right - sum_right * sum_right / static_cast<double>(n);
                double sum_left = 0.0, sq_left = 0.0;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    const double yv = y_[order[i]];
                    sum_left += yv;
                    sq_left += yv * yv;
                    sum_right -= yv;
                    sq_right -= yv * yv;
                    const double lo = feature_at(order[i], f);
                    const double hi = feature_at(order[i + 1], f);
                    if (lo == hi) continue;
                    const std::size_t nl = i + 1;
                    const std::size_t nr = n - nl;
                    if (nl < cfg_.min_samples_leaf || nr < cfg_.min_samples_leaf) continue;
                    const double sse_l = sq_left - sum_left * sum_left / static_cast<double>(nl);
                    const double sse_r = sq_right - sum_right * sum_right / static_cast<double>(nr);
                    const double gain = parent_sse - sse_l - sse_r;
                    if (gain > best.gain + kMinSplitGain ||
                        (!best.found && gain > kMinSplitGain)) {
                        best = {true, f, 0.5 * (lo + hi), gain};
                    }
                }
            }
        }
        return best;
    }

    int grow(DecisionTree& tree, const std::vector<std::size_t>& samples, std::size_t depth) {
        if (depth >= cfg_.max_depth || samples.size() < cfg_.min_samples_split) {
            return make_leaf(tree, samples);
        }
        const auto features = candidate_features();
        const SplitChoice split = best_split(samples, features);
        if (!split.found) return make_leaf(tree, samples);

        std::vector<std::size_t> left, right;
        for (std::size_t s : samples) {
            (feature_at(s, split.feature) <= split.threshold ? left : right).push_back(s);
        }
        const auto node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_id].feature = static_cast<int>(split.feature);
        tree.nodes[node_id].threshold = split.threshold;
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        tree.nodes[node_id].left = l;
        tree.nodes[node_id].right = r;
        return node_id;
    }

    const Dataset& data_;
    std::span<const std::size_t> row_ids_;
    std::span<const double> y_;
    const TreeEnsembleConfig& cfg_;
    std::size_t num_classes_;
    bool classification_;
    Rng rng_;
};

} // namespace

void TreeEnsembleConfig::validate() const {
    if (n_trees < 1) throw ConfigError("tree ensemble: n_trees must be >= 1");
    if (min_samples_split < 2) throw ConfigError("tree ensemble: min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw ConfigError("tree ensemble: min_samples_leaf must be >= 1");
    if (max_features_fraction <= 0.0 || max_features_fraction > 1.0)
        throw ConfigError("tree ensemble: max_features_fraction must lie in (0, 1]");
    if (mode == EnsembleMode::gradient_boosted && learning_rate <= 0.0)
        throw ConfigError("tree ensemble: learning_rate must be positive");
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes.front();
    while (node->feature >= 0) {
        node = x[static_cast<std::size_t>(node->feature)] <= node->threshold
                   ? &nodes[static_cast<std::size_t>(node->left)]
                   : &nodes[static_cast<std::size_t>(node->right)];
    }
    return *node;
}

TreeEnsemble fit_tree_ensemble(const TreeEnsembleConfig& cfg, const Dataset& data,
                               std::span<const std::size_t> subset) {
    cfg.validate();
    if (subset.size() < cfg.min_samples_split)
        throw ContractError("fit_tree_ensemble: subset smaller than min_samples_split");
    const bool classification = data.task == Task::classification;
    if (classification && cfg.mode == EnsembleMode::gradient_boosted)
        throw ConfigError("gradient_boosted mode supports regression targets only");

    TreeEnsemble ensemble;
    ensemble.config = cfg;
    ensemble.task = data.task;
    ensemble.feature_dim = data.dim();
    ensemble.num_classes = data.num_classes;

    const Rng root(cfg.seed);
    std::vector<double> y(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) y[i] = data.targets[subset[i]];

    if (cfg.mode == EnsembleMode::random_forest) {
        std::vector<std::size_t> rows(subset.begin(), subset.end());
        for (std::size_t t = 0; t < cfg.n_trees; ++t) {
            Rng tree_rng = root.fork(t);
            if (cfg.bootstrap) {
                std::vector<std::size_t> boot_rows(subset.size());
                std::vector<double> boot_y(subset.size());
                for (std::size_t i = 0; i < subset.size(); ++i) {
                    const auto pick = tree_rng.below(subset.size());
                    boot_rows[i] = subset[pick];
                    boot_y[i] = y[pick];
                }
                TreeBuilder builder(data, boot_rows, boot_y, cfg, data.num_classes, classification,
                                    std::move(tree_rng));
                ensemble.trees.push_back(builder.build());
            } else {
                TreeBuilder builder(data, rows, y, cfg, data.num_classes, classification,
                                    std::move(tree_rng));
                ensemble.trees.push_back(builder.build());
            }
        }
        return ensemble;
    }

    // gradient boosted: successive trees on residuals with shrinkage
    double base = 0.0;
    for (double v : y) base += v;
    base /= static_cast<double>(y.size());
    ensemble.base_score = base;

    std::vector<double> residual(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - base;
    std::vector<std::size_t> rows(subset.begin(), subset.end());

    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        TreeBuilder builder(data, rows, residual, cfg, 0, false, root.fork(t));
        DecisionTree tree = builder.build();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            residual[i] -= cfg.learning_rate * tree.predict_value(data.row(rows[i]));
        }
        ensemble.trees.push_back(std::move(tree));
    }
    return ensemble;
}

std::vector<double> predict(const TreeEnsemble& ensemble, const numkit::DenseMatrix& features) {
    if (features.rows() > 0 && features.cols() != ensemble.feature_dim)
        throw ContractError("predict: feature dimension mismatch");
    std::vector<double> out(features.rows(), 0.0);
    if (ensemble.task == Task::classification) {
        auto probs = predict_proba(ensemble, features);
        for (std::size_t i = 0; i < features.rows(); ++i) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < ensemble.num_classes; ++c)
                if (probs(i, c) > probs(i, arg)) arg = c;
            out[i] = static_cast<double>(arg);
        }
        return out;
    }
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto x = features.row(i);
        double s = 0.0;
        for (const auto& tree : ensemble.trees) s += tree.predict_value(x);
        if (ensemble.config.mode == EnsembleMode::gradient_boosted) {
            out[i] = ensemble.base_score + ensemble.config.learning_rate * s;
        } else {
            out[i] = s / static_cast<double>(ensemble.trees.size());
        }
    }
    return out;
}

numkit::DenseMatrix predict_proba(const TreeEnsemble& ensemble,
                                  const numkit::DenseMatrix& features) {
    if (ensemble.task != Task::classification)
        throw ContractError("predict_proba: classification ensembles only");
    if (features.rows() > 0 && features.cols() != ensemble.feature_dim)
        throw ContractError("predict_proba: feature dimension mismatch");
    numkit::DenseMatrix probs(features.rows(), ensemble.num_classes);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto x = features.row(i);
        for (const auto& tree : ensemble.trees) {
            const auto& leaf = tree.leaf_for(x);
            for (std::size_t c = 0; c < ensemble.num_classes; ++c)
                probs(i, c) += leaf.class_probs[c];
        }
        for (std::size_t c = 0; c < ensemble.num_classes; ++c)
            probs(i, c) /= static_cast<double>(ensemble.trees.size());
    }
    return probs;
}

MetricKind metric_from_name(const std::string& name) {
    if (name == "rmse") return MetricKind::rmse;
    if (name == "accuracy") return MetricKind::accuracy;
    if (name == "logloss") return MetricKind::logloss;
    throw ConfigError("unknown metric '" + name + "'");
}

double evaluate(std::span<const double> predictions, std::span<const double> targets,
                MetricKind metric) {
    if (predictions.size() != targets.size() || predictions.empty())
        throw ContractError("evaluate: predictions/targets must have equal nonzero length");
    const auto n = static_cast<double>(predictions.size());
    switch (metric) {
    case MetricKind::rmse: {
        double sse = 0.0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const double e = predictions[i] - targets[i];
            sse += e * e;
        }
        return std::sqrt(sse / n);
    }
    case MetricKind::accuracy: {
        double hits = 0.0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            if (std::llround(predictions[i]) == std::llround(targets[i])) hits += 1.0;
        }
        return hits / n;
    }
    case MetricKind::logloss: {
        double total = 0.0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const double p = std::clamp(predictions[i], 1e-12, 1.0 - 1e-12);
            total += targets[i] > 0.5 ? -std::log(p) : -std::log(1.0 - p);
        }
        return total / n;
    }
    }
    throw ContractError("unknown metric");
}

double evaluate_logloss(const numkit::DenseMatrix& probs, std::span<const double> targets) {
    if (probs.rows() != targets.size() || targets.empty())
        throw ContractError("evaluate_logloss: row/target mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto y = static_cast<std::size_t>(targets[i]);
        if (y >= probs.cols()) throw ContractError("evaluate_logloss: label out of range");
        total += -std::log(std::clamp(probs(i, y), 1e-12, 1.0 - 1e-12));
    }
    return total / static_cast<double>(targets.size());
}

nlohmann::json ensemble_to_json(const TreeEnsemble& ensemble) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : ensemble.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"value", n.value},
                             {"class_probs", n.class_probs}});
        }
        trees.push_back(std::move(nodes));
    }
    const auto& c = ensemble.config;
    return {{"mode", c.mode == EnsembleMode::random_forest ? "random_forest" : "gradient_boosted"},
            {"n_trees", c.n_trees},
            {"max_features_fraction", c.max_features_fraction},
            {"min_samples_split", c.min_samples_split},
            {"min_samples_leaf", c.min_samples_leaf},
            {"bootstrap", c.bootstrap},
            {"max_depth", c.max_depth},
            {"learning_rate", c.learning_rate},
            {"seed", c.seed},
            {"task", ensemble.task == Task::regression ? "regression" : "classification"},
            {"feature_dim", ensemble.feature_dim},
            {"num_classes", ensemble.num_classes},
            {"base_score", ensemble.base_score},
            {"trees", std::move(trees)}};
}

TreeEnsemble ensemble_from_json(const nlohmann::json& j) {
    TreeEnsemble e;
    e.config.mode = j.at("mode").get<std::string>() == "random_forest"
                        ? EnsembleMode::random_forest
                        : EnsembleMode::gradient_boosted;
    e.config.n_trees = j.at("n_trees").get<std::size_t>();
    e.config.max_features_fraction = j.at("max_features_fraction").get<double>();
    e.config.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    e.config.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    e.config.bootstrap = j.at("bootstrap").get<bool>();
    e.config.max_depth = j.at("max_depth").get<std::size_t>();
    e.config.learning_rate = j.at("learning_rate").get<double>();
    e.config.seed = j.at("seed").get<std::uint64_t>();
    e.task = j.at("task").get<std::string>() == "regression" ? Task::regression
                                                             : Task::classification;
    e.feature_dim = j.at("feature_dim").get<std::size_t>();
    e.num_classes = j.at("num_classes").get<std::size_t>();
    e.base_score = j.at("base_score").get<double>();
    for (const auto& tj : j.at("trees")) {
        DecisionTree tree;
        for (const auto& nj : tj) {
            TreeNode n;
            n.feature = nj.at("feature").get<int>();
            n.threshold = nj.at("threshold").get<double>();
            n.left = nj.at("left").get<int>();
            n.right = nj.at("right").get<int>();
            n.value = nj.at("value").get<double>();
            n.class_probs = nj.at("class_probs").get<std::vector<double>>();
            tree.nodes.push_back(std::move(n));
        }
        e.trees.push_back(std::move(tree));
    }
    return e;
}

} // namespace subsel::eval
