#ifndef SUBSEL_COMMANDS_HPP
#define SUBSEL_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "subsel/dataio.hpp"
#include "subsel/evaluators.hpp"
#include "subsel/tuner.hpp"

namespace subsel::cli {

// Dataset source shared by every command: CSV file or synthetic generator.
struct DataOptions {
    std::string data;             // --data (CSV path)
    std::string target_col;       // --target-col (header name or 0-based index)
    std::string task = "regression"; // --task
    std::string synthetic;        // --synthetic kind; overrides --data
    std::size_t n = 2000;         // --n
    std::size_t d = 10;           // --d
    std::uint64_t seed = 0;       // --seed (generator + split)
    dataio::SyntheticParams params;
};

struct CompareOptions {
    DataOptions data;
    std::size_t iters = 200;  // --iters
    std::size_t m = 1;        // --m
    double epsilon = 0.0;     // --epsilon
    std::size_t seeds = 10;   // --seeds
    std::size_t jobs = 1;     // --jobs
    std::string out = "runs/compare"; // --out
    double lambda = 1e-4;
};

struct TransferOptions {
    DataOptions data;
    std::size_t iters = 200;
    std::size_t m = 1;
    double epsilon = 0.0;
    std::size_t seeds = 10;
    std::size_t jobs = 1;
    std::size_t eval_every = 10;          // --eval-every
    std::string evaluator = "random_forest"; // --evaluator
    std::size_t n_trees = 10;             // --n-trees
    std::string out = "runs/transfer";
    double lambda = 1e-4;
};

struct TuneOptions {
    DataOptions data;
    std::size_t iters = 8; // Hyperband iterations
    std::size_t seeds = 10;
    std::size_t jobs = 1;
    std::vector<std::size_t> eta_cycle{2, 3, 4, 5}; // --eta-cycle
    std::size_t max_resource = 0;                   // --max-resource; 0 -> min(256, train)
    std::string subsampler = "both";                // --subsampler
    std::string out = "runs/tune";
    double lambda = 1e-4;
};

struct VerifyOptions {
    std::vector<std::string> only; // --only
    bool quick = false;            // --quick
    std::string out = "runs/verify";
};

// Exit codes: 0 ok, 2 invalid configuration, 3 partial seed failure,
// 4 all seeds failed.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPartial = 3;
inline constexpr int kExitTotal = 4;

struct SummaryRow {
    std::size_t step = 0;
    double mean_objective = 0.0;
    double sd_objective = 0.0;
    std::string method;
};

struct RankRow {
    std::size_t hyperband_iter = 0;
    double mean_rank_influence = 0.0;
    double mean_rank_random = 0.0;
};

struct RunResult {
    int exit_code = kExitOk;
    std::filesystem::path out_dir;
    std::vector<SummaryRow> summary;
    std::vector<RankRow> ranks;    // tune only
    nlohmann::json properties;     // verify only
    std::vector<std::string> seed_errors;
};

RunResult run_compare(const CompareOptions& opts);
RunResult run_transfer(const TransferOptions& opts);
RunResult run_tune(const TuneOptions& opts);
RunResult run_verify(const VerifyOptions& opts);

// Random-forest search space: n_trees 5..20, max_features_fraction 0.01..1,
// min_samples_split 2..11, min_samples_leaf 2..11, bootstrap yes/no.
tune::SearchSpace default_tree_space();
eval::TreeEnsembleConfig ensemble_config_from_json(const nlohmann::json& config,
                                                   eval::EnsembleMode mode, std::uint64_t seed);

// Resolved dataset + deterministic splits + train-fitted standardization.
struct PreparedData {
    dataio::SplitData splits;
    nlohmann::json fingerprint; // rows, cols, content hash of the raw data
    nlohmann::json config;      // resolved data options
};
PreparedData prepare_data(const DataOptions& opts);

} // namespace subsel::cli

#endif
