#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subsel/commands.hpp"
#include "subsel/version.hpp"

namespace {

void add_data_flags(CLI::App* cmd, subsel::cli::DataOptions& data) {
    cmd->add_option("--data", data.data, "CSV dataset path");
    cmd->add_option("--target-col", data.target_col, "target column (header name or 0-based index)");
    cmd->add_option("--task", data.task, "regression|classification (CSV input)")
        ->check(CLI::IsMember({"regression", "classification"}));
    cmd->add_option("--synthetic", data.synthetic,
                    "synthetic kind: outlier_regression|hetero_regression|two_gaussians|"
                    "multiclass_blobs")
        ->check(CLI::IsMember({"outlier_regression", "hetero_regression", "two_gaussians",
                               "multiclass_blobs"}));
    cmd->add_option("--n", data.n, "synthetic sample count");
    cmd->add_option("--d", data.d, "synthetic feature dimension");
    cmd->add_option("--seed", data.seed, "data/split seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("subsel ") + subsel::kVersion +
                 " - influence-guided training-subset selection"};
    app.require_subcommand(1);

    subsel::cli::CompareOptions compare_opts;
    auto* compare = app.add_subcommand(
        "compare", "greedy vs random subset selection under one differentiable model");
    add_data_flags(compare, compare_opts.data);
    compare->add_option("--iters", compare_opts.iters, "selection iterations");
    compare->add_option("--m", compare_opts.m, "points added per iteration");
    compare->add_option("--epsilon", compare_opts.epsilon, "random-batch probability");
    compare->add_option("--seeds", compare_opts.seeds, "number of seeds (0..S-1)");
    compare->add_option("--jobs", compare_opts.jobs, "parallel seed workers");
    compare->add_option("--out", compare_opts.out, "output directory");

    subsel::cli::TransferOptions transfer_opts;
    auto* transfer = app.add_subcommand(
        "transfer", "linear-kernel subsets evaluated by a tree ensemble");
    add_data_flags(transfer, transfer_opts.data);
    transfer->add_option("--iters", transfer_opts.iters, "selection iterations");
    transfer->add_option("--m", transfer_opts.m, "points added per iteration");
    transfer->add_option("--epsilon", transfer_opts.epsilon, "random-batch probability");
    transfer->add_option("--seeds", transfer_opts.seeds, "number of seeds");
    transfer->add_option("--jobs", transfer_opts.jobs, "parallel seed workers");
    transfer->add_option("--eval-every", transfer_opts.eval_every, "checkpoint stride");
    transfer->add_option("--evaluator", transfer_opts.evaluator, "random_forest|gradient_boosted")
        ->check(CLI::IsMember({"random_forest", "gradient_boosted"}));
    transfer->add_option("--n-trees", transfer_opts.n_trees, "evaluator ensemble size");
    transfer->add_option("--out", transfer_opts.out, "output directory");

    subsel::cli::TuneOptions tune_opts;
    auto* tune = app.add_subcommand(
        "tune", "paired Hyperband with random vs influence subsampling");
    add_data_flags(tune, tune_opts.data);
    tune->add_option("--iters", tune_opts.iters, "Hyperband iterations");
    tune->add_option("--seeds", tune_opts.seeds, "number of seeds");
    tune->add_option("--jobs", tune_opts.jobs, "parallel seed workers");
    tune->add_option("--eta-cycle", tune_opts.eta_cycle, "eta values cycled per iteration")
        ->delimiter(',');
    tune->add_option("--max-resource", tune_opts.max_resource,
                     "largest training-subset size (0 = auto)");
    tune->add_option("--subsampler", tune_opts.subsampler, "both|random|influence")
        ->check(CLI::IsMember({"both", "random", "influence"}));
    tune->add_option("--out", tune_opts.out, "output directory");

    subsel::cli::VerifyOptions verify_opts;
    auto* verify = app.add_subcommand("verify", "run the property verification suites");
    verify->add_option("--only", verify_opts.only, "subset of property names")->delimiter(',');
    verify->add_flag("--quick", verify_opts.quick, "reduced instance counts");
    verify->add_option("--out", verify_opts.out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        subsel::cli::RunResult result;
        if (compare->parsed()) result = subsel::cli::run_compare(compare_opts);
        else if (transfer->parsed()) result = subsel::cli::run_transfer(transfer_opts);
        else if (tune->parsed()) result = subsel::cli::run_tune(tune_opts);
        else result = subsel::cli::run_verify(verify_opts);

        for (const auto& err : result.seed_errors) std::fprintf(stderr, "error: %s\n", err.c_str());
        if (result.exit_code == subsel::cli::kExitOk)
            std::printf("wrote %s\n", result.out_dir.string().c_str());
        return result.exit_code;
    } catch (const subsel::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return subsel::cli::kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
