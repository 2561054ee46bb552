#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "subsel/commands.hpp"

using namespace subsel;
using namespace subsel::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("subsel_test_" + tag);
    fs::remove_all(dir);
    return dir;
}

CompareOptions tiny_compare(const std::string& tag) {
    CompareOptions o;
    o.data.synthetic = "outlier_regression";
    o.data.n = 160;
    o.data.d = 4;
    o.iters = 5;
    o.seeds = 2;
    o.out = fresh_dir(tag).string();
    return o;
}

} // namespace

TEST_CASE("run_compare writes traces, summary and one manifest") {
    auto opts = tiny_compare("cmp_files");
    auto result = run_compare(opts);
    CHECK(result.exit_code == kExitOk);

    const fs::path out(opts.out);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "summary.csv"));
    std::size_t traces = 0;
    for (const auto& entry : fs::directory_iterator(out / "traces")) {
        ++traces;
        (void)entry;
    }
    CHECK(traces == 4); // 2 methods x 2 seeds

    // every summary row carries the manifest reference
    const std::string summary = slurp(out / "summary.csv");
    CHECK(summary.rfind("# manifest=", 0) == 0);

    // steps 0..5 for both methods
    CHECK(result.summary.size() == 2 * 6);
}

TEST_CASE("run_compare with --iters 0 emits only initial objectives") {
    auto opts = tiny_compare("cmp_iters0");
    opts.iters = 0;
    auto result = run_compare(opts);
    CHECK(result.exit_code == kExitOk);
    REQUIRE(result.summary.size() == 2);
    CHECK(result.summary[0].step == 0);
    CHECK(result.summary[1].step == 0);
    // both methods see the same seed-shared initial subsets
    CHECK(result.summary[0].mean_objective ==
          doctest::Approx(result.summary[1].mean_objective));
}

TEST_CASE("run_compare is byte-deterministic on reruns") {
    auto opts = tiny_compare("cmp_det_a");
    auto first = run_compare(opts);
    const std::string summary1 = slurp(first.out_dir / "summary.csv");
    auto opts2 = tiny_compare("cmp_det_b");
    auto second = run_compare(opts2);
    CHECK(summary1 == slurp(second.out_dir / "summary.csv"));
}

TEST_CASE("run_compare epsilon labels the method column") {
    auto opts = tiny_compare("cmp_eps");
    opts.epsilon = 0.25;
    auto result = run_compare(opts);
    bool saw_eps = false;
    for (const auto& row : result.summary) {
        if (row.method.rfind("epsilon_greedy", 0) == 0) saw_eps = true;
    }
    CHECK(saw_eps);
}

TEST_CASE("run_compare rejects bad configuration") {
    auto opts = tiny_compare("cmp_bad");
    opts.epsilon = 1.5;
    CHECK_THROWS_AS(run_compare(opts), ConfigError);
    auto opts2 = tiny_compare("cmp_bad2");
    opts2.data.synthetic = "";
    CHECK_THROWS_AS(run_compare(opts2), ConfigError);
}

TEST_CASE("run_transfer emits paired curves on one step grid") {
    TransferOptions o;
    o.data.synthetic = "hetero_regression";
    o.data.n = 200;
    o.data.d = 4;
    o.iters = 12;
    o.eval_every = 4;
    o.seeds = 2;
    o.n_trees = 3;
    o.out = fresh_dir("transfer").string();
    auto result = run_transfer(o);
    CHECK(result.exit_code == kExitOk);

    std::vector<std::size_t> greedy_steps, random_steps;
    for (const auto& row : result.summary) {
        (row.method == "greedy" ? greedy_steps : random_steps).push_back(row.step);
    }
    CHECK(greedy_steps == std::vector<std::size_t>{0, 4, 8, 12});
    CHECK(greedy_steps == random_steps);

    // evaluator config lands in the manifest
    const std::string manifest = slurp(fs::path(o.out) / "manifest.json");
    CHECK(manifest.find("\"n_trees\": 3") != std::string::npos);
    CHECK(manifest.find("random_forest") != std::string::npos);
}

TEST_CASE("run_transfer requires a regression dataset") {
    TransferOptions o;
    o.data.synthetic = "two_gaussians";
    o.data.n = 120;
    o.data.d = 3;
    o.out = fresh_dir("transfer_cls").string();
    CHECK_THROWS_AS(run_transfer(o), ConfigError);
}

TEST_CASE("run_tune pairs arms on identical sampled configs and ranks them") {
    TuneOptions o;
    o.data.synthetic = "hetero_regression";
    o.data.n = 300;
    o.data.d = 4;
    o.iters = 2;
    o.seeds = 2;
    o.eta_cycle = {3};
    o.max_resource = 60;
    o.out = fresh_dir("tune").string();
    auto result = run_tune(o);
    CHECK(result.exit_code == kExitOk);

    REQUIRE(result.ranks.size() == 2);
    for (const auto& row : result.ranks) {
        // rank values live in [1, 2] and the two arms sum to 3
        CHECK(row.mean_rank_influence >= 1.0);
        CHECK(row.mean_rank_influence <= 2.0);
        CHECK(row.mean_rank_influence + row.mean_rank_random == doctest::Approx(3.0));
    }
    CHECK(fs::exists(fs::path(o.out) / "rank_summary.csv"));
    CHECK(fs::exists(fs::path(o.out) / "traces" / "influence_seed0.csv"));
    CHECK(fs::exists(fs::path(o.out) / "traces" / "random_seed1.csv"));
}

TEST_CASE("run_tune single-seed ranks live in {1, 1.5, 2}") {
    TuneOptions o;
    o.data.synthetic = "hetero_regression";
    o.data.n = 300;
    o.data.d = 4;
    o.iters = 2;
    o.seeds = 1;
    o.eta_cycle = {2};
    o.max_resource = 60;
    o.out = fresh_dir("tune_rank_codomain").string();
    auto result = run_tune(o);
    REQUIRE(result.ranks.size() == 2);
    for (const auto& row : result.ranks) {
        const bool in_codomain = row.mean_rank_influence == 1.0 ||
                                 row.mean_rank_influence == 1.5 ||
                                 row.mean_rank_influence == 2.0;
        CHECK(in_codomain);
    }
}

TEST_CASE("run_tune single-arm mode skips the rank summary") {
    TuneOptions o;
    o.data.synthetic = "hetero_regression";
    o.data.n = 300;
    o.data.d = 4;
    o.iters = 1;
    o.seeds = 1;
    o.eta_cycle = {3};
    o.max_resource = 60;
    o.subsampler = "random";
    o.out = fresh_dir("tune_single").string();
    auto result = run_tune(o);
    CHECK(result.exit_code == kExitOk);
    CHECK(result.ranks.empty());
    CHECK_FALSE(fs::exists(fs::path(o.out) / "rank_summary.csv"));
}

TEST_CASE("run_verify honors --only and --quick") {
    VerifyOptions o;
    o.only = {"cg_vs_cholesky"};
    o.quick = true;
    o.out = fresh_dir("verify_only").string();
    auto result = run_verify(o);
    CHECK(result.exit_code == kExitOk);
    REQUIRE(result.properties.at("properties").size() == 1);
    CHECK(result.properties.at("properties")[0].at("name") == "cg_vs_cholesky");
    CHECK(result.properties.at("quick") == true);
    CHECK(fs::exists(fs::path(o.out) / "properties.json"));
}

TEST_CASE("run_verify rejects unknown property names") {
    VerifyOptions o;
    o.only = {"no_such_property"};
    o.out = fresh_dir("verify_bad").string();
    CHECK_THROWS_AS(run_verify(o), ConfigError);
}

TEST_CASE("run_compare drives the softmax kernel on multiclass data") {
    CompareOptions o;
    o.data.synthetic = "multiclass_blobs";
    o.data.n = 300;
    o.data.d = 4;
    o.iters = 10;
    o.seeds = 2;
    o.out = fresh_dir("cmp_multiclass").string();
    auto result = run_compare(o);
    CHECK(result.exit_code == kExitOk);
    double greedy_first = 0.0, greedy_last = 0.0;
    for (const auto& row : result.summary) {
        if (row.method != "greedy") continue;
        if (row.step == 0) greedy_first = row.mean_objective;
        if (row.step == o.iters) greedy_last = row.mean_objective;
    }
    CHECK(greedy_last < greedy_first);
}

TEST_CASE("CSV datasets flow through prepare_data") {
    const fs::path dir = fresh_dir("csv_in");
    fs::create_directories(dir);
    const fs::path csv = dir / "toy.csv";
    {
        std::ofstream f(csv);
        f << "a,b,y\n";
        for (int i = 0; i < 40; ++i)
            f << i << "," << (40 - i) << "," << (2 * i) << "\n";
    }
    DataOptions d;
    d.data = csv.string();
    d.target_col = "y";
    auto prepared = prepare_data(d);
    CHECK(prepared.splits.train.n() == 26);
    CHECK(prepared.splits.validation.n() == 6);
    CHECK(prepared.splits.test.n() == 8);
    CHECK(prepared.fingerprint.at("rows") == 40);
    CHECK(prepared.fingerprint.at("cols") == 2);
}
