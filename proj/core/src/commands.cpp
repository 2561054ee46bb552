#include "subsel/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "subsel/influence.hpp"
#include "subsel/rng.hpp"
#include "subsel/selector.hpp"
#include "subsel/verify.hpp"
#include "subsel/version.hpp"

namespace subsel::cli {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << text;
}

// Manifest hash covers everything reproducible; timestamps stay outside.
struct Manifest {
    nlohmann::json body;
    std::string hash;
};

Manifest make_manifest(const std::string& command, nlohmann::json config,
                       const std::vector<std::uint64_t>& seeds, nlohmann::json fingerprint) {
    nlohmann::json hashed = {{"command", command},
                             {"config", config},
                             {"seeds", seeds},
                             {"dataset", fingerprint},
                             {"version", kVersion}};
    Manifest m;
    m.hash = hex64(fnv1a(hashed.dump()));
    m.body = std::move(hashed);
    m.body["manifest_hash"] = m.hash;
    m.body["started_utc"] = utc_now();
    return m;
}

void finish_manifest(Manifest& m, const fs::path& out_dir,
                     const std::vector<std::string>& seed_errors) {
    m.body["finished_utc"] = utc_now();
    if (!seed_errors.empty()) m.body["seed_errors"] = seed_errors;
    write_text(out_dir / "manifest.json", m.body.dump(2) + "\n");
}

void write_summary_csv(const fs::path& path, const std::vector<SummaryRow>& rows,
                       const std::string& manifest_ref) {
    std::ostringstream os;
    os << "# manifest=" << manifest_ref << "\n";
    os << "step,mean_objective,sd_objective,method\n";
    for (const auto& r : rows) {
        os << r.step << "," << format_double(r.mean_objective) << ","
           << format_double(r.sd_objective) << "," << r.method << "\n";
    }
    write_text(path, os.str());
}

// mean/population-sd per step over the curves that reached that step
std::vector<SummaryRow> summarize_curves(const std::vector<std::vector<double>>& curves,
                                         const std::vector<std::size_t>& steps,
                                         const std::string& method) {
    std::vector<SummaryRow> rows;
    for (std::size_t k = 0; k < steps.size(); ++k) {
        double sum = 0.0, sumsq = 0.0;
        std::size_t count = 0;
        for (const auto& curve : curves) {
            if (k < curve.size()) {
                sum += curve[k];
                sumsq += curve[k] * curve[k];
                ++count;
            }
        }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sumsq / static_cast<double>(count) - mean * mean);
        rows.push_back({steps[k], mean, std::sqrt(var), method});
    }
    return rows;
}

void run_seeds(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& work) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t s = 0; s < count; ++s) work(s);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::min(jobs, count);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                const std::size_t s = next.fetch_add(1);
                if (s >= count) return;
                work(s);
            }
        });
    }
    for (auto& t : threads) t.join();
}

std::vector<std::size_t> initial_subset_for_seed(std::uint64_t seed, std::size_t train_n,
                                                 std::size_t dim) {
    std::size_t want = std::max<std::size_t>(dim, 10);
    want = std::min(want, train_n);
    Rng rng = Rng(seed).fork(0xA11CE);
    auto idx = rng.sample_without_replacement(train_n, want);
    std::sort(idx.begin(), idx.end());
    return idx;
}

int exit_code_for(std::size_t failures, std::size_t total) {
    if (failures == 0) return kExitOk;
    return failures == total ? kExitTotal : kExitPartial;
}

Task task_from_name(const std::string& name) {
    if (name == "regression") return Task::regression;
    if (name == "classification") return Task::classification;
    throw ConfigError("unknown task '" + name + "' (expected regression|classification)");
}

} // namespace

PreparedData prepare_data(const DataOptions& opts) {
    Dataset raw;
    nlohmann::json config;
    if (!opts.synthetic.empty()) {
        const auto kind = dataio::synthetic_kind_from_name(opts.synthetic);
        raw = dataio::gen_synthetic(kind, opts.n, opts.d, opts.seed, opts.params);
        config = {{"synthetic", opts.synthetic},
                  {"n", opts.n},
                  {"d", opts.d},
                  {"seed", opts.seed},
                  {"outlier_fraction", opts.params.outlier_fraction},
                  {"outlier_multiplier", opts.params.outlier_multiplier},
                  {"noise_sd", opts.params.noise_sd},
                  {"hetero_scale", opts.params.hetero_scale},
                  {"separation", opts.params.separation},
                  {"label_noise", opts.params.label_noise}};
    } else if (!opts.data.empty()) {
        dataio::CsvSchema schema;
        schema.task = task_from_name(opts.task);
        if (!opts.target_col.empty() &&
            opts.target_col.find_first_not_of("0123456789") == std::string::npos) {
            schema.target_index = std::stoul(opts.target_col);
        } else if (!opts.target_col.empty()) {
            schema.target_name = opts.target_col;
        } else {
            throw ConfigError("--target-col is required with --data");
        }
        raw = dataio::load_csv(opts.data, schema);
        config = {{"data", opts.data}, {"target_col", opts.target_col}, {"task", opts.task},
                  {"seed", opts.seed}};
    } else {
        throw ConfigError("provide --data or --synthetic");
    }

    dataio::SplitSpec spec;
    spec.seed = opts.seed;
    PreparedData prepared;
    prepared.splits = dataio::split(raw, spec);

    auto standardizer = dataio::Standardizer::fit(prepared.splits.train);
    standardizer.apply_in_place(prepared.splits.train);
    standardizer.apply_in_place(prepared.splits.validation);
    standardizer.apply_in_place(prepared.splits.test);

    prepared.fingerprint = {{"rows", raw.n()},
                            {"cols", raw.dim()},
                            {"content_hash", hex64(dataio::content_hash(raw))}};
    config["standardize"] = true;
    config["test_fraction"] = spec.test_fraction;
    config["val_fraction_of_remainder"] = spec.val_fraction_of_remainder;
    prepared.config = std::move(config);
    return prepared;
}

tune::SearchSpace default_tree_space() {
    using K = tune::Dimension::Kind;
    tune::SearchSpace space;
    space.dims.push_back({"n_trees", K::integer, 5, 20, 0, 0, {}});
    space.dims.push_back({"max_features_fraction", K::real, 0, 0, 0.01, 1.0, {}});
    space.dims.push_back({"min_samples_split", K::integer, 2, 11, 0, 0, {}});
    space.dims.push_back({"min_samples_leaf", K::integer, 2, 11, 0, 0, {}});
    space.dims.push_back({"bootstrap", K::boolean, 0, 0, 0, 0, {}});
    return space;
}

eval::TreeEnsembleConfig ensemble_config_from_json(const nlohmann::json& config,
                                                   eval::EnsembleMode mode, std::uint64_t seed) {
    eval::TreeEnsembleConfig cfg;
    cfg.mode = mode;
    cfg.seed = seed;
    if (config.contains("n_trees")) cfg.n_trees = config.at("n_trees").get<std::size_t>();
    if (config.contains("max_features_fraction"))
        cfg.max_features_fraction = config.at("max_features_fraction").get<double>();
    if (config.contains("min_samples_split"))
        cfg.min_samples_split = config.at("min_samples_split").get<std::size_t>();
    if (config.contains("min_samples_leaf"))
        cfg.min_samples_leaf = config.at("min_samples_leaf").get<std::size_t>();
    if (config.contains("bootstrap")) cfg.bootstrap = config.at("bootstrap").get<bool>();
    if (config.contains("max_depth")) cfg.max_depth = config.at("max_depth").get<std::size_t>();
    if (config.contains("learning_rate"))
        cfg.learning_rate = config.at("learning_rate").get<double>();
    return cfg;
}

RunResult run_compare(const CompareOptions& opts) {
    if (opts.epsilon < 0.0 || opts.epsilon > 1.0)
        throw ConfigError("--epsilon must lie in [0, 1]");
    if (opts.seeds == 0) throw ConfigError("--seeds must be >= 1");

    PreparedData prepared = prepare_data(opts.data);
    const Dataset& train = prepared.splits.train;
    const Dataset& validation = prepared.splits.validation;

    nlohmann::json config = prepared.config;
    config["iters"] = opts.iters;
    config["m"] = opts.m;
    config["epsilon"] = opts.epsilon;
    config["lambda"] = opts.lambda;
    config["initial_subset_size"] = std::min<std::size_t>(std::max<std::size_t>(train.dim(), 10), train.n());

    std::vector<std::uint64_t> seeds(opts.seeds);
    for (std::size_t s = 0; s < opts.seeds; ++s) seeds[s] = s;
    Manifest manifest = make_manifest("compare", config, seeds, prepared.fingerprint);

    const auto kernel = loss::kernel_for(train, opts.lambda);
    const auto objective = select::validation_mean_loss(validation);

    struct SeedOutcome {
        select::SelectionTrace greedy;
        select::SelectionTrace random;
        std::string error;
        bool ok = false;
    };
    std::vector<SeedOutcome> outcomes(opts.seeds);

    run_seeds(opts.seeds, opts.jobs, [&](std::size_t s) {
        try {
            auto initial = initial_subset_for_seed(s, train.n(), train.dim());
            select::SelectOptions sopts;
            sopts.m = opts.m;
            sopts.iterations = opts.iters;
            sopts.epsilon = opts.epsilon;
            sopts.seed = s;
            outcomes[s].greedy =
                select::epsilon_greedy_select(kernel, train, validation, initial, objective, sopts);
            outcomes[s].random = select::random_select(kernel, train, initial, objective, sopts);
            outcomes[s].ok = true;
        } catch (const std::exception& e) {
            outcomes[s].error = e.what();
        }
    });

    RunResult result;
    result.out_dir = fs::path(opts.out);
    fs::create_directories(result.out_dir / "traces");

    std::vector<std::vector<double>> greedy_curves, random_curves;
    std::size_t failures = 0;
    for (std::size_t s = 0; s < opts.seeds; ++s) {
        auto& oc = outcomes[s];
        if (!oc.ok) {
            ++failures;
            result.seed_errors.push_back("seed " + std::to_string(s) + ": " + oc.error);
            continue;
        }
        for (const auto* trace : {&oc.greedy, &oc.random}) {
            std::ostringstream os;
            select::trace_to_csv(*trace, os, manifest.hash);
            const std::string method = select::strategy_name(trace->strategy, trace->epsilon);
            write_text(result.out_dir / "traces" /
                           (method + "_seed" + std::to_string(s) + ".csv"),
                       os.str());
        }
        auto collect = [](const select::SelectionTrace& t) {
            std::vector<double> curve{t.initial_objective};
            for (const auto& st : t.steps) curve.push_back(st.objective);
            return curve;
        };
        greedy_curves.push_back(collect(oc.greedy));
        random_curves.push_back(collect(oc.random));
    }

    if (failures < opts.seeds) {
        std::vector<std::size_t> steps(opts.iters + 1);
        for (std::size_t k = 0; k <= opts.iters; ++k) steps[k] = k;
        const std::string greedy_label =
            select::strategy_name(opts.epsilon == 0.0 ? select::Strategy::greedy
                                                      : select::Strategy::epsilon_greedy,
                                  opts.epsilon);
        auto rows = summarize_curves(greedy_curves, steps, greedy_label);
        auto rrows = summarize_curves(random_curves, steps, "random");
        rows.insert(rows.end(), rrows.begin(), rrows.end());
        result.summary = std::move(rows);
        write_summary_csv(result.out_dir / "summary.csv", result.summary, manifest.hash);
    }

    finish_manifest(manifest, result.out_dir, result.seed_errors);
    result.exit_code = exit_code_for(failures, opts.seeds);
    return result;
}

RunResult run_transfer(const TransferOptions& opts) {
    if (opts.seeds == 0) throw ConfigError("--seeds must be >= 1");
    if (opts.eval_every == 0) throw ConfigError("--eval-every must be >= 1");

    PreparedData prepared = prepare_data(opts.data);
    const Dataset& train = prepared.splits.train;
    const Dataset& validation = prepared.splits.validation;
    if (train.task != Task::regression)
        throw ConfigError("transfer requires a regression dataset");

    const eval::EnsembleMode mode = opts.evaluator == "random_forest"
                                        ? eval::EnsembleMode::random_forest
                                    : opts.evaluator == "gradient_boosted"
                                        ? eval::EnsembleMode::gradient_boosted
                                        : throw ConfigError("unknown evaluator '" + opts.evaluator +
                                                            "'");

    const std::size_t init_size =
        std::min<std::size_t>(std::max<std::size_t>(train.dim(), 10), train.n());

    nlohmann::json config = prepared.config;
    config["iters"] = opts.iters;
    config["m"] = opts.m;
    config["epsilon"] = opts.epsilon;
    config["lambda"] = opts.lambda;
    config["eval_every"] = opts.eval_every;
    config["initial_subset_size"] = init_size;
    config["evaluator"] = {{"mode", opts.evaluator},
                           {"n_trees", opts.n_trees},
                           {"max_depth", 6},
                           {"min_samples_split", 2},
                           {"min_samples_leaf", 1},
                           {"max_features_fraction", 1.0},
                           {"bootstrap", false},
                           {"learning_rate", 0.1}};

    std::vector<std::uint64_t> seeds(opts.seeds);
    for (std::size_t s = 0; s < opts.seeds; ++s) seeds[s] = s;
    Manifest manifest = make_manifest("transfer", config, seeds, prepared.fingerprint);

    const auto kernel = loss::squared_kernel(train.dim(), opts.lambda);
    const auto objective = select::validation_mean_loss(validation);

    std::vector<std::size_t> checkpoints;
    for (std::size_t k = 0; k <= opts.iters; k += opts.eval_every) checkpoints.push_back(k);

    struct SeedOutcome {
        std::vector<double> greedy_rmse, random_rmse;
        std::string error;
        bool ok = false;
    };
    std::vector<SeedOutcome> outcomes(opts.seeds);

    auto rmse_at_checkpoints = [&](const select::SelectionTrace& trace, std::uint64_t seed) {
        std::vector<double> out;
        std::vector<std::size_t> subset = trace.initial_subset;
        std::size_t step = 0;
        for (std::size_t target : checkpoints) {
            while (step < target && step < trace.steps.size()) {
                const auto& added = trace.steps[step].added;
                subset.insert(subset.end(), added.begin(), added.end());
                ++step;
            }
            if (target > trace.steps.size()) break; // exhausted trace
            eval::TreeEnsembleConfig cfg =
                ensemble_config_from_json({{"n_trees", opts.n_trees}}, mode,
                                          mix64(mix64(seed) ^ target));
            auto ensemble = eval::fit_tree_ensemble(cfg, train, subset);
            auto preds = eval::predict(ensemble, validation.features);
            out.push_back(eval::evaluate(preds, validation.targets, eval::MetricKind::rmse));
        }
        return out;
    };

    run_seeds(opts.seeds, opts.jobs, [&](std::size_t s) {
        try {
            auto initial = initial_subset_for_seed(s, train.n(), train.dim());
            select::SelectOptions sopts;
            sopts.m = opts.m;
            sopts.iterations = opts.iters;
            sopts.epsilon = opts.epsilon;
            sopts.seed = s;
            auto greedy =
                select::epsilon_greedy_select(kernel, train, validation, initial, objective, sopts);
            auto random = select::random_select(kernel, train, initial, objective, sopts);
            outcomes[s].greedy_rmse = rmse_at_checkpoints(greedy, s);
            outcomes[s].random_rmse = rmse_at_checkpoints(random, s);
            outcomes[s].ok = true;
        } catch (const std::exception& e) {
            outcomes[s].error = e.what();
        }
    });

    RunResult result;
    result.out_dir = fs::path(opts.out);
    fs::create_directories(result.out_dir / "traces");

    std::vector<std::vector<double>> greedy_curves, random_curves;
    std::size_t failures = 0;
    for (std::size_t s = 0; s < opts.seeds; ++s) {
        auto& oc = outcomes[s];
        if (!oc.ok) {
            ++failures;
            result.seed_errors.push_back("seed " + std::to_string(s) + ": " + oc.error);
            continue;
        }
        auto dump_curve = [&](const std::vector<double>& rmse, const std::string& method) {
            std::ostringstream os;
            os << "# manifest=" << manifest.hash << "\n";
            os << "step,objective,cumulative_points\n";
            for (std::size_t k = 0; k < rmse.size(); ++k) {
                os << checkpoints[k] << "," << format_double(rmse[k]) << ","
                   << (init_size + opts.m * checkpoints[k]) << "\n";
            }
            write_text(result.out_dir / "traces" / (method + "_seed" + std::to_string(s) + ".csv"),
                       os.str());
        };
        dump_curve(oc.greedy_rmse, "greedy");
        dump_curve(oc.random_rmse, "random");
        greedy_curves.push_back(oc.greedy_rmse);
        random_curves.push_back(oc.random_rmse);
    }

    if (failures < opts.seeds) {
        auto rows = summarize_curves(greedy_curves, checkpoints, "greedy");
        auto rrows = summarize_curves(random_curves, checkpoints, "random");
        rows.insert(rows.end(), rrows.begin(), rrows.end());
        result.summary = std::move(rows);
        write_summary_csv(result.out_dir / "summary.csv", result.summary, manifest.hash);
    }

    finish_manifest(manifest, result.out_dir, result.seed_errors);
    result.exit_code = exit_code_for(failures, opts.seeds);
    return result;
}

RunResult run_tune(const TuneOptions& opts) {
    if (opts.seeds == 0) throw ConfigError("--seeds must be >= 1");
    if (opts.subsampler != "both" && opts.subsampler != "random" && opts.subsampler != "influence")
        throw ConfigError("--subsampler must be both|random|influence");

    PreparedData prepared = prepare_data(opts.data);
    const Dataset& train = prepared.splits.train;
    const Dataset& validation = prepared.splits.validation;
    if (train.task != Task::regression) throw ConfigError("tune requires a regression dataset");

    const std::size_t max_resource =
        opts.max_resource > 0 ? std::min(opts.max_resource, train.n())
                              : std::min<std::size_t>(256, train.n());

    nlohmann::json config = prepared.config;
    config["iters"] = opts.iters;
    config["eta_cycle"] = opts.eta_cycle;
    config["max_resource"] = max_resource;
    config["subsampler"] = opts.subsampler;
    config["lambda"] = opts.lambda;

    std::vector<std::uint64_t> seeds(opts.seeds);
    for (std::size_t s = 0; s < opts.seeds; ++s) seeds[s] = s;
    Manifest manifest = make_manifest("tune", config, seeds, prepared.fingerprint);

    const bool run_random = opts.subsampler != "influence";
    const bool run_influence = opts.subsampler != "random";

    struct SeedOutcome {
        tune::TunerTrace random;
        tune::TunerTrace influence;
        std::string error;
        bool ok = false;
    };
    std::vector<SeedOutcome> outcomes(opts.seeds);

    auto evaluator = [&](std::uint64_t seed) {
        return [&, seed](const nlohmann::json& cfg_json,
                         std::span<const std::size_t> subset) -> double {
            auto cfg = ensemble_config_from_json(cfg_json, eval::EnsembleMode::random_forest,
                                                 mix64(seed ^ fnv1a(cfg_json.dump())));
            auto ensemble = eval::fit_tree_ensemble(cfg, train, subset);
            auto preds = eval::predict(ensemble, validation.features);
            return eval::evaluate(preds, validation.targets, eval::MetricKind::rmse);
        };
    };

    const auto space = default_tree_space();
    run_seeds(opts.seeds, opts.jobs, [&](std::size_t s) {
        try {
            tune::TunerConfig tcfg;
            tcfg.eta_cycle = opts.eta_cycle;
            tcfg.max_resource = max_resource;
            tcfg.iterations = opts.iters;
            tcfg.seed = s;
            if (run_random) {
                tcfg.subsampler = tune::Subsampler::random;
                outcomes[s].random = tune::hyperband_run(space, train, validation, evaluator(s), tcfg);
            }
            if (run_influence) {
                tcfg.subsampler = tune::Subsampler::influence;
                outcomes[s].influence =
                    tune::hyperband_run(space, train, validation, evaluator(s), tcfg);
            }
            if (run_random && run_influence) {
                // paired design: both arms sample identical config sets per
                // bracket (survivor paths may then diverge)
                auto rung0 = [](const tune::TunerTrace& t) {
                    std::vector<const tune::TunerEvaluation*> out;
                    for (const auto& e : t.evaluations)
                        if (e.rung == 0) out.push_back(&e);
                    return out;
                };
                const auto a = rung0(outcomes[s].random);
                const auto b = rung0(outcomes[s].influence);
                if (a.size() != b.size())
                    throw NumericError("tune: paired arms diverged in sampled config count");
                for (std::size_t i = 0; i < a.size(); ++i) {
                    if (a[i]->config != b[i]->config ||
                        a[i]->hyperband_iter != b[i]->hyperband_iter ||
                        a[i]->bracket != b[i]->bracket)
                        throw NumericError("tune: paired arms diverged in sampled configs");
                }
            }
            outcomes[s].ok = true;
        } catch (const std::exception& e) {
            outcomes[s].error = e.what();
        }
    });

    RunResult result;
    result.out_dir = fs::path(opts.out);
    fs::create_directories(result.out_dir / "traces");

    std::vector<std::vector<double>> random_inc, influence_inc;
    std::size_t failures = 0;
    for (std::size_t s = 0; s < opts.seeds; ++s) {
        auto& oc = outcomes[s];
        if (!oc.ok) {
            ++failures;
            result.seed_errors.push_back("seed " + std::to_string(s) + ": " + oc.error);
            continue;
        }
        auto dump = [&](const tune::TunerTrace& trace, const std::string& arm) {
            std::ostringstream os;
            tune::tuner_trace_to_csv(trace, os, manifest.hash);
            write_text(result.out_dir / "traces" / (arm + "_seed" + std::to_string(s) + ".csv"),
                       os.str());
        };
        if (run_random) {
            dump(oc.random, "random");
            random_inc.push_back(oc.random.incumbent);
        }
        if (run_influence) {
            dump(oc.influence, "influence");
            influence_inc.push_back(oc.influence.incumbent);
        }
    }

    if (failures < opts.seeds) {
        std::vector<std::size_t> steps(opts.iters);
        for (std::size_t k = 0; k < opts.iters; ++k) steps[k] = k;
        std::vector<SummaryRow> rows;
        if (run_influence) {
            auto r = summarize_curves(influence_inc, steps, "influence");
            rows.insert(rows.end(), r.begin(), r.end());
        }
        if (run_random) {
            auto r = summarize_curves(random_inc, steps, "random");
            rows.insert(rows.end(), r.begin(), r.end());
        }
        result.summary = std::move(rows);
        write_summary_csv(result.out_dir / "summary.csv", result.summary, manifest.hash);

        if (run_random && run_influence && !influence_inc.empty()) {
            std::ostringstream os;
            os << "# manifest=" << manifest.hash << "\n";
            os << "hyperband_iter,mean_rank_influence,mean_rank_random\n";
            for (std::size_t k = 0; k < opts.iters; ++k) {
                double ri = 0.0, rr = 0.0;
                std::size_t count = 0;
                for (std::size_t c = 0; c < influence_inc.size(); ++c) {
                    if (k >= influence_inc[c].size() || k >= random_inc[c].size()) continue;
                    const double vi = influence_inc[c][k];
                    const double vr = random_inc[c][k];
                    if (vi < vr) {
                        ri += 1.0;
                        rr += 2.0;
                    } else if (vr < vi) {
                        ri += 2.0;
                        rr += 1.0;
                    } else {
                        ri += 1.5;
                        rr += 1.5;
                    }
                    ++count;
                }
                if (count == 0) continue;
                RankRow row{k, ri / static_cast<double>(count), rr / static_cast<double>(count)};
                result.ranks.push_back(row);
                os << k << "," << format_double(row.mean_rank_influence) << ","
                   << format_double(row.mean_rank_random) << "\n";
            }
            write_text(result.out_dir / "rank_summary.csv", os.str());
        }
    }

    finish_manifest(manifest, result.out_dir, result.seed_errors);
    result.exit_code = exit_code_for(failures, opts.seeds);
    return result;
}

RunResult run_verify(const VerifyOptions& opts) {
    nlohmann::json config = {{"only", opts.only}, {"quick", opts.quick}};
    Manifest manifest = make_manifest("verify", config, {}, nlohmann::json::object());

    auto results = verify::run_properties(opts.only, opts.quick);

    RunResult out;
    out.out_dir = fs::path(opts.out);
    bool all_pass = true;
    nlohmann::json props = nlohmann::json::array();
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        props.push_back({{"name", r.name}, {"pass", r.pass}, {"stats", r.stats}});
        std::printf("%s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str());
    }
    out.properties = {{"quick", opts.quick},
                      {"all_pass", all_pass},
                      {"manifest", manifest.hash},
                      {"properties", props}};
    write_text(out.out_dir / "properties.json", out.properties.dump(2) + "\n");
    finish_manifest(manifest, out.out_dir, {});
    out.exit_code = all_pass ? kExitOk : 1;
    return out;
}

} // namespace subsel::cli
