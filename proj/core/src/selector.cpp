#include "subsel/selector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "subsel/rng.hpp"

namespace subsel::select {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// combos(n, m) capped at `cap` + 1 to avoid overflow.
std::size_t count_combinations(std::size_t n, std::size_t m, std::size_t cap) {
    if (m > n) return 0;
    double c = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
        if (c > static_cast<double>(cap) * 2.0) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(c));
}

std::vector<std::size_t> unchosen_indices(const Dataset& pool, const std::vector<char>& chosen) {
    std::vector<std::size_t> out;
    out.reserve(pool.n());
    for (std::size_t i = 0; i < pool.n(); ++i)
        if (!chosen[i]) out.push_back(i);
    return out;
}

std::vector<char> chosen_mask(const Dataset& pool, std::span<const std::size_t> subset) {
    std::vector<char> mask(pool.n(), 0);
    for (std::size_t idx : subset) {
        if (idx >= pool.n()) throw ContractError("selector: subset index out of range");
        if (mask[idx]) throw ContractError("selector: duplicate subset index");
        mask[idx] = 1;
    }
    return mask;
}

enum class Mode { epsilon_greedy, random };

SelectionTrace run_selection(const loss::LossKernel& kernel, const Dataset& pool,
                             const Dataset* validation, std::vector<std::size_t> initial_subset,
                             const Objective& objective, const SelectOptions& opts, Mode mode) {
    if (opts.epsilon < 0.0 || opts.epsilon > 1.0)
        throw ContractError("selector: epsilon must lie in [0, 1]");
    if (opts.m == 0) throw ContractError("selector: batch size m must be >= 1");

    SelectionTrace trace;
    trace.m = opts.m;
    trace.seed = opts.seed;
    trace.epsilon = mode == Mode::random ? 1.0 : opts.epsilon;
    trace.strategy = mode == Mode::random          ? Strategy::random
                     : opts.epsilon == 0.0         ? Strategy::greedy
                                                   : Strategy::epsilon_greedy;
    trace.initial_subset = initial_subset;
    trace.objective_label = objective.label;

    std::vector<char> chosen = chosen_mask(pool, initial_subset);
    std::vector<std::size_t> subset = std::move(initial_subset);
    Rng rng(opts.seed);

    auto t0 = Clock::now();
    loss::FittedModel model = loss::fit_erm(kernel, pool, subset, {}, opts.fit);
    trace.initial_objective = objective.value(model);
    trace.initial_wall_time_ms = ms_since(t0);

    for (std::size_t iter = 0; iter < opts.iterations; ++iter) {
        auto unchosen = unchosen_indices(pool, chosen);
        if (unchosen.size() < opts.m) {
            trace.exhausted = true;
            break;
        }
        t0 = Clock::now();

        bool random_batch = mode == Mode::random || opts.epsilon >= 1.0;
        if (!random_batch && opts.epsilon > 0.0) random_batch = rng.bernoulli(opts.epsilon);

        std::vector<std::size_t> batch;
        batch.reserve(opts.m);
        if (random_batch) {
            for (std::size_t pos : rng.sample_without_replacement(unchosen.size(), opts.m))
                batch.push_back(unchosen[pos]);
        } else {
            std::vector<std::size_t> candidates;
            const std::size_t cap = std::max(opts.scan_cap, opts.m);
            if (opts.scan_cap > 0 && unchosen.size() > cap) {
                for (std::size_t pos : rng.sample_without_replacement(unchosen.size(), cap))
                    candidates.push_back(unchosen[pos]);
                std::sort(candidates.begin(), candidates.end());
            } else {
                candidates = std::move(unchosen);
            }
            auto adjoint = influence::validation_adjoint(model, *validation);
            auto scores = influence::residual_scores_with_adjoint(model, adjoint, candidates);
            std::partial_sort(scores.begin(), scores.begin() + static_cast<long>(opts.m),
                              scores.end(), [](const auto& a, const auto& b) {
                                  if (a.score != b.score) return a.score > b.score;
                                  return a.candidate_index < b.candidate_index;
                              });
            for (std::size_t j = 0; j < opts.m; ++j) batch.push_back(scores[j].candidate_index);
        }

        std::sort(batch.begin(), batch.end());
        for (std::size_t idx : batch) {
            chosen[idx] = 1;
            subset.push_back(idx);
        }
        model = loss::fit_erm(kernel, pool, subset, model.theta, opts.fit);
        trace.steps.push_back({std::move(batch), objective.value(model), ms_since(t0)});
    }
    return trace;
}

} // namespace

Objective validation_mean_loss(const Dataset& validation) {
    if (validation.n() == 0) throw ContractError("validation_mean_loss: empty validation set");
    const Dataset* val = &validation;
    Objective obj;
    obj.label = "validation_mean_loss";
    obj.value = [val](const loss::FittedModel& model) {
        double total = 0.0;
        for (std::size_t i = 0; i < val->n(); ++i)
            total += loss::loss(model.kernel, val->point(i), model.theta);
        return total / static_cast<double>(val->n());
    };
    obj.gradient = [val](const loss::FittedModel& model) {
        std::vector<double> g(model.kernel.dim(), 0.0);
        for (std::size_t i = 0; i < val->n(); ++i)
            loss::accumulate_plain_grad(model.kernel, val->point(i), model.theta, g);
        numkit::scale(1.0 / static_cast<double>(val->n()), g);
        numkit::axpy(model.kernel.lambda, model.theta, g);
        return g;
    };
    return obj;
}

std::string strategy_name(Strategy s, double epsilon) {
    switch (s) {
    case Strategy::greedy: return "greedy";
    case Strategy::epsilon_greedy: {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "epsilon_greedy(%.6g)", epsilon);
        return buf;
    }
    case Strategy::random: return "random";
    case Strategy::exact_oracle: return "exact_oracle";
    }
    return "unknown";
}

void trace_to_csv(const SelectionTrace& trace, std::ostream& os, const std::string& manifest_ref) {
    if (!manifest_ref.empty()) os << "# manifest=" << manifest_ref << "\n";
    os << "step,added_indices,objective,cumulative_points,wall_time_ms\n";
    os << "0,," << format_double(trace.initial_objective) << "," << trace.initial_subset.size()
       << "," << format_double(trace.initial_wall_time_ms) << "\n";
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const auto& s = trace.steps[k];
        os << (k + 1) << ",";
        for (std::size_t j = 0; j < s.added.size(); ++j) {
            if (j) os << ";";
            os << s.added[j];
        }
        os << "," << format_double(s.objective) << "," << trace.cumulative_points(k + 1) << ","
           << format_double(s.wall_time_ms) << "\n";
    }
}

nlohmann::json trace_to_json(const SelectionTrace& trace) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : trace.steps) {
        steps.push_back({{"added", s.added},
                         {"objective", s.objective},
                         {"wall_time_ms", s.wall_time_ms}});
    }
    return {{"strategy", strategy_name(trace.strategy, trace.epsilon)},
            {"epsilon", trace.epsilon},
            {"m", trace.m},
            {"seed", trace.seed},
            {"initial_subset", trace.initial_subset},
            {"initial_objective", trace.initial_objective},
            {"initial_wall_time_ms", trace.initial_wall_time_ms},
            {"steps", steps},
            {"exhausted", trace.exhausted},
            {"objective", trace.objective_label}};
}

SelectionTrace epsilon_greedy_select(const loss::LossKernel& kernel, const Dataset& pool,
                                     const Dataset& validation,
                                     std::vector<std::size_t> initial_subset,
                                     const Objective& objective, const SelectOptions& opts) {
    return run_selection(kernel, pool, &validation, std::move(initial_subset), objective, opts,
                         Mode::epsilon_greedy);
}

SelectionTrace random_select(const loss::LossKernel& kernel, const Dataset& pool,
                             std::vector<std::size_t> initial_subset, const Objective& objective,
                             const SelectOptions& opts) {
    return run_selection(kernel, pool, nullptr, std::move(initial_subset), objective, opts,
                         Mode::random);
}

std::vector<CandidateRefit> enumerate_refits(const loss::LossKernel& kernel, const Dataset& pool,
                                             std::span<const std::size_t> subset,
                                             const Objective& objective, std::size_t m,
                                             const ExactGreedyOptions& opts) {
    if (m == 0) throw ContractError("enumerate_refits: m must be >= 1");
    auto chosen = chosen_mask(pool, subset);
    auto remaining = unchosen_indices(pool, chosen);
    if (remaining.size() < m) throw ContractError("enumerate_refits: pool too small for m");

    const std::size_t total = count_combinations(remaining.size(), m, opts.budget_cap);
    if (total > opts.budget_cap) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "enumerate_refits: C(%zu, %zu) refits exceed budget cap %zu",
                      remaining.size(), m, opts.budget_cap);
        throw BudgetError(msg);
    }

    loss::FittedModel base = loss::fit_erm(kernel, pool, subset, {}, opts.fit);

    std::vector<std::size_t> extended(subset.begin(), subset.end());
    extended.resize(subset.size() + m);

    std::vector<CandidateRefit> out;
    out.reserve(total);

    // lexicographic m-combinations over `remaining`
    std::vector<std::size_t> pick(m);
    for (std::size_t i = 0; i < m; ++i) pick[i] = i;
    while (true) {
        for (std::size_t i = 0; i < m; ++i) extended[subset.size() + i] = remaining[pick[i]];
        auto refit = loss::fit_erm(kernel, pool, extended, base.theta, opts.fit);
        CandidateRefit cr;
        cr.combo.assign(extended.end() - static_cast<long>(m), extended.end());
        cr.objective = objective.value(refit);
        out.push_back(std::move(cr));

        // next combination
        std::size_t i = m;
        while (i-- > 0) {
            if (pick[i] + (m - i) < remaining.size()) {
                ++pick[i];
                for (std::size_t j = i + 1; j < m; ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return out;
        }
    }
}

ExactGreedyResult exact_greedy_step(const loss::LossKernel& kernel, const Dataset& pool,
                                    std::span<const std::size_t> subset, const Objective& objective,
                                    std::size_t m, const ExactGreedyOptions& opts) {
    auto refits = enumerate_refits(kernel, pool, subset, objective, m, opts);
    const CandidateRefit* best = &refits.front();
    for (const auto& r : refits) {
        if (r.objective < best->objective) best = &r; // first-in-lex wins ties
    }
    std::vector<std::size_t> extended(subset.begin(), subset.end());
    extended.insert(extended.end(), best->combo.begin(), best->combo.end());
    ExactGreedyResult result;
    result.chosen = best->combo;
    result.refitted = loss::fit_erm(kernel, pool, extended, {}, opts.fit);
    return result;
}

DeltaReport compute_deltas(const loss::LossKernel& kernel, const Dataset& pool,
                           std::span<const std::size_t> subset, const Objective& objective,
                           std::size_t m, const DeltaOptions& opts) {
    auto chosen = chosen_mask(pool, subset);
    auto remaining = unchosen_indices(pool, chosen);
    if (remaining.size() < m) throw ContractError("compute_deltas: pool too small for m");

    DeltaReport report;
    report.subset_size = subset.size();
    report.m = m;

    const std::size_t total = count_combinations(remaining.size(), m, opts.budget_cap);
    ExactGreedyOptions ex{opts.budget_cap, opts.fit};

    if (total <= opts.budget_cap) {
        auto refits = enumerate_refits(kernel, pool, subset, objective, m, ex);
        double best = refits.front().objective;
        double worst = best;
        double sum = 0.0;
        for (const auto& r : refits) {
            best = std::min(best, r.objective);
            worst = std::max(worst, r.objective);
            sum += r.objective;
        }
        report.delta_prime = best - sum / static_cast<double>(refits.size());
        report.delta_double_prime = best - worst;
        return report;
    }

    // Sampled fallback for large C(remaining, m): greedy/worst/mean over a
    // seeded draw of m-subsets; standard error reported for the mean.
    report.exact = false;
    Rng rng(opts.seed);
    loss::FittedModel base = loss::fit_erm(kernel, pool, subset, {}, opts.fit);
    std::vector<std::size_t> extended(subset.begin(), subset.end());
    extended.resize(subset.size() + m);

    double best = std::numeric_limits<double>::infinity();
    double worst = -best;
    double sum = 0.0, sumsq = 0.0;
    const std::size_t draws = std::max<std::size_t>(opts.mc_draws, 1000);
    for (std::size_t k = 0; k < draws; ++k) {
        auto pos = rng.sample_without_replacement(remaining.size(), m);
        for (std::size_t i = 0; i < m; ++i) extended[subset.size() + i] = remaining[pos[i]];
        auto refit = loss::fit_erm(kernel, pool, extended, base.theta, opts.fit);
        const double r = objective.value(refit);
        best = std::min(best, r);
        worst = std::max(worst, r);
        sum += r;
        sumsq += r * r;
    }
    const double n = static_cast<double>(draws);
    const double mean = sum / n;
    report.delta_prime = best - mean;
    report.delta_double_prime = best - worst;
    report.mc_std_error = std::sqrt(std::max(0.0, sumsq / n - mean * mean) / n);
    return report;
}

} // namespace subsel::select
