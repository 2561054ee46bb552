#ifndef SUBSEL_SELECTOR_HPP
#define SUBSEL_SELECTOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "subsel/influence.hpp"
#include "subsel/losskernels.hpp"

namespace subsel::select {

// Target functional R(theta-hat). value is evaluated on refits; gradient
// (d R / d theta at the model's parameter) feeds influence scoring.
struct Objective {
    std::function<double(const loss::FittedModel&)> value;
    std::function<std::vector<double>(const loss::FittedModel&)> gradient;
    std::string label;
};

// Mean regularized kernel loss over a held-out set; the one objective shipped.
Objective validation_mean_loss(const Dataset& validation);

enum class Strategy { greedy, epsilon_greedy, random, exact_oracle };
std::string strategy_name(Strategy s, double epsilon);

struct SelectionStep {
    std::vector<std::size_t> added;
    double objective = 0.0;
    double wall_time_ms = 0.0;
};

// Ordered record of one selection run; step 0 is the initial refit.
struct SelectionTrace {
    Strategy strategy = Strategy::greedy;
    double epsilon = 0.0;
    std::size_t m = 1;
    std::uint64_t seed = 0;
    std::vector<std::size_t> initial_subset;
    double initial_objective = 0.0;
    double initial_wall_time_ms = 0.0;
    std::vector<SelectionStep> steps;
    bool exhausted = false;
    std::string objective_label;

    std::size_t cumulative_points(std::size_t step_index) const {
        return initial_subset.size() + m * step_index;
    }
};

// CSV: step, added_indices (semicolon-joined), objective, cumulative_points,
// wall_time_ms. manifest_ref, when nonempty, is emitted as a '#' header line.
void trace_to_csv(const SelectionTrace& trace, std::ostream& os, const std::string& manifest_ref = {});
nlohmann::json trace_to_json(const SelectionTrace& trace);

struct SelectOptions {
    std::size_t m = 1;
    std::size_t iterations = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    loss::FitConfig fit;
    // When > 0, each greedy scan scores a seeded uniform sub-pool of this
    // size instead of every unchosen point. Off by default; consumes RNG.
    std::size_t scan_cap = 0;
};

// Algorithm 2: refit, then add m points per iteration -- random with
// probability epsilon, otherwise the top-m residual scores against the
// validation set (single ranking pass per iteration, ties to lowest index).
SelectionTrace epsilon_greedy_select(const loss::LossKernel& kernel, const Dataset& pool,
                                     const Dataset& validation,
                                     std::vector<std::size_t> initial_subset,
                                     const Objective& objective, const SelectOptions& opts);

// Uniform without-replacement baseline with the same bookkeeping.
SelectionTrace random_select(const loss::LossKernel& kernel, const Dataset& pool,
                             std::vector<std::size_t> initial_subset, const Objective& objective,
                             const SelectOptions& opts);

inline constexpr std::size_t kDefaultRefitBudget = 1'000'000;

struct ExactGreedyOptions {
    std::size_t budget_cap = kDefaultRefitBudget;
    loss::FitConfig fit;
};

struct ExactGreedyResult {
    std::vector<std::size_t> chosen;
    loss::FittedModel refitted;
};

// One candidate m-set's exact retraining outcome.
struct CandidateRefit {
    std::vector<std::size_t> combo;
    double objective = 0.0;
};

// Exact retraining of every C(remaining, m) addition, lexicographic order.
// Throws BudgetError when the enumeration exceeds budget_cap refits.
std::vector<CandidateRefit> enumerate_refits(const loss::LossKernel& kernel, const Dataset& pool,
                                             std::span<const std::size_t> subset,
                                             const Objective& objective, std::size_t m,
                                             const ExactGreedyOptions& opts = {});

// Algorithm 1's one step: the addition minimizing the objective under exact
// retraining; ties broken by lowest index tuple.
ExactGreedyResult exact_greedy_step(const loss::LossKernel& kernel, const Dataset& pool,
                                    std::span<const std::size_t> subset, const Objective& objective,
                                    std::size_t m, const ExactGreedyOptions& opts = {});

struct DeltaOptions {
    std::size_t budget_cap = kDefaultRefitBudget;
    std::size_t mc_draws = 1000;
    std::uint64_t seed = 0;
    loss::FitConfig fit;
};

// One-step gain diagnostics from exact retraining:
//   delta_prime        = R(greedy) - mean over candidate additions
//   delta_double_prime = R(greedy) - R(worst addition)
struct DeltaReport {
    double delta_prime = 0.0;
    double delta_double_prime = 0.0;
    std::size_t subset_size = 0; // M
    std::size_t m = 1;
    bool exact = true;                  // false when Monte-Carlo sampled
    std::optional<double> mc_std_error; // set in sampled mode
};

DeltaReport compute_deltas(const loss::LossKernel& kernel, const Dataset& pool,
                           std::span<const std::size_t> subset, const Objective& objective,
                           std::size_t m, const DeltaOptions& opts = {});

} // namespace subsel::select

#endif
