#ifndef SUBSEL_TUNER_HPP
#define SUBSEL_TUNER_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "subsel/dataset.hpp"
#include "subsel/losskernels.hpp"
#include "subsel/rng.hpp"

namespace subsel::tune {

struct Dimension {
    enum class Kind { integer, real, log_real, categorical, boolean };
    std::string name;
    Kind kind = Kind::real;
    long long imin = 0, imax = 0;    // integer
    double rmin = 0.0, rmax = 0.0;   // real / log_real
    std::vector<std::string> categories;
};

struct SearchSpace {
    std::vector<Dimension> dims;
    void validate() const;
};

// Independent uniform draw per dimension (log-uniform for log ranges).
nlohmann::json sample_config(const SearchSpace& space, Rng& rng);

// Scores one configuration trained on the given subset (lower is better).
using ConfigEvaluator =
    std::function<double(const nlohmann::json& config, std::span<const std::size_t> subset)>;

// Nested training subsets keyed by resource (= subset size).
class SubsetProvider {
public:
    virtual ~SubsetProvider() = default;
    virtual std::span<const std::size_t> subset(std::size_t resource) = 0;
};

// Seeded permutation prefixes.
class RandomSubsets : public SubsetProvider {
public:
    RandomSubsets(std::size_t pool_size, std::uint64_t seed);
    std::span<const std::size_t> subset(std::size_t resource) override;

private:
    std::vector<std::size_t> order_;
};

// Greedy influence growth with the differentiable proxy kernel; the order is
// extended lazily and prefixes are reused, so subsets nest across resources.
class InfluenceSubsets : public SubsetProvider {
public:
    InfluenceSubsets(const Dataset& pool, const Dataset& validation,
                     const loss::LossKernel& kernel, std::size_t initial_count,
                     std::uint64_t seed, double epsilon = 0.0, loss::FitConfig fit = {});
    std::span<const std::size_t> subset(std::size_t resource) override;

private:
    void grow_to(std::size_t resource);

    const Dataset* pool_;
    const Dataset* validation_;
    loss::LossKernel kernel_;
    loss::FitConfig fit_;
    double epsilon_;
    subsel::Rng rng_;
    std::vector<std::size_t> order_;
    std::vector<char> chosen_;
    std::vector<double> warm_theta_;
};

struct ShObservation {
    std::size_t rung = 0;
    std::size_t config_index = 0; // into the bracket's config list
    std::size_t resource = 0;
    double score = 0.0;
    double wall_time_ms = 0.0;
};

struct ShOutcome {
    std::vector<std::size_t> survivors; // indices into the input config list
    std::vector<double> scores;         // last-rung scores, aligned with survivors
};

// One bracket: evaluate every live config at each rung resource, keep the
// ceil(n/eta) best (ties to lowest config index). Failing evaluations score
// +infinity and the run continues.
ShOutcome successive_halving(const std::vector<nlohmann::json>& configs,
                             const std::vector<std::size_t>& schedule, std::size_t eta,
                             const ConfigEvaluator& evaluate, SubsetProvider& subsets,
                             const std::function<void(const ShObservation&)>& observer = {});

enum class Subsampler { random, influence };
std::string subsampler_name(Subsampler s);

struct TunerConfig {
    std::vector<std::size_t> eta_cycle{2, 3, 4, 5};
    std::size_t max_resource = 0; // required; <= training size
    std::size_t min_resource = 0; // 0 -> max(feature dim, 10)
    std::size_t iterations = 8;   // Hyperband iterations; eta cycles across them
    Subsampler subsampler = Subsampler::random;
    double epsilon = 0.0; // influence grower's random-step probability
    std::uint64_t seed = 0;
};

struct TunerEvaluation {
    std::size_t hyperband_iter = 0;
    std::size_t bracket = 0; // the s index
    std::size_t rung = 0;
    nlohmann::json config;
    std::size_t resource = 0;
    double score = 0.0;
    double wall_time_ms = 0.0;
};

struct TunerTrace {
    std::string subsampler_label;
    std::vector<TunerEvaluation> evaluations;
    std::vector<double> incumbent; // best full-resource score after each iteration
};

// CSV: hyperband_iter, bracket, rung, config_json (quoted), resource, score,
// wall_time_ms.
void tuner_trace_to_csv(const TunerTrace& trace, std::ostream& os,
                        const std::string& manifest_ref = {});
nlohmann::json tuner_trace_to_json(const TunerTrace& trace);

// Hyperband over the standard bracket schedule: per iteration with parameter
// eta, brackets s = s_max..0 run n = ceil((s_max+1)/(s+1) * eta^s) fresh
// configs starting at resource max_resource * eta^{-s}. Rung subsets come
// from the provider and are shared by every config in the rung.
TunerTrace hyperband_run(const SearchSpace& space, const Dataset& train,
                         const Dataset& validation, const ConfigEvaluator& evaluate,
                         const TunerConfig& cfg);

} // namespace subsel::tune

#endif
