#include "subsel/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "subsel/influence.hpp"
#include "subsel/selector.hpp"

namespace subsel::tune {

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

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace

void SearchSpace::validate() const {
    if (dims.empty()) throw ConfigError("search space: needs at least one dimension");
    for (const auto& d : dims) {
        if (d.name.empty()) throw ConfigError("search space: unnamed dimension");
        switch (d.kind) {
        case Dimension::Kind::integer:
            if (d.imin > d.imax) throw ConfigError("search space: empty integer range for " + d.name);
            break;
        case Dimension::Kind::real:
            if (!(d.rmin <= d.rmax)) throw ConfigError("search space: empty real range for " + d.name);
            break;
        case Dimension::Kind::log_real:
            if (!(d.rmin <= d.rmax) || d.rmin <= 0.0)
                throw ConfigError("search space: log range must be positive for " + d.name);
            break;
        case Dimension::Kind::categorical:
            if (d.categories.empty())
                throw ConfigError("search space: empty categorical set for " + d.name);
            break;
        case Dimension::Kind::boolean: break;
        }
    }
}

nlohmann::json sample_config(const SearchSpace& space, Rng& rng) {
    space.validate();
    nlohmann::json config = nlohmann::json::object();
    for (const auto& d : space.dims) {
        switch (d.kind) {
        case Dimension::Kind::integer: {
            const auto span = static_cast<std::uint64_t>(d.imax - d.imin) + 1;
            config[d.name] = d.imin + static_cast<long long>(rng.below(span));
            break;
        }
        case Dimension::Kind::real:
            config[d.name] = rng.uniform(d.rmin, d.rmax);
            break;
        case Dimension::Kind::log_real:
            config[d.name] = std::exp(rng.uniform(std::log(d.rmin), std::log(d.rmax)));
            break;
        case Dimension::Kind::categorical:
            config[d.name] = d.categories[rng.below(d.categories.size())];
            break;
        case Dimension::Kind::boolean:
            config[d.name] = rng.below(2) == 1;
            break;
        }
    }
    return config;
}

RandomSubsets::RandomSubsets(std::size_t pool_size, std::uint64_t seed) {
    order_.resize(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) order_[i] = i;
    Rng rng(seed);
    rng.shuffle(order_);
}

std::span<const std::size_t> RandomSubsets::subset(std::size_t resource) {
    if (resource > order_.size())
        throw ConfigError("random subsets: resource exceeds pool size");
    return {order_.data(), resource};
}

InfluenceSubsets::InfluenceSubsets(const Dataset& pool, const Dataset& validation,
                                   const loss::LossKernel& kernel, std::size_t initial_count,
                                   std::uint64_t seed, double epsilon, loss::FitConfig fit)
    : pool_(&pool), validation_(&validation), kernel_(kernel), fit_(fit), epsilon_(epsilon),
      rng_(seed) {
    if (initial_count == 0 || initial_count > pool.n())
        throw ConfigError("influence subsets: bad initial count");
    chosen_.assign(pool.n(), 0);
    order_ = rng_.sample_without_replacement(pool.n(), initial_count);
    for (std::size_t idx : order_) chosen_[idx] = 1;
}

void InfluenceSubsets::grow_to(std::size_t resource) {
    if (resource > pool_->n())
        throw ConfigError("influence subsets: resource exceeds pool size");
    while (order_.size() < resource) {
        auto model = loss::fit_erm(kernel_, *pool_, order_, warm_theta_, fit_);
        warm_theta_ = model.theta;

        std::vector<std::size_t> unchosen;
        unchosen.reserve(pool_->n() - order_.size());
        for (std::size_t i = 0; i < pool_->n(); ++i)
            if (!chosen_[i]) unchosen.push_back(i);

        std::size_t pick;
        if (epsilon_ > 0.0 && rng_.bernoulli(epsilon_)) {
            pick = unchosen[rng_.below(unchosen.size())];
        } else {
            auto adjoint = influence::validation_adjoint(model, *validation_);
            auto scores = influence::residual_scores_with_adjoint(model, adjoint, unchosen);
            const influence::ResidualScore* best = &scores.front();
            for (const auto& s : scores) {
                if (s.score > best->score) best = &s;
            }
            pick = best->candidate_index;
        }
        chosen_[pick] = 1;
        order_.push_back(pick);
    }
}

std::span<const std::size_t> InfluenceSubsets::subset(std::size_t resource) {
    grow_to(resource);
    return {order_.data(), resource};
}

ShOutcome successive_halving(const std::vector<nlohmann::json>& configs,
                             const std::vector<std::size_t>& schedule, std::size_t eta,
                             const ConfigEvaluator& evaluate, SubsetProvider& subsets,
                             const std::function<void(const ShObservation&)>& observer) {
    if (configs.empty()) throw ConfigError("successive_halving: empty config list");
    if (eta < 2) throw ConfigError("successive_halving: eta must be >= 2");
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i] <= schedule[i - 1])
            throw ConfigError("successive_halving: schedule must be strictly increasing");
    }

    std::vector<std::size_t> live(configs.size());
    for (std::size_t i = 0; i < live.size(); ++i) live[i] = i;
    std::vector<double> scores(configs.size(), 0.0);

    for (std::size_t rung = 0; rung < schedule.size(); ++rung) {
        const std::size_t resource = schedule[rung];
        auto sub = subsets.subset(resource);
        for (std::size_t id : live) {
            const auto t0 = Clock::now();
            double score;
            try {
                score = evaluate(configs[id], sub);
                if (!std::isfinite(score)) score = std::numeric_limits<double>::infinity();
            } catch (const std::exception&) {
                score = std::numeric_limits<double>::infinity();
            }
            scores[id] = score;
            if (observer) observer({rung, id, resource, score, ms_since(t0)});
        }
        const auto keep =
            static_cast<std::size_t>(std::ceil(static_cast<double>(live.size()) / static_cast<double>(eta)));
        std::sort(live.begin(), live.end(), [&scores](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] < scores[b];
            return a < b;
        });
        live.resize(keep);
    }

    ShOutcome out;
    out.survivors = live;
    for (std::size_t id : live) out.scores.push_back(scores[id]);
    return out;
}

std::string subsampler_name(Subsampler s) {
    return s == Subsampler::random ? "random" : "influence";
}

void tuner_trace_to_csv(const TunerTrace& trace, std::ostream& os,
                        const std::string& manifest_ref) {
    if (!manifest_ref.empty()) os << "# manifest=" << manifest_ref << "\n";
    os << "hyperband_iter,bracket,rung,config_json,resource,score,wall_time_ms\n";
    for (const auto& e : trace.evaluations) {
        os << e.hyperband_iter << "," << e.bracket << "," << e.rung << ","
           << csv_quote(e.config.dump()) << "," << e.resource << "," << format_double(e.score)
           << "," << format_double(e.wall_time_ms) << "\n";
    }
}

nlohmann::json tuner_trace_to_json(const TunerTrace& trace) {
    nlohmann::json evals = nlohmann::json::array();
    for (const auto& e : trace.evaluations) {
        evals.push_back({{"hyperband_iter", e.hyperband_iter},
                         {"bracket", e.bracket},
                         {"rung", e.rung},
                         {"config", e.config},
                         {"resource", e.resource},
                         {"score", e.score},
                         {"wall_time_ms", e.wall_time_ms}});
    }
    return {{"subsampler", trace.subsampler_label},
            {"evaluations", evals},
            {"incumbent", trace.incumbent}};
}

TunerTrace hyperband_run(const SearchSpace& space, const Dataset& train,
                         const Dataset& validation, const ConfigEvaluator& evaluate,
                         const TunerConfig& cfg) {
    space.validate();
    if (cfg.max_resource == 0 || cfg.max_resource > train.n())
        throw ConfigError("hyperband: max_resource must lie in [1, training size]");
    const std::size_t min_resource =
        cfg.min_resource > 0 ? cfg.min_resource : std::max<std::size_t>(train.dim(), 10);
    if (min_resource > cfg.max_resource)
        throw ConfigError("hyperband: resource floor exceeds max_resource");
    if (cfg.eta_cycle.empty()) throw ConfigError("hyperband: empty eta cycle");
    for (std::size_t eta : cfg.eta_cycle)
        if (eta < 2) throw ConfigError("hyperband: every eta must be >= 2");

    std::unique_ptr<SubsetProvider> subsets;
    if (cfg.subsampler == Subsampler::random) {
        subsets = std::make_unique<RandomSubsets>(train.n(), mix64(cfg.seed ^ 0x5eedu));
    } else {
        subsets = std::make_unique<InfluenceSubsets>(train, validation, loss::kernel_for(train),
                                                     min_resource, mix64(cfg.seed ^ 0x5eedu),
                                                     cfg.epsilon);
    }

    Rng config_rng(cfg.seed); // shared stream: arms sample identical configs
    TunerTrace trace;
    trace.subsampler_label = subsampler_name(cfg.subsampler);

    double best_full = std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
        const std::size_t eta = cfg.eta_cycle[iter % cfg.eta_cycle.size()];
        const double ratio =
            static_cast<double>(cfg.max_resource) / static_cast<double>(min_resource);
        const auto s_max = static_cast<std::size_t>(
            std::floor(std::log(ratio) / std::log(static_cast<double>(eta)) + 1e-12));

        for (std::size_t s = s_max + 1; s-- > 0;) {
            const double n_real = (static_cast<double>(s_max) + 1.0) / (static_cast<double>(s) + 1.0) *
                                  std::pow(static_cast<double>(eta), static_cast<double>(s));
            const auto n_configs = static_cast<std::size_t>(std::ceil(n_real - 1e-12));

            std::vector<nlohmann::json> configs;
            configs.reserve(n_configs);
            for (std::size_t i = 0; i < n_configs; ++i)
                configs.push_back(sample_config(space, config_rng));

            std::vector<std::size_t> schedule;
            for (std::size_t i = 0; i <= s; ++i) {
                const double r = static_cast<double>(cfg.max_resource) *
                                 std::pow(static_cast<double>(eta),
                                          static_cast<double>(i) - static_cast<double>(s));
                auto ri = static_cast<std::size_t>(std::llround(r));
                ri = std::clamp(ri, min_resource, cfg.max_resource);
                if (!schedule.empty() && ri <= schedule.back()) ri = schedule.back() + 1;
                ri = std::min(ri, cfg.max_resource);
                if (schedule.empty() || ri > schedule.back()) schedule.push_back(ri);
            }

            successive_halving(configs, schedule, eta, evaluate, *subsets,
                               [&](const ShObservation& ob) {
                                   trace.evaluations.push_back({iter, s, ob.rung,
                                                                configs[ob.config_index],
                                                                ob.resource, ob.score,
                                                                ob.wall_time_ms});
                                   if (ob.resource == cfg.max_resource)
                                       best_full = std::min(best_full, ob.score);
                               });
        }
        trace.incumbent.push_back(best_full);
    }
    return trace;
}

} // namespace subsel::tune
