#include "subsel/verify.hpp"

#include <algorithm>
#include <cmath>

#include "subsel/dataio.hpp"
#include "subsel/influence.hpp"
#include "subsel/rng.hpp"
#include "subsel/selector.hpp"

namespace subsel::verify {

namespace {

// Constant-curvature squared instances: every point shares the feature value
// c, so the Hessian is the same before and after any addition and the first
// order update must reproduce the exact refit.
Dataset constant_curvature_instance(Rng& rng, std::size_t n, double c) {
    Dataset data;
    data.task = Task::regression;
    data.features = numkit::DenseMatrix(n, 1);
    data.targets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        data.features(i, 0) = c;
        data.targets[i] = rng.normal(0.0, 3.0);
    }
    return data;
}

// Logistic draws from a fixed distribution: x ~ N(0, I), P(y=1) = sigmoid(x.beta).
Dataset logistic_instance(Rng& rng, std::size_t n, std::size_t d) {
    Dataset data;
    data.task = Task::classification;
    data.num_classes = 2;
    data.features = numkit::DenseMatrix(n, d);
    data.targets.resize(n);
    std::vector<double> beta(d);
    for (std::size_t j = 0; j < d; ++j) beta[j] = (j % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.25 * static_cast<double>(j));
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double x = rng.normal();
            data.features(i, j) = x;
            s += x * beta[j];
        }
        const double p = 1.0 / (1.0 + std::exp(-s));
        data.targets[i] = rng.uniform() < p ? 1.0 : 0.0;
    }
    return data;
}

std::vector<std::size_t> iota_idx(std::size_t n, std::size_t start = 0) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = start + i;
    return idx;
}

loss::FitConfig tight_fit() {
    loss::FitConfig cfg;
    cfg.tol = 1e-11; // the Newton floor in doubles sits just above 1e-12
    return cfg;
}

PropertyResult quadratic_exactness(bool quick) {
    const std::size_t instances = quick ? 25 : 100;
    Rng rng(20240521);
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        Rng local = rng.fork(i);
        const std::size_t m_base = 10 + local.below(191); // M in [10, 200]
        const std::size_t m_add = 1 + local.below(10);    // m in [1, 10]
        const double c = local.uniform(0.5, 2.0);
        Dataset data = constant_curvature_instance(local, m_base + m_add, c);

        auto kernel = loss::squared_kernel(1, 0.0);
        const auto base_idx = iota_idx(m_base);
        auto model = loss::fit_erm(kernel, data, base_idx, {}, tight_fit());

        std::vector<Datapoint> added;
        for (std::size_t j = 0; j < m_add; ++j) added.push_back(data.point(m_base + j));
        auto predicted = influence::first_order_update(model, added, m_base);

        const auto all_idx = iota_idx(m_base + m_add);
        auto refit = loss::fit_erm(kernel, data, all_idx, model.theta, tight_fit());

        for (std::size_t j = 0; j < predicted.size(); ++j)
            worst = std::max(worst, std::fabs(predicted[j] - refit.theta[j]));
    }
    PropertyResult r;
    r.name = "quadratic_exactness";
    r.pass = worst <= 1e-9;
    r.stats = {{"instances", instances}, {"max_abs_error", worst}, {"tolerance", 1e-9}};
    return r;
}

PropertyResult lemma1_error_slope_prop(bool quick) {
    const std::vector<std::size_t> sizes = quick ? std::vector<std::size_t>{50, 100, 200}
                                                 : std::vector<std::size_t>{50, 100, 200, 400};
    const std::size_t probes = quick ? 20 : 50;
    const std::size_t replicates = quick ? 2 : 4;
    auto errors = lemma1_errors(sizes, probes, replicates, 777);
    const double slope = loglog_slope(sizes, errors);
    PropertyResult r;
    r.name = "lemma1_error_slope";
    r.pass = slope <= -1.6;
    r.stats = {{"sizes", sizes},
               {"mean_errors", errors},
               {"slope", slope},
               {"threshold", -1.6},
               {"probes", probes}};
    return r;
}

PropertyResult batch_additivity(bool quick) {
    const std::size_t instances = quick ? 25 : 100;
    Rng rng(90210);
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        Rng local = rng.fork(i);
        const std::size_t d = 2 + local.below(5);
        const std::size_t m_base = 20 + local.below(80);
        const std::size_t m_add = 1 + local.below(10);

        Dataset data;
        loss::LossKernel kernel;
        switch (i % 3) {
        case 0: {
            data = logistic_instance(local, m_base + m_add, d);
            kernel = loss::logistic_kernel(d, 1e-3);
            break;
        }
        case 1: {
            dataio::SyntheticParams p;
            data = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, m_base + m_add,
                                         d, local.next_u64(), p);
            kernel = loss::squared_kernel(d, 1e-3);
            break;
        }
        default: {
            dataio::SyntheticParams p;
            p.num_classes = 3;
            data = dataio::gen_synthetic(dataio::SyntheticKind::multiclass_blobs, m_base + m_add, d,
                                         local.next_u64(), p);
            kernel = loss::softmax_kernel(d, 3, 1e-3);
            break;
        }
        }

        auto model = loss::fit_erm(kernel, data, iota_idx(m_base), {}, tight_fit());
        std::vector<Datapoint> added;
        for (std::size_t j = 0; j < m_add; ++j) added.push_back(data.point(m_base + j));

        auto updated = influence::first_order_update(model, added, m_base);
        std::vector<double> lhs(updated.size());
        const double scale = static_cast<double>(m_base + m_add);
        for (std::size_t j = 0; j < lhs.size(); ++j)
            lhs[j] = scale * (updated[j] - model.theta[j]);

        std::vector<double> rhs(updated.size(), 0.0);
        for (const auto& z : added) {
            auto b = influence::bif_single(model, z);
            numkit::axpy(1.0, b, rhs);
        }
        for (std::size_t j = 0; j < lhs.size(); ++j)
            worst = std::max(worst, std::fabs(lhs[j] - rhs[j]));
    }
    PropertyResult r;
    r.name = "batch_additivity";
    r.pass = worst <= 1e-10;
    r.stats = {{"instances", instances}, {"max_abs_error", worst}, {"tolerance", 1e-10}};
    return r;
}

PropertyResult oracle_agreement(bool quick) {
    const std::size_t instances = quick ? 25 : 100;
    const std::size_t m_base = 60;
    const std::size_t n_pool = 30;
    const std::size_t d = 5;

    std::size_t top1 = 0;
    std::size_t top3 = 0;
    Rng rng(4242);
    for (std::size_t i = 0; i < instances; ++i) {
        Rng local = rng.fork(i);
        dataio::SyntheticParams p;
        p.separation = 2.0;
        p.label_noise = 0.15;
        Dataset pool = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, m_base + n_pool,
                                             d, local.next_u64(), p);
        Dataset validation = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, 40, d,
                                                   local.next_u64(), p);

        // strong L2 keeps the first-order ranking aligned with exact refits
        auto kernel = loss::logistic_kernel(d, 0.5);
        const auto subset = iota_idx(m_base);
        auto model = loss::fit_erm(kernel, pool, subset, {}, tight_fit());

        // Algorithm 2's pick: argmax residual score, ties to lowest index.
        const auto candidates = iota_idx(n_pool, m_base);
        auto scores = influence::residual_scores(model, validation, candidates);
        std::size_t approx_pick = scores.front().candidate_index;
        double best_score = scores.front().score;
        for (const auto& s : scores) {
            if (s.score > best_score) {
                best_score = s.score;
                approx_pick = s.candidate_index;
            }
        }

        // Algorithm 1's ranking by exact retraining.
        select::ExactGreedyOptions ex;
        ex.fit = tight_fit();
        auto objective = select::validation_mean_loss(validation);
        auto refits = select::enumerate_refits(kernel, pool, subset, objective, 1, ex);
        std::sort(refits.begin(), refits.end(), [](const auto& a, const auto& b) {
            if (a.objective != b.objective) return a.objective < b.objective;
            return a.combo < b.combo;
        });
        if (refits[0].combo[0] == approx_pick) ++top1;
        for (std::size_t k = 0; k < 3 && k < refits.size(); ++k) {
            if (refits[k].combo[0] == approx_pick) {
                ++top3;
                break;
            }
        }
    }
    const double frac1 = static_cast<double>(top1) / static_cast<double>(instances);
    const double frac3 = static_cast<double>(top3) / static_cast<double>(instances);
    PropertyResult r;
    r.name = "oracle_agreement";
    r.pass = frac1 >= 0.90 && frac3 >= 0.99;
    r.stats = {{"instances", instances},
               {"top1_agreement", frac1},
               {"top3_agreement", frac3},
               {"top1_threshold", 0.90},
               {"top3_threshold", 0.99}};
    return r;
}

PropertyResult delta_ordering(bool quick) {
    const std::size_t instances = quick ? 25 : 100;
    Rng rng(1331);
    bool ok = true;
    double worst_prime = 0.0;
    double worst_gap = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        Rng local = rng.fork(i);
        const std::size_t d = 3;
        const std::size_t m_base = 20;
        const std::size_t n_pool = 10;
        const std::size_t m = (i % 4 == 3) ? 2 : 1;

        Dataset pool;
        loss::LossKernel kernel;
        if (i % 2 == 0) {
            dataio::SyntheticParams p;
            pool = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, m_base + n_pool,
                                         d, local.next_u64(), p);
            kernel = loss::squared_kernel(d, 1e-3);
        } else {
            pool = logistic_instance(local, m_base + n_pool, d);
            kernel = loss::logistic_kernel(d, 1e-3);
        }
        Dataset validation = pool.task == Task::regression
                                 ? dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression,
                                                         20, d, local.next_u64(), {})
                                 : logistic_instance(local, 20, d);

        select::DeltaOptions opts;
        opts.fit = tight_fit();
        auto objective = select::validation_mean_loss(validation);
        auto report =
            select::compute_deltas(kernel, pool, iota_idx(m_base), objective, m, opts);
        if (!(report.delta_double_prime <= report.delta_prime && report.delta_prime <= 0.0)) {
            ok = false;
        }
        worst_prime = std::max(worst_prime, report.delta_prime);
        worst_gap = std::max(worst_gap, report.delta_double_prime - report.delta_prime);
    }
    PropertyResult r;
    r.name = "delta_ordering";
    r.pass = ok;
    r.stats = {{"instances", instances},
               {"max_delta_prime", worst_prime},
               {"max_ordering_violation", worst_gap}};
    return r;
}

PropertyResult grad_finite_diff(bool quick) {
    const std::size_t draws = quick ? 30 : 100;
    const std::size_t d = 4;
    Rng rng(555);
    double worst = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        Rng local = rng.fork(i);
        loss::LossKernel kernel;
        double y;
        switch (i % 3) {
        case 0:
            kernel = loss::squared_kernel(d, local.uniform(0.0, 0.5));
            y = local.normal(0.0, 2.0);
            break;
        case 1:
            kernel = loss::logistic_kernel(d, local.uniform(0.0, 0.5));
            y = local.bernoulli(0.5) ? 1.0 : 0.0;
            break;
        default:
            kernel = loss::softmax_kernel(d, 3, local.uniform(0.0, 0.5));
            y = static_cast<double>(local.below(3));
            break;
        }
        std::vector<double> x(d), theta(kernel.dim());
        for (double& v : x) v = local.normal();
        for (double& v : theta) v = local.normal();
        Datapoint z{x, y};

        auto g = loss::grad(kernel, z, theta);
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double h = 1e-5 * (1.0 + std::fabs(theta[j]));
            std::vector<double> tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            const double fd = (loss::loss(kernel, z, tp) - loss::loss(kernel, z, tm)) / (2.0 * h);
            const double rel = std::fabs(g[j] - fd) / (1.0 + std::fabs(g[j]));
            worst = std::max(worst, rel);
        }
    }
    PropertyResult r;
    r.name = "grad_finite_diff";
    r.pass = worst <= 1e-5;
    r.stats = {{"draws", draws}, {"max_rel_error", worst}, {"tolerance", 1e-5}};
    return r;
}

PropertyResult hessvec_finite_diff(bool quick) {
    const std::size_t draws = quick ? 15 : 40;
    const std::size_t d = 4;
    Rng rng(808);
    double worst = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
        Rng local = rng.fork(i);
        loss::LossKernel kernel;
        Dataset data;
        const std::size_t n = 20;
        switch (i % 3) {
        case 0: {
            data = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, n, d,
                                         local.next_u64(), {});
            kernel = loss::squared_kernel(d, 1e-3);
            break;
        }
        case 1: {
            data = logistic_instance(local, n, d);
            kernel = loss::logistic_kernel(d, 1e-3);
            break;
        }
        default: {
            dataio::SyntheticParams p;
            p.num_classes = 3;
            data = dataio::gen_synthetic(dataio::SyntheticKind::multiclass_blobs, n, d,
                                         local.next_u64(), p);
            kernel = loss::softmax_kernel(d, 3, 1e-3);
            break;
        }
        }
        const auto subset = iota_idx(n);
        std::vector<double> theta(kernel.dim()), v(kernel.dim());
        for (double& t : theta) t = local.normal(0.0, 0.5);
        for (double& t : v) t = local.normal();

        auto hv = loss::hess_vec(kernel, data, subset, theta, v);

        const double h = 1e-5;
        std::vector<double> tp = theta, tm = theta;
        numkit::axpy(h, v, tp);
        numkit::axpy(-h, v, tm);
        auto gp = loss::subset_gradient(kernel, data, subset, tp);
        auto gm = loss::subset_gradient(kernel, data, subset, tm);
        std::vector<double> fd(hv.size());
        for (std::size_t j = 0; j < fd.size(); ++j) fd[j] = (gp[j] - gm[j]) / (2.0 * h);

        std::vector<double> diff(hv.size());
        for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = hv[j] - fd[j];
        const double err = numkit::norm2(diff) / std::max(numkit::norm2(v), 1e-12);
        worst = std::max(worst, err);
    }
    PropertyResult r;
    r.name = "hessvec_finite_diff";
    r.pass = worst <= 1e-4;
    r.stats = {{"draws", draws}, {"max_scaled_error", worst}, {"tolerance", 1e-4}};
    return r;
}

PropertyResult cg_vs_cholesky(bool quick) {
    const std::size_t instances = quick ? 10 : 25;
    Rng rng(31415);
    double worst = 0.0;
    for (std::size_t i = 0; i < instances; ++i) {
        Rng local = rng.fork(i);
        const std::size_t n = 1 + local.below(50);
        numkit::DenseMatrix m(n, n);
        for (double& e : m.entries()) e = local.normal();
        numkit::DenseMatrix a(n, n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += m(k, r) * m(k, c);
                a(r, c) = s + (r == c ? 1.0 : 0.0);
            }
        }
        std::vector<double> b(n);
        for (double& v : b) v = local.normal();

        auto direct = numkit::cholesky_solve(a, b);
        auto cg = numkit::cg_solve(numkit::LinearOperator::from_matrix(a), b);
        for (std::size_t j = 0; j < n; ++j)
            worst = std::max(worst, std::fabs(direct[j] - cg.x[j]));
    }
    PropertyResult r;
    r.name = "cg_vs_cholesky";
    r.pass = worst <= 1e-6;
    r.stats = {{"instances", instances}, {"max_abs_diff", worst}, {"tolerance", 1e-6}};
    return r;
}

} // namespace

std::vector<double> lemma1_errors(const std::vector<std::size_t>& sizes, std::size_t probes,
                                  std::size_t replicates, std::uint64_t seed) {
    std::vector<double> errors;
    errors.reserve(sizes.size());
    const std::size_t d = 5;
    auto kernel = loss::logistic_kernel(d, 1e-3);
    Rng rng(seed);

    for (std::size_t m_base : sizes) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t rep = 0; rep < replicates; ++rep) {
            Rng local = rng.fork(m_base * 131 + rep);
            Dataset data = logistic_instance(local, m_base + probes, d);
            const auto base_idx = iota_idx(m_base);
            auto model = loss::fit_erm(kernel, data, base_idx, {}, tight_fit());

            auto extended = base_idx;
            extended.push_back(0);
            for (std::size_t pidx = 0; pidx < probes; ++pidx) {
                const std::size_t row = m_base + pidx;
                const Datapoint z[] = {data.point(row)};
                auto predicted = influence::first_order_update(model, z, m_base);

                extended.back() = row;
                auto refit = loss::fit_erm(kernel, data, extended, model.theta, tight_fit());

                std::vector<double> diff(predicted.size());
                for (std::size_t j = 0; j < diff.size(); ++j)
                    diff[j] = predicted[j] - refit.theta[j];
                total += numkit::norm2(diff);
                ++count;
            }
        }
        errors.push_back(total / static_cast<double>(count));
    }
    return errors;
}

double loglog_slope(const std::vector<std::size_t>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("loglog_slope: need matching series of length >= 2");
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(static_cast<double>(x[i]));
        const double ly = std::log(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<std::string> property_names() {
    return {"quadratic_exactness", "lemma1_error_slope", "batch_additivity", "oracle_agreement",
            "delta_ordering",      "grad_finite_diff",   "hessvec_finite_diff", "cg_vs_cholesky"};
}

PropertyResult run_property(const std::string& name, bool quick) {
    if (name == "quadratic_exactness") return quadratic_exactness(quick);
    if (name == "lemma1_error_slope") return lemma1_error_slope_prop(quick);
    if (name == "batch_additivity") return batch_additivity(quick);
    if (name == "oracle_agreement") return oracle_agreement(quick);
    if (name == "delta_ordering") return delta_ordering(quick);
    if (name == "grad_finite_diff") return grad_finite_diff(quick);
    if (name == "hessvec_finite_diff") return hessvec_finite_diff(quick);
    if (name == "cg_vs_cholesky") return cg_vs_cholesky(quick);
    throw ConfigError("unknown verification property '" + name + "'");
}

std::vector<PropertyResult> run_properties(const std::vector<std::string>& only, bool quick) {
    std::vector<std::string> names = only.empty() ? property_names() : only;
    std::vector<PropertyResult> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(run_property(n, quick));
    return out;
}

} // namespace subsel::verify
