#include "subsel/losskernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace subsel::loss {

namespace {

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// log(1 + exp(-s)) without overflow
double log1p_exp_neg(double s) {
    if (s >= 0.0) return std::log1p(std::exp(-s));
    return -s + std::log1p(std::exp(s));
}

double pm_label(double y) { return y > 0.0 ? 1.0 : -1.0; }

void check_theta(const LossKernel& kernel, std::span<const double> theta) {
    if (theta.size() != kernel.dim()) {
        throw ContractError("loss kernel: theta length does not match kernel dim");
    }
}

void check_point(const LossKernel& kernel, const Datapoint& z) {
    if (z.x.size() != kernel.feature_dim) {
        throw ContractError("loss kernel: datapoint feature length mismatch");
    }
}

// class probabilities for softmax at scores s_c = theta_c . x
void softmax_probs(const LossKernel& kernel, std::span<const double> x,
                   std::span<const double> theta, std::vector<double>& probs) {
    const std::size_t k = kernel.num_classes;
    const std::size_t d = kernel.feature_dim;
    probs.assign(k, 0.0);
    double smax = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        double s = 0.0;
        const double* tc = theta.data() + c * d;
        for (std::size_t j = 0; j < d; ++j) s += tc[j] * x[j];
        probs[c] = s;
        smax = std::max(smax, s);
    }
    double zsum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        probs[c] = std::exp(probs[c] - smax);
        zsum += probs[c];
    }
    for (std::size_t c = 0; c < k; ++c) probs[c] /= zsum;
}

double reg_term(const LossKernel& kernel, std::span<const double> theta) {
    return 0.5 * kernel.lambda * numkit::dot(theta, theta);
}

} // namespace

LossKernel squared_kernel(std::size_t feature_dim, double lambda) {
    return {KernelKind::squared, lambda, feature_dim, 0};
}

LossKernel logistic_kernel(std::size_t feature_dim, double lambda) {
    return {KernelKind::logistic, lambda, feature_dim, 0};
}

LossKernel softmax_kernel(std::size_t feature_dim, std::size_t num_classes, double lambda) {
    if (num_classes < 2) throw ContractError("softmax kernel needs >= 2 classes");
    return {KernelKind::softmax, lambda, feature_dim, num_classes};
}

LossKernel kernel_for(const Dataset& data, double lambda) {
    if (data.task == Task::regression) return squared_kernel(data.dim(), lambda);
    if (data.num_classes == 2) return logistic_kernel(data.dim(), lambda);
    return softmax_kernel(data.dim(), data.num_classes, lambda);
}

double loss(const LossKernel& kernel, const Datapoint& z, std::span<const double> theta) {
    check_theta(kernel, theta);
    check_point(kernel, z);
    switch (kernel.kind) {
    case KernelKind::squared: {
        const double r = numkit::dot(z.x, theta) - z.y;
        return 0.5 * r * r + reg_term(kernel, theta);
    }
    case KernelKind::logistic: {
        const double s = pm_label(z.y) * numkit::dot(z.x, theta);
        return log1p_exp_neg(s) + reg_term(kernel, theta);
    }
    case KernelKind::softmax: {
        std::vector<double> probs;
        softmax_probs(kernel, z.x, theta, probs);
        const auto y = static_cast<std::size_t>(z.y);
        if (y >= kernel.num_classes) throw ContractError("softmax: label out of range");
        const double p = std::max(probs[y], 1e-300);
        return -std::log(p) + reg_term(kernel, theta);
    }
    }
    throw ContractError("unknown kernel kind");
}

void accumulate_plain_grad(const LossKernel& kernel, const Datapoint& z,
                           std::span<const double> theta, std::span<double> out) {
    switch (kernel.kind) {
    case KernelKind::squared: {
        const double r = numkit::dot(z.x, theta) - z.y;
        numkit::axpy(r, z.x, out);
        return;
    }
    case KernelKind::logistic: {
        const double y = pm_label(z.y);
        const double s = y * numkit::dot(z.x, theta);
        numkit::axpy(-sigmoid(-s) * y, z.x, out);
        return;
    }
    case KernelKind::softmax: {
        std::vector<double> probs;
        softmax_probs(kernel, z.x, theta, probs);
        const auto y = static_cast<std::size_t>(z.y);
        const std::size_t d = kernel.feature_dim;
        for (std::size_t c = 0; c < kernel.num_classes; ++c) {
            const double w = probs[c] - (c == y ? 1.0 : 0.0);
            numkit::axpy(w, z.x, out.subspan(c * d, d));
        }
        return;
    }
    }
    throw ContractError("unknown kernel kind");
}

std::vector<double> grad(const LossKernel& kernel, const Datapoint& z,
                         std::span<const double> theta) {
    check_theta(kernel, theta);
    check_point(kernel, z);
    std::vector<double> g(kernel.dim(), 0.0);
    accumulate_plain_grad(kernel, z, theta, g);
    numkit::axpy(kernel.lambda, theta, g);
    return g;
}

std::vector<double> hess_vec(const LossKernel& kernel, const Dataset& data,
                             std::span<const std::size_t> subset, std::span<const double> theta,
                             std::span<const double> v) {
    check_theta(kernel, theta);
    if (subset.empty()) throw ContractError("hess_vec: empty subset");
    if (v.size() != kernel.dim()) throw ContractError("hess_vec: v length mismatch");

    std::vector<double> out(kernel.dim(), 0.0);
    const std::size_t d = kernel.feature_dim;
    std::vector<double> probs, sv;
    for (std::size_t idx : subset) {
        const Datapoint z = data.point(idx);
        switch (kernel.kind) {
        case KernelKind::squared: {
            numkit::axpy(numkit::dot(z.x, v), z.x, out); // (x x^T) v
            break;
        }
        case KernelKind::logistic: {
            const double p = sigmoid(numkit::dot(z.x, theta));
            numkit::axpy(p * (1.0 - p) * numkit::dot(z.x, v), z.x, out);
            break;
        }
        case KernelKind::softmax: {
            softmax_probs(kernel, z.x, theta, probs);
            const std::size_t k = kernel.num_classes;
            sv.assign(k, 0.0); // sv_c = x . v_c
            for (std::size_t c = 0; c < k; ++c)
                sv[c] = numkit::dot(z.x, v.subspan(c * d, d));
            double psv = 0.0;
            for (std::size_t c = 0; c < k; ++c) psv += probs[c] * sv[c];
            // block a: p_a (sv_a - sum_c p_c sv_c) * x
            std::span<double> out_span(out);
            for (std::size_t a = 0; a < k; ++a)
                numkit::axpy(probs[a] * (sv[a] - psv), z.x, out_span.subspan(a * d, d));
            break;
        }
        }
    }
    numkit::scale(1.0 / static_cast<double>(subset.size()), out);
    numkit::axpy(kernel.lambda, v, out);
    return out;
}

numkit::DenseMatrix full_hessian(const LossKernel& kernel, const Dataset& data,
                                 std::span<const std::size_t> subset,
                                 std::span<const double> theta, std::size_t dense_threshold) {
    check_theta(kernel, theta);
    if (subset.empty()) throw ContractError("full_hessian: empty subset");
    const std::size_t n = kernel.dim();
    if (n > dense_threshold) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "full_hessian: dim %zu exceeds dense threshold %zu; use the CG path "
                      "(hess_vec + cg_solve)",
                      n, dense_threshold);
        throw SizeError(msg);
    }

    numkit::DenseMatrix h(n, n);
    const std::size_t d = kernel.feature_dim;
    std::vector<double> probs;
    for (std::size_t idx : subset) {
        const Datapoint z = data.point(idx);
        switch (kernel.kind) {
        case KernelKind::squared: {
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) h(i, j) += z.x[i] * z.x[j];
            break;
        }
        case KernelKind::logistic: {
            const double p = sigmoid(numkit::dot(z.x, theta));
            const double w = p * (1.0 - p);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) h(i, j) += w * z.x[i] * z.x[j];
            break;
        }
        case KernelKind::softmax: {
            softmax_probs(kernel, z.x, theta, probs);
            const std::size_t k = kernel.num_classes;
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    const double w = probs[a] * ((a == b ? 1.0 : 0.0) - probs[b]);
                    if (w == 0.0) continue;
                    for (std::size_t i = 0; i < d; ++i)
                        for (std::size_t j = 0; j < d; ++j)
                            h(a * d + i, b * d + j) += w * z.x[i] * z.x[j];
                }
            }
            break;
        }
        }
    }
    const double inv_m = 1.0 / static_cast<double>(subset.size());
    for (double& e : h.entries()) e *= inv_m;
    for (std::size_t i = 0; i < n; ++i) h(i, i) += kernel.lambda;
    return h;
}

double subset_objective(const LossKernel& kernel, const Dataset& data,
                        std::span<const std::size_t> subset, std::span<const double> theta) {
    if (subset.empty()) throw ContractError("subset_objective: empty subset");
    double total = 0.0;
    for (std::size_t idx : subset) total += loss(kernel, data.point(idx), theta);
    return total / static_cast<double>(subset.size());
}

std::vector<double> subset_gradient(const LossKernel& kernel, const Dataset& data,
                                    std::span<const std::size_t> subset,
                                    std::span<const double> theta) {
    if (subset.empty()) throw ContractError("subset_gradient: empty subset");
    std::vector<double> g(kernel.dim(), 0.0);
    for (std::size_t idx : subset) accumulate_plain_grad(kernel, data.point(idx), theta, g);
    numkit::scale(1.0 / static_cast<double>(subset.size()), g);
    numkit::axpy(kernel.lambda, theta, g);
    return g;
}

std::vector<double> FittedModel::hessian_solve(std::span<const double> b) const {
    if (hessian_mode == HessianMode::direct && hessian_factor) {
        return hessian_factor->solve(b);
    }
    auto res = numkit::cg_solve(hessian_operator(), b, fit_config.cg_tol, fit_config.cg_max_iter);
    return std::move(res.x);
}

numkit::LinearOperator FittedModel::hessian_operator() const {
    const Dataset* d = data;
    LossKernel k = kernel;
    std::vector<std::size_t> sub = subset;
    std::vector<double> th = theta;
    return numkit::LinearOperator{
        k.dim(), [d, k = std::move(k), sub = std::move(sub), th = std::move(th)](
                     std::span<const double> v) { return hess_vec(k, *d, sub, th, v); }};
}

FittedModel fit_erm(const LossKernel& kernel, const Dataset& data,
                    std::span<const std::size_t> subset, std::span<const double> init,
                    const FitConfig& cfg) {
    if (subset.empty()) throw ContractError("fit_erm: empty subset");
    for (std::size_t idx : subset)
        if (idx >= data.n()) throw ContractError("fit_erm: subset index out of range");

    const std::size_t n = kernel.dim();
    std::vector<double> theta(n, 0.0);
    if (!init.empty()) {
        if (init.size() != n) throw ContractError("fit_erm: init length mismatch");
        theta.assign(init.begin(), init.end());
    }

    const bool dense = n <= cfg.dense_threshold;
    double obj = subset_objective(kernel, data, subset, theta);
    std::vector<double> g = subset_gradient(kernel, data, subset, theta);
    double gnorm = numkit::norm2(g);

    std::size_t it = 0;
    while (gnorm > cfg.tol) {
        if (it++ >= cfg.max_iter) {
            char msg[96];
            std::snprintf(msg, sizeof(msg),
                          "fit_erm: Newton did not converge (grad norm %.3e after %zu steps)",
                          gnorm, cfg.max_iter);
            throw ConvergenceError(msg, gnorm);
        }

        std::vector<double> step;
        if (dense) {
            auto h = full_hessian(kernel, data, subset, theta, cfg.dense_threshold);
            step = numkit::CholeskyFactor::compute(h).solve(g);
        } else {
            numkit::LinearOperator op{
                n, [&](std::span<const double> v) { return hess_vec(kernel, data, subset, theta, v); }};
            step = numkit::cg_solve(op, g, cfg.cg_tol, cfg.cg_max_iter).x;
        }

        std::vector<double> trial(n);
        if (gnorm < 1e-6) {
            // quadratic-convergence regime: Armijo decreases fall below double
            // resolution here, so take the full Newton step
            for (std::size_t i = 0; i < n; ++i) trial[i] = theta[i] - step[i];
            theta.swap(trial);
            obj = subset_objective(kernel, data, subset, theta);
        } else {
            const double slope = numkit::dot(g, step); // descent along -step
            double t = 1.0;
            double trial_obj = obj;
            for (int half = 0; half < 60; ++half) {
                for (std::size_t i = 0; i < n; ++i) trial[i] = theta[i] - t * step[i];
                trial_obj = subset_objective(kernel, data, subset, trial);
                if (trial_obj <= obj - cfg.armijo_c * t * slope) break;
                t *= 0.5;
            }
            theta.swap(trial);
            obj = trial_obj;
        }
        g = subset_gradient(kernel, data, subset, theta);
        gnorm = numkit::norm2(g);
        if (!std::isfinite(gnorm)) throw NumericError("fit_erm: non-finite gradient");
    }

    FittedModel model;
    model.kernel = kernel;
    model.theta = std::move(theta);
    model.subset.assign(subset.begin(), subset.end());
    model.data = &data;
    model.grad_norm_at_fit = gnorm;
    model.fit_config = cfg;
    if (dense) {
        model.hessian_mode = HessianMode::direct;
        auto h = full_hessian(kernel, data, subset, model.theta, cfg.dense_threshold);
        model.hessian_factor =
            std::make_shared<const numkit::CholeskyFactor>(numkit::CholeskyFactor::compute(h));
    } else {
        model.hessian_mode = HessianMode::cg;
    }
    return model;
}

} // namespace subsel::loss
