#include "subsel/influence.hpp"

#include <cmath>

namespace subsel::influence {

namespace {

std::vector<double> summed_new_gradient(const loss::FittedModel& model,
                                        std::span<const Datapoint> new_points) {
    if (new_points.empty()) throw ContractError("influence: need at least one new point");
    std::vector<double> g(model.kernel.dim(), 0.0);
    for (const Datapoint& z : new_points) {
        auto gz = loss::grad(model.kernel, z, model.theta);
        numkit::axpy(1.0, gz, g);
    }
    return g;
}

} // namespace

std::vector<double> bif_single(const loss::FittedModel& model, const Datapoint& z) {
    auto g = loss::grad(model.kernel, z, model.theta);
    auto x = model.hessian_solve(g);
    numkit::scale(-1.0, x);
    return x;
}

std::vector<double> first_order_update(const loss::FittedModel& model,
                                       std::span<const Datapoint> new_points,
                                       std::size_t m_base) {
    const auto g = summed_new_gradient(model, new_points);
    auto step = model.hessian_solve(g);
    const double w = 1.0 / static_cast<double>(m_base + new_points.size());
    std::vector<double> theta = model.theta;
    numkit::axpy(-w, step, theta);
    return theta;
}

double predict_loss_change(const loss::FittedModel& model, const Datapoint& probe,
                           std::span<const Datapoint> new_points, std::size_t m_base) {
    const auto g_probe = loss::grad(model.kernel, probe, model.theta);
    const auto adjoint = model.hessian_solve(g_probe);
    const auto g_new = summed_new_gradient(model, new_points);
    const double w = 1.0 / static_cast<double>(m_base + new_points.size());
    return -w * numkit::dot(adjoint, g_new);
}

std::vector<double> validation_adjoint(const loss::FittedModel& model, const Dataset& validation) {
    if (validation.n() == 0) throw ContractError("residual_scores: empty validation set");
    std::vector<double> g(model.kernel.dim(), 0.0);
    for (std::size_t i = 0; i < validation.n(); ++i) {
        loss::accumulate_plain_grad(model.kernel, validation.point(i), model.theta, g);
    }
    numkit::scale(1.0 / static_cast<double>(validation.n()), g);
    numkit::axpy(model.kernel.lambda, model.theta, g);
    return model.hessian_solve(g);
}

std::vector<ResidualScore> residual_scores_with_adjoint(const loss::FittedModel& model,
                                                        std::span<const double> adjoint,
                                                        std::span<const std::size_t> candidates) {
    std::vector<ResidualScore> scores;
    scores.reserve(candidates.size());
    for (std::size_t idx : candidates) {
        const auto g = loss::grad(model.kernel, model.data->point(idx), model.theta);
        scores.push_back({idx, numkit::dot(adjoint, g)});
    }
    return scores;
}

std::vector<ResidualScore> residual_scores(const loss::FittedModel& model,
                                           const Dataset& validation,
                                           std::span<const std::size_t> candidates) {
    if (candidates.empty()) return {};
    const auto adjoint = validation_adjoint(model, validation);
    return residual_scores_with_adjoint(model, adjoint, candidates);
}

} // namespace subsel::influence
