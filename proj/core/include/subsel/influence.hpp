#ifndef SUBSEL_INFLUENCE_HPP
#define SUBSEL_INFLUENCE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "subsel/losskernels.hpp"

namespace subsel::influence {

// H^{-1} at the fitted parameter: cached Cholesky when the model carries a
// dense factorization, CG against hess_vec otherwise.
class HinvApplier {
public:
    explicit HinvApplier(const loss::FittedModel& model) : model_(&model) {}

    std::vector<double> apply(std::span<const double> b) const { return model_->hessian_solve(b); }
    loss::HessianMode mode() const { return model_->hessian_mode; }

private:
    const loss::FittedModel* model_;
};

// First-order effect of adding z with infinitesimal weight: -H^{-1} grad ell(z, theta_hat).
std::vector<double> bif_single(const loss::FittedModel& model, const Datapoint& z);

// theta_tilde = theta_hat - 1/(M+m) * H^{-1} sum_j grad ell(z_j, theta_hat).
// Reduces to theta_hat + bif_single/(M+1) at m = 1.
std::vector<double> first_order_update(const loss::FittedModel& model,
                                       std::span<const Datapoint> new_points, std::size_t m_base);

// First-order estimate of ell(probe, theta_new) - ell(probe, theta_hat):
// -1/(M+m) * grad ell(probe)^T H^{-1} sum_j grad ell(z_j). One Hessian solve
// (applied to the probe gradient, using symmetry of H).
double predict_loss_change(const loss::FittedModel& model, const Datapoint& probe,
                           std::span<const Datapoint> new_points, std::size_t m_base);

// Greedy ranking quantity for one candidate.
struct ResidualScore {
    std::size_t candidate_index = 0;
    double score = 0.0;
};

// score(i) = vbar . grad ell(z_i, theta_hat) with
// vbar = H^{-1} (mean validation gradient). One Hessian solve per call, then
// O(dim) per candidate. Candidates index into the model's dataset.
std::vector<ResidualScore> residual_scores(const loss::FittedModel& model,
                                           const Dataset& validation,
                                           std::span<const std::size_t> candidates);

// vbar above, exposed so selection loops can reuse one solve across scans.
std::vector<double> validation_adjoint(const loss::FittedModel& model, const Dataset& validation);
std::vector<ResidualScore> residual_scores_with_adjoint(const loss::FittedModel& model,
                                                        std::span<const double> adjoint,
                                                        std::span<const std::size_t> candidates);

} // namespace subsel::influence

#endif
