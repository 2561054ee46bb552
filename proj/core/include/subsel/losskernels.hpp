#ifndef SUBSEL_LOSSKERNELS_HPP
#define SUBSEL_LOSSKERNELS_HPP

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "subsel/dataset.hpp"
#include "subsel/numkit.hpp"

namespace subsel::loss {

enum class KernelKind { squared, logistic, softmax };

// Differentiable per-point loss ell(z, theta) + (lambda/2) ||theta||^2.
// squared:  1/2 (x.theta - y)^2
// logistic: log(1 + exp(-y x.theta)), y in {-1,+1} (0/1 labels map to -1/+1)
// softmax:  -log p_y(theta, x), parameters laid out class-major (k blocks of d)
struct LossKernel {
    KernelKind kind = KernelKind::squared;
    double lambda = 1e-4;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0; // softmax only, k >= 2

    std::size_t dim() const {
        return kind == KernelKind::softmax ? feature_dim * num_classes : feature_dim;
    }
};

LossKernel squared_kernel(std::size_t feature_dim, double lambda = 1e-4);
LossKernel logistic_kernel(std::size_t feature_dim, double lambda = 1e-4);
LossKernel softmax_kernel(std::size_t feature_dim, std::size_t num_classes, double lambda = 1e-4);

// Kernel matching the dataset's task: squared, logistic (k=2) or softmax.
LossKernel kernel_for(const Dataset& data, double lambda = 1e-4);

double loss(const LossKernel& kernel, const Datapoint& z, std::span<const double> theta);
std::vector<double> grad(const LossKernel& kernel, const Datapoint& z,
                         std::span<const double> theta);
// out += grad(kernel, z, theta); the lambda term is NOT added here.
void accumulate_plain_grad(const LossKernel& kernel, const Datapoint& z,
                           std::span<const double> theta, std::span<double> out);

// Subset-averaged regularized Hessian applied to v: (1/M) sum H_z v + lambda v.
std::vector<double> hess_vec(const LossKernel& kernel, const Dataset& data,
                             std::span<const std::size_t> subset, std::span<const double> theta,
                             std::span<const double> v);

inline constexpr std::size_t kDenseDimThreshold = 512;

// Dense subset-averaged regularized Hessian; SizeError above the threshold.
numkit::DenseMatrix full_hessian(const LossKernel& kernel, const Dataset& data,
                                 std::span<const std::size_t> subset,
                                 std::span<const double> theta,
                                 std::size_t dense_threshold = kDenseDimThreshold);

// Mean regularized objective and gradient over a subset.
double subset_objective(const LossKernel& kernel, const Dataset& data,
                        std::span<const std::size_t> subset, std::span<const double> theta);
std::vector<double> subset_gradient(const LossKernel& kernel, const Dataset& data,
                                    std::span<const std::size_t> subset,
                                    std::span<const double> theta);

struct FitConfig {
    double tol = 1e-9;          // L2 norm of the mean gradient at the solution
    std::size_t max_iter = 200; // Newton steps
    std::size_t dense_threshold = kDenseDimThreshold;
    double cg_tol = 1e-10;
    std::size_t cg_max_iter = 0; // 0 -> numkit default
    double armijo_c = 1e-4;
};

enum class HessianMode { direct, cg };

// ERM solution on a subset: parameter, provenance, and an H^{-1} handle.
struct FittedModel {
    LossKernel kernel;
    std::vector<double> theta;
    std::vector<std::size_t> subset;
    const Dataset* data = nullptr; // not owned; must outlive the model
    double grad_norm_at_fit = 0.0;
    HessianMode hessian_mode = HessianMode::direct;
    std::shared_ptr<const numkit::CholeskyFactor> hessian_factor; // direct mode only
    FitConfig fit_config;

    std::size_t subset_size() const { return subset.size(); }
    // Solve H_theta x = b with the cached factorization or CG.
    std::vector<double> hessian_solve(std::span<const double> b) const;
    numkit::LinearOperator hessian_operator() const;
};

// Damped Newton with Armijo backtracking on the subset-mean objective.
// init empty -> zero start. Throws ConvergenceError after max_iter.
FittedModel fit_erm(const LossKernel& kernel, const Dataset& data,
                    std::span<const std::size_t> subset, std::span<const double> init = {},
                    const FitConfig& cfg = {});

} // namespace subsel::loss

#endif
