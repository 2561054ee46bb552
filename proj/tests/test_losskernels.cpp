#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "subsel/losskernels.hpp"
#include "subsel/dataio.hpp"
#include "subsel/rng.hpp"

using namespace subsel;
using namespace subsel::loss;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys,
                     Task task = Task::regression, std::size_t k = 0) {
    Dataset data;
    data.task = task;
    data.num_classes = k;
    data.features = numkit::DenseMatrix(xs.size(), xs[0].size());
    data.targets = ys;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs[0].size(); ++j) data.features(i, j) = xs[i][j];
    return data;
}

// mean-model helper: squared kernel with x identically 1
Dataset mean_model_data(const std::vector<double>& targets) {
    std::vector<std::vector<double>> xs(targets.size(), {1.0});
    return make_dataset(xs, targets);
}

std::vector<std::size_t> iota_idx(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

} // namespace

TEST_CASE("loss values at reference points") {
    std::vector<double> x{1.0, 0.0};
    std::vector<double> theta{0.0, 0.0};

    CHECK(loss::loss(squared_kernel(2, 0.0), {x, 1.0}, theta) == doctest::Approx(0.5));

    std::vector<double> x2{2.0, 0.0};
    CHECK(loss::loss(logistic_kernel(2, 0.0), {x2, 1.0}, theta) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    std::vector<double> theta3(6, 0.0);
    CHECK(loss::loss(softmax_kernel(2, 3, 0.0), {x, 1.0}, theta3) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("loss rejects dimension mismatch") {
    std::vector<double> x{1.0, 0.0};
    std::vector<double> theta{0.0};
    CHECK_THROWS_AS(loss::loss(squared_kernel(2, 0.0), {x, 1.0}, theta), ContractError);
}

TEST_CASE("gradient values at reference points") {
    std::vector<double> theta{0.0, 0.0};

    auto g1 = grad(squared_kernel(2, 0.0), {std::vector<double>{1.0, 0.0}, 1.0}, theta);
    CHECK(g1[0] == doctest::Approx(-1.0));
    CHECK(g1[1] == doctest::Approx(0.0));

    auto g2 = grad(logistic_kernel(2, 0.0), {std::vector<double>{2.0, 0.0}, 1.0}, theta);
    CHECK(g2[0] == doctest::Approx(-1.0));
    CHECK(g2[1] == doctest::Approx(0.0));

    std::vector<double> ones{1.0, 1.0};
    auto g3 = grad(squared_kernel(2, 2.0), {std::vector<double>{0.0, 0.0}, 0.0}, ones);
    CHECK(g3[0] == doctest::Approx(2.0));
    CHECK(g3[1] == doctest::Approx(2.0));
}

TEST_CASE("hess_vec rank-1 and curvature cases") {
    auto data = make_dataset({{1.0, 0.0}}, {0.0});
    auto idx = iota_idx(1);
    std::vector<double> theta{0.0, 0.0};

    auto hv = hess_vec(squared_kernel(2, 0.0), data, idx, theta, std::vector<double>{2.0, 3.0});
    CHECK(hv[0] == doctest::Approx(2.0));
    CHECK(hv[1] == doctest::Approx(0.0));

    auto data2 = make_dataset({{2.0, 0.0}}, {1.0});
    auto hv2 = hess_vec(logistic_kernel(2, 0.0), data2, idx, theta, std::vector<double>{1.0, 0.0});
    CHECK(hv2[0] == doctest::Approx(1.0)); // sigma(1-sigma) = 1/4 times x x^T
    CHECK(hv2[1] == doctest::Approx(0.0));

    auto hv3 = hess_vec(softmax_kernel(2, 3, 0.5), data2, idx, std::vector<double>(6, 0.1),
                        std::vector<double>(6, 0.0));
    for (double v : hv3) CHECK(v == 0.0);
}

TEST_CASE("hess_vec contract errors") {
    auto data = make_dataset({{1.0, 0.0}}, {0.0});
    std::vector<double> theta{0.0, 0.0};
    CHECK_THROWS_AS(
        hess_vec(squared_kernel(2, 0.0), data, {}, theta, std::vector<double>{1.0, 0.0}),
        ContractError);
}

TEST_CASE("full_hessian matches hand expansion") {
    auto data = make_dataset({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0});
    auto h = full_hessian(squared_kernel(2, 1.0), data, iota_idx(2), std::vector<double>{0.0, 0.0});
    CHECK(h(0, 0) == doctest::Approx(1.5));
    CHECK(h(1, 1) == doctest::Approx(1.5));
    CHECK(h(0, 1) == doctest::Approx(0.0));

    auto data2 = make_dataset({{2.0, 0.0}}, {1.0});
    auto h2 =
        full_hessian(logistic_kernel(2, 0.0), data2, iota_idx(1), std::vector<double>{0.0, 0.0});
    CHECK(h2(0, 0) == doctest::Approx(1.0));
    CHECK(h2(0, 1) == doctest::Approx(0.0));
    CHECK(h2(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("full_hessian is invariant to duplicating the subset (averaging)") {
    auto data = make_dataset({{1.0, 0.5}, {1.0, 0.5}, {1.0, 0.5}}, {1.0, 1.0, 1.0});
    std::vector<double> theta{0.3, -0.2};
    auto h1 = full_hessian(squared_kernel(2, 0.1), data, std::vector<std::size_t>{0},
                           theta);
    auto h3 = full_hessian(squared_kernel(2, 0.1), data, iota_idx(3), theta);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(h1(i, j) == doctest::Approx(h3(i, j)));
}

TEST_CASE("full_hessian over the dense threshold instructs the CG path") {
    auto data = make_dataset({{1.0, 0.0}}, {0.0});
    try {
        full_hessian(squared_kernel(2, 0.0), data, iota_idx(1), std::vector<double>{0.0, 0.0}, 1);
        FAIL("expected SizeError");
    } catch (const SizeError& e) {
        CHECK(std::string(e.what()).find("CG") != std::string::npos);
    }
}

TEST_CASE("full_hessian curvature is at least lambda") {
    Rng rng(21);
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, 30, 4, 3, p);
    const double lambda = 0.05;
    auto h = full_hessian(squared_kernel(4, lambda), data, iota_idx(30),
                          std::vector<double>(4, 0.0));
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(4);
        for (double& x : v) x = rng.normal();
        const double vhv = numkit::dot(v, h.multiply(v));
        CHECK(vhv >= lambda * numkit::dot(v, v) * (1.0 - 1e-12));
    }
}

TEST_CASE("fit_erm closed-form cases") {
    SUBCASE("two points sharing x=1 average their targets") {
        auto data = make_dataset({{1.0}, {1.0}}, {2.0, 4.0});
        auto model = fit_erm(squared_kernel(1, 0.0), data, iota_idx(2));
        CHECK(model.theta[0] == doctest::Approx(3.0).epsilon(1e-10));
    }
    SUBCASE("mean model recovers the sample mean") {
        auto data = mean_model_data({1.0, 2.0, 3.0, 4.0});
        auto model = fit_erm(squared_kernel(1, 0.0), data, iota_idx(4));
        CHECK(model.theta[0] == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(model.grad_norm_at_fit <= 1e-9);
    }
    SUBCASE("balanced symmetric logistic data forces theta = 0") {
        auto data = make_dataset({{1.0}, {-1.0}, {1.0}, {-1.0}}, {1.0, -1.0, -1.0, 1.0},
                                 Task::regression);
        auto model = fit_erm(logistic_kernel(1, 1.0), data, iota_idx(4));
        CHECK(std::fabs(model.theta[0]) <= 1e-9);
    }
}

TEST_CASE("fit_erm error paths") {
    auto data = mean_model_data({1.0, 2.0});
    CHECK_THROWS_AS(fit_erm(squared_kernel(1, 0.0), data, {}), ContractError);

    FitConfig cfg;
    cfg.max_iter = 0;
    try {
        fit_erm(squared_kernel(1, 0.0), data, iota_idx(2), {}, cfg);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.final_grad_norm > 0.0);
    }
}

TEST_CASE("fit_erm is permutation invariant over the subset") {
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, 40, 3, 9, p);
    auto kernel = logistic_kernel(3, 1e-2);
    auto idx = iota_idx(40);
    auto a = fit_erm(kernel, data, idx);
    std::reverse(idx.begin(), idx.end());
    std::swap(idx[3], idx[17]);
    auto b = fit_erm(kernel, data, idx);
    for (std::size_t j = 0; j < a.theta.size(); ++j)
        CHECK(std::fabs(a.theta[j] - b.theta[j]) <= 1e-10);
}

TEST_CASE("fit_erm lands at a lower objective than init and random perturbations") {
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::multiclass_blobs, 60, 3, 4, p);
    auto kernel = softmax_kernel(3, 3, 1e-2);
    auto idx = iota_idx(60);
    std::vector<double> init(kernel.dim(), 0.25);
    auto model = fit_erm(kernel, data, idx, init);
    const double at_solution = subset_objective(kernel, data, idx, model.theta);
    CHECK(at_solution <= subset_objective(kernel, data, idx, init) + 1e-12);
    Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
        auto perturbed = model.theta;
        for (double& t : perturbed) t += 0.1 * rng.normal();
        CHECK(at_solution <= subset_objective(kernel, data, idx, perturbed) + 1e-12);
    }
}

TEST_CASE("warm start reaches the same optimum as cold start") {
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, 50, 4, 6, p);
    auto kernel = logistic_kernel(4, 1e-3);
    auto idx = iota_idx(50);
    auto cold = fit_erm(kernel, data, idx);
    std::vector<double> far(kernel.dim(), 2.0);
    auto warm = fit_erm(kernel, data, idx, far);
    for (std::size_t j = 0; j < cold.theta.size(); ++j)
        CHECK(cold.theta[j] == doctest::Approx(warm.theta[j]).epsilon(1e-6));
}

TEST_CASE("CG-backed fit matches the dense fit when forced over the threshold") {
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, 80, 6, 12, p);
    auto kernel = squared_kernel(6, 1e-3);
    auto idx = iota_idx(80);

    auto dense = fit_erm(kernel, data, idx);
    FitConfig cg_cfg;
    cg_cfg.dense_threshold = 2; // force the matrix-free path
    auto iterative = fit_erm(kernel, data, idx, {}, cg_cfg);
    CHECK(iterative.hessian_mode == HessianMode::cg);
    CHECK(dense.hessian_mode == HessianMode::direct);
    for (std::size_t j = 0; j < dense.theta.size(); ++j)
        CHECK(dense.theta[j] == doctest::Approx(iterative.theta[j]).epsilon(1e-7));

    // both solver handles invert the same Hessian
    std::vector<double> b(kernel.dim());
    Rng rng(3);
    for (double& v : b) v = rng.normal();
    auto x1 = dense.hessian_solve(b);
    auto x2 = iterative.hessian_solve(b);
    for (std::size_t j = 0; j < b.size(); ++j)
        CHECK(x1[j] == doctest::Approx(x2[j]).epsilon(1e-5));
}
