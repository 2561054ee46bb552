#include "doctest.h"

#include <cmath>

#include "subsel/influence.hpp"
#include "subsel/dataio.hpp"
#include "subsel/rng.hpp"
#include "subsel/verify.hpp"

using namespace subsel;
using namespace subsel::loss;
using namespace subsel::influence;

namespace {

Dataset mean_model_data(const std::vector<double>& targets) {
    Dataset data;
    data.task = Task::regression;
    data.features = numkit::DenseMatrix(targets.size(), 1);
    data.targets = targets;
    for (std::size_t i = 0; i < targets.size(); ++i) data.features(i, 0) = 1.0;
    return data;
}

std::vector<std::size_t> iota_idx(std::size_t n, std::size_t start = 0) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = start + i;
    return idx;
}

const std::vector<double> kUnitX{1.0};

Datapoint mean_point(double y) { return {kUnitX, y}; }

FittedModel mean_model_1234() {
    static Dataset data = mean_model_data({1.0, 2.0, 3.0, 4.0});
    return fit_erm(squared_kernel(1, 0.0), data, iota_idx(4));
}

} // namespace

TEST_CASE("bif_single on the mean model") {
    auto model = mean_model_1234();
    CHECK(model.theta[0] == doctest::Approx(2.5));

    auto b = bif_single(model, mean_point(10.0)); // grad = theta - z = -7.5
    CHECK(b[0] == doctest::Approx(7.5).epsilon(1e-12));

    auto zero = bif_single(model, mean_point(2.5)); // residual 0
    CHECK(std::fabs(zero[0]) <= 1e-12);
}

TEST_CASE("bif_single vanishes at a stationary point of a two-target model") {
    auto data = mean_model_data({2.0, 4.0});
    auto model = fit_erm(squared_kernel(1, 0.0), data, iota_idx(2));
    CHECK(model.theta[0] == doctest::Approx(3.0));
    auto b = bif_single(model, mean_point(3.0));
    CHECK(std::fabs(b[0]) <= 1e-12);
}

TEST_CASE("first_order_update is exact on the mean model") {
    auto model = mean_model_1234();

    SUBCASE("single addition") {
        Datapoint added[] = {mean_point(10.0)};
        auto updated = first_order_update(model, added, 4);
        CHECK(updated[0] == doctest::Approx(4.0).epsilon(1e-12)); // mean of {1,2,3,4,10}
    }
    SUBCASE("batch addition matches the closed-form mean") {
        Datapoint added[] = {mean_point(10.0), mean_point(0.0)};
        auto updated = first_order_update(model, added, 4);
        CHECK(updated[0] == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("zero-gradient additions leave theta unchanged") {
        Datapoint added[] = {mean_point(2.5), mean_point(2.5), mean_point(2.5)};
        auto updated = first_order_update(model, added, 4);
        CHECK(updated[0] == doctest::Approx(2.5).epsilon(1e-14));
    }
}

TEST_CASE("predict_loss_change on the mean model") {
    auto model = mean_model_1234();
    const Datapoint probe = mean_point(0.0); // grad at 2.5 is +2.5

    Datapoint plus10[] = {mean_point(10.0)};
    CHECK(predict_loss_change(model, probe, plus10, 4) == doctest::Approx(3.75).epsilon(1e-12));

    Datapoint minus2[] = {mean_point(-2.0)};
    CHECK(predict_loss_change(model, probe, minus2, 4) == doctest::Approx(-2.25).epsilon(1e-12));

    const Datapoint stationary_probe = mean_point(2.5);
    CHECK(std::fabs(predict_loss_change(model, stationary_probe, plus10, 4)) <= 1e-12);
}

TEST_CASE("predict_loss_change agrees with grad(probe) . (theta_tilde - theta_hat)") {
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, 60, 4, 5, p);
    auto model = fit_erm(logistic_kernel(4, 1e-3), data, iota_idx(50));
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t m = 1 + rng.below(4);
        std::vector<Datapoint> added;
        for (std::size_t j = 0; j < m; ++j) added.push_back(data.point(50 + rng.below(10)));
        const Datapoint probe = data.point(rng.below(60));

        const double predicted = predict_loss_change(model, probe, added, 50);
        auto updated = first_order_update(model, added, 50);
        auto g = grad(model.kernel, probe, model.theta);
        double chain = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) chain += g[j] * (updated[j] - model.theta[j]);
        CHECK(predicted == doctest::Approx(chain).epsilon(1e-12));
    }
}

TEST_CASE("residual_scores on the mean-model example") {
    Dataset pool = mean_model_data({1.0, 2.0, 3.0, 4.0, -2.0, -1.0, 0.0, 1.0, 2.0});
    auto model = fit_erm(squared_kernel(1, 0.0), pool, iota_idx(4));
    Dataset validation = mean_model_data({0.0});

    auto scores = residual_scores(model, validation, iota_idx(5, 4));
    const double expected[] = {11.25, 8.75, 6.25, 3.75, 1.25};
    REQUIRE(scores.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(scores[i].candidate_index == 4 + i);
        CHECK(scores[i].score == doctest::Approx(expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("residual_scores edge cases") {
    Dataset pool = mean_model_data({1.0, 2.0, 3.0, 4.0, 0.5, 0.5});
    auto model = fit_erm(squared_kernel(1, 0.0), pool, iota_idx(4));

    SUBCASE("empty candidate list is empty, not an error") {
        Dataset validation = mean_model_data({0.0});
        CHECK(residual_scores(model, validation, {}).empty());
    }
    SUBCASE("zero validation gradient zeroes every score") {
        Dataset validation = mean_model_data({2.5});
        auto scores = residual_scores(model, validation, iota_idx(2, 4));
        for (const auto& s : scores) CHECK(std::fabs(s.score) <= 1e-12);
    }
    SUBCASE("duplicate candidates score identically") {
        Dataset validation = mean_model_data({0.0});
        auto scores = residual_scores(model, validation, iota_idx(2, 4));
        CHECK(scores[0].score == scores[1].score);
    }
}

TEST_CASE("residual_scores adjoint ordering equals the naive per-candidate ordering") {
    Rng rng(23);
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t d = 3 + rng.below(17); // up to 20 per contract
        dataio::SyntheticParams p;
        auto pool = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, 80, d,
                                          rng.next_u64(), p);
        auto validation = dataio::gen_synthetic(dataio::SyntheticKind::outlier_regression, 25, d,
                                                rng.next_u64(), p);
        auto model = fit_erm(squared_kernel(d, 1e-3), pool, iota_idx(60));
        auto candidates = iota_idx(20, 60);
        auto fast = residual_scores(model, validation, candidates);

        // naive oracle: solve H^{-1} grad(z_i) per candidate, then dot with
        // the mean validation gradient
        std::vector<double> vg(model.kernel.dim(), 0.0);
        for (std::size_t i = 0; i < validation.n(); ++i)
            accumulate_plain_grad(model.kernel, validation.point(i), model.theta, vg);
        numkit::scale(1.0 / static_cast<double>(validation.n()), vg);
        numkit::axpy(model.kernel.lambda, model.theta, vg);

        for (std::size_t i = 0; i < candidates.size(); ++i) {
            auto gi = grad(model.kernel, pool.point(candidates[i]), model.theta);
            auto hi = model.hessian_solve(gi);
            const double naive = numkit::dot(vg, hi);
            CHECK(std::fabs(naive - fast[i].score) <= 1e-8);
        }
    }
}

TEST_CASE("HinvApplier inverts the Hessian in both modes") {
    dataio::SyntheticParams p;
    auto data = dataio::gen_synthetic(dataio::SyntheticKind::two_gaussians, 70, 5, 8, p);
    auto kernel = logistic_kernel(5, 1e-2);
    Rng rng(31);

    for (bool force_cg : {false, true}) {
        FitConfig cfg;
        if (force_cg) cfg.dense_threshold = 1;
        auto model = fit_erm(kernel, data, iota_idx(70), {}, cfg);
        HinvApplier applier(model);
        CHECK(applier.mode() == (force_cg ? HessianMode::cg : HessianMode::direct));
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> b(kernel.dim());
            for (double& v : b) v = rng.normal();
            auto x = applier.apply(b);
            auto hx = hess_vec(kernel, data, model.subset, model.theta, x);
            std::vector<double> r(b.size());
            for (std::size_t j = 0; j < b.size(); ++j) r[j] = hx[j] - b[j];
            CHECK(numkit::norm2(r) <= 1e-6 * numkit::norm2(b));
        }
    }
}

TEST_CASE("batch additivity of the influence update") {
    auto result = verify::run_property("batch_additivity", true);
    CHECK(result.pass);
}

TEST_CASE("first-order update is exact for constant-curvature quadratics") {
    auto result = verify::run_property("quadratic_exactness", true);
    CHECK(result.pass);
}

TEST_CASE("parameter-update error shrinks like M^-2 (log-log slope)") {
    auto errors = verify::lemma1_errors({50, 100, 200}, 20, 2, 777);
    REQUIRE(errors.size() == 3);
    CHECK(errors[0] > errors[1]);
    CHECK(errors[1] > errors[2]);
    CHECK(verify::loglog_slope({50, 100, 200}, errors) <= -1.6);
}
