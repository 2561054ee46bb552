#include "doctest.h"

#include <cmath>
#include <set>

#include "subsel/dataio.hpp"
#include "subsel/losskernels.hpp"
#include "subsel/rng.hpp"

using namespace subsel;
using namespace subsel::dataio;

TEST_CASE("parse_csv reads a small regression file") {
    CsvSchema schema;
    schema.target_name = "y";
    auto data = parse_csv("x,y\n1,2\n3,4\n5,6\n", schema);
    REQUIRE(data.n() == 3);
    REQUIRE(data.dim() == 1);
    CHECK(data.features(0, 0) == 1.0);
    CHECK(data.features(1, 0) == 3.0);
    CHECK(data.features(2, 0) == 5.0);
    CHECK(data.targets == std::vector<double>{2.0, 4.0, 6.0});
}

TEST_CASE("parse_csv errors") {
    CsvSchema schema;
    schema.target_name = "y";
    CHECK_THROWS_AS(parse_csv("x,y\n", schema), ConfigError); // empty data section

    try {
        parse_csv("x,y\n1,2\noops,4\n", schema);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.row == 1);
        CHECK(e.col == 0);
    }

    CsvSchema missing;
    missing.target_name = "z";
    CHECK_THROWS_AS(parse_csv("x,y\n1,2\n", missing), ConfigError);
}

TEST_CASE("classification labels encode in first-appearance order") {
    CsvSchema schema;
    schema.target_name = "label";
    schema.task = Task::classification;
    auto data = parse_csv("x,label\n0.5,b\n0.25,a\n0.75,b\n", schema);
    CHECK(data.num_classes == 2);
    CHECK(data.targets == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("headerless files address the target by index") {
    CsvSchema schema;
    schema.has_header = false;
    schema.target_index = 1;
    auto data = parse_csv("1,2,9\n3,4,8\n", schema);
    REQUIRE(data.dim() == 2);
    CHECK(data.targets == std::vector<double>{2.0, 4.0});
    CHECK(data.features(0, 1) == 9.0);
}

TEST_CASE("split sizes follow the floor arithmetic") {
    SyntheticParams p;
    auto data = gen_synthetic(SyntheticKind::outlier_regression, 100, 3, 1, p);
    SplitSpec spec;
    auto s = split(data, spec);
    CHECK(s.test.n() == 20);
    CHECK(s.validation.n() == 16);
    CHECK(s.train.n() == 64);
}

TEST_CASE("split is deterministic and a partition") {
    SyntheticParams p;
    auto data = gen_synthetic(SyntheticKind::outlier_regression, 53, 3, 2, p);
    SplitSpec spec;
    spec.seed = 7;
    auto a = split(data, spec);
    auto b = split(data, spec);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.validation_idx == b.validation_idx);
    CHECK(a.test_idx == b.test_idx);

    std::set<std::size_t> all;
    for (const auto* part : {&a.train_idx, &a.validation_idx, &a.test_idx}) {
        for (std::size_t idx : *part) CHECK(all.insert(idx).second); // disjoint
    }
    CHECK(all.size() == 53); // exhaustive
}

TEST_CASE("tiny datasets that empty a split are config errors") {
    SyntheticParams p;
    auto data = gen_synthetic(SyntheticKind::outlier_regression, 5, 2, 3, p);
    SplitSpec spec;
    CHECK_THROWS_AS(split(data, spec), ConfigError);
    CHECK_THROWS_AS(split(gen_synthetic(SyntheticKind::outlier_regression, 4, 2, 3, p), spec),
                    ConfigError);
}

TEST_CASE("standardizer maps training columns to mean 0 / sd 1") {
    SyntheticParams p;
    auto data = gen_synthetic(SyntheticKind::hetero_regression, 200, 4, 4, p);
    auto st = Standardizer::fit(data);
    auto out = st.apply(data);
    for (std::size_t j = 0; j < out.dim(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < out.n(); ++i) mean += out.features(i, j);
        mean /= static_cast<double>(out.n());
        CHECK(std::fabs(mean) <= 1e-9);
        double var = 0.0;
        for (std::size_t i = 0; i < out.n(); ++i) {
            const double c = out.features(i, j) - mean;
            var += c * c;
        }
        CHECK(std::fabs(std::sqrt(var / static_cast<double>(out.n())) - 1.0) <= 1e-9);
    }
}

TEST_CASE("standardizer statistics never peek beyond the training split") {
    SyntheticParams p;
    auto data = gen_synthetic(SyntheticKind::outlier_regression, 100, 3, 5, p);
    SplitSpec spec;
    auto s = split(data, spec);
    auto st = Standardizer::fit(s.train);

    auto mutated = s;
    for (std::size_t i = 0; i < mutated.test.n(); ++i)
        for (std::size_t j = 0; j < mutated.test.dim(); ++j) mutated.test.features(i, j) += 1e6;
    auto st2 = Standardizer::fit(mutated.train);
    CHECK(st.means() == st2.means());
    CHECK(st.sds() == st2.sds());
}

TEST_CASE("constant columns standardize to zero") {
    Dataset data;
    data.task = Task::regression;
    data.features = numkit::DenseMatrix(4, 2);
    data.targets = {1.0, 2.0, 3.0, 4.0};
    for (std::size_t i = 0; i < 4; ++i) {
        data.features(i, 0) = 7.5; // constant
        data.features(i, 1) = static_cast<double>(i);
    }
    auto st = Standardizer::fit(data);
    auto out = st.apply(data);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.features(i, 0) == 0.0);
}

TEST_CASE("gen_synthetic is deterministic given the seed") {
    SyntheticParams p;
    for (auto kind : {SyntheticKind::outlier_regression, SyntheticKind::hetero_regression,
                      SyntheticKind::two_gaussians, SyntheticKind::multiclass_blobs}) {
        auto a = gen_synthetic(kind, 50, 4, 99, p);
        auto b = gen_synthetic(kind, 50, 4, 99, p);
        CHECK(a.features.entries() == b.features.entries());
        CHECK(a.targets == b.targets);
        CHECK(content_hash(a) == content_hash(b));
    }
    auto c = gen_synthetic(SyntheticKind::outlier_regression, 50, 4, 100, p);
    CHECK(content_hash(c) !=
          content_hash(gen_synthetic(SyntheticKind::outlier_regression, 50, 4, 99, p)));
}

TEST_CASE("well-separated two_gaussians are fit to near-zero training error") {
    SyntheticParams p;
    p.separation = 10.0;
    p.label_noise = 0.0;
    auto data = gen_synthetic(SyntheticKind::two_gaussians, 40, 2, 6, p);
    std::vector<std::size_t> idx(data.n());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto model = loss::fit_erm(loss::logistic_kernel(2, 1e-4), data, idx);
    // margin > 0: every point classified correctly with small loss
    const double train_loss = loss::subset_objective(model.kernel, data, idx, model.theta);
    CHECK(train_loss < 0.05);
}

TEST_CASE("outlier fraction 0 produces homoscedastic residuals") {
    SyntheticParams p;
    p.outlier_fraction = 0.0;
    SyntheticMeta meta;
    auto data = gen_synthetic(SyntheticKind::outlier_regression, 400, 3, 7, p, &meta);
    for (auto flag : meta.outlier) CHECK(flag == 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        double signal = 0.0;
        for (std::size_t j = 0; j < 3; ++j) signal += data.features(i, j) * meta.beta[j];
        worst = std::max(worst, std::fabs(data.targets[i] - signal));
    }
    CHECK(worst <= 6.0 * p.noise_sd); // all residuals within a 6-sigma band

    SyntheticParams p10;
    SyntheticMeta meta10;
    auto noisy = gen_synthetic(SyntheticKind::outlier_regression, 400, 3, 7, p10, &meta10);
    double worst10 = 0.0;
    for (std::size_t i = 0; i < noisy.n(); ++i) {
        double signal = 0.0;
        for (std::size_t j = 0; j < 3; ++j) signal += noisy.features(i, j) * meta10.beta[j];
        worst10 = std::max(worst10, std::fabs(noisy.targets[i] - signal));
    }
    CHECK(worst10 > 6.0 * p10.noise_sd); // the inflated tail is present
}

TEST_CASE("unknown synthetic kind name is a config error") {
    CHECK_THROWS_AS(synthetic_kind_from_name("mystery"), ConfigError);
    CHECK(synthetic_kind_from_name("two_gaussians") == SyntheticKind::two_gaussians);
}

TEST_CASE("multiclass blobs carry k classes") {
    SyntheticParams p;
    p.num_classes = 4;
    p.label_noise = 0.0;
    auto data = gen_synthetic(SyntheticKind::multiclass_blobs, 120, 3, 8, p);
    CHECK(data.num_classes == 4);
    std::set<double> seen(data.targets.begin(), data.targets.end());
    CHECK(seen.size() == 4);
}
