#include <doctest.h>

#include "../support.hpp"
#include "fpps/errors.hpp"
#include "fpps/mlr.hpp"

using namespace fpps;

TEST_CASE("noiseless responses are fitted exactly") {
    const MatrixXd x = testing::normal_regressors(3, 25, 1);
    const MatrixXd b = testing::design_b();
    const ModelData data(x, b.transpose() * x);
    const FitResult f = fit(data);
    CHECK(testing::rel_diff(f.b_hat, b) < 1e-10);
    CHECK(f.s.cwiseAbs().maxCoeff() < 1e-20 + 1e-12);
    CHECK(f.n == 25);
    CHECK(f.p == 3);
    CHECK(f.m == 2);
    CHECK(f.residual_dof() == 22);
}

TEST_CASE("large-sample fit recovers B and Sigma") {
    RngStream rng(11, 1);
    const DesignPtr design = make_design(testing::normal_regressors(3, 10000, 2));
    const ModelData data = simulate_original(testing::design_b(), SpdMatrix(testing::design_sigma()), design, rng);
    const FitResult f = fit(data);
    const MatrixXd ginv = design->gram_inverse().matrix();
    const MatrixXd sigma = testing::design_sigma();
    for (Index i = 0; i < 3; ++i) {
        for (Index j = 0; j < 2; ++j) {
            const double se = std::sqrt(ginv(i, i) * sigma(j, j));
            CHECK(std::abs(f.b_hat(i, j) - testing::design_b()(i, j)) < 4.0 * se);
        }
    }
    CHECK(testing::rel_diff(f.s, sigma) < 0.05);
    CHECK(testing::rel_diff(f.sigma_mle(), f.s * (9997.0 / 10000.0)) < 1e-14);
}

TEST_CASE("OLS sampling covariance is Sigma kron (XX')^{-1}") {
    RngStream rng(11, 2);
    const DesignPtr design = make_design(testing::normal_regressors(3, 20, 3));
    const SpdMatrix sigma(testing::design_sigma());
    const int reps = 40000;
    std::vector<double> b10, b11;
    double cross = 0.0;
    MatrixXd s_acc = MatrixXd::Zero(2, 2);
    for (int r = 0; r < reps; ++r) {
        const FitResult f = fit(simulate_original(testing::design_b(), sigma, design, rng));
        b10.push_back(f.b_hat(1, 0));
        b11.push_back(f.b_hat(1, 1));
        s_acc += f.s;
    }
    const double g = design->gram_inverse().matrix()(1, 1);
    CHECK(std::abs(testing::variance(b10) / g - 1.0) < 0.03);
    CHECK(std::abs(testing::variance(b11) / g - 1.0) < 0.03);
    const double m0 = testing::mean(b10), m1 = testing::mean(b11);
    for (int r = 0; r < reps; ++r) {
        cross += (b10[static_cast<std::size_t>(r)] - m0) * (b11[static_cast<std::size_t>(r)] - m1);
    }
    CHECK(std::abs(cross / reps / g - 0.5) < 0.03);
    CHECK(std::abs(m0 - 3.0) < 4.0 * std::sqrt(g / reps));
    // S is unbiased.
    CHECK(testing::rel_diff(s_acc / reps, sigma.matrix()) < 0.02);
}

TEST_CASE("single intercept regressor reduces to sample mean and covariance") {
    RngStream rng(11, 3);
    MatrixXd y(2, 30);
    rng.fill_normal(y);
    const ModelData data(MatrixXd::Ones(1, 30), y);
    const FitResult f = fit(data);
    const Eigen::VectorXd mu = y.rowwise().mean();
    const MatrixXd c = y.colwise() - mu;
    CHECK(testing::rel_diff(f.b_hat.transpose(), mu) < 1e-12);
    CHECK(testing::rel_diff(f.s, c * c.transpose() / 29.0) < 1e-12);
}

TEST_CASE("fit is equivariant under response scaling and shifts in the regressors' span") {
    RngStream rng(11, 4);
    const DesignPtr design = make_design(testing::normal_regressors(3, 40, 4));
    const ModelData data = simulate_original(testing::design_b(), SpdMatrix(testing::design_sigma()), design, rng);
    const FitResult f = fit(data);
    MatrixXd c(2, 2);
    c << 2, 1, 0, 3;
    MatrixXd shift(3, 2);
    shift << 1, -1, 0.5, 2, -3, 0;
    const FitResult g = fit(ModelData(design, c * data.y() + shift.transpose() * design->x()));
    CHECK(testing::rel_diff(g.b_hat, f.b_hat * c.transpose() + shift) < 1e-10);
    CHECK(testing::rel_diff(g.s, c * f.s * c.transpose()) < 1e-10);
}

TEST_CASE("rank-deficient and short designs are rejected") {
    MatrixXd x = testing::normal_regressors(3, 20, 5);
    x.row(2) = 2.0 * x.row(1);
    CHECK_THROWS_AS(make_design(x), RankError);
    CHECK_THROWS_AS(make_design(MatrixXd::Ones(3, 3)), RankError);
    MatrixXd bad = testing::normal_regressors(2, 10, 5);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_design(bad), DataError);
}

TEST_CASE("ModelData checks its responses") {
    const DesignPtr design = make_design(testing::normal_regressors(3, 5, 6));
    CHECK_THROWS_AS(ModelData(design, MatrixXd::Zero(2, 4)), DataError);
    // n = 5 < m + p = 3 + 3
    CHECK_THROWS_AS(ModelData(design, MatrixXd::Zero(3, 5)), DataError);
    MatrixXd y = MatrixXd::Zero(2, 5);
    y(1, 1) = std::nan("");
    CHECK_THROWS_AS(ModelData(design, y), DataError);
    CHECK_NOTHROW(ModelData(design, MatrixXd::Zero(2, 5)));
}

TEST_CASE("simulate_original has the model's mean and covariance") {
    RngStream rng(11, 5);
    const DesignPtr design = make_design(testing::normal_regressors(3, 5, 7));
    const SpdMatrix sigma(testing::design_sigma());
    const MatrixXd mean = testing::design_b().transpose() * design->x();
    const int reps = 50000;
    MatrixXd sum = MatrixXd::Zero(2, 5);
    MatrixXd cov = MatrixXd::Zero(2, 2);
    for (int r = 0; r < reps; ++r) {
        const MatrixXd e = simulate_original(testing::design_b(), sigma, design, rng).y() - mean;
        sum += e;
        cov += e.col(2) * e.col(2).transpose();
    }
    CHECK((sum / reps).cwiseAbs().maxCoeff() < 0.03);
    CHECK(testing::rel_diff(cov / reps, sigma.matrix()) < 0.03);
    CHECK_THROWS_AS(sample_responses(mean, SpdMatrix::identity(3), rng), ConfigError);
}
