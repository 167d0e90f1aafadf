#pragma once

// Shared fixtures and independent statistical oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fpps/matdist.hpp"

namespace testing {

using Eigen::MatrixXd;

// The simulation design: m = 2 responses, p = 3 regressors.
inline MatrixXd design_b() {
    MatrixXd b(3, 2);
    b << 1, 2, 3, 2, 1, 1;
    return b;
}

inline MatrixXd design_sigma() {
    MatrixXd s(2, 2);
    s << 1, 0.5, 0.5, 1;
    return s;
}

inline MatrixXd design_contrast() {
    MatrixXd a(2, 3);
    a << 0, 1, 0, 0, 0, 1;
    return a;
}

/// p x n regressors with iid N(1, 1) entries.
inline MatrixXd normal_regressors(Eigen::Index p, Eigen::Index n, std::uint64_t seed) {
    fpps::RngStream rng(seed, 99);
    MatrixXd x(p, n);
    rng.fill_normal(x);
    return (x.array() + 1.0).matrix();
}

inline MatrixXd random_spd(Eigen::Index m, fpps::RngStream& rng) {
    MatrixXd a(m, m);
    rng.fill_normal(a);
    return a * a.transpose() + 0.5 * MatrixXd::Identity(m, m);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

/// sup |F_n - F| against a continuous CDF.
inline double ks_one_sample(std::vector<double> v, const std::function<double(double)>& cdf) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    return d;
}

/// Asymptotic two-sample KS critical value at level alpha.
inline double ks_critical(double alpha, std::size_t n1, std::size_t n2) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt(static_cast<double>(n1 + n2) / static_cast<double>(n1 * n2));
}

inline double rel_diff(const MatrixXd& a, const MatrixXd& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace testing
