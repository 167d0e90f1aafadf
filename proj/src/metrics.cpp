#include "fpps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpps/errors.hpp"
#include "fpps/parallel.hpp"

namespace fpps {

double radius_constant(const PivotParams& params) {
    if (params.procedure == Procedure::Original) {
        return 1.0;
    }
    const double n = static_cast<double>(params.n);
    const double p = static_cast<double>(params.p);
    const int m = static_cast<int>(params.m);
    const double kappa = n + params.alpha - p - static_cast<double>(m) - 1.0;
    const double big_m = static_cast<double>(params.releases);
    const double top = params.procedure == Procedure::Proc1 ? big_m * (n - p) : big_m * n - p;
    double bottom = 0.0;
    try {
        bottom = falling_factorial_ratio(kappa - 2.0, m);
    } catch (const DomainError&) {
        throw DomainError("expected radius needs n + alpha > p + 2m + 2 (" + describe(params) + ")");
    }
    return falling_factorial_ratio(top, m) / bottom;
}

double expected_radius(const PivotParams& params, double delta, double det_sigma) {
    const double n = static_cast<double>(params.n);
    const double p = static_cast<double>(params.p);
    return delta * falling_factorial_ratio(n - p, static_cast<int>(params.m)) *
           radius_constant(params) * det_sigma;
}

RadiusReport radius(const CombinedEstimates& est, const CutoffTable& ct,
                    const std::optional<MatrixXd>& sigma) {
    if (est.procedure != ct.params.procedure || est.n != ct.params.n || est.m != ct.params.m ||
        est.p != ct.params.p ||
        (est.procedure != Procedure::Original && est.m_releases != ct.params.releases)) {
        throw ConfigError("cut-off table " + describe(ct.params) +
                          " does not belong to these estimates");
    }
    RadiusReport report;
    report.delta = ct.delta;
    report.params = ct.params;
    report.upsilon = ct.delta * psd_det(est.s_tilde());
    if (sigma) {
        report.expected = expected_radius(ct.params, ct.delta, SpdMatrix(*sigma, "Sigma").det());
    }
    return report;
}

FiveNumber five_number_summary(std::vector<double> values) {
    if (values.empty()) {
        throw ConfigError("five-number summary of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    const double n4 = std::floor((n + 3.0) / 2.0) / 2.0;
    const std::array<double, 5> d{1.0, n4, (n + 1.0) / 2.0, n + 1.0 - n4, n};
    FiveNumber out{};
    for (std::size_t i = 0; i < 5; ++i) {
        const auto lo = static_cast<std::size_t>(std::floor(d[i])) - 1;
        const auto hi = static_cast<std::size_t>(std::ceil(d[i])) - 1;
        out[i] = 0.5 * (values[lo] + values[hi]);
    }
    return out;
}

namespace {

constexpr std::size_t kPrivacyBlock = 64;

struct BlockTally {
    // Per epsilon: per-cell hit counts (m x n, column-major), per-iteration
    // Gamma1/Gamma2 fractions are accumulated as sums and sums of squares.
    std::vector<std::vector<std::size_t>> cell_hits;
    std::vector<std::size_t> row_hits;
    std::vector<std::size_t> grand_hits;
    std::vector<double> g1_sum, g1_sq, g2_sum, g2_sq;
};

double mean_se(double sum, double sq, std::size_t count) {
    const double n = static_cast<double>(count);
    const double mean = sum / n;
    if (count < 2) {
        return 0.0;
    }
    const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

}  // namespace

std::vector<PrivacyReport> privacy(const ModelData& original, const ReleaseSampler& sampler,
                                   const std::vector<double>& epsilons, std::size_t n_mc,
                                   const RngStream& rng, int threads) {
    if (epsilons.empty()) {
        throw ConfigError("privacy needs at least one epsilon");
    }
    for (double e : epsilons) {
        if (!(e > 0.0)) {
            throw ConfigError("privacy threshold epsilon must be positive");
        }
    }
    if (n_mc == 0) {
        throw ConfigError("privacy needs at least one Monte Carlo iteration");
    }
    const MatrixXd& y = original.y();
    const Index m = y.rows();
    const Index n = y.cols();
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < m; ++j) {
            if (y(j, i) == 0.0) {
                std::ostringstream os;
                os << "response " << j + 1 << " of observation " << i + 1
                   << " is zero; relative disclosure measures are undefined";
                throw DataError(os.str());
            }
        }
    }
    const std::size_t n_eps = epsilons.size();
    const std::size_t cells = static_cast<std::size_t>(m * n);
    const std::size_t blocks = (n_mc + kPrivacyBlock - 1) / kPrivacyBlock;
    std::vector<BlockTally> tallies(blocks);
    std::vector<double> d3(n_mc);

    parallel_for(
        blocks,
        [&](std::size_t b) {
            BlockTally& tally = tallies[b];
            tally.cell_hits.assign(n_eps, std::vector<std::size_t>(cells, 0));
            tally.row_hits.assign(n_eps, 0);
            tally.grand_hits.assign(n_eps, 0);
            tally.g1_sum.assign(n_eps, 0.0);
            tally.g1_sq.assign(n_eps, 0.0);
            tally.g2_sum.assign(n_eps, 0.0);
            tally.g2_sq.assign(n_eps, 0.0);
            const std::size_t end = std::min(n_mc, (b + 1) * kPrivacyBlock);
            for (std::size_t t = b * kPrivacyBlock; t < end; ++t) {
                const SyntheticRelease release = sampler(rng.substream(t));
                if (release.m() != m || release.n() != n) {
                    throw DataError("synthesiser returned datasets of the wrong shape");
                }
                MatrixXd y_hat = MatrixXd::Zero(m, n);
                for (const MatrixXd& w : release.w()) {
                    y_hat += w;
                }
                y_hat /= static_cast<double>(release.releases());
                const MatrixXd rel = ((y_hat - y).array() / y.array()).abs().matrix();
                const Eigen::RowVectorXd rms =
                    (rel.array().square().colwise().sum() / static_cast<double>(m)).sqrt();
                d3[t] = rel.mean();
                for (std::size_t e = 0; e < n_eps; ++e) {
                    const double eps = epsilons[e];
                    std::size_t hits = 0;
                    for (std::size_t c = 0; c < cells; ++c) {
                        if (rel.data()[c] < eps) {
                            ++tally.cell_hits[e][c];
                            ++hits;
                        }
                    }
                    std::size_t rows = 0;
                    for (Index i = 0; i < n; ++i) {
                        if (rms(i) < eps) {
                            ++rows;
                        }
                    }
                    tally.row_hits[e] += rows;
                    if (d3[t] < eps) {
                        ++tally.grand_hits[e];
                    }
                    const double f1 = static_cast<double>(hits) / static_cast<double>(cells);
                    const double f2 = static_cast<double>(rows) / static_cast<double>(n);
                    tally.g1_sum[e] += f1;
                    tally.g1_sq[e] += f1 * f1;
                    tally.g2_sum[e] += f2;
                    tally.g2_sq[e] += f2 * f2;
                }
            }
        },
        threads);

    const FiveNumber d3_summary = five_number_summary(d3);
    const double iters = static_cast<double>(n_mc);
    std::vector<PrivacyReport> reports;
    reports.reserve(n_eps);
    for (std::size_t e = 0; e < n_eps; ++e) {
        std::vector<std::size_t> cell_hits(cells, 0);
        std::size_t row_hits = 0;
        std::size_t grand_hits = 0;
        double g1_sum = 0.0, g1_sq = 0.0, g2_sum = 0.0, g2_sq = 0.0;
        for (const BlockTally& tally : tallies) {
            for (std::size_t c = 0; c < cells; ++c) {
                cell_hits[c] += tally.cell_hits[e][c];
            }
            row_hits += tally.row_hits[e];
            grand_hits += tally.grand_hits[e];
            g1_sum += tally.g1_sum[e];
            g1_sq += tally.g1_sq[e];
            g2_sum += tally.g2_sum[e];
            g2_sq += tally.g2_sq[e];
        }
        PrivacyReport r;
        r.epsilon = epsilons[e];
        r.n_mc = n_mc;
        std::vector<double> d1(cells);
        std::size_t total_hits = 0;
        for (std::size_t c = 0; c < cells; ++c) {
            d1[c] = static_cast<double>(cell_hits[c]) / iters;
            total_hits += cell_hits[c];
        }
        r.gamma1 = static_cast<double>(total_hits) / (iters * static_cast<double>(cells));
        r.gamma2 = static_cast<double>(row_hits) / (iters * static_cast<double>(n));
        r.gamma3 = static_cast<double>(grand_hits) / iters;
        r.gamma1_se = mean_se(g1_sum, g1_sq, n_mc);
        r.gamma2_se = mean_se(g2_sum, g2_sq, n_mc);
        r.gamma3_se = std::sqrt(r.gamma3 * (1.0 - r.gamma3) / iters);
        r.d1_summary = five_number_summary(std::move(d1));
        r.d3_summary = d3_summary;
        reports.push_back(r);
    }
    return reports;
}

PrivacyReport privacy(const ModelData& original, const ReleaseSampler& sampler, double epsilon,
                      std::size_t n_mc, const RngStream& rng, int threads) {
    return privacy(original, sampler, std::vector<double>{epsilon}, n_mc, rng, threads).front();
}

}  // namespace fpps
