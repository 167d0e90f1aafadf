#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "fpps/inference.hpp"

namespace fpps {

struct RadiusReport {
    /// delta * |S-tilde|
    double upsilon = 0.0;
    /// Closed-form mean of upsilon; present only when Sigma was supplied.
    std::optional<double> expected;
    double delta = 0.0;
    PivotParams params;
};

/// Mean radius in closed form:
///   delta * falling(n-p, m) * K * |Sigma|
/// with K = 1 (original), falling(M(n-p), m) / falling(kappa-2, m) (Proc1) or
/// falling(Mn-p, m) / falling(kappa-2, m) (Proc2), kappa = n + alpha - p - m - 1.
double expected_radius(const PivotParams& params, double delta, double det_sigma);

/// K alone; exposed for tests.
double radius_constant(const PivotParams& params);

RadiusReport radius(const CombinedEstimates& est, const CutoffTable& ct,
                    const std::optional<MatrixXd>& sigma = std::nullopt);

/// min, lower hinge, median, upper hinge, max (Tukey's hinges, as R's fivenum).
using FiveNumber = std::array<double, 5>;

FiveNumber five_number_summary(std::vector<double> values);

struct PrivacyReport {
    double epsilon = 0.0;
    std::size_t n_mc = 0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma3 = 0.0;
    /// Monte Carlo standard errors of the three estimates.
    double gamma1_se = 0.0;
    double gamma2_se = 0.0;
    double gamma3_se = 0.0;
    /// Summary of the m*n per-cell probabilities D1.
    FiveNumber d1_summary{};
    /// Summary of the n_mc draws of D3, the grand mean absolute relative error.
    FiveNumber d3_summary{};
};

/// Draws one release given a stream; the privacy loop supplies rng.substream(t)
/// for iteration t.
using ReleaseSampler = std::function<SyntheticRelease(const RngStream&)>;

/// Disclosure risk of a synthesiser for a fixed original sample, evaluated at
/// each epsilon from the same n_mc releases (so the measures are exactly
/// monotone in epsilon). y-hat is the mean of the M released datasets.
std::vector<PrivacyReport> privacy(const ModelData& original, const ReleaseSampler& sampler,
                                   const std::vector<double>& epsilons, std::size_t n_mc,
                                   const RngStream& rng, int threads = 0);

PrivacyReport privacy(const ModelData& original, const ReleaseSampler& sampler, double epsilon,
                      std::size_t n_mc, const RngStream& rng, int threads = 0);

}  // namespace fpps
