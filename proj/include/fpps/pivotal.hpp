#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpps/combine.hpp"

namespace fpps {

/// Which pivot to evaluate. With a contrast A (k x p, rank k, k >= m) the
/// hypothesis is on C = AB; without one it is on B itself.
struct PivotSpec {
    Procedure procedure = Procedure::Proc1;
    std::optional<MatrixXd> contrast;
    /// Multiply by denom_dof^m.
    bool scaled = false;
};

/// Dimensions that determine a pivot's null distribution. `k` is the number
/// of contrast rows, or p when the hypothesis is on B.
struct PivotParams {
    int releases = 1;
    Index n = 0;
    Index m = 0;
    Index p = 0;
    Index k = 0;
    double alpha = 0.0;
    Procedure procedure = Procedure::Proc1;
    bool scaled = false;

    /// M(n-p), Mn-p or n-p.
    Index denom_dof() const;
    /// Throws DomainError/ConfigError when the null distribution is undefined.
    void validate() const;

    bool operator==(const PivotParams&) const = default;
};

std::string describe(const PivotParams& params);

/// Null-distribution parameters matching a set of estimates and a pivot choice.
PivotParams pivot_params(const CombinedEstimates& est, const PivotSpec& spec);

/// Sorted Monte Carlo draws of a pivot under its null, with provenance.
class EmpiricalDistribution {
public:
    EmpiricalDistribution(std::vector<double> draws, PivotParams params, std::uint64_t seed,
                          std::uint64_t stream_id);

    const std::vector<double>& draws() const { return draws_; }
    std::size_t n_draws() const { return draws_.size(); }
    const PivotParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    /// Order statistic number ceil(q N) (1-based), q in (0, 1].
    double quantile(double q) const;
    /// Distribution-free standard error of quantile(q): the half-width of the
    /// 95% order-statistic interval divided by 1.96.
    double quantile_standard_error(double q) const;
    /// The (1 - gamma) cut-off.
    double upper_cutoff(double gamma) const { return quantile(1.0 - gamma); }
    /// Fraction of draws >= statistic.
    double p_value(double statistic) const;
    /// Fraction of draws <= value.
    double cdf(double value) const;

    /// <base>.csv with one draw per line and <base>.json with the parameters.
    void save(const std::filesystem::path& base) const;
    static EmpiricalDistribution load(const std::filesystem::path& base);

private:
    std::vector<double> draws_;
    PivotParams params_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

/// The pivot at hypothesis `hyp` (p x m for B, k x m for C = AB).
///
/// Numerator |Q| with Q = (B-bar - B)'XX'(B-bar - B), or
/// (A B-bar - C)'(A(XX')^{-1}A')^{-1}(A B-bar - C) under a contrast;
/// denominator |denom_dof * s_scale|. Computed in the log domain; a singular
/// numerator gives exactly 0.
double pivot_value(const CombinedEstimates& est, const MatrixXd& hyp, const PivotSpec& spec);

/// The hypothesis matrix Q above, exposed for the classical criteria and tests.
MatrixXd hypothesis_cross_product(const CombinedEstimates& est, const MatrixXd& hyp,
                                  const std::optional<MatrixXd>& contrast);

/// One draw of the null representation:
///   prod_i chi2_{k-i+1} / chi2_{D-i+1}  *  |((M+1)/M) I + A1^{1/2} A2^{-1} A1^{1/2}|
/// with A1 ~ W_m(I, n+alpha-p-m-1), A2 ~ W_m(I, n-p). For the original data the
/// determinant factor is absent and D = n - p.
double sample_pivot_draw(const PivotParams& params, RngStream& rng);

/// n_draws null draws, generated in fixed blocks so the result depends only
/// on (params, n_draws, rng key) and not on the thread count.
EmpiricalDistribution sample_pivot_null(const PivotParams& params, std::size_t n_draws,
                                        const RngStream& rng, int threads = 0);

/// The four classical criteria built from Q and s_scale.
struct ClassicalCriteria {
    /// |S| / |S + Q|
    double wilks = 0.0;
    /// tr(Q S^{-1})
    double pillai = 0.0;
    /// tr(Q (Q + S)^{-1})
    double hotelling_lawley = 0.0;
    /// Largest eigenvalue of Q S^{-1}.
    double roy = 0.0;
};

ClassicalCriteria classical_criteria(const CombinedEstimates& est, const MatrixXd& b_hyp);

}  // namespace fpps
