#pragma once

#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fpps/rng.hpp"

namespace fpps {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A symmetric positive-definite matrix together with its Cholesky factor.
///
/// Construction checks symmetry (1e-10 relative) and positive definiteness
/// (successful LLT), then stores the exactly symmetrised matrix. Any failure
/// throws DegeneracyError carrying `what`, so callers can tell which argument
/// was bad.
class SpdMatrix {
public:
    explicit SpdMatrix(const MatrixXd& a, std::string_view what = "matrix");

    static SpdMatrix identity(Index dim);

    Index dim() const { return a_.rows(); }
    const MatrixXd& matrix() const { return a_; }
    /// Lower-triangular L with L L' = matrix().
    const MatrixXd& cholesky_lower() const { return lower_; }

    double log_det() const;
    double det() const;
    SpdMatrix inverse() const;
    /// matrix()^{-1} * rhs through the stored factor.
    MatrixXd solve(const MatrixXd& rhs) const;
    SpdMatrix scaled(double factor) const;

private:
    MatrixXd a_;
    MatrixXd lower_;
};

/// One draw from N_{pm}(mean, col_cov (x) row_cov): mean + Lr Z Lc'.
MatrixXd sample_matrix_normal(const MatrixXd& mean, const SpdMatrix& row_cov,
                              const SpdMatrix& col_cov, RngStream& rng);

/// Lower-triangular Bartlett factor T with T T' ~ W_m(I, dof).
MatrixXd bartlett_factor(Index m, double dof, RngStream& rng);

/// W_m(scale, dof) by the Bartlett decomposition. Requires dof > m - 1.
SpdMatrix sample_wishart(const SpdMatrix& scale, double dof, RngStream& rng);

/// Inverse-Wishart in the parameterisation where a draw is the inverse of a
/// W_m(scale^{-1}, dof - m - 1) matrix, so E[draw] = scale / (dof - 2m - 2).
/// Requires dof - m - 1 > m - 1.
SpdMatrix sample_inverse_wishart(const SpdMatrix& scale, double dof, RngStream& rng);

/// Symmetric square root through the eigendecomposition.
MatrixXd spd_sqrt(const SpdMatrix& a);

/// prod_{i=1}^{m} (x - i + 1), i.e. x!/(x-m)! extended to real x.
/// Throws DomainError when a factor is not positive.
double falling_factorial_ratio(double x, int m);

/// Determinant of a symmetric positive semi-definite matrix, exactly 0 when
/// it is singular (LDLT pivot <= 0).
double psd_det(const MatrixXd& a);

/// log|a| for SPD a, throwing DegeneracyError with `what` otherwise.
double spd_log_det(const MatrixXd& a, std::string_view what);

/// Max |a - a'| / max(1, max|a|).
double asymmetry(const MatrixXd& a);

}  // namespace fpps
