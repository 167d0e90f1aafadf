#include "fpps/matdist.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fpps/errors.hpp"

namespace fpps {

double asymmetry(const MatrixXd& a) {
    if (a.rows() != a.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

SpdMatrix::SpdMatrix(const MatrixXd& a, std::string_view what) {
    if (a.rows() == 0 || a.rows() != a.cols()) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
        throw DegeneracyError(os.str());
    }
    if (!a.allFinite()) {
        throw DegeneracyError(std::string(what) + ": non-finite entries");
    }
    if (asymmetry(a) > 1e-10) {
        throw DegeneracyError(std::string(what) + ": not symmetric");
    }
    a_ = 0.5 * (a + a.transpose());
    Eigen::LLT<MatrixXd> llt(a_);
    if (llt.info() != Eigen::Success) {
        throw DegeneracyError(std::string(what) + ": not positive definite (Cholesky failed)");
    }
    lower_ = llt.matrixL();
    if (!(lower_.diagonal().array() > 0.0).all()) {
        throw DegeneracyError(std::string(what) + ": not positive definite (zero pivot)");
    }
}

SpdMatrix SpdMatrix::identity(Index dim) {
    return SpdMatrix(MatrixXd::Identity(dim, dim), "identity");
}

double SpdMatrix::log_det() const {
    return 2.0 * lower_.diagonal().array().log().sum();
}

double SpdMatrix::det() const {
    return std::exp(log_det());
}

SpdMatrix SpdMatrix::inverse() const {
    return SpdMatrix(solve(MatrixXd::Identity(dim(), dim())), "inverse");
}

MatrixXd SpdMatrix::solve(const MatrixXd& rhs) const {
    const auto l = lower_.triangularView<Eigen::Lower>();
    MatrixXd y = l.solve(rhs);
    return l.transpose().solve(y);
}

SpdMatrix SpdMatrix::scaled(double factor) const {
    return SpdMatrix(factor * a_, "scaled matrix");
}

MatrixXd sample_matrix_normal(const MatrixXd& mean, const SpdMatrix& row_cov,
                              const SpdMatrix& col_cov, RngStream& rng) {
    if (row_cov.dim() != mean.rows() || col_cov.dim() != mean.cols()) {
        std::ostringstream os;
        os << "sample_matrix_normal: mean is " << mean.rows() << "x" << mean.cols()
           << " but row_cov is " << row_cov.dim() << " and col_cov is " << col_cov.dim();
        throw ConfigError(os.str());
    }
    MatrixXd z(mean.rows(), mean.cols());
    rng.fill_normal(z);
    return mean + row_cov.cholesky_lower().triangularView<Eigen::Lower>() * z *
                      col_cov.cholesky_lower().transpose().triangularView<Eigen::Upper>();
}

MatrixXd bartlett_factor(Index m, double dof, RngStream& rng) {
    if (!(dof > static_cast<double>(m) - 1.0)) {
        std::ostringstream os;
        os << "Wishart degrees of freedom must exceed m - 1 = " << m - 1 << ", got " << dof;
        throw DomainError(os.str());
    }
    MatrixXd t = MatrixXd::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
        t(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
        for (Index j = 0; j < i; ++j) {
            t(i, j) = rng.normal();
        }
    }
    return t;
}

SpdMatrix sample_wishart(const SpdMatrix& scale, double dof, RngStream& rng) {
    const MatrixXd t = bartlett_factor(scale.dim(), dof, rng);
    const MatrixXd f = scale.cholesky_lower().triangularView<Eigen::Lower>() * t;
    return SpdMatrix(f * f.transpose(), "Wishart draw");
}

SpdMatrix sample_inverse_wishart(const SpdMatrix& scale, double dof, RngStream& rng) {
    const Index m = scale.dim();
    const double wishart_dof = dof - static_cast<double>(m) - 1.0;
    if (!(wishart_dof > static_cast<double>(m) - 1.0)) {
        std::ostringstream os;
        os << "inverse-Wishart degrees of freedom must exceed 2m = " << 2 * m << ", got " << dof;
        throw DomainError(os.str());
    }
    // With scale = L L', the factor L^{-T} squares to scale^{-1}; the Wishart
    // draw L^{-T} T T' L^{-1} then inverts to L T^{-T} T^{-1} L'.
    const MatrixXd t = bartlett_factor(m, wishart_dof, rng);
    const MatrixXd t_inv_t =
        t.transpose().triangularView<Eigen::Upper>().solve(MatrixXd::Identity(m, m));
    const MatrixXd g = scale.cholesky_lower().triangularView<Eigen::Lower>() * t_inv_t;
    return SpdMatrix(g * g.transpose(), "inverse-Wishart draw");
}

MatrixXd spd_sqrt(const SpdMatrix& a) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a.matrix());
    if (es.info() != Eigen::Success || !(es.eigenvalues().array() > 0.0).all()) {
        throw DegeneracyError("spd_sqrt: matrix is not positive definite");
    }
    const MatrixXd& v = es.eigenvectors();
    MatrixXd root = v * es.eigenvalues().cwiseSqrt().asDiagonal() * v.transpose();
    return 0.5 * (root + root.transpose());
}

double falling_factorial_ratio(double x, int m) {
    if (m < 1) {
        throw DomainError("falling_factorial_ratio: m must be positive");
    }
    double out = 1.0;
    for (int i = 1; i <= m; ++i) {
        const double factor = x - i + 1;
        if (!(factor > 0.0)) {
            std::ostringstream os;
            os << "falling_factorial_ratio: factor x - " << i - 1 << " = " << factor
               << " is not positive (degrees-of-freedom constraint violated)";
            throw DomainError(os.str());
        }
        out *= factor;
    }
    return out;
}

double psd_det(const MatrixXd& a) {
    Eigen::LDLT<MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        return 0.0;
    }
    const VectorXd d = ldlt.vectorD();
    if ((d.array() <= 0.0).any()) {
        return 0.0;
    }
    return d.prod();
}

double spd_log_det(const MatrixXd& a, std::string_view what) {
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw DegeneracyError(std::string(what) + ": matrix is singular or not positive definite");
    }
    const MatrixXd l = llt.matrixL();
    if (!(l.diagonal().array() > 0.0).all()) {
        throw DegeneracyError(std::string(what) + ": matrix is singular");
    }
    return 2.0 * l.diagonal().array().log().sum();
}

}  // namespace fpps
