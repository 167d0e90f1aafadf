#include "fpps/mlr.hpp"

#include <sstream>

#include <Eigen/Eigenvalues>

#include "fpps/errors.hpp"

namespace fpps {

namespace {

SpdMatrix checked_gram(const MatrixXd& x, double& condition) {
    if (x.rows() == 0 || x.cols() <= x.rows()) {
        std::ostringstream os;
        os << "regressor matrix must be p x n with 0 < p < n, got " << x.rows() << "x" << x.cols();
        throw RankError(os.str());
    }
    if (!x.allFinite()) {
        throw DataError("regressor matrix has non-finite entries");
    }
    const MatrixXd gram = x * x.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(condition <= Design::kMaxCondition)) {
        std::ostringstream os;
        os << "XX' is numerically singular: condition number (largest/smallest eigenvalue) "
           << hi << "/" << lo << " = " << condition << " exceeds " << Design::kMaxCondition;
        throw RankError(os.str());
    }
    return SpdMatrix(gram, "XX'");
}

}  // namespace

Design::Design(MatrixXd x)
    : x_(std::move(x)),
      gram_(checked_gram(x_, condition_)),
      gram_inverse_(gram_.inverse()) {}

MatrixXd Design::ols(const MatrixXd& y) const {
    if (y.cols() != n()) {
        throw ConfigError("response matrix has " + std::to_string(y.cols()) +
                          " observations but X has " + std::to_string(n()));
    }
    return gram_.solve(x_ * y.transpose());
}

MatrixXd Design::residual_cross_product(const MatrixXd& y, const MatrixXd& b) const {
    const MatrixXd r = y - b.transpose() * x_;
    return r * r.transpose();
}

DesignPtr make_design(MatrixXd x) {
    return std::make_shared<const Design>(std::move(x));
}

ModelData::ModelData(DesignPtr design, MatrixXd y) : design_(std::move(design)), y_(std::move(y)) {
    if (!design_) {
        throw ConfigError("ModelData: missing design");
    }
    if (y_.cols() != design_->n()) {
        std::ostringstream os;
        os << "ModelData: Y has " << y_.cols() << " observations but X has " << design_->n();
        throw DataError(os.str());
    }
    if (y_.rows() == 0) {
        throw DataError("ModelData: no response variables");
    }
    if (n() < m() + p()) {
        std::ostringstream os;
        os << "ModelData: need n >= m + p, got n=" << n() << ", m=" << m() << ", p=" << p();
        throw DataError(os.str());
    }
    if (!y_.allFinite()) {
        throw DataError("ModelData: responses contain non-finite values");
    }
}

ModelData::ModelData(MatrixXd x, MatrixXd y) : ModelData(make_design(std::move(x)), std::move(y)) {}

FitResult fit(const ModelData& data) {
    const Design& d = data.design();
    FitResult out;
    out.n = data.n();
    out.m = data.m();
    out.p = data.p();
    out.b_hat = d.ols(data.y());
    out.s = d.residual_cross_product(data.y(), out.b_hat) / static_cast<double>(out.n - out.p);
    out.s = 0.5 * (out.s + out.s.transpose());
    return out;
}

MatrixXd sample_responses(const MatrixXd& mean, const SpdMatrix& sigma, RngStream& rng) {
    if (sigma.dim() != mean.rows()) {
        throw ConfigError("sample_responses: covariance dimension does not match response count");
    }
    MatrixXd z(mean.rows(), mean.cols());
    rng.fill_normal(z);
    return mean + sigma.cholesky_lower().triangularView<Eigen::Lower>() * z;
}

ModelData simulate_original(const MatrixXd& b, const SpdMatrix& sigma, DesignPtr design,
                            RngStream& rng) {
    if (b.rows() != design->p() || b.cols() != sigma.dim()) {
        std::ostringstream os;
        os << "simulate_original: B is " << b.rows() << "x" << b.cols() << ", X has p="
           << design->p() << ", Sigma is " << sigma.dim() << "x" << sigma.dim();
        throw ConfigError(os.str());
    }
    MatrixXd y = sample_responses(b.transpose() * design->x(), sigma, rng);
    return ModelData(std::move(design), std::move(y));
}

ModelData simulate_original(const MatrixXd& b, const SpdMatrix& sigma, const MatrixXd& x,
                            RngStream& rng) {
    return simulate_original(b, sigma, make_design(x), rng);
}

}  // namespace fpps
