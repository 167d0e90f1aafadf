#pragma once

#include <memory>

#include "fpps/matdist.hpp"

namespace fpps {

/// The fixed p x n regressor matrix X (observations are columns) with its
/// Gram matrix XX' factorised once. Construction rejects X whose Gram matrix
/// has a condition number above 1e12.
class Design {
public:
    static constexpr double kMaxCondition = 1e12;

    explicit Design(MatrixXd x);

    const MatrixXd& x() const { return x_; }
    Index p() const { return x_.rows(); }
    Index n() const { return x_.cols(); }

    const SpdMatrix& gram() const { return gram_; }
    /// (XX')^{-1}, the row covariance of every OLS coefficient matrix.
    const SpdMatrix& gram_inverse() const { return gram_inverse_; }
    double condition_number() const { return condition_; }

    /// (XX')^{-1} X Y' for a response matrix Y (m x n).
    MatrixXd ols(const MatrixXd& y) const;
    /// (Y - B'X)(Y - B'X)' for a response matrix and coefficients B (p x m).
    MatrixXd residual_cross_product(const MatrixXd& y, const MatrixXd& b) const;

private:
    MatrixXd x_;
    double condition_ = 0.0;
    SpdMatrix gram_;
    SpdMatrix gram_inverse_;
};

using DesignPtr = std::shared_ptr<const Design>;

DesignPtr make_design(MatrixXd x);

/// Original (confidential) data: regressors X (p x n) and responses Y (m x n).
/// Requires rank(X) = p and n >= m + p.
class ModelData {
public:
    ModelData(DesignPtr design, MatrixXd y);
    ModelData(MatrixXd x, MatrixXd y);

    const Design& design() const { return *design_; }
    const DesignPtr& design_ptr() const { return design_; }
    const MatrixXd& x() const { return design_->x(); }
    const MatrixXd& y() const { return y_; }
    Index n() const { return y_.cols(); }
    Index m() const { return y_.rows(); }
    Index p() const { return design_->p(); }

private:
    DesignPtr design_;
    MatrixXd y_;
};

/// Sufficient summary of the original data: B-hat (p x m) and the UMVUE S.
///
/// `s` is kept as a plain matrix because noiseless inputs legitimately give
/// S = 0; consumers needing an SPD S call s_spd().
struct FitResult {
    MatrixXd b_hat;
    MatrixXd s;
    Index n = 0;
    Index m = 0;
    Index p = 0;

    /// n - p
    Index residual_dof() const { return n - p; }
    /// MLE of Sigma, (n - p) S / n.
    MatrixXd sigma_mle() const { return s * (static_cast<double>(n - p) / static_cast<double>(n)); }
    SpdMatrix s_spd() const { return SpdMatrix(s, "S (original-data covariance estimate)"); }
};

FitResult fit(const ModelData& data);

/// Y = B'X + E, E ~ N_{mn}(0, I_n (x) Sigma).
ModelData simulate_original(const MatrixXd& b, const SpdMatrix& sigma, DesignPtr design,
                            RngStream& rng);
ModelData simulate_original(const MatrixXd& b, const SpdMatrix& sigma, const MatrixXd& x,
                            RngStream& rng);

/// m x n matrix of normal rows with mean `mean` (m x n) and column covariance sigma.
MatrixXd sample_responses(const MatrixXd& mean, const SpdMatrix& sigma, RngStream& rng);

}  // namespace fpps
