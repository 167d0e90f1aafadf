#pragma once

#include "fpps/mlr.hpp"
#include "fpps/synth.hpp"

namespace fpps {

/// Original is the unsynthesised sample (M = 0), kept so the same pivots and
/// radius code can score it alongside the two combining procedures.
enum class Procedure { Proc1, Proc2, Original };

std::string to_string(Procedure procedure);
Procedure procedure_from_string(const std::string& text);

/// B-bar plus the covariance estimate the pivot denominators use.
///
/// s_scale is S-bar (Proc1), S_comb (Proc2) or S (Original). It is not forced
/// to be SPD here because a noiseless release legitimately yields zero; the
/// pivots check definiteness where they need it.
struct CombinedEstimates {
    MatrixXd b_bar;
    MatrixXd s_scale;
    Procedure procedure = Procedure::Proc1;
    /// M(n-p) for Proc1, Mn-p for Proc2, n-p for Original.
    Index denom_dof = 0;
    int m_releases = 0;
    Index n = 0;
    Index p = 0;
    Index m = 0;
    double alpha = 0.0;
    DesignPtr design;

    /// S-tilde = denom_dof * s_scale.
    MatrixXd s_tilde() const { return static_cast<double>(denom_dof) * s_scale; }
};

/// Per-dataset OLS averaged over j; S-bar is the average of the per-dataset
/// residual covariances with divisor n - p.
CombinedEstimates combine_proc1(const SyntheticRelease& release);

/// OLS of the averaged dataset, with S_comb = (S_w + M S_mean) / (Mn - p).
CombinedEstimates combine_proc2(const SyntheticRelease& release);

CombinedEstimates combine(const SyntheticRelease& release, Procedure procedure);

/// B-hat and S of the original sample in the same shape (M = 0).
CombinedEstimates original_estimates(const FitResult& fit, DesignPtr design);

/// ((n + alpha - p - 2m - 2) / (n - p)) * s_scale. Requires n + alpha > p + 2m + 2
/// and a synthetic procedure.
MatrixXd unbiased_sigma(const CombinedEstimates& est);

}  // namespace fpps
