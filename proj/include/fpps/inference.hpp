#pragma once

#include <memory>
#include <optional>

#include "fpps/pivotal.hpp"

namespace fpps {

/// A simulated (1 - gamma) cut-off together with the draws it came from.
struct CutoffTable {
    double gamma = 0.05;
    double delta = 0.0;
    PivotParams params;
    std::size_t n_draws = 0;
    std::shared_ptr<const EmpiricalDistribution> distribution;
};

CutoffTable cutoff(const PivotParams& params, double gamma, std::size_t n_draws,
                   const RngStream& rng, int threads = 0);

/// Wraps an existing distribution (e.g. one loaded from disk).
CutoffTable cutoff_from(std::shared_ptr<const EmpiricalDistribution> distribution, double gamma);

enum class Decision { Reject, FailToReject };

std::string to_string(Decision decision);

struct TestReport {
    double statistic = 0.0;
    double cutoff = 0.0;
    double p_value = 1.0;
    Decision decision = Decision::FailToReject;

    /// Whether the hypothesised value lies in the (1 - gamma) confidence set.
    bool in_confidence_set() const { return decision == Decision::FailToReject; }
};

/// Test H0: B = hyp (or AB = hyp under spec.contrast). The cut-off table must
/// have been simulated for exactly these estimates' parameters.
TestReport test(const CombinedEstimates& est, const MatrixXd& hyp, const PivotSpec& spec,
                const CutoffTable& ct);

/// How one Monte Carlo replicate's data are produced: an original sample from
/// (b, sigma, X) followed, when releases > 0, by a synthetic release.
struct ReplicateSetup {
    MatrixXd b;
    MatrixXd sigma;
    DesignPtr design;
    Method method = Method::FPPS;
    int releases = 1;
    double alpha = 0.0;
};

struct ReplicateData {
    FitResult fit;
    DesignPtr design;
    std::optional<SyntheticRelease> release;
};

/// Original sample from rng.substream(0); release from rng.substream(1).
ReplicateData simulate_replicate(const ReplicateSetup& setup, const RngStream& rng);

/// Estimates for a procedure; Original uses the fit and ignores the release.
CombinedEstimates estimates_for(const ReplicateData& data, Procedure procedure);

struct RejectionRate {
    std::size_t rejections = 0;
    std::size_t replicates = 0;

    double rate() const { return static_cast<double>(rejections) / static_cast<double>(replicates); }
    /// Binomial standard error.
    double standard_error() const;
};

/// Fraction of replicates whose test of `hyp` rejects when the data come from
/// setup.b. Replicate r uses rng.substream(r).
RejectionRate power(const ReplicateSetup& setup, const MatrixXd& hyp, const PivotSpec& spec,
                    const CutoffTable& ct, std::size_t n_replicates, const RngStream& rng,
                    int threads = 0);

}  // namespace fpps
