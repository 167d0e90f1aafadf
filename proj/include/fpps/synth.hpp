#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fpps/mlr.hpp"

namespace fpps {

enum class Method { PlugIn, PPS, FPPS };

std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct SynthesisConfig {
    Method method = Method::FPPS;
    int m_releases = 1;
    double alpha = 0.0;
    RngStream rng{0, 0};
    /// Plug-in only: use the MLE (n-p)S/n instead of S as the plugged covariance.
    bool plugin_uses_mle = false;
};

/// One parameter pair drawn from the posterior under the prior |Sigma|^{-alpha/2}.
struct PosteriorDraw {
    MatrixXd b_tilde;
    SpdMatrix sigma_tilde;
};

/// Sigma-tilde ~ W^{-1}_m((n-p)S, n+alpha-p), then B-tilde | Sigma-tilde ~
/// N_{pm}(B-hat, Sigma-tilde (x) (XX')^{-1}). Requires n + alpha > p + m + 1 and
/// n + alpha - p > 2m (the two agree for m = 1).
PosteriorDraw draw_posterior(const FitResult& fit, const Design& design, double alpha,
                             RngStream& rng);

/// M synthetic response matrices sharing the original regressors.
class SyntheticRelease {
public:
    SyntheticRelease(std::vector<MatrixXd> w, DesignPtr design, Method method, double alpha,
                     int posterior_draws_used, std::uint64_t seed, std::uint64_t stream_id);

    const std::vector<MatrixXd>& w() const { return w_; }
    const Design& design() const { return *design_; }
    const DesignPtr& design_ptr() const { return design_; }
    Method method() const { return method_; }
    double alpha() const { return alpha_; }
    int posterior_draws_used() const { return posterior_draws_used_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    int releases() const { return static_cast<int>(w_.size()); }
    Index n() const { return design_->n(); }
    Index p() const { return design_->p(); }
    Index m() const { return w_.front().rows(); }

private:
    std::vector<MatrixXd> w_;
    DesignPtr design_;
    Method method_;
    double alpha_;
    int posterior_draws_used_;
    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

/// Generate a release. Stream layout: the posterior draw for dataset j comes
/// from cfg.rng.substream(2j) and the dataset's noise from substream(2j + 1);
/// FPPS draws its single posterior pair from substream(0). For M = 1 FPPS and
/// PPS therefore consume identical sequences.
SyntheticRelease generate(const FitResult& fit, DesignPtr design, const SynthesisConfig& cfg);

/// Writes release_<j>.csv (one row per observation: responses then regressors)
/// and release.json with provenance.
void write_release(const SyntheticRelease& release, const std::filesystem::path& dir,
                   const std::vector<std::string>& response_names,
                   const std::vector<std::string>& regressor_names);

struct LoadedRelease {
    SyntheticRelease release;
    std::vector<std::string> response_names;
    std::vector<std::string> regressor_names;
};

LoadedRelease read_release(const std::filesystem::path& dir);

}  // namespace fpps
