#include "fpps/inference.hpp"

#include <cmath>

#include "fpps/errors.hpp"
#include "fpps/parallel.hpp"

namespace fpps {

CutoffTable cutoff(const PivotParams& params, double gamma, std::size_t n_draws,
                   const RngStream& rng, int threads) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("gamma must lie in (0, 1)");
    }
    if (n_draws < 1000) {
        throw ConfigError("cut-offs need at least 1000 null draws");
    }
    auto dist = std::make_shared<const EmpiricalDistribution>(
        sample_pivot_null(params, n_draws, rng, threads));
    return cutoff_from(std::move(dist), gamma);
}

CutoffTable cutoff_from(std::shared_ptr<const EmpiricalDistribution> distribution, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("gamma must lie in (0, 1)");
    }
    CutoffTable ct;
    ct.gamma = gamma;
    ct.delta = distribution->upper_cutoff(gamma);
    ct.params = distribution->params();
    ct.n_draws = distribution->n_draws();
    ct.distribution = std::move(distribution);
    return ct;
}

std::string to_string(Decision decision) {
    return decision == Decision::Reject ? "reject" : "fail_to_reject";
}

TestReport test(const CombinedEstimates& est, const MatrixXd& hyp, const PivotSpec& spec,
                const CutoffTable& ct) {
    const PivotParams expected = pivot_params(est, spec);
    if (!(expected == ct.params)) {
        throw ConfigError("cut-off table was simulated for " + describe(ct.params) +
                          " but the estimates need " + describe(expected));
    }
    TestReport report;
    report.statistic = pivot_value(est, hyp, spec);
    report.cutoff = ct.delta;
    report.p_value = ct.distribution->p_value(report.statistic);
    report.decision = report.statistic > ct.delta ? Decision::Reject : Decision::FailToReject;
    return report;
}

ReplicateData simulate_replicate(const ReplicateSetup& setup, const RngStream& rng) {
    if (!setup.design) {
        throw ConfigError("replicate setup has no regressor matrix");
    }
    RngStream data_rng = rng.substream(0);
    const ModelData original =
        simulate_original(setup.b, SpdMatrix(setup.sigma, "Sigma"), setup.design, data_rng);
    ReplicateData out{fit(original), setup.design, std::nullopt};
    if (setup.releases > 0) {
        SynthesisConfig cfg;
        cfg.method = setup.method;
        cfg.m_releases = setup.releases;
        cfg.alpha = setup.alpha;
        cfg.rng = rng.substream(1);
        out.release = generate(out.fit, setup.design, cfg);
    }
    return out;
}

CombinedEstimates estimates_for(const ReplicateData& data, Procedure procedure) {
    if (procedure == Procedure::Original) {
        return original_estimates(data.fit, data.design);
    }
    if (!data.release) {
        throw ConfigError("replicate has no synthetic release to combine");
    }
    return combine(*data.release, procedure);
}

double RejectionRate::standard_error() const {
    const double r = rate();
    return std::sqrt(r * (1.0 - r) / static_cast<double>(replicates));
}

RejectionRate power(const ReplicateSetup& setup, const MatrixXd& hyp, const PivotSpec& spec,
                    const CutoffTable& ct, std::size_t n_replicates, const RngStream& rng,
                    int threads) {
    if (n_replicates == 0) {
        throw ConfigError("power needs at least one replicate");
    }
    ReplicateSetup effective = setup;
    if (spec.procedure == Procedure::Original) {
        effective.releases = 0;
    }
    std::vector<unsigned char> rejected(n_replicates, 0);
    parallel_for(
        n_replicates,
        [&](std::size_t r) {
            const ReplicateData data = simulate_replicate(effective, rng.substream(r));
            const CombinedEstimates est = estimates_for(data, spec.procedure);
            rejected[r] = test(est, hyp, spec, ct).decision == Decision::Reject ? 1 : 0;
        },
        threads);
    RejectionRate out;
    out.replicates = n_replicates;
    for (unsigned char v : rejected) {
        out.rejections += v;
    }
    return out;
}

}  // namespace fpps
