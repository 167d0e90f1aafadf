#include "fpps/pivotal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <json.hpp>

#include "fpps/csv.hpp"
#include "fpps/errors.hpp"
#include "fpps/parallel.hpp"

namespace fpps {

namespace {

constexpr std::size_t kBlockSize = 8192;

}  // namespace

Index PivotParams::denom_dof() const {
    switch (procedure) {
    case Procedure::Proc1:
        return static_cast<Index>(releases) * (n - p);
    case Procedure::Proc2:
        return static_cast<Index>(releases) * n - p;
    case Procedure::Original:
        return n - p;
    }
    return 0;
}

void PivotParams::validate() const {
    if (m < 1 || p < 1 || n <= p) {
        throw ConfigError("pivot parameters need m >= 1, p >= 1 and n > p (" + describe(*this) + ")");
    }
    if (k < m || k > p) {
        throw ConfigError("pivot needs m <= k <= p (" + describe(*this) + ")");
    }
    if (n - p < m) {
        throw DomainError("pivot needs n - p >= m (" + describe(*this) + ")");
    }
    if (procedure == Procedure::Original) {
        return;
    }
    if (releases < 1) {
        throw ConfigError("pivot needs M >= 1 released datasets (" + describe(*this) + ")");
    }
    const double slack = static_cast<double>(n) + alpha - static_cast<double>(p + 2 * m + 2);
    if (!(slack > 0.0)) {
        throw DomainError("synthetic-data pivots need n + alpha > p + 2m + 2 (" + describe(*this) +
                          ")");
    }
}

std::string describe(const PivotParams& params) {
    std::ostringstream os;
    os << "M=" << params.releases << ", n=" << params.n << ", m=" << params.m
       << ", p=" << params.p << ", k=" << params.k << ", alpha=" << params.alpha
       << ", procedure=" << to_string(params.procedure) << ", scaled=" << std::boolalpha
       << params.scaled;
    return os.str();
}

PivotParams pivot_params(const CombinedEstimates& est, const PivotSpec& spec) {
    if (est.procedure != spec.procedure) {
        throw ConfigError("estimates were combined with " + to_string(est.procedure) +
                          " but the pivot asks for " + to_string(spec.procedure));
    }
    PivotParams params;
    params.releases = est.procedure == Procedure::Original ? 0 : est.m_releases;
    params.n = est.n;
    params.m = est.m;
    params.p = est.p;
    params.k = spec.contrast ? spec.contrast->rows() : est.p;
    params.alpha = est.procedure == Procedure::Original ? 0.0 : est.alpha;
    params.procedure = spec.procedure;
    params.scaled = spec.scaled;
    return params;
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> draws, PivotParams params,
                                             std::uint64_t seed, std::uint64_t stream_id)
    : draws_(std::move(draws)), params_(params), seed_(seed), stream_id_(stream_id) {
    if (draws_.empty()) {
        throw ConfigError("an empirical distribution needs at least one draw");
    }
    for (double d : draws_) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw DataError("pivot draws must be finite and nonnegative");
        }
    }
    std::sort(draws_.begin(), draws_.end());
}

double EmpiricalDistribution::quantile(double q) const {
    if (!(q > 0.0 && q <= 1.0)) {
        throw ConfigError("quantile level must lie in (0, 1]");
    }
    const double n = static_cast<double>(draws_.size());
    auto index = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    index = std::clamp<std::size_t>(index, 1, draws_.size());
    return draws_[index - 1];
}

double EmpiricalDistribution::quantile_standard_error(double q) const {
    if (!(q > 0.0 && q < 1.0)) {
        throw ConfigError("quantile level must lie in (0, 1)");
    }
    const double n = static_cast<double>(draws_.size());
    const double centre = std::ceil(q * n - 1e-9);
    const double half = std::ceil(1.96 * std::sqrt(n * q * (1.0 - q)));
    const double last = n - 1.0;
    const auto lo = static_cast<std::size_t>(std::clamp(centre - half - 1.0, 0.0, last));
    const auto hi = static_cast<std::size_t>(std::clamp(centre + half - 1.0, 0.0, last));
    return (draws_[hi] - draws_[lo]) / (2.0 * 1.96);
}

double EmpiricalDistribution::p_value(double statistic) const {
    const auto it = std::lower_bound(draws_.begin(), draws_.end(), statistic);
    return static_cast<double>(draws_.end() - it) / static_cast<double>(draws_.size());
}

double EmpiricalDistribution::cdf(double value) const {
    const auto it = std::upper_bound(draws_.begin(), draws_.end(), value);
    return static_cast<double>(it - draws_.begin()) / static_cast<double>(draws_.size());
}

namespace {

nlohmann::json params_to_json(const PivotParams& p) {
    return {{"releases", p.releases}, {"n", p.n},
            {"m", p.m},               {"p", p.p},
            {"k", p.k},               {"alpha", p.alpha},
            {"procedure", to_string(p.procedure)}, {"scaled", p.scaled}};
}

PivotParams params_from_json(const nlohmann::json& j) {
    PivotParams p;
    p.releases = j.at("releases").get<int>();
    p.n = j.at("n").get<Index>();
    p.m = j.at("m").get<Index>();
    p.p = j.at("p").get<Index>();
    p.k = j.at("k").get<Index>();
    p.alpha = j.at("alpha").get<double>();
    p.procedure = procedure_from_string(j.at("procedure").get<std::string>());
    p.scaled = j.at("scaled").get<bool>();
    return p;
}

}  // namespace

void EmpiricalDistribution::save(const std::filesystem::path& base) const {
    std::filesystem::path csv = base;
    csv += ".csv";
    std::filesystem::path side = base;
    side += ".json";
    if (base.has_parent_path()) {
        std::filesystem::create_directories(base.parent_path());
    }
    std::ofstream out(csv);
    if (!out) {
        throw DataError("cannot write " + csv.string());
    }
    out << "value\n";
    for (double d : draws_) {
        out << format_double(d) << '\n';
    }
    nlohmann::json meta = {{"params", params_to_json(params_)},
                           {"n_draws", draws_.size()},
                           {"seed", seed_},
                           {"stream_id", stream_id_}};
    std::ofstream js(side);
    js << meta.dump(2) << '\n';
}

EmpiricalDistribution EmpiricalDistribution::load(const std::filesystem::path& base) {
    std::filesystem::path csv = base;
    csv += ".csv";
    std::filesystem::path side = base;
    side += ".json";
    std::ifstream js(side);
    if (!js) {
        throw DataError("cannot open " + side.string());
    }
    try {
        nlohmann::json meta;
        js >> meta;
        std::vector<double> draws = read_csv(csv).numeric_column("value");
        if (draws.size() != meta.at("n_draws").get<std::size_t>()) {
            throw DataError(csv.string() + " does not hold the number of draws its sidecar states");
        }
        return EmpiricalDistribution(std::move(draws), params_from_json(meta.at("params")),
                                     meta.at("seed").get<std::uint64_t>(),
                                     meta.at("stream_id").get<std::uint64_t>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed " + side.string() + ": " + e.what());
    }
}

MatrixXd hypothesis_cross_product(const CombinedEstimates& est, const MatrixXd& hyp,
                                  const std::optional<MatrixXd>& contrast) {
    if (!est.design) {
        throw ConfigError("estimates carry no regressor matrix");
    }
    MatrixXd q;
    if (!contrast) {
        if (hyp.rows() != est.p || hyp.cols() != est.m) {
            throw ConfigError("hypothesised B must be p x m");
        }
        if (est.p < est.m) {
            // Q would have rank p < m and its determinant is pure round-off.
            throw ConfigError("pivot on B needs p >= m");
        }
        const MatrixXd d = est.b_bar - hyp;
        q = d.transpose() * est.design->gram().matrix() * d;
    } else {
        const MatrixXd& a = *contrast;
        const Index k = a.rows();
        if (a.cols() != est.p) {
            throw ConfigError("contrast matrix must have p columns");
        }
        if (k < est.m) {
            throw ConfigError("contrast needs at least m rows (k >= m)");
        }
        Eigen::FullPivLU<MatrixXd> lu(a);
        if (lu.rank() != k) {
            std::ostringstream os;
            os << "contrast matrix has rank " << lu.rank() << " but " << k << " rows";
            throw RankError(os.str());
        }
        if (hyp.rows() != k || hyp.cols() != est.m) {
            throw ConfigError("hypothesised C = AB must be k x m");
        }
        const SpdMatrix g(a * est.design->gram_inverse().matrix() * a.transpose(),
                          "A (XX')^{-1} A'");
        const MatrixXd e = a * est.b_bar - hyp;
        q = e.transpose() * g.solve(e);
    }
    return 0.5 * (q + q.transpose());
}

double pivot_value(const CombinedEstimates& est, const MatrixXd& hyp, const PivotSpec& spec) {
    if (est.procedure != spec.procedure) {
        throw ConfigError("estimates were combined with " + to_string(est.procedure) +
                          " but the pivot asks for " + to_string(spec.procedure));
    }
    const MatrixXd q = hypothesis_cross_product(est, hyp, spec.contrast);
    const double dof = static_cast<double>(est.denom_dof);
    const double log_den = spd_log_det(est.s_tilde(), "denominator covariance matrix");
    const double num = psd_det(q);
    if (!(num > 0.0)) {
        return 0.0;
    }
    double log_value = std::log(num) - log_den;
    if (spec.scaled) {
        log_value += static_cast<double>(est.m) * std::log(dof);
    }
    return std::exp(log_value);
}

double sample_pivot_draw(const PivotParams& params, RngStream& rng) {
    const Index m = params.m;
    const double dof = static_cast<double>(params.denom_dof());
    double log_value = 0.0;
    for (Index i = 1; i <= m; ++i) {
        const double ii = static_cast<double>(i);
        log_value += std::log(rng.chi_squared(static_cast<double>(params.k) - ii + 1.0));
        log_value -= std::log(rng.chi_squared(dof - ii + 1.0));
    }
    if (params.procedure != Procedure::Original) {
        const double n = static_cast<double>(params.n);
        const double p = static_cast<double>(params.p);
        const double md = static_cast<double>(m);
        const MatrixXd t1 = bartlett_factor(m, n + params.alpha - p - md - 1.0, rng);
        const MatrixXd t2 = bartlett_factor(m, n - p, rng);
        const SpdMatrix a1(t1 * t1.transpose(), "A1");
        const SpdMatrix a2(t2 * t2.transpose(), "A2");
        const MatrixXd root = spd_sqrt(a1);
        MatrixXd omega = root * a2.inverse().matrix() * root;
        const double c = (static_cast<double>(params.releases) + 1.0) /
                         static_cast<double>(params.releases);
        omega.diagonal().array() += c;
        log_value += spd_log_det(0.5 * (omega + omega.transpose()), "((M+1)/M) I + Omega");
    }
    if (params.scaled) {
        log_value += static_cast<double>(m) * std::log(dof);
    }
    return std::exp(log_value);
}

EmpiricalDistribution sample_pivot_null(const PivotParams& requested, std::size_t n_draws,
                                        const RngStream& rng, int threads) {
    PivotParams params = requested;
    if (params.procedure == Procedure::Original) {
        // The original-data null does not involve M or alpha.
        params.releases = 0;
        params.alpha = 0.0;
    }
    params.validate();
    if (n_draws == 0) {
        throw ConfigError("need at least one null draw");
    }
    std::vector<double> draws(n_draws);
    const std::size_t blocks = (n_draws + kBlockSize - 1) / kBlockSize;
    parallel_for(
        blocks,
        [&](std::size_t b) {
            RngStream block_rng = rng.substream(b);
            const std::size_t end = std::min(n_draws, (b + 1) * kBlockSize);
            for (std::size_t i = b * kBlockSize; i < end; ++i) {
                draws[i] = sample_pivot_draw(params, block_rng);
            }
        },
        threads);
    return EmpiricalDistribution(std::move(draws), params, rng.seed(), rng.stream_id());
}

ClassicalCriteria classical_criteria(const CombinedEstimates& est, const MatrixXd& b_hyp) {
    const MatrixXd q = hypothesis_cross_product(est, b_hyp, std::nullopt);
    const SpdMatrix s(est.s_scale, "combined covariance estimate");
    const SpdMatrix s_plus_q(s.matrix() + q, "S + Q");
    ClassicalCriteria out;
    out.wilks = std::exp(s.log_det() - s_plus_q.log_det());
    out.pillai = s.solve(q).trace();
    out.hotelling_lawley = s_plus_q.solve(q).trace();
    const auto& l = s.cholesky_lower();
    const MatrixXd tmp = l.triangularView<Eigen::Lower>().solve(q);
    MatrixXd sym = l.triangularView<Eigen::Lower>().solve(tmp.transpose());
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    out.roy = std::max(0.0, eig.eigenvalues().maxCoeff());
    return out;
}

}  // namespace fpps
