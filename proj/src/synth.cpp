#include "fpps/synth.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "fpps/csv.hpp"
#include "fpps/errors.hpp"

namespace fpps {

std::string to_string(Method method) {
    switch (method) {
    case Method::PlugIn:
        return "plugin";
    case Method::PPS:
        return "pps";
    case Method::FPPS:
        return "fpps";
    }
    return "unknown";
}

Method method_from_string(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    t.erase(std::remove(t.begin(), t.end(), '-'), t.end());
    if (t == "plugin") {
        return Method::PlugIn;
    }
    if (t == "pps") {
        return Method::PPS;
    }
    if (t == "fpps") {
        return Method::FPPS;
    }
    throw ConfigError("unknown synthesis method '" + text + "' (expected plugin, pps or fpps)");
}

PosteriorDraw draw_posterior(const FitResult& fit, const Design& design, double alpha,
                             RngStream& rng) {
    const double n = static_cast<double>(fit.n);
    const double p = static_cast<double>(fit.p);
    const double m = static_cast<double>(fit.m);
    // The inverse-Wishart below is proper only when n + alpha - p > 2m, which is
    // stricter than n + alpha > p + m + 1 once m > 1.
    if (!(n + alpha > p + m + 1.0) || !(n + alpha - p > 2.0 * m)) {
        std::ostringstream os;
        os << "posterior requires n + alpha > p + m + 1 and n + alpha - p > 2m, got n=" << fit.n << ", alpha=" << alpha
           << ", p=" << fit.p << ", m=" << fit.m;
        throw DomainError(os.str());
    }
    const SpdMatrix scale(static_cast<double>(fit.n - fit.p) * fit.s,
                          "(n-p)S (posterior inverse-Wishart scale)");
    SpdMatrix sigma_tilde = sample_inverse_wishart(scale, n + alpha - p, rng);
    MatrixXd b_tilde = sample_matrix_normal(fit.b_hat, design.gram_inverse(), sigma_tilde, rng);
    return PosteriorDraw{std::move(b_tilde), std::move(sigma_tilde)};
}

SyntheticRelease::SyntheticRelease(std::vector<MatrixXd> w, DesignPtr design, Method method,
                                   double alpha, int posterior_draws_used, std::uint64_t seed,
                                   std::uint64_t stream_id)
    : w_(std::move(w)),
      design_(std::move(design)),
      method_(method),
      alpha_(alpha),
      posterior_draws_used_(posterior_draws_used),
      seed_(seed),
      stream_id_(stream_id) {
    if (w_.empty()) {
        throw ConfigError("a synthetic release needs at least one dataset");
    }
    if (!design_) {
        throw ConfigError("a synthetic release needs its regressor matrix");
    }
    for (const auto& wj : w_) {
        if (wj.rows() != w_.front().rows() || wj.cols() != design_->n()) {
            throw DataError("synthetic datasets must all be m x n with n matching X");
        }
    }
}

SyntheticRelease generate(const FitResult& fit, DesignPtr design, const SynthesisConfig& cfg) {
    if (cfg.m_releases < 1) {
        throw ConfigError("number of released datasets M must be positive");
    }
    if (fit.p != design->p() || fit.n != design->n()) {
        throw ConfigError("fit and regressor matrix disagree on n or p");
    }
    const int releases = cfg.m_releases;
    std::vector<MatrixXd> w;
    w.reserve(static_cast<std::size_t>(releases));
    int posterior_draws = 0;

    switch (cfg.method) {
    case Method::PlugIn: {
        const SpdMatrix sigma(cfg.plugin_uses_mle ? fit.sigma_mle() : fit.s,
                              "plug-in covariance estimate");
        const MatrixXd mean = fit.b_hat.transpose() * design->x();
        for (int j = 0; j < releases; ++j) {
            RngStream noise = cfg.rng.substream(2 * static_cast<std::uint64_t>(j) + 1);
            w.push_back(sample_responses(mean, sigma, noise));
        }
        break;
    }
    case Method::FPPS: {
        RngStream post_rng = cfg.rng.substream(0);
        const PosteriorDraw draw = draw_posterior(fit, *design, cfg.alpha, post_rng);
        posterior_draws = 1;
        const MatrixXd mean = draw.b_tilde.transpose() * design->x();
        for (int j = 0; j < releases; ++j) {
            RngStream noise = cfg.rng.substream(2 * static_cast<std::uint64_t>(j) + 1);
            w.push_back(sample_responses(mean, draw.sigma_tilde, noise));
        }
        break;
    }
    case Method::PPS: {
        for (int j = 0; j < releases; ++j) {
            RngStream post_rng = cfg.rng.substream(2 * static_cast<std::uint64_t>(j));
            const PosteriorDraw draw = draw_posterior(fit, *design, cfg.alpha, post_rng);
            RngStream noise = cfg.rng.substream(2 * static_cast<std::uint64_t>(j) + 1);
            w.push_back(sample_responses(draw.b_tilde.transpose() * design->x(),
                                         draw.sigma_tilde, noise));
        }
        posterior_draws = releases;
        break;
    }
    }
    return SyntheticRelease(std::move(w), std::move(design), cfg.method, cfg.alpha,
                            posterior_draws, cfg.rng.seed(), cfg.rng.stream_id());
}

namespace {

std::string release_file_name(int j) {
    std::ostringstream os;
    os << "release_" << std::setw(3) << std::setfill('0') << j + 1 << ".csv";
    return os.str();
}

}  // namespace

void write_release(const SyntheticRelease& release, const std::filesystem::path& dir,
                   const std::vector<std::string>& response_names,
                   const std::vector<std::string>& regressor_names) {
    if (static_cast<Index>(response_names.size()) != release.m() ||
        static_cast<Index>(regressor_names.size()) != release.p()) {
        throw ConfigError("write_release: column names do not match release dimensions");
    }
    std::filesystem::create_directories(dir);
    const MatrixXd& x = release.design().x();
    nlohmann::json files = nlohmann::json::array();
    for (int j = 0; j < release.releases(); ++j) {
        const std::string name = release_file_name(j);
        std::ofstream out(dir / name);
        if (!out) {
            throw DataError("cannot write " + (dir / name).string());
        }
        std::vector<std::string> header = response_names;
        header.insert(header.end(), regressor_names.begin(), regressor_names.end());
        write_csv_row(out, header);
        const MatrixXd& wj = release.w()[static_cast<std::size_t>(j)];
        for (Index i = 0; i < release.n(); ++i) {
            std::vector<std::string> row;
            row.reserve(header.size());
            for (Index r = 0; r < wj.rows(); ++r) {
                row.push_back(format_double(wj(r, i)));
            }
            for (Index r = 0; r < x.rows(); ++r) {
                row.push_back(format_double(x(r, i)));
            }
            write_csv_row(out, row);
        }
        files.push_back(name);
    }
    nlohmann::json meta = {
        {"method", to_string(release.method())},
        {"alpha", release.alpha()},
        {"releases", release.releases()},
        {"posterior_draws_used", release.posterior_draws_used()},
        {"seed", release.seed()},
        {"stream_id", release.stream_id()},
        {"n", release.n()},
        {"m", release.m()},
        {"p", release.p()},
        {"responses", response_names},
        {"regressors", regressor_names},
        {"files", files},
    };
    std::ofstream side(dir / "release.json");
    side << meta.dump(2) << '\n';
}

LoadedRelease read_release(const std::filesystem::path& dir) {
    std::ifstream side(dir / "release.json");
    if (!side) {
        throw DataError("no release.json in " + dir.string());
    }
    nlohmann::json meta;
    try {
        side >> meta;
        const auto responses = meta.at("responses").get<std::vector<std::string>>();
        const auto regressors = meta.at("regressors").get<std::vector<std::string>>();
        const auto files = meta.at("files").get<std::vector<std::string>>();
        if (files.empty()) {
            throw DataError("release.json lists no datasets");
        }
        std::vector<MatrixXd> w;
        MatrixXd x;
        for (const auto& f : files) {
            const CsvTable t = read_csv(dir / f);
            const Index n = static_cast<Index>(t.rows.size());
            MatrixXd wj(static_cast<Index>(responses.size()), n);
            MatrixXd xj(static_cast<Index>(regressors.size()), n);
            for (std::size_t r = 0; r < responses.size(); ++r) {
                const auto col = t.numeric_column(responses[r]);
                wj.row(static_cast<Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(col.data(), n);
            }
            for (std::size_t r = 0; r < regressors.size(); ++r) {
                const auto col = t.numeric_column(regressors[r]);
                xj.row(static_cast<Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(col.data(), n);
            }
            if (x.size() == 0) {
                x = xj;
            } else if (x != xj) {
                throw DataError("regressors differ between released datasets in " + dir.string());
            }
            w.push_back(std::move(wj));
        }
        SyntheticRelease release(std::move(w), make_design(std::move(x)),
                                 method_from_string(meta.at("method").get<std::string>()),
                                 meta.at("alpha").get<double>(),
                                 meta.at("posterior_draws_used").get<int>(),
                                 meta.at("seed").get<std::uint64_t>(),
                                 meta.at("stream_id").get<std::uint64_t>());
        return LoadedRelease{std::move(release), responses, regressors};
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed release.json in " + dir.string() + ": " + e.what());
    }
}

}  // namespace fpps
