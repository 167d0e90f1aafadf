#include "fpps/combine.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "fpps/errors.hpp"

namespace fpps {

std::string to_string(Procedure procedure) {
    switch (procedure) {
    case Procedure::Proc1:
        return "proc1";
    case Procedure::Proc2:
        return "proc2";
    case Procedure::Original:
        return "original";
    }
    return "unknown";
}

Procedure procedure_from_string(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "proc1" || t == "1") {
        return Procedure::Proc1;
    }
    if (t == "proc2" || t == "2") {
        return Procedure::Proc2;
    }
    if (t == "original" || t == "0") {
        return Procedure::Original;
    }
    throw ConfigError("unknown procedure '" + text + "' (expected proc1, proc2 or original)");
}

namespace {

CombinedEstimates shell(const SyntheticRelease& release, Procedure procedure) {
    CombinedEstimates est;
    est.procedure = procedure;
    est.m_releases = release.releases();
    est.n = release.n();
    est.p = release.p();
    est.m = release.m();
    est.alpha = release.alpha();
    est.design = release.design_ptr();
    return est;
}

}  // namespace

CombinedEstimates combine_proc1(const SyntheticRelease& release) {
    CombinedEstimates est = shell(release, Procedure::Proc1);
    const Design& design = release.design();
    const double big_m = static_cast<double>(release.releases());
    MatrixXd b_sum = MatrixXd::Zero(est.p, est.m);
    MatrixXd s_sum = MatrixXd::Zero(est.m, est.m);
    for (const MatrixXd& wj : release.w()) {
        const MatrixXd bj = design.ols(wj);
        b_sum += bj;
        s_sum += design.residual_cross_product(wj, bj);
    }
    est.b_bar = b_sum / big_m;
    est.s_scale = s_sum / (big_m * static_cast<double>(est.n - est.p));
    est.s_scale = 0.5 * (est.s_scale + est.s_scale.transpose()).eval();
    est.denom_dof = static_cast<Index>(release.releases()) * (est.n - est.p);
    return est;
}

CombinedEstimates combine_proc2(const SyntheticRelease& release) {
    CombinedEstimates est = shell(release, Procedure::Proc2);
    const Design& design = release.design();
    const int releases = release.releases();
    const double big_m = static_cast<double>(releases);

    MatrixXd w_bar = MatrixXd::Zero(est.m, est.n);
    for (const MatrixXd& wj : release.w()) {
        w_bar += wj;
    }
    w_bar /= big_m;

    MatrixXd s_w = MatrixXd::Zero(est.m, est.m);
    for (const MatrixXd& wj : release.w()) {
        const MatrixXd d = wj - w_bar;
        s_w.noalias() += d * d.transpose();
    }
    est.b_bar = design.ols(w_bar);
    const MatrixXd s_mean = design.residual_cross_product(w_bar, est.b_bar);
    est.denom_dof = static_cast<Index>(releases) * est.n - est.p;
    est.s_scale = (s_w + big_m * s_mean) / static_cast<double>(est.denom_dof);
    est.s_scale = 0.5 * (est.s_scale + est.s_scale.transpose()).eval();
    return est;
}

CombinedEstimates combine(const SyntheticRelease& release, Procedure procedure) {
    switch (procedure) {
    case Procedure::Proc1:
        return combine_proc1(release);
    case Procedure::Proc2:
        return combine_proc2(release);
    case Procedure::Original:
        break;
    }
    throw ConfigError("a synthetic release cannot be combined with the original-data procedure");
}

CombinedEstimates original_estimates(const FitResult& fit, DesignPtr design) {
    if (!design || design->n() != fit.n || design->p() != fit.p) {
        throw ConfigError("original_estimates: regressor matrix does not match the fit");
    }
    CombinedEstimates est;
    est.b_bar = fit.b_hat;
    est.s_scale = fit.s;
    est.procedure = Procedure::Original;
    est.denom_dof = fit.n - fit.p;
    est.m_releases = 0;
    est.n = fit.n;
    est.p = fit.p;
    est.m = fit.m;
    est.design = std::move(design);
    return est;
}

MatrixXd unbiased_sigma(const CombinedEstimates& est) {
    if (est.procedure == Procedure::Original) {
        return est.s_scale;
    }
    const double n = static_cast<double>(est.n);
    const double p = static_cast<double>(est.p);
    const double m = static_cast<double>(est.m);
    const double num = n + est.alpha - p - 2.0 * m - 2.0;
    if (!(num > 0.0)) {
        std::ostringstream os;
        os << "unbiased estimator requires n + alpha > p + 2m + 2, got n=" << est.n
           << ", alpha=" << est.alpha << ", p=" << est.p << ", m=" << est.m;
        throw DomainError(os.str());
    }
    if (num == n - p) {
        return est.s_scale;
    }
    return (num / (n - p)) * est.s_scale;
}

}  // namespace fpps
