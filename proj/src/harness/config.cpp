#include "fpps/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <Eigen/LU>

#include "fpps/csv.hpp"
#include "fpps/errors.hpp"

namespace fpps::harness {

namespace pt = boost::property_tree;

std::string to_string(Scenario scenario) {
    switch (scenario) {
    case Scenario::CutoffTable:
        return "cutoff_table";
    case Scenario::Coverage:
        return "coverage";
    case Scenario::Radius:
        return "radius";
    case Scenario::Power:
        return "power";
    case Scenario::Privacy:
        return "privacy";
    case Scenario::NonPivotalDemo:
        return "nonpivotal_demo";
    }
    return "unknown";
}

Scenario scenario_from_string(const std::string& text) {
    std::string t = boost::algorithm::to_lower_copy(text);
    std::replace(t.begin(), t.end(), '-', '_');
    for (Scenario s : {Scenario::CutoffTable, Scenario::Coverage, Scenario::Radius, Scenario::Power,
                       Scenario::Privacy, Scenario::NonPivotalDemo}) {
        if (to_string(s) == t) {
            return s;
        }
    }
    throw ConfigError("unknown scenario '" + text + "'");
}

ExperimentConfig::ExperimentConfig() {
    b.resize(3, 2);
    b << 1, 2, 3, 2, 1, 1;
    sigma.resize(2, 2);
    sigma << 1, 0.5, 0.5, 1;
    MatrixXd a(2, 3);
    a << 0, 1, 0, 0, 0, 1;
    contrast = a;
}

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    const std::string trimmed = boost::algorithm::trim_copy(text);
    if (trimmed.empty()) {
        return out;
    }
    boost::algorithm::split(out, trimmed, boost::is_any_of(","));
    for (auto& s : out) {
        boost::algorithm::trim(s);
    }
    return out;
}

std::string join(const std::vector<std::string>& items) { return boost::algorithm::join(items, ","); }

template <class T, class F>
std::vector<T> parse_list(const std::string& text, F convert) {
    std::vector<T> out;
    for (const auto& s : split_list(text)) {
        out.push_back(convert(s));
    }
    return out;
}

template <class T, class F>
std::string format_list(const std::vector<T>& items, F convert) {
    std::vector<std::string> s;
    for (const auto& v : items) {
        s.push_back(convert(v));
    }
    return join(s);
}

double to_double(const std::string& s, const std::string& key) {
    try {
        return parse_double(s, key);
    } catch (const DataError&) {
        throw ConfigError("config key " + key + ": '" + s + "' is not a number");
    }
}

long long to_integer(const std::string& s, const std::string& key) {
    const double v = to_double(s, key);
    if (v != static_cast<double>(static_cast<long long>(v))) {
        throw ConfigError("config key " + key + ": '" + s + "' is not an integer");
    }
    return static_cast<long long>(v);
}

std::uint64_t to_u64(const std::string& s, const std::string& key) {
    std::uint64_t v = 0;
    const std::string t = boost::algorithm::trim_copy(s);
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw ConfigError("config key " + key + ": '" + s + "' is not an unsigned integer");
    }
    return v;
}

bool to_bool(const std::string& s, const std::string& key) {
    const std::string t = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(s));
    if (t == "true" || t == "yes" || t == "1" || t == "on") {
        return true;
    }
    if (t == "false" || t == "no" || t == "0" || t == "off") {
        return false;
    }
    throw ConfigError("config key " + key + ": '" + s + "' is not a boolean");
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"scenario", {"name"}},
        {"model", {"b", "sigma", "n", "x_mean", "x_sd"}},
        {"data", {"path", "responses", "numeric", "categorical", "intercept"}},
        {"synthesis", {"method", "releases", "alpha", "plugin_mle"}},
        {"inference", {"gamma", "n_draws", "procedures", "contrast", "scaled"}},
        {"mc", {"iterations", "seed"}},
        {"output", {"dir"}},
        {"power", {"direction", "steps", "sources"}},
        {"privacy", {"epsilons", "methods"}},
        {"nonpivotal", {"rhos"}},
    };
    return keys;
}

}  // namespace

MatrixXd parse_matrix(const std::string& text, const std::string& what) {
    std::vector<std::string> rows;
    const std::string trimmed = boost::algorithm::trim_copy(text);
    boost::algorithm::split(rows, trimmed, boost::is_any_of(";"));
    std::vector<std::vector<double>> values;
    for (const auto& r : rows) {
        values.push_back(parse_list<double>(r, [&](const std::string& s) { return to_double(s, what); }));
    }
    if (values.empty() || values.front().empty()) {
        throw ConfigError(what + ": empty matrix");
    }
    MatrixXd m(static_cast<Index>(values.size()), static_cast<Index>(values.front().size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != values.front().size()) {
            throw ConfigError(what + ": rows have different lengths");
        }
        for (std::size_t j = 0; j < values[i].size(); ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = values[i][j];
        }
    }
    return m;
}

std::string format_matrix(const MatrixXd& m) {
    std::vector<std::string> rows;
    for (Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> cells;
        for (Index j = 0; j < m.cols(); ++j) {
            cells.push_back(format_double(m(i, j)));
        }
        rows.push_back(join(cells));
    }
    return boost::algorithm::join(rows, ";");
}

ExperimentConfig parse_config(const std::string& ini_text) {
    pt::ptree tree;
    try {
        std::istringstream in(ini_text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    std::set<std::string> level_keys;
    for (const auto& [section, body] : tree) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (section == "data" && boost::algorithm::starts_with(key, "levels.")) {
                continue;
            }
            if (!it->second.count(key)) {
                throw ConfigError("unknown config key " + section + "." + key);
            }
        }
    }

    ExperimentConfig c;
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '/'))) {
            return *v;
        }
        return std::nullopt;
    };
    if (auto v = get("scenario/name")) c.scenario = scenario_from_string(*v);
    if (auto v = get("model/b")) c.b = parse_matrix(*v, "model.b");
    if (auto v = get("model/sigma")) c.sigma = parse_matrix(*v, "model.sigma");
    if (auto v = get("model/n"))
        c.n_values = parse_list<int>(*v, [](const std::string& s) { return static_cast<int>(to_integer(s, "model.n")); });
    if (auto v = get("model/x_mean")) c.x_mean = to_double(*v, "model.x_mean");
    if (auto v = get("model/x_sd")) c.x_sd = to_double(*v, "model.x_sd");

    if (auto v = get("data/path")) c.data_path = boost::algorithm::trim_copy(*v);
    if (auto v = get("data/responses")) c.responses = split_list(*v);
    if (auto v = get("data/numeric")) c.design.numeric = split_list(*v);
    if (auto v = get("data/intercept")) c.design.intercept = to_bool(*v, "data.intercept");
    if (auto v = get("data/categorical")) {
        for (const auto& name : split_list(*v)) {
            CategoricalColumn col{name, {}};
            if (auto lv = get("data/levels." + name)) {
                col.levels = split_list(*lv);
            }
            c.design.categorical.push_back(col);
        }
    }

    if (auto v = get("synthesis/method")) c.method = method_from_string(boost::algorithm::trim_copy(*v));
    if (auto v = get("synthesis/releases"))
        c.releases = parse_list<int>(*v, [](const std::string& s) { return static_cast<int>(to_integer(s, "synthesis.releases")); });
    if (auto v = get("synthesis/alpha")) c.alpha = to_double(*v, "synthesis.alpha");
    if (auto v = get("synthesis/plugin_mle")) c.plugin_uses_mle = to_bool(*v, "synthesis.plugin_mle");

    if (auto v = get("inference/gamma")) c.gamma = to_double(*v, "inference.gamma");
    if (auto v = get("inference/n_draws")) c.n_draws = static_cast<std::size_t>(to_integer(*v, "inference.n_draws"));
    if (auto v = get("inference/procedures"))
        c.procedures = parse_list<Procedure>(*v, [](const std::string& s) { return procedure_from_string(s); });
    if (auto v = get("inference/contrast")) {
        const std::string t = boost::algorithm::trim_copy(*v);
        if (t.empty() || t == "none") {
            c.contrast.reset();
        } else {
            c.contrast = parse_matrix(t, "inference.contrast");
        }
    }
    if (auto v = get("inference/scaled")) c.scaled = to_bool(*v, "inference.scaled");

    if (auto v = get("mc/iterations")) c.iterations = static_cast<std::size_t>(to_integer(*v, "mc.iterations"));
    if (auto v = get("mc/seed")) c.seed = to_u64(*v, "mc.seed");

    if (auto v = get("output/dir")) c.output_dir = boost::algorithm::trim_copy(*v);

    if (auto v = get("power/direction")) {
        const std::string t = boost::algorithm::trim_copy(*v);
        if (t.empty() || t == "none") {
            c.power_direction.reset();
        } else {
            c.power_direction = parse_matrix(t, "power.direction");
        }
    }
    if (auto v = get("power/steps"))
        c.power_steps = parse_list<double>(*v, [](const std::string& s) { return to_double(s, "power.steps"); });
    if (auto v = get("power/sources"))
        c.power_sources = parse_list<Procedure>(*v, [](const std::string& s) { return procedure_from_string(s); });

    if (auto v = get("privacy/epsilons"))
        c.epsilons = parse_list<double>(*v, [](const std::string& s) { return to_double(s, "privacy.epsilons"); });
    if (auto v = get("privacy/methods"))
        c.privacy_methods = parse_list<Method>(*v, [](const std::string& s) { return method_from_string(s); });

    if (auto v = get("nonpivotal/rhos"))
        c.rhos = parse_list<double>(*v, [](const std::string& s) { return to_double(s, "nonpivotal.rhos"); });
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_ini(const ExperimentConfig& c) {
    auto num = [](double v) { return format_double(v); };
    auto integer = [](auto v) { return std::to_string(v); };
    std::ostringstream os;
    os << "[scenario]\nname = " << to_string(c.scenario) << "\n\n";
    os << "[model]\nb = " << format_matrix(c.b) << "\nsigma = " << format_matrix(c.sigma)
       << "\nn = " << format_list(c.n_values, integer) << "\nx_mean = " << num(c.x_mean)
       << "\nx_sd = " << num(c.x_sd) << "\n\n";
    os << "[data]\npath = " << c.data_path << "\nresponses = " << join(c.responses)
       << "\nnumeric = " << join(c.design.numeric) << "\ncategorical = "
       << format_list(c.design.categorical, [](const CategoricalColumn& col) { return col.name; })
       << "\nintercept = " << format_bool(c.design.intercept) << "\n";
    for (const auto& col : c.design.categorical) {
        if (!col.levels.empty()) {
            os << "levels." << col.name << " = " << join(col.levels) << "\n";
        }
    }
    os << "\n[synthesis]\nmethod = " << to_string(c.method)
       << "\nreleases = " << format_list(c.releases, integer) << "\nalpha = " << num(c.alpha)
       << "\nplugin_mle = " << format_bool(c.plugin_uses_mle) << "\n\n";
    os << "[inference]\ngamma = " << num(c.gamma) << "\nn_draws = " << c.n_draws
       << "\nprocedures = "
       << format_list(c.procedures, [](Procedure p) { return to_string(p); })
       << "\ncontrast = " << (c.contrast ? format_matrix(*c.contrast) : std::string("none"))
       << "\nscaled = " << format_bool(c.scaled) << "\n\n";
    os << "[mc]\niterations = " << c.iterations << "\nseed = " << c.seed << "\n\n";
    os << "[output]\ndir = " << c.output_dir << "\n\n";
    os << "[power]\ndirection = "
       << (c.power_direction ? format_matrix(*c.power_direction) : std::string("none"))
       << "\nsteps = " << format_list(c.power_steps, num) << "\nsources = "
       << format_list(c.power_sources, [](Procedure p) { return to_string(p); }) << "\n\n";
    os << "[privacy]\nepsilons = " << format_list(c.epsilons, num) << "\nmethods = "
       << format_list(c.privacy_methods, [](Method m) { return to_string(m); }) << "\n\n";
    os << "[nonpivotal]\nrhos = " << format_list(c.rhos, num) << "\n";
    return os.str();
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
    auto same_opt = [](const std::optional<MatrixXd>& a, const std::optional<MatrixXd>& b) {
        return a.has_value() == b.has_value() && (!a || (a->rows() == b->rows() && a->cols() == b->cols() && *a == *b));
    };
    auto same_mat = [](const MatrixXd& a, const MatrixXd& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    auto same_design = [](const DesignSpec& a, const DesignSpec& b) {
        if (a.numeric != b.numeric || a.intercept != b.intercept ||
            a.categorical.size() != b.categorical.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.categorical.size(); ++i) {
            if (a.categorical[i].name != b.categorical[i].name ||
                a.categorical[i].levels != b.categorical[i].levels) {
                return false;
            }
        }
        return true;
    };
    return scenario == o.scenario && same_mat(b, o.b) && same_mat(sigma, o.sigma) &&
           n_values == o.n_values && x_mean == o.x_mean && x_sd == o.x_sd &&
           data_path == o.data_path && responses == o.responses && same_design(design, o.design) &&
           method == o.method && releases == o.releases && alpha == o.alpha &&
           plugin_uses_mle == o.plugin_uses_mle && gamma == o.gamma && n_draws == o.n_draws &&
           procedures == o.procedures && same_opt(contrast, o.contrast) && scaled == o.scaled &&
           iterations == o.iterations && seed == o.seed && output_dir == o.output_dir &&
           same_opt(power_direction, o.power_direction) && power_steps == o.power_steps &&
           power_sources == o.power_sources && epsilons == o.epsilons &&
           privacy_methods == o.privacy_methods && rhos == o.rhos;
}

void ExperimentConfig::validate() const {
    const Index m_ = m();
    const Index p_ = p();
    if (b.size() == 0 || sigma.rows() != m_ || sigma.cols() != m_) {
        throw ConfigError("model.sigma must be m x m with m = columns of model.b");
    }
    SpdMatrix(sigma, "model.sigma");
    if (n_values.empty()) {
        throw ConfigError("model.n lists no sample sizes");
    }
    if (!(x_sd > 0.0)) {
        throw ConfigError("model.x_sd must be positive");
    }
    if (releases.empty() || *std::min_element(releases.begin(), releases.end()) < 1) {
        throw ConfigError("synthesis.releases must list positive counts");
    }
    const bool needs_pivot = scenario != Scenario::Privacy;
    for (int n : n_values) {
        if (n < m_ + p_ || n <= p_) {
            throw ConfigError("model.n = " + std::to_string(n) + " violates n >= m + p");
        }
        const double slack = static_cast<double>(n) + alpha -
                             static_cast<double>(needs_pivot ? p_ + 2 * m_ + 2 : p_ + std::max(m_ + 1, 2 * m_));
        if (!(slack > 0.0)) {
            std::ostringstream os;
            os << "n = " << n << ", alpha = " << alpha << " violates n + alpha > "
               << (needs_pivot ? "p + 2m + 2" : "p + max(m + 1, 2m)");
            throw DomainError(os.str());
        }
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ConfigError("inference.gamma must lie in (0, 1)");
    }
    if (n_draws < 1000) {
        throw ConfigError("inference.n_draws must be at least 1000");
    }
    if (procedures.empty()) {
        throw ConfigError("inference.procedures is empty");
    }
    if (contrast) {
        const MatrixXd& a = *contrast;
        if (a.cols() != p_ || a.rows() < m_ || a.rows() > p_) {
            throw ConfigError("inference.contrast must be k x p with m <= k <= p");
        }
        if (Eigen::FullPivLU<MatrixXd>(a).rank() != a.rows()) {
            throw RankError("inference.contrast does not have full row rank");
        }
    }
    if (iterations == 0) {
        throw ConfigError("mc.iterations must be positive");
    }
    if (power_direction && (power_direction->rows() != p_ || power_direction->cols() != m_)) {
        throw ConfigError("power.direction must be p x m");
    }
    if (power_steps.empty() || power_sources.empty()) {
        throw ConfigError("power.steps and power.sources must be non-empty");
    }
    for (double e : epsilons) {
        if (!(e > 0.0)) {
            throw ConfigError("privacy.epsilons must be positive");
        }
    }
    if (epsilons.empty() || privacy_methods.empty()) {
        throw ConfigError("privacy.epsilons and privacy.methods must be non-empty");
    }
    for (double r : rhos) {
        if (!(r > -1.0 / static_cast<double>(std::max<Index>(m_ - 1, 1)) && r < 1.0)) {
            throw ConfigError("nonpivotal.rhos must give positive-definite equicorrelation matrices");
        }
    }
    if (!data_path.empty() && responses.empty()) {
        throw ConfigError("data.responses must name the response columns");
    }
}

}  // namespace fpps::harness
