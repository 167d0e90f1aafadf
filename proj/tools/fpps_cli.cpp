// Command-line front end: data preparation, synthesis, inference and the
// Monte Carlo experiments.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpps/errors.hpp"
#include "fpps/harness/run.hpp"
#include "fpps/parallel.hpp"

using namespace fpps;
using namespace fpps::harness;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 1;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("-c,--config", common.config_path, "INI experiment configuration");
    cmd->add_option("-s,--seed", common.seed, "override mc.seed");
    cmd->add_option("-o,--out", common.out, "output directory (overrides output.dir)");
    cmd->add_option("-t,--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Common& common) {
    ExperimentConfig cfg = common.config_path.empty() ? ExperimentConfig{} : load_config(common.config_path);
    if (common.seed) {
        cfg.seed = *common.seed;
    }
    if (!common.out.empty()) {
        cfg.output_dir = common.out;
    }
    set_default_threads(common.threads);
    return cfg;
}

json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

void write_json(const std::filesystem::path& dir, const std::string& name, const json& j) {
    RunOutput out;
    out.summary = j;
    persist(out, dir);
    std::filesystem::rename(dir / "summary.json", dir / name);
    std::cout << j.dump(2) << '\n';
}

int cmd_fit(const Common& common) {
    const ExperimentConfig cfg = resolve(common);
    const LoadedData loaded = load_data(cfg);
    const FitResult f = fit(loaded.data);
    json j = {{"b_hat", matrix_json(f.b_hat)}, {"s", matrix_json(f.s)}, {"n", f.n}, {"m", f.m}, {"p", f.p},
              {"responses", cfg.responses}, {"regressors", loaded.regressor_names}};
    write_json(cfg.output_dir, "fit.json", j);
    return 0;
}

int cmd_synthesize(const Common& common) {
    const ExperimentConfig cfg = resolve(common);
    const LoadedData loaded = load_data(cfg);
    const FitResult f = fit(loaded.data);
    SynthesisConfig sc;
    sc.method = cfg.method;
    sc.m_releases = cfg.releases.front();
    sc.alpha = cfg.alpha;
    sc.plugin_uses_mle = cfg.plugin_uses_mle;
    sc.rng = RngStream(cfg.seed, stable_hash("synthesize"));
    const SyntheticRelease release = generate(f, loaded.data.design_ptr(), sc);
    write_release(release, cfg.output_dir, cfg.responses, loaded.regressor_names);
    std::cout << "wrote " << release.releases() << " dataset(s) to " << cfg.output_dir << '\n';
    return 0;
}

struct PivotChoice {
    std::string procedure = "proc1";
    std::string target = "B";
};

PivotSpec make_spec(const ExperimentConfig& cfg, const PivotChoice& choice) {
    PivotSpec spec;
    spec.procedure = procedure_from_string(choice.procedure);
    spec.scaled = cfg.scaled;
    if (choice.target == "AB") {
        if (!cfg.contrast) {
            throw ConfigError("target AB needs inference.contrast");
        }
        spec.contrast = cfg.contrast;
    } else if (choice.target != "B") {
        throw ConfigError("target must be B or AB");
    }
    return spec;
}

int cmd_cutoff(const Common& common, const PivotChoice& choice, std::optional<int> n,
               std::optional<int> releases) {
    const ExperimentConfig cfg = resolve(common);
    const PivotSpec spec = make_spec(cfg, choice);
    PivotParams pp;
    pp.procedure = spec.procedure;
    pp.releases = spec.procedure == Procedure::Original ? 0 : releases.value_or(cfg.releases.front());
    pp.n = n.value_or(cfg.n_values.front());
    pp.m = cfg.m();
    pp.p = cfg.p();
    pp.k = spec.contrast ? spec.contrast->rows() : cfg.p();
    pp.alpha = spec.procedure == Procedure::Original ? 0.0 : cfg.alpha;
    pp.scaled = spec.scaled;
    const CutoffTable ct = cutoff(pp, cfg.gamma, cfg.n_draws, RngStream(cfg.seed, stable_hash(describe(pp))));
    const std::filesystem::path dir = cfg.output_dir;
    ct.distribution->save(dir / "null");
    json j = {{"params", describe(pp)}, {"gamma", ct.gamma}, {"delta", ct.delta}, {"n_draws", ct.n_draws},
              {"distribution", (dir / "null").string()}};
    write_json(dir, "cutoff.json", j);
    return 0;
}

int cmd_test(const Common& common, const PivotChoice& choice, const std::string& release_dir,
             const std::string& hyp_text, const std::string& null_base) {
    const ExperimentConfig cfg = resolve(common);
    const PivotSpec spec = make_spec(cfg, choice);
    if (spec.procedure == Procedure::Original) {
        throw ConfigError("test works on synthetic releases; use proc1 or proc2");
    }
    const LoadedRelease loaded = read_release(release_dir);
    const CombinedEstimates est = combine(loaded.release, spec.procedure);
    const Index rows = spec.contrast ? spec.contrast->rows() : est.p;
    const MatrixXd hyp = hyp_text.empty() ? MatrixXd::Zero(rows, est.m) : parse_matrix(hyp_text, "--hyp");
    CutoffTable ct;
    if (!null_base.empty()) {
        ct = cutoff_from(std::make_shared<const EmpiricalDistribution>(EmpiricalDistribution::load(null_base)),
                         cfg.gamma);
    } else {
        const PivotParams pp = pivot_params(est, spec);
        ct = cutoff(pp, cfg.gamma, cfg.n_draws, RngStream(cfg.seed, stable_hash(describe(pp))));
    }
    const TestReport rep = test(est, hyp, spec, ct);
    json j = {{"statistic", rep.statistic}, {"cutoff", rep.cutoff}, {"p_value", rep.p_value},
              {"decision", to_string(rep.decision)}, {"gamma", ct.gamma}, {"params", describe(ct.params)},
              {"hypothesis", matrix_json(hyp)}, {"b_bar", matrix_json(est.b_bar)}};
    write_json(cfg.output_dir, "test.json", j);
    return 0;
}

int cmd_scenario(const Common& common, Scenario scenario) {
    ExperimentConfig cfg = resolve(common);
    cfg.scenario = scenario;
    const RunOutput out = run(cfg, common.threads);
    std::cout << "scenario " << to_string(scenario) << " written to " << cfg.output_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic multivariate-regression releases with exact pivotal inference"};
    app.require_subcommand(1);

    Common common;
    PivotChoice choice;
    std::optional<int> n_override;
    std::optional<int> releases_override;
    std::string release_dir;
    std::string hyp_text;
    std::string null_base;

    auto* fit_cmd = app.add_subcommand("fit", "estimate B-hat and S from the [data] section");
    auto* synth_cmd = app.add_subcommand("synthesize", "write a synthetic release of the [data] sample");
    auto* cutoff_cmd = app.add_subcommand("cutoff", "simulate a pivot's null distribution and cut-off");
    auto* test_cmd = app.add_subcommand("test", "test a hypothesis on B or AB from a release directory");
    std::vector<std::pair<CLI::App*, Scenario>> scenarios = {
        {app.add_subcommand("cutoff-table", "cut-offs over the configured grid"), Scenario::CutoffTable},
        {app.add_subcommand("coverage", "confidence-set coverage experiment"), Scenario::Coverage},
        {app.add_subcommand("radius", "confidence-set radius experiment"), Scenario::Radius},
        {app.add_subcommand("power", "power along a ray of alternatives"), Scenario::Power},
        {app.add_subcommand("privacy", "disclosure-risk measures"), Scenario::Privacy},
        {app.add_subcommand("nonpivotal-demo", "classical criteria across correlations"),
         Scenario::NonPivotalDemo},
    };
    for (auto* cmd : {fit_cmd, synth_cmd, cutoff_cmd, test_cmd}) {
        add_common(cmd, common);
    }
    for (auto& [cmd, s] : scenarios) {
        add_common(cmd, common);
    }
    for (auto* cmd : {cutoff_cmd, test_cmd}) {
        cmd->add_option("--procedure", choice.procedure, "proc1, proc2 or original");
        cmd->add_option("--target", choice.target, "B or AB");
    }
    cutoff_cmd->add_option("--n", n_override, "sample size (default: first model.n)");
    cutoff_cmd->add_option("--releases", releases_override, "M (default: first synthesis.releases)");
    test_cmd->add_option("--release", release_dir, "directory written by synthesize")->required();
    test_cmd->add_option("--hyp", hyp_text, "hypothesised B or C as \"a,b;c,d\" (default zero)");
    test_cmd->add_option("--null", null_base, "saved null distribution (path without extension)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(common);
        if (synth_cmd->parsed()) return cmd_synthesize(common);
        if (cutoff_cmd->parsed()) return cmd_cutoff(common, choice, n_override, releases_override);
        if (test_cmd->parsed()) return cmd_test(common, choice, release_dir, hyp_text, null_base);
        for (auto& [cmd, s] : scenarios) {
            if (cmd->parsed()) return cmd_scenario(common, s);
        }
    } catch (const fpps::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
