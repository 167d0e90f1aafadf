#include "fpps/harness/run.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fpps/csv.hpp"
#include "fpps/errors.hpp"
#include "fpps/metrics.hpp"
#include "fpps/parallel.hpp"

namespace fpps::harness {

using nlohmann::json;

std::uint64_t stable_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(h);
}

MatrixXd equicorrelation(Index m, double rho) {
    MatrixXd s = MatrixXd::Constant(m, m, rho);
    s.diagonal().setOnes();
    return s;
}

namespace {

// Top-level stream tags; each scenario component draws from its own subtree.
enum Tag : std::uint64_t {
    kDesignTag = 1,
    kCutoffTag = 2,
    kReplicateTag = 3,
    kPowerTag = 4,
    kOriginalTag = 5,
    kPrivacyTag = 6,
    kNonPivotalTag = 7,
};

RngStream root_stream(const ExperimentConfig& cfg) { return RngStream(cfg.seed, 0); }

class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(json row) { rows_.push_back(std::move(row)); }

    std::string csv() const {
        std::ostringstream os;
        write_csv_row(os, columns_);
        for (const auto& row : rows_) {
            std::vector<std::string> cells;
            for (const auto& c : columns_) {
                const json& v = row.at(c);
                if (v.is_number_float()) {
                    cells.push_back(format_double(v.get<double>()));
                } else if (v.is_number_integer()) {
                    cells.push_back(std::to_string(v.get<long long>()));
                } else if (v.is_boolean()) {
                    cells.push_back(v.get<bool>() ? "true" : "false");
                } else if (v.is_null()) {
                    cells.push_back("");
                } else {
                    cells.push_back(v.get<std::string>());
                }
            }
            write_csv_row(os, cells);
        }
        return os.str();
    }

    json rows() const { return json(rows_); }

private:
    std::vector<std::string> columns_;
    std::vector<json> rows_;
};

struct Target {
    std::string name;
    std::optional<MatrixXd> contrast;
};

std::vector<Target> targets(const ExperimentConfig& cfg) {
    std::vector<Target> out{{"B", std::nullopt}};
    if (cfg.contrast) {
        out.push_back({"AB", cfg.contrast});
    }
    return out;
}

MatrixXd hypothesis(const Target& t, const MatrixXd& b) { return t.contrast ? MatrixXd(*t.contrast * b) : b; }

std::vector<Procedure> synthetic_procedures(const std::vector<Procedure>& procs) {
    std::vector<Procedure> out;
    for (Procedure p : procs) {
        if (p != Procedure::Original) {
            out.push_back(p);
        }
    }
    return out;
}

bool has_original(const std::vector<Procedure>& procs) {
    return std::find(procs.begin(), procs.end(), Procedure::Original) != procs.end();
}

class Context {
public:
    Context(const ExperimentConfig& cfg, int threads) : cfg_(cfg), root_(root_stream(cfg)), threads_(threads) {}

    const ExperimentConfig& cfg() const { return cfg_; }
    const RngStream& root() const { return root_; }
    int threads() const { return threads_; }

    PivotParams params(int n, int releases, Procedure proc, const Target& t) const {
        PivotParams pp;
        pp.releases = proc == Procedure::Original ? 0 : releases;
        pp.n = n;
        pp.m = cfg_.m();
        pp.p = cfg_.p();
        pp.k = t.contrast ? t.contrast->rows() : cfg_.p();
        pp.alpha = proc == Procedure::Original ? 0.0 : cfg_.alpha;
        pp.procedure = proc;
        pp.scaled = cfg_.scaled;
        return pp;
    }

    PivotSpec spec(Procedure proc, const Target& t) const { return PivotSpec{proc, t.contrast, cfg_.scaled}; }

    const CutoffTable& cutoff_for(const PivotParams& params) {
        const std::string key = describe(params);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const RngStream rng = root_.substream(kCutoffTag).substream(stable_hash(key));
            it = cache_.emplace(key, cutoff(params, cfg_.gamma, cfg_.n_draws, rng, threads_)).first;
        }
        return it->second;
    }

    DesignPtr design(int n) {
        auto it = designs_.find(n);
        if (it == designs_.end()) {
            it = designs_.emplace(n, make_design(simulated_regressors(cfg_, n))).first;
        }
        return it->second;
    }

    ReplicateSetup setup(int n, int releases, const MatrixXd& sigma) {
        return ReplicateSetup{cfg_.b, sigma, design(n), cfg_.method, releases, cfg_.alpha};
    }

private:
    const ExperimentConfig& cfg_;
    RngStream root_;
    int threads_;
    std::map<std::string, CutoffTable> cache_;
    std::map<int, DesignPtr> designs_;
};

double binomial_se(double rate, std::size_t n) {
    return std::sqrt(rate * (1.0 - rate) / static_cast<double>(n));
}

void scenario_cutoffs(Context& ctx, RunOutput& out) {
    const auto& cfg = ctx.cfg();
    Table table({"n", "releases", "procedure", "target", "k", "m", "p", "alpha", "scaled", "gamma",
                 "delta", "delta_se", "n_draws"});
    auto emit = [&](int n, int releases, Procedure proc, const Target& t) {
        const PivotParams pp = ctx.params(n, releases, proc, t);
        const CutoffTable& ct = ctx.cutoff_for(pp);
        table.add({{"n", n}, {"releases", pp.releases}, {"procedure", to_string(proc)},
                   {"target", t.name}, {"k", pp.k}, {"m", pp.m}, {"p", pp.p},
                   {"alpha", pp.alpha}, {"scaled", pp.scaled}, {"gamma", cfg.gamma},
                   {"delta", ct.delta},
                   {"delta_se", ct.distribution->quantile_standard_error(1.0 - cfg.gamma)},
                   {"n_draws", ct.n_draws}});
    };
    for (int n : cfg.n_values) {
        for (const Target& t : targets(cfg)) {
            if (has_original(cfg.procedures)) {
                emit(n, 0, Procedure::Original, t);
            }
            for (int releases : cfg.releases) {
                for (Procedure proc : synthetic_procedures(cfg.procedures)) {
                    emit(n, releases, proc, t);
                }
            }
        }
    }
    out.files["cutoffs.csv"] = table.csv();
    out.summary["cutoffs"] = table.rows();
}

// Replicate r for sample size n and release count M. Shared by every
// procedure and target so they are compared on the same data.
RngStream replicate_stream(const Context& ctx, int n, int releases, std::size_t r) {
    return ctx.root()
        .substream(kReplicateTag)
        .substream(static_cast<std::uint64_t>(n))
        .substream(static_cast<std::uint64_t>(releases))
        .substream(r);
}

struct Cell {
    Procedure procedure;
    Target target;
    const CutoffTable* ct;
};

void scenario_coverage(Context& ctx, RunOutput& out) {
    const auto& cfg = ctx.cfg();
    Table table({"n", "releases", "procedure", "target", "coverage", "se", "replicates", "delta"});
    auto block = [&](int n, int releases, const std::vector<Procedure>& procs) {
        std::vector<Cell> cells;
        for (Procedure proc : procs) {
            for (const Target& t : targets(cfg)) {
                cells.push_back({proc, t, &ctx.cutoff_for(ctx.params(n, releases, proc, t))});
            }
        }
        const ReplicateSetup setup = ctx.setup(n, releases, cfg.sigma);
        std::vector<unsigned char> inside(cfg.iterations * cells.size(), 0);
        parallel_for(
            cfg.iterations,
            [&](std::size_t r) {
                const ReplicateData data = simulate_replicate(setup, replicate_stream(ctx, n, releases, r));
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    const CombinedEstimates est = estimates_for(data, cells[c].procedure);
                    const TestReport rep = test(est, hypothesis(cells[c].target, cfg.b),
                                                ctx.spec(cells[c].procedure, cells[c].target), *cells[c].ct);
                    inside[r * cells.size() + c] = rep.in_confidence_set() ? 1 : 0;
                }
            },
            ctx.threads());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::size_t hits = 0;
            for (std::size_t r = 0; r < cfg.iterations; ++r) {
                hits += inside[r * cells.size() + c];
            }
            const double cov = static_cast<double>(hits) / static_cast<double>(cfg.iterations);
            table.add({{"n", n}, {"releases", releases}, {"procedure", to_string(cells[c].procedure)},
                       {"target", cells[c].target.name}, {"coverage", cov},
                       {"se", binomial_se(cov, cfg.iterations)}, {"replicates", cfg.iterations},
                       {"delta", cells[c].ct->delta}});
        }
    };
    for (int n : cfg.n_values) {
        if (has_original(cfg.procedures)) {
            block(n, 0, {Procedure::Original});
        }
        const auto procs = synthetic_procedures(cfg.procedures);
        if (!procs.empty()) {
            for (int releases : cfg.releases) {
                block(n, releases, procs);
            }
        }
    }
    out.files["coverage.csv"] = table.csv();
    out.summary["coverage"] = table.rows();
}

void scenario_radius(Context& ctx, RunOutput& out) {
    const auto& cfg = ctx.cfg();
    const double det_sigma = SpdMatrix(cfg.sigma, "model.sigma").det();
    Table table({"n", "releases", "procedure", "target", "avg_upsilon", "se", "expected",
                 "relative_gap", "replicates", "delta"});
    auto block = [&](int n, int releases, const std::vector<Procedure>& procs) {
        std::vector<Cell> cells;
        for (Procedure proc : procs) {
            for (const Target& t : targets(cfg)) {
                cells.push_back({proc, t, &ctx.cutoff_for(ctx.params(n, releases, proc, t))});
            }
        }
        const ReplicateSetup setup = ctx.setup(n, releases, cfg.sigma);
        std::vector<double> values(cfg.iterations * cells.size(), 0.0);
        parallel_for(
            cfg.iterations,
            [&](std::size_t r) {
                const ReplicateData data = simulate_replicate(setup, replicate_stream(ctx, n, releases, r));
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    const CombinedEstimates est = estimates_for(data, cells[c].procedure);
                    values[r * cells.size() + c] = radius(est, *cells[c].ct).upsilon;
                }
            },
            ctx.threads());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double sum = 0.0;
            double sq = 0.0;
            for (std::size_t r = 0; r < cfg.iterations; ++r) {
                const double v = values[r * cells.size() + c];
                sum += v;
                sq += v * v;
            }
            const double iters = static_cast<double>(cfg.iterations);
            const double avg = sum / iters;
            const double var = iters > 1 ? std::max(0.0, (sq - iters * avg * avg) / (iters - 1.0)) : 0.0;
            const double expected = expected_radius(cells[c].ct->params, cells[c].ct->delta, det_sigma);
            table.add({{"n", n}, {"releases", releases}, {"procedure", to_string(cells[c].procedure)},
                       {"target", cells[c].target.name}, {"avg_upsilon", avg},
                       {"se", std::sqrt(var / iters)}, {"expected", expected},
                       {"relative_gap", avg / expected - 1.0}, {"replicates", cfg.iterations},
                       {"delta", cells[c].ct->delta}});
        }
    };
    for (int n : cfg.n_values) {
        block(n, 0, {Procedure::Original});
        const auto procs = synthetic_procedures(cfg.procedures);
        if (!procs.empty()) {
            for (int releases : cfg.releases) {
                block(n, releases, procs);
            }
        }
    }
    out.files["radius.csv"] = table.csv();
    out.summary["radius"] = table.rows();
}

void scenario_power(Context& ctx, RunOutput& out) {
    const auto& cfg = ctx.cfg();
    const MatrixXd direction = cfg.power_direction ? *cfg.power_direction : MatrixXd::Ones(cfg.p(), cfg.m());
    Table table({"n", "releases", "source", "target", "step", "rejection_rate", "se", "replicates", "delta"});
    for (int n : cfg.n_values) {
        for (Procedure source : cfg.power_sources) {
            const std::vector<int> counts = source == Procedure::Original ? std::vector<int>{0} : cfg.releases;
            for (int releases : counts) {
                for (const Target& t : targets(cfg)) {
                    const CutoffTable& ct = ctx.cutoff_for(ctx.params(n, releases, source, t));
                    for (std::size_t s = 0; s < cfg.power_steps.size(); ++s) {
                        ReplicateSetup setup = ctx.setup(n, releases, cfg.sigma);
                        setup.b = cfg.b + cfg.power_steps[s] * direction;
                        // Common random numbers: every source sees the same original samples.
                        const RngStream rng = ctx.root()
                                                  .substream(kPowerTag)
                                                  .substream(static_cast<std::uint64_t>(n))
                                                  .substream(s);
                        const RejectionRate rr = power(setup, hypothesis(t, cfg.b), ctx.spec(source, t), ct,
                                                       cfg.iterations, rng, ctx.threads());
                        table.add({{"n", n}, {"releases", releases}, {"source", to_string(source)},
                                   {"target", t.name}, {"step", cfg.power_steps[s]},
                                   {"rejection_rate", rr.rate()}, {"se", rr.standard_error()},
                                   {"replicates", rr.replicates}, {"delta", ct.delta}});
                    }
                }
            }
        }
    }
    out.files["power.csv"] = table.csv();
    out.summary["power"] = table.rows();
}

void scenario_privacy(Context& ctx, RunOutput& out) {
    const auto& cfg = ctx.cfg();
    Table table({"n", "method", "releases", "epsilon", "gamma1", "gamma1_se", "gamma2", "gamma2_se",
                 "gamma3", "gamma3_se", "d1_min", "d1_q1", "d1_median", "d1_q3", "d1_max", "d3_min",
                 "d3_q1", "d3_median", "d3_q3", "d3_max", "n_mc"});
    auto score = [&](const ModelData& original, int n_key) {
        const FitResult f = fit(original);
        const DesignPtr design = original.design_ptr();
        for (Method method : cfg.privacy_methods) {
            for (int releases : cfg.releases) {
                const ReleaseSampler sampler = [&, method, releases](const RngStream& rng) {
                    SynthesisConfig sc;
                    sc.method = method;
                    sc.m_releases = releases;
                    sc.alpha = cfg.alpha;
                    sc.rng = rng;
                    sc.plugin_uses_mle = cfg.plugin_uses_mle;
                    return generate(f, design, sc);
                };
                const RngStream rng = ctx.root()
                                          .substream(kPrivacyTag)
                                          .substream(static_cast<std::uint64_t>(n_key))
                                          .substream(static_cast<std::uint64_t>(releases));
                const auto reports = privacy(original, sampler, cfg.epsilons, cfg.iterations, rng, ctx.threads());
                for (const PrivacyReport& r : reports) {
                    table.add({{"n", original.n()}, {"method", to_string(method)}, {"releases", releases},
                               {"epsilon", r.epsilon}, {"gamma1", r.gamma1}, {"gamma1_se", r.gamma1_se},
                               {"gamma2", r.gamma2}, {"gamma2_se", r.gamma2_se}, {"gamma3", r.gamma3},
                               {"gamma3_se", r.gamma3_se}, {"d1_min", r.d1_summary[0]},
                               {"d1_q1", r.d1_summary[1]}, {"d1_median", r.d1_summary[2]},
                               {"d1_q3", r.d1_summary[3]}, {"d1_max", r.d1_summary[4]},
                               {"d3_min", r.d3_summary[0]}, {"d3_q1", r.d3_summary[1]},
                               {"d3_median", r.d3_summary[2]}, {"d3_q3", r.d3_summary[3]},
                               {"d3_max", r.d3_summary[4]}, {"n_mc", r.n_mc}});
                }
            }
        }
    };
    if (!cfg.data_path.empty()) {
        const LoadedData loaded = load_data(cfg);
        score(loaded.data, 0);
    } else {
        for (int n : cfg.n_values) {
            RngStream rng = ctx.root().substream(kOriginalTag).substream(static_cast<std::uint64_t>(n));
            const ModelData original = simulate_original(cfg.b, SpdMatrix(cfg.sigma, "model.sigma"), ctx.design(n), rng);
            score(original, n);
        }
    }
    out.files["privacy.csv"] = table.csv();
    out.summary["privacy"] = table.rows();
}

void scenario_nonpivotal(Context& ctx, RunOutput& out) {
    const auto& cfg = ctx.cfg();
    const auto procs = synthetic_procedures(cfg.procedures);
    if (procs.empty()) {
        throw ConfigError("nonpivotal_demo needs a synthetic procedure in inference.procedures");
    }
    const Procedure proc = procs.front();
    const int releases = cfg.releases.front();
    static const std::vector<std::string> names{"wilks", "pillai", "hotelling_lawley", "roy", "pivot"};
    Table table({"n", "releases", "procedure", "rho", "statistic", "cutoff", "se", "replicates"});
    Table draws({"n", "rho", "statistic", "value"});
    json shifts = json::object();
    const Target target{"B", std::nullopt};
    for (int n : cfg.n_values) {
        std::vector<std::vector<std::pair<double, double>>> by_stat(names.size());
        for (std::size_t ri = 0; ri < cfg.rhos.size(); ++ri) {
            const double rho = cfg.rhos[ri];
            const ReplicateSetup setup = ctx.setup(n, releases, equicorrelation(cfg.m(), rho));
            std::vector<double> values(cfg.iterations * names.size());
            const PivotSpec spec = ctx.spec(proc, target);
            parallel_for(
                cfg.iterations,
                [&](std::size_t r) {
                    const RngStream rng = ctx.root()
                                              .substream(kNonPivotalTag)
                                              .substream(static_cast<std::uint64_t>(n))
                                              .substream(ri)
                                              .substream(r);
                    const ReplicateData data = simulate_replicate(setup, rng);
                    const CombinedEstimates est = estimates_for(data, proc);
                    const ClassicalCriteria c = classical_criteria(est, cfg.b);
                    double* v = &values[r * names.size()];
                    v[0] = c.wilks;
                    v[1] = c.pillai;
                    v[2] = c.hotelling_lawley;
                    v[3] = c.roy;
                    v[4] = pivot_value(est, cfg.b, spec);
                },
                ctx.threads());
            const PivotParams pp = ctx.params(n, releases, proc, target);
            for (std::size_t s = 0; s < names.size(); ++s) {
                std::vector<double> col(cfg.iterations);
                for (std::size_t r = 0; r < cfg.iterations; ++r) {
                    col[r] = values[r * names.size() + s];
                    draws.add({{"n", n}, {"rho", rho}, {"statistic", names[s]}, {"value", col[r]}});
                }
                const EmpiricalDistribution dist(std::move(col), pp, cfg.seed, kNonPivotalTag);
                const double q = dist.upper_cutoff(cfg.gamma);
                const double se = dist.quantile_standard_error(1.0 - cfg.gamma);
                by_stat[s].emplace_back(q, se);
                table.add({{"n", n}, {"releases", releases}, {"procedure", to_string(proc)}, {"rho", rho},
                           {"statistic", names[s]}, {"cutoff", q}, {"se", se}, {"replicates", cfg.iterations}});
            }
        }
        json per_n = json::object();
        for (std::size_t s = 0; s < names.size(); ++s) {
            double worst = 0.0;
            for (std::size_t a = 0; a < by_stat[s].size(); ++a) {
                for (std::size_t b = a + 1; b < by_stat[s].size(); ++b) {
                    const double se = std::hypot(by_stat[s][a].second, by_stat[s][b].second);
                    const double gap = std::abs(by_stat[s][a].first - by_stat[s][b].first);
                    worst = std::max(worst, se > 0.0 ? gap / se : (gap > 0.0 ? INFINITY : 0.0));
                }
            }
            per_n[names[s]] = worst;
        }
        shifts[std::to_string(n)] = per_n;
    }
    out.files["nonpivotal.csv"] = table.csv();
    out.files["nonpivotal_draws.csv"] = draws.csv();
    out.summary["nonpivotal"] = table.rows();
    out.summary["max_cutoff_shift_in_se"] = shifts;
}

}  // namespace

MatrixXd simulated_regressors(const ExperimentConfig& config, int n) {
    RngStream rng = root_stream(config).substream(kDesignTag).substream(static_cast<std::uint64_t>(n));
    MatrixXd x(config.p(), n);
    rng.fill_normal(x);
    return (x.array() * config.x_sd + config.x_mean).matrix();
}

LoadedData load_data(const ExperimentConfig& config) {
    if (config.data_path.empty()) {
        throw ConfigError("no data.path configured");
    }
    const CsvTable table = read_csv(config.data_path);
    DesignMatrix dm = build_design_matrix(table, config.design);
    MatrixXd y = response_matrix(table, config.responses);
    return LoadedData{ModelData(std::move(dm.x), std::move(y)), dm.names};
}

RunOutput run_scenario(const ExperimentConfig& config, int threads) {
    config.validate();
    Context ctx(config, threads);
    RunOutput out;
    out.summary["scenario"] = to_string(config.scenario);
    out.summary["seed"] = config.seed;
    try {
        switch (config.scenario) {
        case Scenario::CutoffTable:
            scenario_cutoffs(ctx, out);
            break;
        case Scenario::Coverage:
            scenario_coverage(ctx, out);
            break;
        case Scenario::Radius:
            scenario_radius(ctx, out);
            break;
        case Scenario::Power:
            scenario_power(ctx, out);
            break;
        case Scenario::Privacy:
            scenario_privacy(ctx, out);
            break;
        case Scenario::NonPivotalDemo:
            scenario_nonpivotal(ctx, out);
            break;
        }
    } catch (const DataError& e) {
        throw DataError("scenario " + to_string(config.scenario) + ": " + e.what());
    } catch (const RankError& e) {
        throw RankError("scenario " + to_string(config.scenario) + ": " + e.what());
    } catch (const DegeneracyError& e) {
        throw DegeneracyError("scenario " + to_string(config.scenario) + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError("scenario " + to_string(config.scenario) + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError("scenario " + to_string(config.scenario) + ": " + e.what());
    }
    out.files["config.ini"] = to_ini(config);
    return out;
}

void persist(const RunOutput& output, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const fs::path target = dir.empty() ? fs::path(".") : dir;
    fs::path staging = target;
    staging += ".staging";
    fs::remove_all(staging);
    try {
        fs::create_directories(staging);
        auto write = [&](const std::string& name, const std::string& text) {
            std::ofstream f(staging / name, std::ios::binary);
            f << text;
            if (!f) {
                throw DataError("cannot write " + (staging / name).string());
            }
        };
        for (const auto& [name, text] : output.files) {
            write(name, text);
        }
        write("summary.json", output.summary.dump(2) + "\n");
        fs::create_directories(target);
        for (const auto& entry : fs::directory_iterator(staging)) {
            const fs::path dest = target / entry.path().filename();
            fs::remove(dest);
            fs::rename(entry.path(), dest);
        }
        fs::remove_all(staging);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        throw;
    }
}

RunOutput run(const ExperimentConfig& config, int threads, const std::optional<std::filesystem::path>& dir) {
    RunOutput out = run_scenario(config, threads);
    persist(out, dir ? *dir : std::filesystem::path(config.output_dir));
    return out;
}

}  // namespace fpps::harness
