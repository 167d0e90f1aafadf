#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support.hpp"
#include "fpps/errors.hpp"
#include "fpps/harness/config.hpp"
#include "fpps/harness/design.hpp"
#include "fpps/harness/run.hpp"

using namespace fpps;
using namespace fpps::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fpps_unit_harness_" + name);
    fs::remove_all(p);
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream(path) << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// A table shaped like the survey extract: three numeric covariates, four
// categorical ones with 13, 6, 3 and 2 levels, and three positive responses.
CsvTable survey_like(int n) {
    RngStream rng(77, 1);
    std::ostringstream os;
    os << "N,L,A,E,M,R,S,y1,y2,y3\n";
    for (int i = 0; i < n; ++i) {
        os << 1.0 + rng.uniform() << ',' << 2.0 * rng.normal() << ',' << 30 + 10 * rng.uniform() << ','
           << "e" << (i % 13) << ',' << static_cast<int>(6 * rng.uniform()) << ',' << "r" << (i % 3) << ',' << (i % 2 ? "F" : "M") << ','
           << 50 + rng.normal() << ',' << 20 + rng.normal() << ',' << 10 + rng.normal() << '\n';
    }
    return parse_csv(os.str());
}

DesignSpec survey_spec() {
    DesignSpec spec;
    spec.numeric = {"N", "L", "A"};
    spec.categorical = {{"E", {}}, {"M", {}}, {"R", {}}, {"S", {}}};
    return spec;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FPPS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig tiny(Scenario s) {
    ExperimentConfig c;
    c.scenario = s;
    c.n_values = {10};
    c.releases = {2};
    c.n_draws = 2000;
    c.iterations = 200;
    c.seed = 99;
    return c;
}

}  // namespace

TEST_CASE("indicator encoding drops the first level") {
    const CsvTable t = parse_csv("x,g,y\n1,b,3\n2,a,4\n3,c,5\n4,a,6\n5,b,1\n");
    DesignSpec spec;
    spec.numeric = {"x"};
    spec.categorical = {{"g", {}}};
    const DesignMatrix dm = build_design_matrix(t, spec);
    CHECK(dm.names == std::vector<std::string>{"(intercept)", "x", "g=b", "g=c"});
    MatrixXd expect(4, 5);
    expect << 1, 1, 1, 1, 1,
              1, 2, 3, 4, 5,
              1, 0, 0, 0, 1,
              0, 0, 1, 0, 0;
    CHECK(dm.x == expect);
    spec.categorical = {{"g", {"c", "a", "b"}}};
    const DesignMatrix ordered = build_design_matrix(t, spec);
    CHECK(ordered.names == std::vector<std::string>{"(intercept)", "x", "g=a", "g=b"});
    CHECK(response_matrix(t, {"y"}) == MatrixXd(Eigen::RowVectorXd::LinSpaced(5, 3, 7).unaryExpr([](double v) {
              return v == 7 ? 1.0 : v;
          })));
}

TEST_CASE("numeric levels sort by value") {
    const CsvTable t = parse_csv("g,z\n10,1\n9,2\n2,0\n10,4\n9,1\n2,2\n");
    DesignSpec spec;
    spec.categorical = {{"g", {}}};
    spec.numeric = {"z"};
    CHECK(build_design_matrix(t, spec).names == std::vector<std::string>{"(intercept)", "z", "g=9", "g=10"});
}

TEST_CASE("design errors") {
    const CsvTable t = parse_csv("x,g\n1,a\n2,b\n3,a\n4,b\n");
    DesignSpec spec;
    spec.categorical = {{"g", {"a"}}};
    CHECK_THROWS_AS(build_design_matrix(t, spec), DataError);
    spec.categorical = {{"g", {}}};
    spec.numeric = {"missing"};
    CHECK_THROWS_AS(build_design_matrix(t, spec), DataError);
    const CsvTable dup = parse_csv("x,w\n1,2\n2,4\n3,6\n5,10\n");
    spec = DesignSpec{};
    spec.numeric = {"x", "w"};
    try {
        build_design_matrix(dup, spec);
        FAIL("expected RankError");
    } catch (const RankError& e) {
        CHECK(std::string(e.what()).find("collinear") != std::string::npos);
    }
    spec.numeric = {"x"};
    spec.categorical = {{"w", {}}};
    CHECK_THROWS_AS(build_design_matrix(dup, spec), RankError);
}

TEST_CASE("survey schema has 24 regressors") {
    const CsvTable t = survey_like(141);
    const DesignMatrix dm = build_design_matrix(t, survey_spec());
    CHECK(dm.x.rows() == 24);
    CHECK(dm.x.cols() == 141);
    CHECK(dm.names.front() == "(intercept)");
    CHECK(std::count_if(dm.names.begin(), dm.names.end(), [](const std::string& s) { return s.rfind("E=", 0) == 0; }) == 12);
    const MatrixXd y = response_matrix(t, {"y1", "y2", "y3"});
    const FitResult f = fit(ModelData(dm.x, y));
    CHECK(f.p == 24);
    CHECK(f.m == 3);
}

TEST_CASE("config round trip") {
    ExperimentConfig c;
    c.scenario = Scenario::Power;
    c.n_values = {12, 40};
    c.releases = {1, 3};
    c.alpha = 7.5;
    c.method = Method::PPS;
    c.procedures = {Procedure::Proc2};
    c.scaled = true;
    c.power_direction = MatrixXd::Constant(3, 2, 0.5);
    c.power_steps = {0.0, 0.25};
    c.epsilons = {0.02};
    c.rhos = {0.3};
    c.design.numeric = {"a"};
    c.design.categorical = {{"g", {"x", "y"}}};
    c.data_path = "d.csv";
    c.responses = {"y1", "y2"};
    c.seed = 123456789012345ULL;
    const ExperimentConfig back = parse_config(to_ini(c));
    CHECK(back == c);
    CHECK(to_ini(back) == to_ini(c));
    const ExperimentConfig d = parse_config("");
    CHECK(d == ExperimentConfig{});
    CHECK(d.contrast.has_value());
    CHECK(parse_config("[inference]\ncontrast = none\n").contrast == std::nullopt);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("[model]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[synthesis]\nmethod = magic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[model]\nb = 1,2;3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[inference]\nscaled = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_matrix("1,x", "m"), ConfigError);
    CHECK(parse_matrix(format_matrix(testing::design_b()), "b") == testing::design_b());
    ExperimentConfig c;
    c.n_values = {8};
    c.alpha = 1.0;  // n + alpha = p + 2m + 2
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.n_values = {10};
    c.gamma = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/fpps.ini"), Error);
}

TEST_CASE("helpers") {
    const MatrixXd e = equicorrelation(3, 0.4);
    CHECK(e(0, 0) == 1.0);
    CHECK(e(1, 2) == 0.4);
    CHECK(stable_hash("abc") == stable_hash("abc"));
    CHECK(stable_hash("abc") != stable_hash("abd"));
    const ExperimentConfig c = tiny(Scenario::Coverage);
    const MatrixXd x = simulated_regressors(c, 500);
    CHECK(x.rows() == 3);
    CHECK(std::abs(x.mean() - 1.0) < 0.15);
    CHECK(simulated_regressors(c, 500) == x);
}

TEST_CASE("every scenario runs and is independent of the thread count") {
    for (Scenario s : {Scenario::CutoffTable, Scenario::Coverage, Scenario::Radius, Scenario::Power, Scenario::Privacy,
                       Scenario::NonPivotalDemo}) {
        ExperimentConfig c = tiny(s);
        if (s == Scenario::Privacy) {
            c.b << 10, 8, 2, 1, 1, 2;
        }
        if (s == Scenario::NonPivotalDemo) {
            c.rhos = {0.2, 0.8};
        }
        const RunOutput one = run_scenario(c, 1);
        const RunOutput four = run_scenario(c, 4);
        CHECK(one.files == four.files);
        CHECK(one.summary == four.summary);
        CHECK(one.files.count("config.ini") == 1);
        CHECK(one.files.size() >= 2);
        // Replaying the emitted config gives the same output.
        const RunOutput replay = run_scenario(parse_config(one.files.at("config.ini")), 2);
        CHECK(replay.files == one.files);
    }
}

TEST_CASE("scenario errors carry context") {
    ExperimentConfig c = tiny(Scenario::Coverage);
    c.n_values = {8};
    c.alpha = 0.0;
    try {
        run_scenario(c, 1);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("n = 8") != std::string::npos);
    }
}

TEST_CASE("persist writes atomically and cleans up") {
    const fs::path dir = scratch("persist");
    RunOutput out;
    out.summary = {{"a", 1}};
    out.files["x.csv"] = "v\n1\n";
    persist(out, dir);
    CHECK(read_text(dir / "x.csv") == "v\n1\n");
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(!fs::exists(dir.string() + ".staging"));
    out.files["bad/name.csv"] = "x";
    CHECK_THROWS(persist(out, dir));
    CHECK(!fs::exists(dir.string() + ".staging"));
    fs::remove_all(dir);
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    const fs::path ini = dir / "exp.ini";
    write_text(ini, "[model]\nn = 10\n[synthesis]\nreleases = 2\n[inference]\nn_draws = 1000\n[mc]\niterations = 50\n");
    CHECK(run_cli("cutoff -c " + ini.string() + " -o " + (dir / "cut").string()) == 0);
    CHECK(fs::exists(dir / "cut" / "cutoff.json"));
    CHECK(fs::exists(dir / "cut" / "null.csv"));
    CHECK(run_cli("coverage -c " + ini.string() + " -o " + (dir / "cov").string() + " -t 2") == 0);
    CHECK(fs::exists(dir / "cov" / "coverage.csv"));
    CHECK(fs::exists(dir / "cov" / "config.ini"));

    // Fit, synthesise, then test from the release.
    std::ostringstream csv;
    RngStream rng(5, 5);
    csv << "x,g,y1,y2\n";
    for (int i = 0; i < 30; ++i) {
        csv << rng.normal() << ',' << (i % 3) << ',' << 5 + rng.normal() << ',' << 3 + rng.normal() << '\n';
    }
    write_text(dir / "data.csv", csv.str());
    const fs::path data_ini = dir / "data.ini";
    write_text(data_ini, "[data]\npath = " + (dir / "data.csv").string() +
                             "\nresponses = y1,y2\nnumeric = x\ncategorical = g\n[synthesis]\nreleases = 2\n"
                             "[inference]\nn_draws = 1000\ncontrast = none\n[model]\nn = 30\nb = 1,1;1,1;1,1;1,1\nsigma = 1,0;0,1\n");
    CHECK(run_cli("fit -c " + data_ini.string() + " -o " + (dir / "fit").string()) == 0);
    CHECK(fs::exists(dir / "fit" / "fit.json"));
    CHECK(run_cli("synthesize -c " + data_ini.string() + " -o " + (dir / "rel").string()) == 0);
    CHECK(fs::exists(dir / "rel" / "release_002.csv"));
    CHECK(run_cli("test -c " + data_ini.string() + " --release " + (dir / "rel").string() + " --procedure proc2 -o " +
                  (dir / "tst").string()) == 0);
    CHECK(fs::exists(dir / "tst" / "test.json"));

    // Usage and configuration problems.
    CHECK(run_cli("") == 2);
    CHECK(run_cli("coverage --no-such-flag") == 2);
    write_text(dir / "bad.ini", "[model]\nwhat = 1\n");
    CHECK(run_cli("coverage -c " + (dir / "bad.ini").string()) == 2);

    // Data problems.
    write_text(dir / "broken.csv", "x,g,y1,y2\n1,0,abc,2\n2,0,1,2\n3,1,4,1\n4,1,2,2\n5,0,3,3\n6,1,1,1\n");
    write_text(dir / "broken.ini", "[data]\npath = " + (dir / "broken.csv").string() +
                                       "\nresponses = y1,y2\nnumeric = x\n");
    CHECK(run_cli("fit -c " + (dir / "broken.ini").string() + " -o " + (dir / "x").string()) == 3);
    write_text(dir / "nofile.ini", "[data]\npath = " + (dir / "absent.csv").string() + "\nresponses = y1\n");
    CHECK(run_cli("fit -c " + (dir / "nofile.ini").string() + " -o " + (dir / "x").string()) == 3);

    // Degenerate data: responses exactly linear in the regressors.
    std::ostringstream flat;
    flat << "x,y1,y2\n";
    for (int i = 0; i < 12; ++i) flat << i << ',' << 2 * i + 1 << ',' << 3 - i << '\n';
    write_text(dir / "flat.csv", flat.str());
    write_text(dir / "flat.ini", "[data]\npath = " + (dir / "flat.csv").string() + "\nresponses = y1,y2\nnumeric = x\n");
    CHECK(run_cli("synthesize -c " + (dir / "flat.ini").string() + " -o " + (dir / "x").string()) == 4);
    fs::remove_all(dir);
}
