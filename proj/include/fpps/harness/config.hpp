#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpps/combine.hpp"
#include "fpps/harness/design.hpp"

namespace fpps::harness {

enum class Scenario { CutoffTable, Coverage, Radius, Power, Privacy, NonPivotalDemo };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& text);

/// A complete experiment description. Defaults reproduce the simulation
/// design used throughout the tests: m = 2, p = 3, regressors iid N(1, 1).
///
/// The INI form has sections [scenario] [model] [data] [synthesis]
/// [inference] [mc] [output] [power] [privacy] [nonpivotal]; matrices are
/// written row by row as "a,b;c,d" and lists as "a,b,c".
struct ExperimentConfig {
    Scenario scenario = Scenario::Coverage;

    // [model]
    MatrixXd b;
    MatrixXd sigma;
    std::vector<int> n_values{10, 50, 100, 200};
    double x_mean = 1.0;
    double x_sd = 1.0;

    // [data] (used by fit / synthesize / test and as the privacy original when set)
    std::string data_path;
    std::vector<std::string> responses;
    DesignSpec design;

    // [synthesis]
    Method method = Method::FPPS;
    std::vector<int> releases{1, 2, 5};
    double alpha = 6.0;
    bool plugin_uses_mle = false;

    // [inference]
    double gamma = 0.05;
    std::size_t n_draws = 100000;
    std::vector<Procedure> procedures{Procedure::Proc1, Procedure::Proc2};
    std::optional<MatrixXd> contrast;
    bool scaled = false;

    // [mc]
    std::size_t iterations = 10000;
    std::uint64_t seed = 20170623;

    // [output]
    std::string output_dir = "results";

    // [power]
    std::optional<MatrixXd> power_direction;
    std::vector<double> power_steps{0.0, 0.1, 0.2, 0.3};
    std::vector<Procedure> power_sources{Procedure::Proc1, Procedure::Original};

    // [privacy]
    std::vector<double> epsilons{0.01, 0.1};
    std::vector<Method> privacy_methods{Method::FPPS, Method::PlugIn};

    // [nonpivotal]
    std::vector<double> rhos{0.2, 0.4, 0.6, 0.8};

    ExperimentConfig();

    Index m() const { return b.cols(); }
    Index p() const { return b.rows(); }

    /// Checks every module-level precondition the scenario will hit.
    void validate() const;

    bool operator==(const ExperimentConfig& other) const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_ini(const ExperimentConfig& config);

MatrixXd parse_matrix(const std::string& text, const std::string& what);
std::string format_matrix(const MatrixXd& m);

}  // namespace fpps::harness
