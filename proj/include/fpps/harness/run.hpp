#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "fpps/harness/config.hpp"
#include "fpps/inference.hpp"

namespace fpps::harness {

/// Everything a scenario produces, held in memory until it is persisted.
struct RunOutput {
    nlohmann::json summary;
    /// File name -> contents (CSV tables and the resolved config).
    std::map<std::string, std::string> files;
};

/// Executes the configured scenario. Results depend only on the config; the
/// thread count changes speed, never output.
RunOutput run_scenario(const ExperimentConfig& config, int threads = 1);

/// Writes summary.json plus every file into `dir`. Files are first written to
/// a sibling staging directory that is removed if anything fails.
void persist(const RunOutput& output, const std::filesystem::path& dir);

/// run_scenario followed by persist to config.output_dir (or `dir` when given).
RunOutput run(const ExperimentConfig& config, int threads = 1,
              const std::optional<std::filesystem::path>& dir = std::nullopt);

/// The regressor matrix simulated for sample size n: iid N(x_mean, x_sd^2)
/// entries drawn from a stream keyed by the config seed and n.
MatrixXd simulated_regressors(const ExperimentConfig& config, int n);

struct LoadedData {
    ModelData data;
    std::vector<std::string> regressor_names;
};

/// Reads config.data_path and builds X from config.design and Y from
/// config.responses.
LoadedData load_data(const ExperimentConfig& config);

/// Equicorrelation matrix (1 - rho) I + rho 11'.
MatrixXd equicorrelation(Index m, double rho);

/// Stable 64-bit hash used to derive stream ids from text keys.
std::uint64_t stable_hash(const std::string& text);

}  // namespace fpps::harness
