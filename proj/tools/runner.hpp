#pragma once

// Experiment runner behind the bmreg command line tool.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bmreg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitCheck = 4;

/// Bumped whenever a CSV header or column meaning changes.
inline constexpr int kFormatVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

const std::vector<std::string>& subcommands();

struct ExperimentConfig {
    std::string subcommand;
    std::uint64_t seed = 1;
    std::size_t samples = 0; ///< 0 selects the subcommand default
    std::vector<std::string> specs;
    double alpha = 1.0;
    std::vector<int> N;
    int dim = 1;
    std::string out = "bmreg-out";
    unsigned workers = 1;
    std::string format = "csv";

    std::vector<int> j;          ///< shell indices (chaos, wick)
    std::vector<int> k;          ///< block moment orders (chaos)
    std::vector<int> M0;         ///< probe cut-offs
    int band_factor = 4;         ///< probe truncation N = band_factor * M0
    std::optional<double> eps;   ///< probe threshold or Levy window
    int grid = 0;                ///< time grid size for bridge / levy, 0 = default
    std::vector<int> n_list;     ///< bridge frequencies
    std::optional<std::string> path; ///< JSON path file for `norm`
    std::vector<std::string> expect; ///< scan verdicts to enforce
    bool plot = false;           ///< emit gnuplot scripts

    /// Canonical JSON form; keys in fixed order, unset optionals omitted.
    nlohmann::ordered_json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;
    /// SHA-256 of the canonical form without `out` and `workers`.
    std::string hash() const;
};

struct OutputFile {
    std::string file;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    int format_version = kFormatVersion;
    std::string artifact_version = kArtifactVersion;
    std::string subcommand;
    std::string config_hash;
    std::string started_at;
    std::string finished_at;
    std::vector<OutputFile> outputs;

    nlohmann::ordered_json to_json() const;
};

/// Thrown for configuration problems (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flag > environment > file precedence. `env` maps BMREG_* names to values.
ExperimentConfig resolve_config(const std::string& subcommand, const std::optional<std::string>& config_path,
                                const nlohmann::json& flag_overrides, const std::map<std::string, std::string>& env);

/// BMREG_SEED, BMREG_WORKERS, BMREG_OUT and BMREG_FORMAT from the process environment.
std::map<std::string, std::string> process_environment();

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& file);

struct RunResult {
    int exit_code = kExitOk;
    RunManifest manifest;
    nlohmann::ordered_json summary;
};

/// Runs one experiment and writes its tables, summary.json and manifest.json
/// under config.out. Errors propagate as exceptions; see run_guarded.
RunResult run(const ExperimentConfig& config);

/// run() with errors mapped to exit codes and an error JSON on `err`.
int run_guarded(const std::string& subcommand, const std::optional<std::string>& config_path,
                const nlohmann::json& flag_overrides, std::ostream& err);

} // namespace bmreg::cli
