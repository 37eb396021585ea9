#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "carbondse/optimize.hpp"

namespace carbondse {

// Malformed run configuration. `field` is a JSON path such as
// "search.budget"; `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string file, std::string field, int line, const std::string& msg);
    const std::string& file() const { return file_; }
    const std::string& field() const { return field_; }
    int line() const { return line_; }

private:
    std::string file_, field_;
    int line_;
};

inline constexpr const char* kConfigEnvVar = "CARBONDSE_CONFIG";

struct RunConfig {
    std::string source_path;  // empty when built in memory
    std::shared_ptr<const BaseModel> base;
    PruneSteps steps;
    Platform platform;
    ArchSpace arch;
    CostCoefficients coeffs;
    CarbonFactors factors;
    DeploymentSchedule schedule;
    std::shared_ptr<const GridProvider> grid_provider;
    std::string region = "CA-US";
    std::optional<std::string> fab_region;  // replaces ci_fab with that region's intensity
    std::optional<double> grid_override_g_per_kwh;
    AccuracyProxy proxy;
    nlohmann::json proxy_spec;  // resolved form of the "proxy" section
    ObjectiveMode mode;
    std::string strategy = "nsga2";
    SearchOptions search;
    std::string output_dir = "out";
    // Resolved inputs, written verbatim into every run directory.
    nlohmann::json snapshot;
};

// Relative file references resolve against the config file's directory.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& source_path = "");
// Path from the environment variable, if set and non-empty.
std::optional<std::string> default_config_path();

// Recomputes derived fields (mode validation, snapshot) after edits.
void refresh(RunConfig& cfg);

std::shared_ptr<const StaticGridProvider> builtin_grid_provider();

EvalContext make_context(const RunConfig& cfg);
JointSpace make_space(const RunConfig& cfg);

}  // namespace carbondse
