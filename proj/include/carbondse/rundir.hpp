#pragma once

#include <string>

#include "carbondse/config.hpp"
#include "carbondse/report.hpp"

namespace carbondse {

// Layout:
//   config.json       resolved config snapshot, written before any work
//   candidates.jsonl  one evaluated candidate per line, in evaluation order
//   pareto.csv        final front
//   run.json          strategy, seed, mode, budget, HV and diagnostics
//   reports/          derived tables

// Creates `dir`; fails if it exists and is non-empty unless `force`.
void prepare_run_dir(const std::string& dir, bool force);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

void write_config_snapshot(const std::string& dir, const RunConfig& cfg);
// Writes candidates.jsonl, pareto.csv and run.json; `extra` is merged into run.json.
void write_run(const std::string& dir, const RunRecord& run, const nlohmann::json& extra = {});

struct LoadedRun {
    RunConfig config;
    RunRecord run;
    nlohmann::json summary;  // run.json as stored
};

// Rebuilds the record from the candidate log alone and recomputes the front.
LoadedRun load_run(const std::string& dir);

}  // namespace carbondse
