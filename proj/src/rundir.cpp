#include "carbondse/rundir.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace carbondse {

namespace fs = std::filesystem;

void prepare_run_dir(const std::string& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw std::runtime_error("output path '" + dir + "' is not a directory");
        if (!fs::is_empty(dir)) {
            if (!force)
                throw std::runtime_error("output directory '" + dir + "' is not empty; pass --force to overwrite");
            for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
        }
    }
    fs::create_directories(fs::path(dir) / "reports");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_config_snapshot(const std::string& dir, const RunConfig& cfg) {
    write_text((fs::path(dir) / "config.json").string(), cfg.snapshot.dump(2) + "\n");
}

void write_run(const std::string& dir, const RunRecord& run, const nlohmann::json& extra) {
    std::string log;
    for (const auto& c : run.log) log += to_json(c).dump() + "\n";
    write_text((fs::path(dir) / "candidates.jsonl").string(), log);
    write_text((fs::path(dir) / "pareto.csv").string(), emit_pareto_csv(pareto_rows(run.front)));
    auto summary = run_summary_json(run);
    if (extra.is_object())
        for (const auto& [k, v] : extra.items()) summary[k] = v;
    write_text((fs::path(dir) / "run.json").string(), summary.dump(2) + "\n");
}

LoadedRun load_run(const std::string& dir) {
    LoadedRun out;
    const auto cfg_path = (fs::path(dir) / "config.json").string();
    out.config = parse_run_config(read_text(cfg_path), cfg_path);
    out.summary = nlohmann::json::parse(read_text((fs::path(dir) / "run.json").string()));
    auto& r = out.run;
    r.strategy = out.summary.at("strategy").get<std::string>();
    r.seed = out.summary.at("seed").get<std::uint64_t>();
    r.mode = mode_from_json(out.summary.at("mode"));
    r.budget = out.summary.at("budget").get<std::uint64_t>();
    r.diagnostics = out.summary.value("diagnostics", std::vector<std::string>{});
    std::istringstream in(read_text((fs::path(dir) / "candidates.jsonl").string()));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            r.log.push_back(candidate_from_json(nlohmann::json::parse(line), out.config.base));
        } catch (const std::exception& e) {
            throw std::runtime_error("candidates.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    finalize_run(r);
    return out;
}

}  // namespace carbondse
