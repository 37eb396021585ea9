#include "carbondse/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace carbondse {

namespace fs = std::filesystem;

ConfigError::ConfigError(std::string file, std::string field, int line, const std::string& msg)
    : std::runtime_error([&] {
          std::string where = file.empty() ? "<config>" : file;
          if (line > 0) where += ":" + std::to_string(line);
          if (!field.empty()) where += ": field '" + field + "'";
          return where + ": " + msg;
      }()),
      file_(std::move(file)),
      field_(std::move(field)),
      line_(line) {}

std::shared_ptr<const StaticGridProvider> builtin_grid_provider() {
    // Approximate yearly averages, gCO2e/kWh; see data/grid_intensity.json.
    static const auto p = std::make_shared<const StaticGridProvider>(std::map<std::string, double>{
        {"BC-CA", 29.0}, {"CA-US", 238.0}, {"CN", 580.0}, {"DE", 380.0}, {"FR", 55.0}, {"IN", 700.0},
        {"JP", 480.0},   {"KR", 430.0},    {"SE", 25.0},  {"TW", 563.0}, {"US", 370.0}});
    return p;
}

std::optional<std::string> default_config_path() {
    const char* v = std::getenv(kConfigEnvVar);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

namespace {

class Reader {
public:
    Reader(const std::string& text, std::string file, fs::path dir)
        : text_(text), file_(std::move(file)), dir_(std::move(dir)) {}

    int line_of(const std::string& field) const {
        const auto key = field.substr(field.rfind('.') + 1);
        const auto pos = text_.find("\"" + key + "\"");
        if (pos == std::string::npos) return 0;
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    }

    [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
        throw ConfigError(file_, field, line_of(field), msg);
    }

    // Runs fn, converting library errors into a ConfigError for `field`.
    template <class F>
    auto guard(const std::string& field, F&& fn) const -> decltype(fn()) {
        try {
            return fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            fail(field, std::string("wrong type or missing value (") + e.what() + ")");
        } catch (const std::exception& e) {
            fail(field, e.what());
        }
    }

    std::string resolve(const std::string& p) const {
        const fs::path path(p);
        return (path.is_absolute() ? path : dir_ / path).lexically_normal().string();
    }

    nlohmann::json load_json(const std::string& field, const std::string& rel) const {
        const auto path = resolve(rel);
        std::ifstream in(path);
        if (!in) fail(field, "cannot open '" + path + "'");
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            fail(field, "'" + path + "' is not valid JSON: " + e.what());
        }
    }

    // Section given inline as an object or as a path to a JSON file.
    nlohmann::json section(const nlohmann::json& root, const std::string& key) const {
        const auto& v = root.at(key);
        if (v.is_string()) return load_json(key, v.get<std::string>());
        if (!v.is_object()) fail(key, "expected an object or a file path");
        return v;
    }

private:
    const std::string& text_;
    std::string file_;
    fs::path dir_;
};

const std::set<std::string> kTopKeys{
    "schema_version", "model",  "prune_steps", "platform", "arch_space", "coefficients", "carbon_factors",
    "grid",           "region", "fab_region",  "grid_override_g_per_kwh", "schedule",   "proxy",
    "mode",           "latency_cap_s", "tops_budget", "search", "output_dir"};

nlohmann::json grid_json(const GridProvider& g) {
    nlohmann::json regions = nlohmann::json::object();
    for (const auto& r : g.regions())
        if (auto v = g.lookup(r)) regions[r] = *v;
    return {{"schema_version", 1}, {"regions", std::move(regions)}};
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source_path) {
    const fs::path dir = source_path.empty() ? fs::current_path() : fs::absolute(source_path).parent_path();
    Reader rd(text, source_path, dir);

    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte, text.size());
        const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
        throw ConfigError(source_path, "", line, std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError(source_path, "", 1, "top level must be an object");
    for (const auto& [k, v] : root.items())
        if (!kTopKeys.count(k)) rd.fail(k, "unknown key");
    if (root.value("schema_version", 1) != 1) rd.fail("schema_version", "unsupported schema_version");

    RunConfig cfg;
    cfg.source_path = source_path;

    if (!root.contains("model")) rd.fail("model", "required");
    cfg.base = rd.guard("model", [&] {
        return std::make_shared<const BaseModel>(base_model_from_json(rd.section(root, "model")));
    });

    if (root.contains("prune_steps"))
        cfg.steps = rd.guard("prune_steps", [&] {
            const auto& j = root["prune_steps"];
            PruneSteps s;
            s.layers = j.value("layers", s.layers);
            s.ffn = j.value("ffn", s.ffn);
            s.hidden = j.value("hidden", s.hidden);
            s.heads = j.value("heads", s.heads);
            return s;
        });
    rd.guard("prune_steps", [&] { (void)build_prune_space(cfg.base, cfg.steps); });

    if (root.contains("platform"))
        cfg.platform = rd.guard("platform", [&] { return platform_from_json(root["platform"]); });
    cfg.arch.platform = cfg.platform;
    if (root.contains("arch_space"))
        cfg.arch = rd.guard("arch_space", [&] { return arch_space_from_json(root["arch_space"], cfg.platform); });

    if (root.contains("coefficients"))
        cfg.coeffs = rd.guard("coefficients", [&] { return coefficients_from_json(rd.section(root, "coefficients")); });
    if (root.contains("carbon_factors"))
        cfg.factors =
            rd.guard("carbon_factors", [&] { return carbon_factors_from_json(rd.section(root, "carbon_factors")); });

    if (root.contains("grid"))
        cfg.grid_provider = rd.guard("grid", [&] {
            return std::make_shared<const StaticGridProvider>(StaticGridProvider::from_json(rd.section(root, "grid")));
        });
    else
        cfg.grid_provider = builtin_grid_provider();

    cfg.region = rd.guard("region", [&] { return root.value("region", cfg.region); });
    if (root.contains("fab_region") && !root["fab_region"].is_null())
        cfg.fab_region = rd.guard("fab_region", [&] { return root["fab_region"].get<std::string>(); });
    if (root.contains("grid_override_g_per_kwh") && !root["grid_override_g_per_kwh"].is_null())
        cfg.grid_override_g_per_kwh =
            rd.guard("grid_override_g_per_kwh", [&] { return root["grid_override_g_per_kwh"].get<double>(); });

    if (root.contains("schedule"))
        cfg.schedule = rd.guard("schedule", [&] {
            const auto& j = root["schedule"];
            DeploymentSchedule s;
            s.lifetime_years = j.value("lifetime_years", s.lifetime_years);
            s.active_hours_per_day = j.value("active_hours_per_day", s.active_hours_per_day);
            s.inferences_per_second = j.value("inferences_per_second", s.inferences_per_second);
            s.validate();
            return s;
        });

    if (root.contains("proxy")) {
        const auto& j = root["proxy"];
        const auto kind = rd.guard("proxy.kind", [&] { return j.value("kind", std::string("analytic")); });
        if (kind == "analytic") {
            auto prof = rd.guard("proxy", [&] { return sensitivity_from_json(j); });
            cfg.proxy = AccuracyProxy(prof);
            cfg.proxy_spec = to_json(prof);
            cfg.proxy_spec["kind"] = "analytic";
        } else if (kind == "table") {
            const auto path = rd.guard("proxy.path", [&] { return rd.resolve(j.at("path").get<std::string>()); });
            const auto miss = rd.guard("proxy.miss", [&] { return j.value("miss", std::string("strict")); });
            if (miss != "strict" && miss != "nearest") rd.fail("proxy.miss", "expected strict or nearest");
            const auto policy = miss == "strict" ? MissPolicy::Strict : MissPolicy::Nearest;
            cfg.proxy = rd.guard("proxy.path", [&] { return AccuracyProxy(AccuracyTable::load_csv(path, policy)); });
            cfg.proxy_spec = {{"kind", "table"}, {"path", path}, {"miss", miss}};
        } else {
            rd.fail("proxy.kind", "expected analytic or table");
        }
    } else {
        cfg.proxy_spec = to_json(SensitivityProfile{});
        cfg.proxy_spec["kind"] = "analytic";
    }

    const auto variant = rd.guard("mode", [&] { return parse_mode(root.value("mode", std::string("carbon"))); });
    const double tops = rd.guard("tops_budget", [&] { return root.value("tops_budget", cfg.platform.tops_budget); });
    cfg.mode = ObjectiveMode::make(variant, tops);
    if (root.contains("latency_cap_s")) {
        if (cfg.mode.has_latency_objective()) {
            if (!root["latency_cap_s"].is_null())
                rd.fail("latency_cap_s", "mode " + to_string(variant) + " has latency as an objective; remove the cap");
        } else {
            cfg.mode.latency_cap_s = rd.guard("latency_cap_s", [&] { return root["latency_cap_s"].get<double>(); });
        }
    }
    rd.guard("mode", [&] { cfg.mode.validate(); });

    if (root.contains("search")) {
        const auto& j = root["search"];
        auto& o = cfg.search;
        cfg.strategy = rd.guard("search.strategy", [&] { return j.value("strategy", cfg.strategy); });
        rd.guard("search.strategy", [&] { (void)make_strategy(cfg.strategy); });
        o.budget = rd.guard("search.budget", [&] { return j.value("budget", o.budget); });
        o.seed = rd.guard("search.seed", [&] { return j.value("seed", o.seed); });
        o.population = rd.guard("search.population", [&] { return j.value("population", o.population); });
        o.crossover_p = rd.guard("search.crossover_p", [&] { return j.value("crossover_p", o.crossover_p); });
        if (j.contains("mutation_p") && !j["mutation_p"].is_null())
            o.mutation_p = rd.guard("search.mutation_p", [&] { return j["mutation_p"].get<double>(); });
        o.jobs = rd.guard("search.jobs", [&] { return j.value("jobs", o.jobs); });
        o.exhaustive_cap = rd.guard("search.exhaustive_cap", [&] { return j.value("exhaustive_cap", o.exhaustive_cap); });
        if (o.population < 2) rd.fail("search.population", "must be >= 2");
        if (o.budget < static_cast<std::uint64_t>(o.population)) rd.fail("search.budget", "must be >= population");
        if (o.jobs < 1) rd.fail("search.jobs", "must be >= 1");
    }
    if (root.contains("output_dir"))
        cfg.output_dir = rd.guard("output_dir", [&] { return rd.resolve(root["output_dir"].get<std::string>()); });

    rd.guard("region", [&] { (void)make_context(cfg); });
    refresh(cfg);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "", 0, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path);
}

void refresh(RunConfig& cfg) {
    cfg.mode.validate();
    nlohmann::json search{{"strategy", cfg.strategy},
                          {"budget", cfg.search.budget},
                          {"seed", cfg.search.seed},
                          {"population", cfg.search.population},
                          {"crossover_p", cfg.search.crossover_p},
                          {"jobs", cfg.search.jobs},
                          {"exhaustive_cap", cfg.search.exhaustive_cap}};
    search["mutation_p"] = cfg.search.mutation_p ? nlohmann::json(*cfg.search.mutation_p) : nlohmann::json(nullptr);
    nlohmann::json s{{"schema_version", 1},
                     {"model", to_json(*cfg.base)},
                     {"prune_steps",
                      {{"layers", cfg.steps.layers},
                       {"ffn", cfg.steps.ffn},
                       {"hidden", cfg.steps.hidden},
                       {"heads", cfg.steps.heads}}},
                     {"platform", to_json(cfg.platform)},
                     {"arch_space", to_json(cfg.arch)},
                     {"coefficients", to_json(cfg.coeffs)},
                     {"carbon_factors", to_json(cfg.factors)},
                     {"grid", grid_json(*cfg.grid_provider)},
                     {"region", cfg.region},
                     {"schedule", to_json(cfg.schedule)},
                     {"proxy", cfg.proxy_spec},
                     {"mode", to_string(cfg.mode.variant)},
                     {"tops_budget", cfg.mode.tops_budget},
                     {"search", std::move(search)},
                     {"output_dir", cfg.output_dir}};
    s["latency_cap_s"] = cfg.mode.latency_cap_s ? nlohmann::json(*cfg.mode.latency_cap_s) : nlohmann::json(nullptr);
    s["fab_region"] = cfg.fab_region ? nlohmann::json(*cfg.fab_region) : nlohmann::json(nullptr);
    s["grid_override_g_per_kwh"] =
        cfg.grid_override_g_per_kwh ? nlohmann::json(*cfg.grid_override_g_per_kwh) : nlohmann::json(nullptr);
    cfg.snapshot = std::move(s);
}

EvalContext make_context(const RunConfig& cfg) {
    EvalContext ctx;
    ctx.platform = cfg.platform;
    ctx.coeffs = cfg.coeffs;
    ctx.factors = cfg.factors;
    if (cfg.fab_region) ctx.factors.ci_fab = grid_intensity(*cfg.fab_region, *cfg.grid_provider).g_per_kwh;
    ctx.schedule = cfg.schedule;
    ctx.grid = grid_intensity(cfg.region, *cfg.grid_provider, cfg.grid_override_g_per_kwh);
    ctx.proxy = cfg.proxy;
    ctx.prune_space = std::make_shared<const PruneSpace>(build_prune_space(cfg.base, cfg.steps));
    return ctx;
}

JointSpace make_space(const RunConfig& cfg) {
    return JointSpace{build_prune_space(cfg.base, cfg.steps), cfg.arch};
}

}  // namespace carbondse
