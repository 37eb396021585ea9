// carbondse command-line entry point.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 infeasible result.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "carbondse/config.hpp"
#include "carbondse/report.hpp"
#include "carbondse/rundir.hpp"

using namespace carbondse;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInfeasible = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string coeffs;
    std::optional<double> tops;
    std::string region;
    std::string fab_region;
    std::optional<double> grid_override;
    std::optional<double> lifetime_years;
    std::optional<double> duty_hours;
    std::optional<double> inf_per_sec;
    std::string mode;
    std::optional<double> latency_cap;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "Run config JSON (default: $" + std::string(kConfigEnvVar) + ")");
        app->add_option("--coeffs", coeffs, "Cost coefficient JSON overriding the config");
        app->add_option("--tops", tops, "Peak TOPS budget");
        app->add_option("--region", region, "Grid region for operation");
        app->add_option("--fab-region", fab_region, "Grid region used as the fab's energy source");
        app->add_option("--grid-override", grid_override, "Operational grid intensity, gCO2e/kWh");
        app->add_option("--lifetime-years", lifetime_years, "Deployment lifetime in years");
        app->add_option("--duty-hours", duty_hours, "Active hours per day");
        app->add_option("--inf-per-sec", inf_per_sec, "Inferences per second while active");
        app->add_option("--mode", mode, "carbon | latency | energy | carbon+latency");
        app->add_option("--latency-cap", latency_cap, "Latency cap in seconds (capped modes)");
    }

    RunConfig load() const {
        std::string path = config;
        if (path.empty()) {
            if (auto env = default_config_path()) path = *env;
            else throw UsageError("no config given: pass --config or set " + std::string(kConfigEnvVar));
        }
        RunConfig cfg = load_run_config(path);
        if (!coeffs.empty()) cfg.coeffs = load_coefficients(coeffs);
        if (!region.empty()) cfg.region = region;
        if (!fab_region.empty()) cfg.fab_region = fab_region;
        if (grid_override) cfg.grid_override_g_per_kwh = *grid_override;
        if (lifetime_years) cfg.schedule.lifetime_years = *lifetime_years;
        if (duty_hours) cfg.schedule.active_hours_per_day = *duty_hours;
        if (inf_per_sec) cfg.schedule.inferences_per_second = *inf_per_sec;
        cfg.schedule.validate();
        const double budget = tops ? *tops : cfg.mode.tops_budget;
        if (!mode.empty()) {
            const double cap = cfg.mode.latency_cap_s.value_or(kDefaultLatencyCapS);
            cfg.mode = ObjectiveMode::make(parse_mode(mode), budget, cap);
        }
        cfg.mode.tops_budget = budget;
        if (latency_cap) {
            if (cfg.mode.has_latency_objective())
                throw UsageError("--latency-cap does not apply to mode " + to_string(cfg.mode.variant));
            cfg.mode.latency_cap_s = *latency_cap;
        }
        (void)make_context(cfg);  // surfaces unknown regions early
        refresh(cfg);
        return cfg;
    }
};

struct SearchFlags {
    std::optional<std::uint64_t> budget;
    std::optional<std::uint64_t> seed;
    std::optional<int> population;
    std::optional<int> jobs;
    std::string strategy;
    std::string out;
    bool force = false;

    void attach(CLI::App* app, bool with_strategy) {
        app->add_option("--budget", budget, "Evaluation budget");
        app->add_option("--seed", seed, "Random seed");
        app->add_option("--population", population, "NSGA-II population size");
        app->add_option("--jobs", jobs, "Parallel evaluation workers");
        if (with_strategy) app->add_option("--strategy", strategy, "nsga2 | exhaustive");
        app->add_option("--out", out, "Output directory");
        app->add_flag("--force", force, "Overwrite a non-empty output directory");
    }

    void apply(RunConfig& cfg) const {
        if (budget) cfg.search.budget = *budget;
        if (seed) cfg.search.seed = *seed;
        if (population) cfg.search.population = *population;
        if (jobs) cfg.search.jobs = *jobs;
        if (!strategy.empty()) {
            (void)make_strategy(strategy);
            cfg.strategy = strategy;
        }
        if (!out.empty()) cfg.output_dir = fs::absolute(out).lexically_normal().string();
        if (cfg.search.jobs < 1) throw UsageError("--jobs must be >= 1");
        refresh(cfg);
    }
};

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        v.push_back(parse_double(item));
    }
    return v;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) v.push_back(item);
    return v;
}

ModelConfig apply_encoder_overrides(const RunConfig& cfg, const std::vector<std::string>& specs) {
    auto encs = ModelConfig::unpruned(cfg.base).encoders();
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw UsageError("--encoder expects name=L,F,H,A, got '" + spec + "'");
        const auto name = spec.substr(0, eq);
        const auto idx = cfg.base->index_of(name);
        const auto vals = parse_list(spec.substr(eq + 1));
        if (vals.size() != 4) throw UsageError("--encoder " + name + " needs four values L,F,H,A");
        auto& e = encs.at(idx);
        e.num_layers = static_cast<int>(vals[0]);
        e.ffn_dim = static_cast<int>(vals[1]);
        e.hidden_dim = static_cast<int>(vals[2]);
        e.num_heads = static_cast<int>(vals[3]);
    }
    return ModelConfig(cfg.base, std::move(encs));
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const Common& common, const std::string& hw_tuple, const std::vector<std::string>& encoders,
                 bool dump_graph) {
    const RunConfig cfg = common.load();
    if (hw_tuple.empty()) throw UsageError("evaluate needs --hw \"{tc, pe_x, pe_y, L2KB, L2bw, GLBMB}\"");
    const auto hw = HardwareConfig::parse(hw_tuple);
    const auto model = apply_encoder_overrides(cfg, encoders);
    const auto ctx = make_context(cfg);
    const auto cand = evaluate_candidate(model, hw, ctx, cfg.mode);

    nlohmann::json out{{"candidate", to_json(cand)},
                       {"mode", to_json(cfg.mode)},
                       {"params", param_count(model)},
                       {"grid", {{"region", ctx.grid.region},
                                 {"g_per_kwh", ctx.grid.g_per_kwh},
                                 {"source", to_string(ctx.grid.source)}}}};
    const auto graph = lower_to_graph(model);
    try {
        const auto perf = graph_cost(graph, hw, ctx.platform, ctx.coeffs);
        out["perf"] = to_json(perf, dump_graph);
        out["carbon"] = to_json(total_carbon(perf, ctx.platform, ctx.factors, ctx.schedule, ctx.grid));
    } catch (const MappingError& e) {
        out["perf"] = nullptr;
        out["carbon"] = nullptr;
    }
    if (dump_graph) out["graph"] = to_json(graph);
    std::cout << out.dump(2) << "\n";
    if (!cand.feasible) {
        for (const auto& v : cand.violations) std::cerr << "infeasible: " << v << "\n";
        return kInfeasible;
    }
    return kOk;
}

nlohmann::json oracle_comparison(const RunRecord& run, const RunRecord& oracle) {
    if (oracle.mode.variant != run.mode.variant || oracle.mode.tops_budget != run.mode.tops_budget ||
        oracle.mode.latency_cap_s != run.mode.latency_cap_s)
        throw UsageError("oracle run was made under a different mode, budget or latency cap");
    const double hv = normalized_hypervolume(run.front, oracle.hv_norm, run.mode);
    return {{"oracle_evaluations", oracle.log.size()},
            {"oracle_hypervolume", oracle.hypervolume},
            {"search_hypervolume_oracle_norm", hv},
            {"hv_ratio", oracle.hypervolume > 0 ? hv / oracle.hypervolume : 0.0}};
}

int cmd_search(const Common& common, const SearchFlags& flags, const std::string& forced_strategy,
               const std::string& oracle_dir, bool compare_exhaustive) {
    RunConfig cfg = common.load();
    flags.apply(cfg);
    if (!forced_strategy.empty()) {
        cfg.strategy = forced_strategy;
        refresh(cfg);
    }
    const std::string dir = cfg.output_dir;
    prepare_run_dir(dir, flags.force);
    write_config_snapshot(dir, cfg);

    const auto ctx = make_context(cfg);
    const auto space = make_space(cfg);
    const auto strategy = make_strategy(cfg.strategy);
    RunRecord run = strategy->run(space, cfg.mode, ctx, cfg.search);

    nlohmann::json extra = nlohmann::json::object();
    if (!oracle_dir.empty()) {
        extra["oracle"] = oracle_comparison(run, load_run(oracle_dir).run);
        extra["oracle"]["source"] = fs::absolute(oracle_dir).lexically_normal().string();
    } else if (compare_exhaustive) {
        extra["oracle"] = oracle_comparison(run, exhaustive_search(space, cfg.mode, ctx, cfg.search));
        extra["oracle"]["source"] = "inline";
    }
    write_run(dir, run, extra);
    write_text((fs::path(dir) / "reports" / "breakdown.csv").string(), emit_breakdown_csv(breakdown(run, ctx)));

    std::cout << "strategy=" << run.strategy << " mode=" << to_string(cfg.mode.variant)
              << " evaluations=" << run.log.size() << " front=" << run.front.members.size()
              << " hv=" << fmt_double(run.hypervolume);
    if (extra.contains("oracle")) std::cout << " hv_ratio=" << fmt_double(extra["oracle"]["hv_ratio"].get<double>());
    std::cout << " out=" << dir << "\n";
    for (const auto& d : run.diagnostics) std::cerr << "note: " << d << "\n";
    return run.front.members.empty() ? kInfeasible : kOk;
}

int cmd_report_iso(const std::string& runs_arg, const std::string& targets_arg, double tol, const std::string& out) {
    const auto dirs = split(runs_arg);
    if (dirs.empty()) throw UsageError("report iso needs --runs dir[,dir...]");
    std::vector<RunRecord> runs;
    for (const auto& d : dirs) runs.push_back(load_run(d).run);
    const auto targets = parse_list(targets_arg);
    if (targets.empty()) throw UsageError("report iso needs --targets");
    const auto rows = iso_accuracy(runs, targets, tol);
    const std::string path = out.empty() ? (fs::path(dirs.front()) / "reports" / "iso.csv").string() : out;
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_text(path, emit_iso_csv(rows));
    std::cout << path << "\n";
    return kOk;
}

int cmd_report_breakdown(const std::string& dir, bool all, const std::string& out) {
    const auto loaded = load_run(dir);
    const auto ctx = make_context(loaded.config);
    const auto rows = all ? breakdown(std::span<const Candidate>(loaded.run.log), ctx) : breakdown(loaded.run, ctx);
    const std::string path = out.empty() ? (fs::path(dir) / "reports" / "breakdown.csv").string() : out;
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    write_text(path, emit_breakdown_csv(rows));
    std::cout << path << "\n";
    return kOk;
}

int cmd_report_sweep(const Common& common, const SearchFlags& flags, const std::string& axis_arg,
                     const std::string& values_arg) {
    RunConfig cfg = common.load();
    flags.apply(cfg);
    const auto axis = parse_axis(axis_arg);
    std::vector<std::string> values = split(values_arg);
    if (values.empty()) {
        values = axis == SweepAxis::Tops     ? kDefaultTopsSweep
                 : axis == SweepAxis::Region ? kDefaultRegionSweep
                                             : kDefaultLatencyTiers;
    }
    const std::string dir = cfg.output_dir;
    prepare_run_dir(dir, flags.force);
    write_config_snapshot(dir, cfg);

    SweepRequest req;
    req.axis = axis;
    req.values = values;
    req.space = make_space(cfg);
    req.mode = cfg.mode;
    req.ctx = make_context(cfg);
    req.opts = cfg.search;
    req.strategy = cfg.strategy;
    req.grid_provider = cfg.grid_provider.get();
    const auto points = sweep(req);
    for (const auto& p : points) {
        const auto sub = (fs::path(dir) / "points" / (to_string(axis) + "=" + p.value)).string();
        fs::create_directories(fs::path(sub) / "reports");
        RunConfig point_cfg = cfg;
        point_cfg.mode = p.run.mode;
        if (axis == SweepAxis::Region) point_cfg.region = p.value;
        point_cfg.output_dir = sub;
        refresh(point_cfg);
        write_config_snapshot(sub, point_cfg);
        write_run(sub, p.run);
    }
    const auto path = (fs::path(dir) / "reports" / "sweep.csv").string();
    write_text(path, emit_sweep_csv(sweep_rows(axis, points)));
    std::cout << path << "\n";
    return kOk;
}

int cmd_hv(const std::string& points_path, const std::string& ref_arg, const std::string& run_dir) {
    if (!run_dir.empty()) {
        const auto loaded = load_run(run_dir);
        std::printf("%s\n", fmt_double(loaded.run.hypervolume).c_str());
        return kOk;
    }
    if (points_path.empty() || ref_arg.empty()) throw UsageError("hv needs --points FILE and --ref a,b[,c,d], or --run DIR");
    const auto ref = parse_list(ref_arg);
    std::vector<std::vector<double>> pts;
    for (const auto& row : csv_parse(read_text(points_path))) {
        std::vector<double> p;
        try {
            for (const auto& f : row) p.push_back(parse_double(f));
        } catch (const std::invalid_argument&) {
            if (pts.empty()) continue;  // header
            throw;
        }
        pts.push_back(std::move(p));
    }
    std::printf("%s\n", fmt_double(hypervolume(pts, ref)).c_str());
    return kOk;
}

int cmd_spearman(const std::string& xs, const std::string& ys) {
    const auto x = parse_list(xs), y = parse_list(ys);
    std::printf("%s\n", fmt_double(spearman(x, y)).c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Carbon-aware co-design search for Transformer models and edge accelerators"};
    app.require_subcommand(1);

    Common ev_common;
    std::string hw_tuple;
    std::vector<std::string> encoders;
    bool dump_graph = false;
    auto* ev = app.add_subcommand("evaluate", "Evaluate one model/hardware pair");
    ev_common.attach(ev);
    ev->add_option("--hw", hw_tuple, "Hardware tuple {tc, pe_x, pe_y, L2KB, L2bw, GLBMB}");
    ev->add_option("--encoder", encoders, "Encoder override name=L,F,H,A (repeatable)");
    ev->add_flag("--dump-graph", dump_graph, "Include the operator listing");

    Common se_common;
    SearchFlags se_flags;
    std::string oracle_dir;
    bool compare_exhaustive = false;
    auto* se = app.add_subcommand("search", "Run a search and write a run directory");
    se_common.attach(se);
    se_flags.attach(se, true);
    se->add_option("--oracle", oracle_dir, "Enumerate run directory to compare hypervolume against");
    se->add_flag("--compare-exhaustive", compare_exhaustive, "Also enumerate the space and store the HV ratio");

    Common en_common;
    SearchFlags en_flags;
    auto* en = app.add_subcommand("enumerate", "Evaluate the whole joint space (desk-scale oracle)");
    en_common.attach(en);
    en_flags.attach(en, false);

    auto* rep = app.add_subcommand("report", "Derived tables from run directories");
    rep->require_subcommand(1);
    std::string iso_runs, iso_targets, iso_out;
    double iso_tol = 0.01;
    auto* iso = rep->add_subcommand("iso", "Iso-accuracy comparison across runs");
    iso->add_option("--runs", iso_runs, "Comma-separated run directories")->required();
    iso->add_option("--targets", iso_targets, "Comma-separated accuracy targets")->required();
    iso->add_option("--tol", iso_tol, "Accuracy tolerance");
    iso->add_option("--out", iso_out, "Output CSV (default <first run>/reports/iso.csv)");
    std::string bd_run, bd_out;
    bool bd_all = false;
    auto* bd = rep->add_subcommand("breakdown", "Embodied/operational split");
    bd->add_option("--run", bd_run, "Run directory")->required();
    bd->add_flag("--all", bd_all, "Every feasible logged candidate instead of the front");
    bd->add_option("--out", bd_out, "Output CSV (default <run>/reports/breakdown.csv)");
    Common sw_common;
    SearchFlags sw_flags;
    std::string sw_axis = "tops", sw_values;
    auto* sw = rep->add_subcommand("sweep", "Repeat one search across an axis");
    sw_common.attach(sw);
    sw_flags.attach(sw, true);
    sw->add_option("--axis", sw_axis, "tops | region | latency");
    sw->add_option("--values", sw_values, "Comma-separated axis values");
    sw->add_option("--regions", sw_values, "Alias of --values for the region axis");

    std::string hv_points, hv_ref, hv_run;
    auto* hv = app.add_subcommand("hv", "Hypervolume of a point set or a stored run");
    hv->add_option("--points", hv_points, "CSV of objective vectors (minimization)");
    hv->add_option("--ref", hv_ref, "Reference point a,b[,c,d]");
    hv->add_option("--run", hv_run, "Run directory (normalized HV recomputed from the log)");

    std::string sp_x, sp_y;
    auto* sp = app.add_subcommand("spearman", "Rank correlation of two lists");
    sp->add_option("--x", sp_x, "Comma-separated values")->required();
    sp->add_option("--y", sp_y, "Comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*ev) return cmd_evaluate(ev_common, hw_tuple, encoders, dump_graph);
        if (*se) return cmd_search(se_common, se_flags, "", oracle_dir, compare_exhaustive);
        if (*en) return cmd_search(en_common, en_flags, "exhaustive", "", false);
        if (*iso) return cmd_report_iso(iso_runs, iso_targets, iso_tol, iso_out);
        if (*bd) return cmd_report_breakdown(bd_run, bd_all, bd_out);
        if (*sw) return cmd_report_sweep(sw_common, sw_flags, sw_axis, sw_values);
        if (*hv) return cmd_hv(hv_points, hv_ref, hv_run);
        if (*sp) return cmd_spearman(sp_x, sp_y);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
