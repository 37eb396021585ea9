#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <unistd.h>

#include "carbondse/config.hpp"
#include "carbondse/report.hpp"
#include "carbondse/rundir.hpp"
#include "support.hpp"

using namespace carbondse;
namespace fs = std::filesystem;

namespace {

std::string random_field(std::mt19937_64& g) {
    static const char alphabet[] = "ab,\"\n\r x{}|:;-0.9";
    std::uniform_int_distribution<int> len(0, 12), ch(0, sizeof(alphabet) - 2);
    std::string s;
    for (int i = len(g); i > 0; --i) s += alphabet[ch(g)];
    return s;
}

double random_double(std::mt19937_64& g) {
    std::uniform_int_distribution<int> kind(0, 5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> ex(-300, 300);
    switch (kind(g)) {
        case 0: return 0.0;
        case 1: return std::ldexp(u(g), ex(g) / 4);
        case 2: return std::numeric_limits<double>::denorm_min() * (1 + (g() % 1000));
        case 3: return u(g) * std::pow(10.0, ex(g));
        default: {
            std::uint64_t bits = g();
            double d;
            std::memcpy(&d, &bits, sizeof d);
            return std::isfinite(d) ? d : 1.0;
        }
    }
}

RunRecord run_for(ModeVariant v) {
    auto cfg = testsupport::desk_with(v);
    return exhaustive_search(make_space(cfg), cfg.mode, make_context(cfg));
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("carbondse-test-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("CSV text round trip") {
    auto& g = testsupport::rng();
    for (int i = 0; i < 1000; ++i) {
        std::uniform_int_distribution<int> cols(1, 6), rows(0, 5);
        const int c = cols(g);
        CsvRow header;
        for (int k = 0; k < c; ++k) header.push_back("h" + std::to_string(k));
        std::vector<CsvRow> body(rows(g), CsvRow(c));
        for (auto& r : body)
            for (auto& f : r) f = random_field(g);
        auto parsed = csv_parse(csv_emit(header, body));
        REQUIRE(parsed.size() == body.size() + 1);
        CHECK(parsed[0] == header);
        for (std::size_t r = 0; r < body.size(); ++r) CHECK(parsed[r + 1] == body[r]);
    }
}

TEST_CASE("doubles round trip bit-exactly through text") {
    auto& g = testsupport::rng();
    for (int i = 0; i < 1000; ++i) {
        const double d = random_double(g);
        const double back = parse_double(fmt_double(d));
        CHECK(std::memcmp(&d, &back, sizeof d) == 0);
    }
    CHECK(fmt_double(0.1) == "0.1");
    CHECK_THROWS(parse_double("1.5kg"));
}

TEST_CASE("report tables round trip") {
    auto& g = testsupport::rng();
    auto txt = [&] { return random_field(g); };
    auto num = [&] { return random_double(g); };
    for (int i = 0; i < 1000; ++i) {
        std::vector<ParetoRow> p(1 + i % 3);
        for (auto& r : p) r = {static_cast<int>(g() % 100), num(), num(), num(), num(), num(), num(), num(), txt(), txt()};
        CHECK(parse_pareto_csv(emit_pareto_csv(p)) == p);

        std::vector<BreakdownRow> b(1 + i % 2);
        for (auto& r : b) r = {static_cast<int>(g() % 100), num(), num(), num(), num(), num(), txt(), txt()};
        CHECK(parse_breakdown_csv(emit_breakdown_csv(b)) == b);

        SweepRow s{txt(), txt(), txt(), g(), g() % 10000, g() % 10000, g() % 100, num(), num(), num(), num(), num(), num(), num()};
        CHECK(parse_sweep_csv(emit_sweep_csv({s})) == std::vector<SweepRow>{s});

        IsoAccuracyRow iso;
        iso.target = num();
        iso.tolerance = num();
        for (int k = 0; k < 2; ++k) {
            IsoAccuracyCell cell;
            cell.mode = k ? "latency" : "carbon";
            cell.filled = (g() % 2) == 0;
            if (cell.filled) {
                cell.accuracy = num();
                cell.carbon_kg = num();
                cell.latency_s = num();
                cell.energy_j = num();
                cell.area_mm2 = num();
                cell.hw = txt();
                cell.model = txt();
            }
            iso.cells.push_back(cell);
        }
        CHECK(parse_iso_csv(emit_iso_csv({iso})) == std::vector<IsoAccuracyRow>{iso});
    }
}

TEST_CASE("iso-accuracy selection") {
    auto carbon = run_for(ModeVariant::AccCarbon);
    REQUIRE_FALSE(carbon.front.members.empty());
    const auto& m = carbon.front.members[carbon.front.members.size() / 2];
    auto rows = iso_accuracy(std::span<const RunRecord>(&carbon, 1), {m.metrics.accuracy, 2.0}, 0.0);
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].cells.size() == 1);
    CHECK(rows[0].cells[0].filled);
    CHECK(rows[0].cells[0].hw == m.hw.to_string());
    CHECK(rows[0].cells[0].model == m.model.fingerprint());
    CHECK_FALSE(rows[1].cells[0].filled);

    // carbon-optimized cell: no more carbon, no less latency than the latency-optimized one
    auto latency = run_for(ModeVariant::AccLatency);
    std::vector<RunRecord> both{carbon, latency};
    std::vector<double> targets;
    for (const auto& f : carbon.front.members) targets.push_back(f.metrics.accuracy);
    int compared = 0;
    for (const auto& row : iso_accuracy(both, targets, 0.005)) {
        const auto &c = row.cells[0], &l = row.cells[1];
        CHECK(c.mode == "carbon");
        CHECK(l.mode == "latency");
        if (!c.filled || !l.filled) continue;
        CHECK(c.carbon_kg <= l.carbon_kg);
        CHECK(c.latency_s >= l.latency_s);
        ++compared;
    }
    CHECK(compared > 5);
}

TEST_CASE("carbon breakdown") {
    const auto& cfg = testsupport::desk();
    auto ctx = make_context(cfg);
    Candidate idle;
    idle.model = ModelConfig::unpruned(cfg.base);
    idle.metrics.area_mm2 = 5.0;
    idle.metrics.energy_j = 0.0;
    idle.feasible = true;
    auto rows = breakdown(std::span<const Candidate>(&idle, 1), ctx);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].operational_share == 0.0);
    CHECK(rows[0].total_kg == rows[0].embodied_kg);

    auto run = run_for(ModeVariant::AccCarbon);
    auto br = breakdown(run, ctx);
    CHECK(br.size() == run.front.members.size());
    for (std::size_t i = 1; i < br.size(); ++i) CHECK(br[i - 1].total_kg <= br[i].total_kg);
    for (const auto& r : br) CHECK(r.total_kg == doctest::Approx(r.embodied_kg + r.operational_kg));
}

TEST_CASE("operational share climbs a model size ladder on fixed hardware") {
    const auto& cfg = testsupport::desk();
    auto ctx = make_context(cfg);
    auto mode = ObjectiveMode::make(ModeVariant::AccLatency);
    const auto hw = testsupport::hw(1, 256, 16, 64, 32, 2);
    const std::vector<EncoderConfig> ladder{{1, 512, 128, 4}, {2, 512, 128, 4}, {2, 1024, 128, 4}, {2, 1024, 256, 4}};
    std::vector<Candidate> cands;
    for (const auto& e : ladder) cands.push_back(evaluate_candidate(ModelConfig(cfg.base, {e, e}), hw, ctx, mode));
    for (std::size_t i = 1; i < cands.size(); ++i) {
        CHECK(cands[i].metrics.latency_s > cands[i - 1].metrics.latency_s);
        auto a = breakdown(std::span<const Candidate>(&cands[i - 1], 1), ctx)[0];
        auto b = breakdown(std::span<const Candidate>(&cands[i], 1), ctx)[0];
        CHECK(b.operational_share >= a.operational_share);
    }
}

TEST_CASE("sweeps") {
    auto cfg = testsupport::desk();
    SweepRequest req;
    req.space = make_space(cfg);
    req.mode = cfg.mode;
    req.ctx = make_context(cfg);
    req.opts.budget = 96;
    req.axis = SweepAxis::Tops;
    req.values = kDefaultTopsSweep;
    auto pts = sweep(req);
    REQUIRE(pts.size() == 3);
    for (const auto& m : pts[2].run.front.members) CHECK(m.metrics.peak_tops <= 1.0);
    for (const auto& p : pts)
        for (const auto& m : p.run.front.members) CHECK(m.metrics.peak_tops <= std::stod(p.value));
    auto rows = sweep_rows(SweepAxis::Tops, pts);
    CHECK(rows.size() == 3);
    CHECK(rows[2].front_max_tops <= 1.0);

    req.axis = SweepAxis::Region;
    req.values = kDefaultRegionSweep;
    req.grid_provider = cfg.grid_provider.get();
    auto regions = sweep(req);
    REQUIRE(regions.size() == 3);
    auto rr = sweep_rows(SweepAxis::Region, regions);
    CHECK(rr[0].value == "TW");
    CHECK(rr[0].min_carbon_kg > rr[2].min_carbon_kg);

    req.axis = SweepAxis::LatencyTier;
    req.values = kDefaultLatencyTiers;
    req.mode = ObjectiveMode::make(ModeVariant::AccLatency);
    CHECK_THROWS(sweep(req));
    CHECK(parse_axis("latency-tier") == SweepAxis::LatencyTier);
    CHECK_THROWS(parse_axis("altitude"));
}

TEST_CASE("config errors carry file, line and field") {
    const std::string good = R"({
  "model": {"name": "m", "family": "dual-encoder", "encoders": [
    {"name": "text", "modality": "text", "num_layers": 2, "ffn_dim": 256, "hidden_dim": 64, "num_heads": 2, "seq_len": 8},
    {"name": "vision", "modality": "vision", "num_layers": 2, "ffn_dim": 256, "hidden_dim": 64, "num_heads": 2, "seq_len": 5}]},
  "search": {
    "budget": 64,
    "population": 16
  }
})";
    auto cfg = parse_run_config(good, "inline.json");
    CHECK(cfg.search.budget == 64);
    CHECK(cfg.mode.variant == ModeVariant::AccCarbon);

    auto expect = [](const std::string& text, const std::string& field, int line) {
        try {
            parse_run_config(text, "bad.json");
            FAIL("expected a config error");
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
            CHECK(e.line() == line);
            CHECK(std::string(e.what()).rfind("bad.json:" + std::to_string(line), 0) == 0);
        }
    };
    auto budget = good;
    budget.replace(budget.find("\"budget\": 64"), 12, "\"budget\": 4");
    expect(budget, "search.budget", 6);

    auto unknown = good;
    unknown.insert(unknown.rfind('}'), ",\n  \"colour\": 3\n");
    expect(unknown, "colour", 10);

    auto broken = good;
    broken.replace(broken.find("\"population\": 16"), 16, "\"population\": ");
    try {
        parse_run_config(broken, "bad.json");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(e.line() >= 7);
    }

    auto capped = good;
    capped.insert(1, "\n  \"mode\": \"latency\", \"latency_cap_s\": 0.05,");
    expect(capped, "latency_cap_s", 2);
}

TEST_CASE("shipped configs load") {
    auto desk = load_run_config(testsupport::data_path("configs/desk.json"));
    auto space = make_space(desk);
    CHECK(space.models.size() == 64);
    CHECK(enumerate_space(space.hardware).size() == 64);
    CHECK(make_context(desk).grid.region == "TW");

    auto clip = load_run_config(testsupport::data_path("configs/clip_b16.json"));
    CHECK(param_count(ModelConfig::unpruned(clip.base)) == param_count(ModelConfig::unpruned(testsupport::clip_b16())));

    ::setenv(kConfigEnvVar, "/some/where.json", 1);
    CHECK(default_config_path() == std::optional<std::string>("/some/where.json"));
    ::unsetenv(kConfigEnvVar);
    CHECK_FALSE(default_config_path().has_value());
}

TEST_CASE("run directory write and reload") {
    auto cfg = testsupport::desk();
    auto dir = scratch("rundir");
    prepare_run_dir(dir.string(), false);
    write_text((dir / "x.txt").string(), "x");
    CHECK_THROWS(prepare_run_dir(dir.string(), false));
    prepare_run_dir(dir.string(), true);
    CHECK_FALSE(fs::exists(dir / "x.txt"));

    SearchOptions o;
    o.budget = 96;
    auto run = nsga2_search(make_space(cfg), cfg.mode, make_context(cfg), o);
    write_config_snapshot(dir.string(), cfg);
    write_run(dir.string(), run, {{"note", "test"}});
    auto loaded = load_run(dir.string());
    CHECK(loaded.summary.at("note") == "test");
    CHECK(run_summary_json(loaded.run).dump() == run_summary_json(run).dump());
    CHECK(parse_pareto_csv(read_text((dir / "pareto.csv").string())) == pareto_rows(run.front));
    fs::remove_all(dir);
}
