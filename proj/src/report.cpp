#include "carbondse/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace carbondse {

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string quote(const std::string& f) {
    if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void check_header(const std::vector<CsvRow>& t, const CsvRow& want, const char* table) {
    if (t.empty() || t.front() != want)
        throw std::invalid_argument(std::string(table) + ": unexpected or missing header");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i].size() != want.size())
            throw std::invalid_argument(std::string(table) + " line " + std::to_string(i + 1) + ": expected " +
                                        std::to_string(want.size()) + " fields");
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

}  // namespace

std::string csv_emit(const CsvRow& header, const std::vector<CsvRow>& rows) {
    std::string out;
    auto line = [&](const CsvRow& r) {
        // A lone empty field would otherwise read back as a blank line.
        if (r.size() == 1 && r[0].empty()) {
            out += "\"\"\n";
            return;
        }
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += quote(r[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

std::vector<CsvRow> csv_parse(const std::string& text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (in_quotes) throw std::invalid_argument("csv: unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("fmt_double: conversion failed");
    return std::string(buf, p);
}

double parse_double(const std::string& s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// pareto.csv

static const CsvRow kParetoHeader{"id",       "accuracy", "carbon_kg",   "latency_s",      "energy_j",
                                  "area_mm2", "embodied_kg", "operational_kg", "hw",        "model"};

std::vector<ParetoRow> pareto_rows(const ParetoFront& front) {
    std::vector<ParetoRow> rows;
    int id = 0;
    for (const auto& c : front.members) {
        const auto& m = c.metrics;
        rows.push_back({id++, m.accuracy, m.carbon_kg, m.latency_s, m.energy_j, m.area_mm2, m.embodied_kg,
                        m.operational_kg, c.hw.to_string(), c.model.fingerprint()});
    }
    return rows;
}

std::string emit_pareto_csv(const std::vector<ParetoRow>& rows) {
    std::vector<CsvRow> out;
    for (const auto& r : rows)
        out.push_back({std::to_string(r.id), fmt_double(r.accuracy), fmt_double(r.carbon_kg),
                       fmt_double(r.latency_s), fmt_double(r.energy_j), fmt_double(r.area_mm2),
                       fmt_double(r.embodied_kg), fmt_double(r.operational_kg), r.hw, r.model});
    return csv_emit(kParetoHeader, out);
}

std::vector<ParetoRow> parse_pareto_csv(const std::string& text) {
    const auto t = csv_parse(text);
    check_header(t, kParetoHeader, "pareto.csv");
    std::vector<ParetoRow> rows;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto& f = t[i];
        rows.push_back({parse_int(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                        parse_double(f[4]), parse_double(f[5]), parse_double(f[6]), parse_double(f[7]), f[8],
                        f[9]});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// iso-accuracy

static const CsvRow kIsoHeader{"target",   "tolerance", "mode",     "filled", "accuracy", "carbon_kg",
                               "latency_s", "energy_j", "area_mm2", "hw",     "model"};

std::vector<IsoAccuracyRow> iso_accuracy(std::span<const RunRecord> runs, const std::vector<double>& targets,
                                         double tol) {
    if (!(tol >= 0)) throw std::invalid_argument("iso_accuracy: tolerance must be >= 0");
    std::vector<IsoAccuracyRow> rows;
    for (double target : targets) {
        IsoAccuracyRow row;
        row.target = target;
        row.tolerance = tol;
        for (const auto& run : runs) {
            const Objective lead = run.mode.lead();
            const Candidate* best = nullptr;
            std::string best_fp;
            for (const auto& c : run.log) {
                if (!c.feasible || std::abs(c.metrics.accuracy - target) > tol) continue;
                const std::string fp = c.fingerprint();
                if (!best || c.metrics.get(lead) < best->metrics.get(lead) ||
                    (c.metrics.get(lead) == best->metrics.get(lead) && fp < best_fp)) {
                    best = &c;
                    best_fp = fp;
                }
            }
            IsoAccuracyCell cell;
            cell.mode = to_string(run.mode.variant);
            if (best) {
                cell.filled = true;
                cell.accuracy = best->metrics.accuracy;
                cell.carbon_kg = best->metrics.carbon_kg;
                cell.latency_s = best->metrics.latency_s;
                cell.energy_j = best->metrics.energy_j;
                cell.area_mm2 = best->metrics.area_mm2;
                cell.hw = best->hw.to_string();
                cell.model = best->model.fingerprint();
            }
            row.cells.push_back(std::move(cell));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string emit_iso_csv(const std::vector<IsoAccuracyRow>& rows) {
    std::vector<CsvRow> out;
    for (const auto& r : rows)
        for (const auto& c : r.cells)
            out.push_back({fmt_double(r.target), fmt_double(r.tolerance), c.mode, c.filled ? "1" : "0",
                           fmt_double(c.accuracy), fmt_double(c.carbon_kg), fmt_double(c.latency_s),
                           fmt_double(c.energy_j), fmt_double(c.area_mm2), c.hw, c.model});
    return csv_emit(kIsoHeader, out);
}

std::vector<IsoAccuracyRow> parse_iso_csv(const std::string& text) {
    const auto t = csv_parse(text);
    check_header(t, kIsoHeader, "iso.csv");
    std::vector<IsoAccuracyRow> rows;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto& f = t[i];
        const double target = parse_double(f[0]), tol = parse_double(f[1]);
        if (rows.empty() || rows.back().target != target || rows.back().tolerance != tol) {
            IsoAccuracyRow r;
            r.target = target;
            r.tolerance = tol;
            rows.push_back(std::move(r));
        }
        if (f[3] != "0" && f[3] != "1") throw std::invalid_argument("iso.csv: filled must be 0 or 1");
        rows.back().cells.push_back({f[2], f[3] == "1", parse_double(f[4]), parse_double(f[5]),
                                     parse_double(f[6]), parse_double(f[7]), parse_double(f[8]), f[9], f[10]});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// breakdown

static const CsvRow kBreakdownHeader{"id",        "embodied_kg", "operational_kg", "total_kg",
                                     "operational_share", "latency_s", "hw",  "model"};

std::vector<BreakdownRow> breakdown(std::span<const Candidate> candidates, const EvalContext& ctx) {
    struct Item {
        BreakdownRow row;
        std::string fp;
    };
    std::vector<Item> items;
    for (const auto& c : candidates) {
        if (!c.feasible) continue;
        const auto cr = total_carbon(c.metrics.area_mm2, c.metrics.energy_j, ctx.platform, ctx.factors,
                                     ctx.schedule, ctx.grid);
        BreakdownRow r;
        r.embodied_kg = cr.embodied_kg;
        r.operational_kg = cr.operational_kg;
        r.total_kg = cr.total_kg;
        r.operational_share = cr.operational_share;
        r.latency_s = c.metrics.latency_s;
        r.hw = c.hw.to_string();
        r.model = c.model.fingerprint();
        items.push_back({std::move(r), c.fingerprint()});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.row.total_kg != b.row.total_kg) return a.row.total_kg < b.row.total_kg;
        return a.fp < b.fp;
    });
    std::vector<BreakdownRow> rows;
    int id = 0;
    for (auto& it : items) {
        it.row.id = id++;
        rows.push_back(std::move(it.row));
    }
    return rows;
}

std::vector<BreakdownRow> breakdown(const RunRecord& run, const EvalContext& ctx) {
    return breakdown(std::span<const Candidate>(run.front.members), ctx);
}

std::string emit_breakdown_csv(const std::vector<BreakdownRow>& rows) {
    std::vector<CsvRow> out;
    for (const auto& r : rows)
        out.push_back({std::to_string(r.id), fmt_double(r.embodied_kg), fmt_double(r.operational_kg),
                       fmt_double(r.total_kg), fmt_double(r.operational_share), fmt_double(r.latency_s), r.hw,
                       r.model});
    return csv_emit(kBreakdownHeader, out);
}

std::vector<BreakdownRow> parse_breakdown_csv(const std::string& text) {
    const auto t = csv_parse(text);
    check_header(t, kBreakdownHeader, "breakdown.csv");
    std::vector<BreakdownRow> rows;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto& f = t[i];
        rows.push_back({parse_int(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                        parse_double(f[4]), parse_double(f[5]), f[6], f[7]});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// sweep

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Tops: return "tops";
        case SweepAxis::Region: return "region";
        case SweepAxis::LatencyTier: return "latency";
    }
    return "?";
}

SweepAxis parse_axis(const std::string& s) {
    if (s == "tops") return SweepAxis::Tops;
    if (s == "region") return SweepAxis::Region;
    if (s == "latency" || s == "latency-tier") return SweepAxis::LatencyTier;
    throw std::invalid_argument("unknown sweep axis '" + s + "' (expected tops|region|latency)");
}

const Candidate* min_member(const ParetoFront& front, Objective by) {
    const Candidate* best = nullptr;
    std::string best_fp;
    for (const auto& c : front.members) {
        const std::string fp = c.fingerprint();
        if (!best || c.metrics.get(by) < best->metrics.get(by) ||
            (c.metrics.get(by) == best->metrics.get(by) && fp < best_fp)) {
            best = &c;
            best_fp = fp;
        }
    }
    return best;
}

std::vector<SweepPoint> sweep(const SweepRequest& req) {
    if (req.values.empty()) throw std::invalid_argument("sweep: no axis values");
    const auto strategy = make_strategy(req.strategy);
    std::vector<SweepPoint> out;
    for (const auto& value : req.values) {
        ObjectiveMode mode = req.mode;
        EvalContext ctx = req.ctx;
        switch (req.axis) {
            case SweepAxis::Tops: {
                const double t = parse_double(value);
                if (!(t > 0)) throw std::invalid_argument("sweep: TOPS value must be > 0");
                mode.tops_budget = t;
                break;
            }
            case SweepAxis::Region:
                if (!req.grid_provider) throw std::invalid_argument("sweep: region axis needs a grid provider");
                ctx.grid = grid_intensity(value, *req.grid_provider);
                break;
            case SweepAxis::LatencyTier: {
                if (mode.has_latency_objective())
                    throw std::invalid_argument("sweep: latency tiers apply only to capped modes (carbon, energy)");
                const double cap = parse_double(value);
                if (!(cap > 0)) throw std::invalid_argument("sweep: latency tier must be > 0");
                mode.latency_cap_s = cap;
                break;
            }
        }
        mode.validate();
        out.push_back({value, strategy->run(req.space, mode, ctx, req.opts)});
    }
    return out;
}

static const CsvRow kSweepHeader{"axis",          "value",         "strategy",           "seed",
                                 "evaluations",   "feasible",      "front_size",         "hypervolume",
                                 "min_carbon_kg", "min_carbon_latency_s", "min_carbon_accuracy",
                                 "min_latency_s", "min_latency_carbon_kg", "front_max_tops"};

std::vector<SweepRow> sweep_rows(SweepAxis axis, const std::vector<SweepPoint>& points) {
    std::vector<SweepRow> rows;
    for (const auto& p : points) {
        SweepRow r;
        r.axis = to_string(axis);
        r.value = p.value;
        r.strategy = p.run.strategy;
        r.seed = p.run.seed;
        r.evaluations = p.run.log.size();
        for (const auto& c : p.run.log) r.feasible += c.feasible ? 1 : 0;
        r.front_size = p.run.front.members.size();
        r.hypervolume = p.run.hypervolume;
        if (const auto* c = min_member(p.run.front, Objective::Carbon)) {
            r.min_carbon_kg = c->metrics.carbon_kg;
            r.min_carbon_latency_s = c->metrics.latency_s;
            r.min_carbon_accuracy = c->metrics.accuracy;
        }
        if (const auto* c = min_member(p.run.front, Objective::Latency)) {
            r.min_latency_s = c->metrics.latency_s;
            r.min_latency_carbon_kg = c->metrics.carbon_kg;
        }
        for (const auto& c : p.run.front.members) r.front_max_tops = std::max(r.front_max_tops, c.metrics.peak_tops);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string emit_sweep_csv(const std::vector<SweepRow>& rows) {
    std::vector<CsvRow> out;
    for (const auto& r : rows)
        out.push_back({r.axis, r.value, r.strategy, std::to_string(r.seed), std::to_string(r.evaluations),
                       std::to_string(r.feasible), std::to_string(r.front_size), fmt_double(r.hypervolume),
                       fmt_double(r.min_carbon_kg), fmt_double(r.min_carbon_latency_s),
                       fmt_double(r.min_carbon_accuracy), fmt_double(r.min_latency_s),
                       fmt_double(r.min_latency_carbon_kg), fmt_double(r.front_max_tops)});
    return csv_emit(kSweepHeader, out);
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    const auto t = csv_parse(text);
    check_header(t, kSweepHeader, "sweep.csv");
    std::vector<SweepRow> rows;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const auto& f = t[i];
        SweepRow r;
        r.axis = f[0];
        r.value = f[1];
        r.strategy = f[2];
        r.seed = parse_u64(f[3]);
        r.evaluations = parse_u64(f[4]);
        r.feasible = parse_u64(f[5]);
        r.front_size = parse_u64(f[6]);
        r.hypervolume = parse_double(f[7]);
        r.min_carbon_kg = parse_double(f[8]);
        r.min_carbon_latency_s = parse_double(f[9]);
        r.min_carbon_accuracy = parse_double(f[10]);
        r.min_latency_s = parse_double(f[11]);
        r.min_latency_carbon_kg = parse_double(f[12]);
        r.front_max_tops = parse_double(f[13]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace carbondse
