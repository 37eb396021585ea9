#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carbondse/optimize.hpp"

namespace carbondse {

// Minimal RFC 4180 CSV: fields holding commas, quotes or newlines are quoted.
using CsvRow = std::vector<std::string>;
std::string csv_emit(const CsvRow& header, const std::vector<CsvRow>& rows);
// Returns header followed by data rows.
std::vector<CsvRow> csv_parse(const std::string& text);
// Shortest text that parses back to the same double.
std::string fmt_double(double v);
double parse_double(const std::string& s);

// pareto.csv
struct ParetoRow {
    int id = 0;
    double accuracy = 0, carbon_kg = 0, latency_s = 0, energy_j = 0, area_mm2 = 0, embodied_kg = 0,
           operational_kg = 0;
    std::string hw;
    std::string model;
    bool operator==(const ParetoRow&) const = default;
};
std::vector<ParetoRow> pareto_rows(const ParetoFront& front);
std::string emit_pareto_csv(const std::vector<ParetoRow>& rows);
std::vector<ParetoRow> parse_pareto_csv(const std::string& text);

// iso.csv: one row per (target, mode); unfilled cells keep zero metrics.
struct IsoAccuracyCell {
    std::string mode;
    bool filled = false;
    double accuracy = 0, carbon_kg = 0, latency_s = 0, energy_j = 0, area_mm2 = 0;
    std::string hw;
    std::string model;
    bool operator==(const IsoAccuracyCell&) const = default;
};
struct IsoAccuracyRow {
    double target = 0;
    double tolerance = 0.01;
    std::vector<IsoAccuracyCell> cells;
    bool operator==(const IsoAccuracyRow&) const = default;
};

// For each target and run, the feasible logged candidate within tolerance that
// minimizes the run mode's lead objective (ties: lower fingerprint).
std::vector<IsoAccuracyRow> iso_accuracy(std::span<const RunRecord> runs, const std::vector<double>& targets,
                                         double tol = 0.01);
std::string emit_iso_csv(const std::vector<IsoAccuracyRow>& rows);
std::vector<IsoAccuracyRow> parse_iso_csv(const std::string& text);

// breakdown.csv
struct BreakdownRow {
    int id = 0;
    double embodied_kg = 0, operational_kg = 0, total_kg = 0, operational_share = 0, latency_s = 0;
    std::string hw;
    std::string model;
    bool operator==(const BreakdownRow&) const = default;
};
// Carbon recomputed from each candidate's area and energy; sorted by total.
std::vector<BreakdownRow> breakdown(std::span<const Candidate> candidates, const EvalContext& ctx);
std::vector<BreakdownRow> breakdown(const RunRecord& run, const EvalContext& ctx);
std::string emit_breakdown_csv(const std::vector<BreakdownRow>& rows);
std::vector<BreakdownRow> parse_breakdown_csv(const std::string& text);

enum class SweepAxis { Tops, Region, LatencyTier };
std::string to_string(SweepAxis a);
SweepAxis parse_axis(const std::string& s);

inline const std::vector<std::string> kDefaultTopsSweep{"20", "4", "1"};
inline const std::vector<std::string> kDefaultRegionSweep{"TW", "CA-US", "BC-CA"};
inline const std::vector<std::string> kDefaultLatencyTiers{"0.010", "0.050", "0.100"};

struct SweepPoint {
    std::string value;
    RunRecord run;
};

struct SweepRequest {
    SweepAxis axis = SweepAxis::Tops;
    std::vector<std::string> values;
    JointSpace space;
    ObjectiveMode mode;
    EvalContext ctx;
    SearchOptions opts;
    std::string strategy = "nsga2";
    // Needed for the region axis.
    const GridProvider* grid_provider = nullptr;
};

// Runs the same search per axis value with everything else held fixed.
std::vector<SweepPoint> sweep(const SweepRequest& req);

// sweep.csv
struct SweepRow {
    std::string axis;
    std::string value;
    std::string strategy;
    std::uint64_t seed = 0;
    std::uint64_t evaluations = 0;
    std::uint64_t feasible = 0;
    std::uint64_t front_size = 0;
    double hypervolume = 0;
    double min_carbon_kg = 0, min_carbon_latency_s = 0, min_carbon_accuracy = 0;
    double min_latency_s = 0, min_latency_carbon_kg = 0;
    double front_max_tops = 0;
    bool operator==(const SweepRow&) const = default;
};
std::vector<SweepRow> sweep_rows(SweepAxis axis, const std::vector<SweepPoint>& points);
std::string emit_sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

// Feasible front member minimizing `by` (ties: lower fingerprint); nullptr if none.
const Candidate* min_member(const ParetoFront& front, Objective by);

}  // namespace carbondse
