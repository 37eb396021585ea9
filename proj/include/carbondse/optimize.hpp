#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "carbondse/archspace.hpp"
#include "carbondse/carbon.hpp"
#include "carbondse/perf.hpp"
#include "carbondse/proxy.hpp"
#include "carbondse/workload.hpp"

namespace carbondse {

enum class ModeVariant { AccCarbon, AccLatency, AccEnergy, AccLatencyCarbon };
enum class Objective { Accuracy, Latency, Energy, Carbon };

inline constexpr double kDefaultLatencyCapS = 0.050;

std::string to_string(ModeVariant v);   // carbon | latency | energy | carbon+latency
ModeVariant parse_mode(const std::string& s);
std::string to_string(Objective o);

struct ObjectiveMode {
    ModeVariant variant = ModeVariant::AccCarbon;
    std::optional<double> latency_cap_s = kDefaultLatencyCapS;
    double tops_budget = 20.0;

    // Attaches the default cap exactly when latency is not itself an objective.
    static ObjectiveMode make(ModeVariant v, double tops_budget = 20.0,
                              double latency_cap_s = kDefaultLatencyCapS);

    std::vector<Objective> objectives() const;
    // The minimized objective that ranks candidates in iso-accuracy tables.
    Objective lead() const;
    bool has_latency_objective() const;
    void validate() const;
};

struct Metrics {
    double accuracy = 0.0;
    double latency_s = 0.0;
    double energy_j = 0.0;
    double carbon_kg = 0.0;
    double area_mm2 = 0.0;
    double embodied_kg = 0.0;
    double operational_kg = 0.0;
    double peak_tops = 0.0;

    double get(Objective o) const;
};

struct Provenance {
    std::int64_t trial = 0;
    std::uint64_t seed = 0;
    std::string strategy;
    ModeVariant mode = ModeVariant::AccCarbon;
};

struct Candidate {
    ModelConfig model;
    HardwareConfig hw;
    Metrics metrics;
    bool feasible = false;
    std::vector<std::string> violations;
    double violation_magnitude = 0.0;
    Provenance provenance;

    std::string fingerprint() const;
};

// Objective values in minimization form: accuracy enters as 1 - accuracy.
std::vector<double> objective_vector(const Candidate& c, const ObjectiveMode& mode);

struct EvalContext {
    Platform platform;
    CostCoefficients coeffs;
    CarbonFactors factors;
    DeploymentSchedule schedule;
    GridIntensity grid{"CA-US", 250.0, GridSource::Override};
    AccuracyProxy proxy;
    // When set, models outside this space are reported as violations.
    std::shared_ptr<const PruneSpace> prune_space;
};

Candidate evaluate_candidate(const ModelConfig& model, const HardwareConfig& hw,
                             const EvalContext& ctx, const ObjectiveMode& mode);

// Evaluates in parallel; output order matches input order for any job count.
std::vector<Candidate> evaluate_batch(const std::vector<std::pair<ModelConfig, HardwareConfig>>& items,
                                      const EvalContext& ctx, const ObjectiveMode& mode, int jobs);

// Pareto dominance on minimization vectors.
bool dominates(std::span<const double> a, std::span<const double> b);
// Feasible candidates of the same mode only; throws otherwise.
bool dominates(const Candidate& a, const Candidate& b, const ObjectiveMode& mode);

struct ParetoFront {
    std::vector<Candidate> members;
    std::vector<double> reference_point;
};

// Indices of the non-dominated rows, in lexicographic order of the rows.
std::vector<std::size_t> nondominated_indices(const std::vector<std::vector<double>>& points);
ParetoFront pareto_front(std::span<const Candidate> candidates, const ObjectiveMode& mode);

// Exact dominated hypervolume for minimization points; every point must be
// strictly better than ref in every coordinate.
double hypervolume(const std::vector<std::vector<double>>& points, std::span<const double> ref);
double hypervolume(const ParetoFront& front, std::span<const double> ref, const ObjectiveMode& mode);

// Per-objective affine map sending lo -> 0 and ref -> 1.
struct HvNormalization {
    std::vector<double> lo;
    std::vector<double> ref;
};

// Worst feasible value per objective, scaled by 1.1.
std::vector<double> reference_point(std::span<const Candidate> pool, const ObjectiveMode& mode);
HvNormalization normalization_for(std::span<const Candidate> pool, const ObjectiveMode& mode);
double normalized_hypervolume(const ParetoFront& front, const HvNormalization& norm,
                              const ObjectiveMode& mode);

struct JointSpace {
    PruneSpace models;
    ArchSpace hardware;
};

struct SearchOptions {
    std::uint64_t budget = 512;
    std::uint64_t seed = 0;
    int population = 32;
    double crossover_p = 0.9;
    std::optional<double> mutation_p;  // default 1 / genome length
    int jobs = 1;
    std::uint64_t exhaustive_cap = 1'000'000;
};

struct RunRecord {
    std::string strategy;
    std::uint64_t seed = 0;
    ObjectiveMode mode;
    std::uint64_t budget = 0;
    std::vector<Candidate> log;
    ParetoFront front;
    HvNormalization hv_norm;
    double hypervolume = 0.0;
    std::vector<std::string> diagnostics;
};

// Recomputes front, reference point and normalized hypervolume from the log.
void finalize_run(RunRecord& run);

class SearchStrategy {
public:
    virtual ~SearchStrategy() = default;
    virtual std::string name() const = 0;
    virtual RunRecord run(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                          const SearchOptions& opts) const = 0;
};

class ExhaustiveStrategy final : public SearchStrategy {
public:
    std::string name() const override { return "exhaustive"; }
    RunRecord run(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                  const SearchOptions& opts) const override;
};

class Nsga2Strategy final : public SearchStrategy {
public:
    std::string name() const override { return "nsga2"; }
    RunRecord run(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                  const SearchOptions& opts) const override;
};

std::unique_ptr<SearchStrategy> make_strategy(const std::string& name);

// Number of joint members the exhaustive oracle would evaluate.
std::uint64_t joint_size(const JointSpace& space, const ObjectiveMode& mode);

RunRecord exhaustive_search(const JointSpace& space, const ObjectiveMode& mode,
                            const EvalContext& ctx, const SearchOptions& opts = {});
RunRecord nsga2_search(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                       const SearchOptions& opts = {});

nlohmann::json to_json(const Candidate& c);
Candidate candidate_from_json(const nlohmann::json& j, std::shared_ptr<const BaseModel> base);
nlohmann::json to_json(const ObjectiveMode& m);
ObjectiveMode mode_from_json(const nlohmann::json& j);
// run.json payload (everything except the candidate log).
nlohmann::json run_summary_json(const RunRecord& r);

}  // namespace carbondse
