#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "carbondse/archspace.hpp"
#include "carbondse/perf.hpp"

namespace carbondse {

// Manufacturing footprint factors, per unit die area unless noted.
struct CarbonFactors {
    double ci_fab = 560.0;      // gCO2/kWh of the fab's grid
    double epa = 1.2;           // kWh/cm^2
    double gpa = 150.0;         // gCO2/cm^2
    double mpa = 500.0;         // gCO2/cm^2
    double yield_frac = 0.875;  // (0, 1]
    double dram_cps = 200.0;    // gCO2/GB
    double packaging_g = 150.0; // gCO2 per package

    void validate() const;
};

struct DeploymentSchedule {
    double lifetime_years = 3.0;
    double active_hours_per_day = 6.0;
    double inferences_per_second = 1.0;

    void validate() const;
};

enum class GridSource { Static, Override, Provider };
std::string to_string(GridSource s);

struct GridIntensity {
    std::string region;
    double g_per_kwh = 0.0;
    GridSource source = GridSource::Static;
};

// Region code -> yearly average intensity. Implementations must be read-only
// after construction so lookups can run concurrently.
class GridProvider {
public:
    virtual ~GridProvider() = default;
    virtual std::optional<double> lookup(const std::string& region) const = 0;
    virtual std::vector<std::string> regions() const = 0;
    virtual GridSource source() const { return GridSource::Provider; }
};

class StaticGridProvider final : public GridProvider {
public:
    StaticGridProvider() = default;
    explicit StaticGridProvider(std::map<std::string, double> table) : table_(std::move(table)) {}
    static StaticGridProvider from_json(const nlohmann::json& j);
    static StaticGridProvider load(const std::string& path);

    std::optional<double> lookup(const std::string& region) const override;
    std::vector<std::string> regions() const override;
    GridSource source() const override { return GridSource::Static; }

private:
    std::map<std::string, double> table_;
};

// Adapter for an external intensity service: the callback receives a region
// code and returns g/kWh, or nullopt when the region is unknown.
class CallbackGridProvider final : public GridProvider {
public:
    using Fetch = std::function<std::optional<double>(const std::string&)>;
    CallbackGridProvider(Fetch fetch, std::vector<std::string> known)
        : fetch_(std::move(fetch)), known_(std::move(known)) {}

    std::optional<double> lookup(const std::string& region) const override { return fetch_(region); }
    std::vector<std::string> regions() const override { return known_; }

private:
    Fetch fetch_;
    std::vector<std::string> known_;
};

GridIntensity grid_intensity(const std::string& region, const GridProvider& provider,
                             std::optional<double> override_g_per_kwh = std::nullopt);

struct CarbonReport {
    double embodied_kg = 0.0;
    double operational_kg = 0.0;
    double total_kg = 0.0;
    std::int64_t lifetime_inferences = 0;
    double embodied_share = 0.0;
    double operational_share = 0.0;
};

std::int64_t lifetime_inferences(const DeploymentSchedule& s);
double embodied_carbon_kg(double area_mm2, const Platform& p, const CarbonFactors& f);
double operational_carbon_kg(double energy_per_inference_j, const DeploymentSchedule& s,
                             const GridIntensity& g);
CarbonReport total_carbon(const PerfReport& perf, const Platform& p, const CarbonFactors& f,
                          const DeploymentSchedule& s, const GridIntensity& g);
// Same composition from the two scalar inputs the carbon model depends on.
CarbonReport total_carbon(double area_mm2, double energy_per_inference_j, const Platform& p,
                          const CarbonFactors& f, const DeploymentSchedule& s,
                          const GridIntensity& g);

nlohmann::json to_json(const CarbonReport& r);
nlohmann::json to_json(const CarbonFactors& f);
nlohmann::json to_json(const DeploymentSchedule& s);
CarbonFactors carbon_factors_from_json(const nlohmann::json& j);
CarbonFactors load_carbon_factors(const std::string& path);

}  // namespace carbondse
