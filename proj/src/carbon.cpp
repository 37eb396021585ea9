#include "carbondse/carbon.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace carbondse {

void CarbonFactors::validate() const {
    if (!(yield_frac > 0.0 && yield_frac <= 1.0))
        throw std::invalid_argument("carbon factors: yield_frac must be in (0, 1]");
    if (ci_fab < 0 || epa < 0 || gpa < 0 || mpa < 0 || dram_cps < 0 || packaging_g < 0)
        throw std::invalid_argument("carbon factors: all factors must be >= 0");
}

void DeploymentSchedule::validate() const {
    if (!(lifetime_years > 0 && active_hours_per_day > 0 && inferences_per_second > 0))
        throw std::invalid_argument("deployment schedule: all fields must be > 0");
    if (active_hours_per_day > 24)
        throw std::invalid_argument("deployment schedule: active_hours_per_day must be <= 24");
}

std::string to_string(GridSource s) {
    switch (s) {
        case GridSource::Static: return "static";
        case GridSource::Override: return "override";
        case GridSource::Provider: return "provider";
    }
    return "?";
}

StaticGridProvider StaticGridProvider::from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 1) != 1)
        throw std::invalid_argument("grid file: unsupported schema_version");
    std::map<std::string, double> table;
    for (const auto& [code, entry] : j.at("regions").items()) {
        const double v = entry.is_number() ? entry.get<double>() : entry.at("g_per_kwh").get<double>();
        if (!(v > 0)) throw std::invalid_argument("grid file: intensity for '" + code + "' must be > 0");
        table[code] = v;
    }
    return StaticGridProvider(std::move(table));
}

StaticGridProvider StaticGridProvider::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid intensity file '" + path + "'");
    return from_json(nlohmann::json::parse(in));
}

std::optional<double> StaticGridProvider::lookup(const std::string& region) const {
    auto it = table_.find(region);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> StaticGridProvider::regions() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : table_) out.push_back(k);
    return out;
}

GridIntensity grid_intensity(const std::string& region, const GridProvider& provider,
                             std::optional<double> override_g_per_kwh) {
    if (override_g_per_kwh) {
        if (!(*override_g_per_kwh > 0))
            throw std::invalid_argument("grid override must be > 0 g/kWh");
        return {region, *override_g_per_kwh, GridSource::Override};
    }
    if (auto v = provider.lookup(region)) {
        if (!(*v > 0)) throw std::invalid_argument("grid intensity for '" + region + "' must be > 0");
        return {region, *v, provider.source()};
    }
    std::string known;
    for (const auto& r : provider.regions()) known += (known.empty() ? "" : ", ") + r;
    throw std::invalid_argument("unknown grid region '" + region + "'; available: " + known);
}

std::int64_t lifetime_inferences(const DeploymentSchedule& s) {
    s.validate();
    return static_cast<std::int64_t>(
        std::floor(s.lifetime_years * 365.0 * s.active_hours_per_day * 3600.0 * s.inferences_per_second));
}

double embodied_carbon_kg(double area_mm2, const Platform& p, const CarbonFactors& f) {
    if (area_mm2 < 0) throw std::invalid_argument("area must be >= 0");
    const double area_cm2 = area_mm2 / 100.0;
    const double die_g = area_cm2 * (f.ci_fab * f.epa + f.gpa + f.mpa) / f.yield_frac;
    const double dram_gb = static_cast<double>(p.dram_bytes) / static_cast<double>(kGiB);
    return (die_g + dram_gb * f.dram_cps + f.packaging_g) / 1000.0;
}

double operational_carbon_kg(double energy_per_inference_j, const DeploymentSchedule& s,
                             const GridIntensity& g) {
    if (energy_per_inference_j < 0) throw std::invalid_argument("energy must be >= 0");
    const double kwh = energy_per_inference_j * static_cast<double>(lifetime_inferences(s)) / 3.6e6;
    return kwh * g.g_per_kwh / 1000.0;
}

CarbonReport total_carbon(double area, double energy, const Platform& p, const CarbonFactors& f,
                          const DeploymentSchedule& s, const GridIntensity& g) {
    CarbonReport r;
    r.lifetime_inferences = lifetime_inferences(s);
    r.embodied_kg = embodied_carbon_kg(area, p, f);
    r.operational_kg = operational_carbon_kg(energy, s, g);
    r.total_kg = r.embodied_kg + r.operational_kg;
    if (r.total_kg > 0) {
        r.embodied_share = r.embodied_kg / r.total_kg;
        r.operational_share = r.operational_kg / r.total_kg;
    }
    return r;
}

CarbonReport total_carbon(const PerfReport& perf, const Platform& p, const CarbonFactors& f,
                          const DeploymentSchedule& s, const GridIntensity& g) {
    return total_carbon(perf.area_mm2, perf.energy_j, p, f, s, g);
}

nlohmann::json to_json(const CarbonReport& r) {
    return {{"embodied_kg", r.embodied_kg},
            {"operational_kg", r.operational_kg},
            {"total_kg", r.total_kg},
            {"lifetime_inferences", r.lifetime_inferences},
            {"embodied_share", r.embodied_share},
            {"operational_share", r.operational_share}};
}

nlohmann::json to_json(const CarbonFactors& f) {
    return {{"ci_fab_g_per_kwh", f.ci_fab}, {"epa_kwh_per_cm2", f.epa},
            {"gpa_g_per_cm2", f.gpa},       {"mpa_g_per_cm2", f.mpa},
            {"yield", f.yield_frac},        {"dram_g_per_gb", f.dram_cps},
            {"packaging_g", f.packaging_g}};
}

nlohmann::json to_json(const DeploymentSchedule& s) {
    return {{"lifetime_years", s.lifetime_years},
            {"active_hours_per_day", s.active_hours_per_day},
            {"inferences_per_second", s.inferences_per_second}};
}

CarbonFactors carbon_factors_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 1) != 1)
        throw std::invalid_argument("carbon factors: unsupported schema_version");
    CarbonFactors f;
    f.ci_fab = j.value("ci_fab_g_per_kwh", f.ci_fab);
    f.epa = j.value("epa_kwh_per_cm2", f.epa);
    f.gpa = j.value("gpa_g_per_cm2", f.gpa);
    f.mpa = j.value("mpa_g_per_cm2", f.mpa);
    f.yield_frac = j.value("yield", f.yield_frac);
    f.dram_cps = j.value("dram_g_per_gb", f.dram_cps);
    f.packaging_g = j.value("packaging_g", f.packaging_g);
    f.validate();
    return f;
}

CarbonFactors load_carbon_factors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open carbon factor file '" + path + "'");
    return carbon_factors_from_json(nlohmann::json::parse(in));
}

}  // namespace carbondse
