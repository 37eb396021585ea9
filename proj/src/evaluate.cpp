#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "carbondse/optimize.hpp"

namespace carbondse {

std::string to_string(ModeVariant v) {
    switch (v) {
        case ModeVariant::AccCarbon: return "carbon";
        case ModeVariant::AccLatency: return "latency";
        case ModeVariant::AccEnergy: return "energy";
        case ModeVariant::AccLatencyCarbon: return "carbon+latency";
    }
    return "?";
}

ModeVariant parse_mode(const std::string& s) {
    if (s == "carbon") return ModeVariant::AccCarbon;
    if (s == "latency") return ModeVariant::AccLatency;
    if (s == "energy") return ModeVariant::AccEnergy;
    if (s == "carbon+latency" || s == "latency+carbon") return ModeVariant::AccLatencyCarbon;
    throw std::invalid_argument("unknown mode '" + s + "' (expected carbon|latency|energy|carbon+latency)");
}

std::string to_string(Objective o) {
    switch (o) {
        case Objective::Accuracy: return "accuracy";
        case Objective::Latency: return "latency_s";
        case Objective::Energy: return "energy_j";
        case Objective::Carbon: return "carbon_kg";
    }
    return "?";
}

ObjectiveMode ObjectiveMode::make(ModeVariant v, double tops_budget, double latency_cap_s) {
    ObjectiveMode m;
    m.variant = v;
    m.tops_budget = tops_budget;
    m.latency_cap_s = std::nullopt;
    if (!m.has_latency_objective()) m.latency_cap_s = latency_cap_s;
    return m;
}

std::vector<Objective> ObjectiveMode::objectives() const {
    switch (variant) {
        case ModeVariant::AccCarbon: return {Objective::Accuracy, Objective::Carbon};
        case ModeVariant::AccLatency: return {Objective::Accuracy, Objective::Latency};
        case ModeVariant::AccEnergy: return {Objective::Accuracy, Objective::Energy};
        case ModeVariant::AccLatencyCarbon:
            return {Objective::Accuracy, Objective::Latency, Objective::Carbon};
    }
    return {};
}

Objective ObjectiveMode::lead() const {
    switch (variant) {
        case ModeVariant::AccCarbon: return Objective::Carbon;
        case ModeVariant::AccLatency: return Objective::Latency;
        case ModeVariant::AccEnergy: return Objective::Energy;
        case ModeVariant::AccLatencyCarbon: return Objective::Carbon;
    }
    return Objective::Carbon;
}

bool ObjectiveMode::has_latency_objective() const {
    return variant == ModeVariant::AccLatency || variant == ModeVariant::AccLatencyCarbon;
}

void ObjectiveMode::validate() const {
    if (has_latency_objective() == latency_cap_s.has_value())
        throw std::invalid_argument("mode " + to_string(variant) +
                                    ": a latency cap is required exactly when latency is not an objective");
    if (latency_cap_s && !(*latency_cap_s > 0)) throw std::invalid_argument("latency cap must be > 0");
    if (!(tops_budget > 0)) throw std::invalid_argument("TOPS budget must be > 0");
}

double Metrics::get(Objective o) const {
    switch (o) {
        case Objective::Accuracy: return accuracy;
        case Objective::Latency: return latency_s;
        case Objective::Energy: return energy_j;
        case Objective::Carbon: return carbon_kg;
    }
    return 0.0;
}

std::string Candidate::fingerprint() const { return model.fingerprint() + "@" + hw.to_string(); }

std::vector<double> objective_vector(const Candidate& c, const ObjectiveMode& mode) {
    std::vector<double> v;
    for (auto o : mode.objectives())
        v.push_back(o == Objective::Accuracy ? 1.0 - c.metrics.accuracy : c.metrics.get(o));
    return v;
}

Candidate evaluate_candidate(const ModelConfig& model, const HardwareConfig& hw,
                             const EvalContext& ctx, const ObjectiveMode& mode) {
    Candidate c;
    c.model = model;
    c.hw = hw;
    c.provenance.mode = mode.variant;

    auto add = [&](std::string reason, double magnitude) {
        c.violations.push_back(std::move(reason));
        c.violation_magnitude += magnitude;
    };

    Platform platform = ctx.platform;
    platform.tops_budget = mode.tops_budget;
    c.metrics.peak_tops = peak_tops(hw, platform);
    for (const auto& v : validate_hw(hw, platform))
        add(v.field == "tops" ? "TOPS: " + v.bound : "range: " + v.field + " " + v.bound, v.magnitude);

    if (ctx.prune_space) {
        for (const auto& v : validate_model_config(model, *ctx.prune_space))
            add("model: " + v.encoder + "." + to_string(v.dimension) + "=" + std::to_string(v.value) +
                    " outside prune space",
                1.0);
    }

    try {
        const auto graph = lower_to_graph(model);
        const auto perf = graph_cost(graph, hw, ctx.platform, ctx.coeffs);
        const auto carbon = total_carbon(perf, ctx.platform, ctx.factors, ctx.schedule, ctx.grid);
        c.metrics.latency_s = perf.latency_s;
        c.metrics.energy_j = perf.energy_j;
        c.metrics.area_mm2 = perf.area_mm2;
        c.metrics.embodied_kg = carbon.embodied_kg;
        c.metrics.operational_kg = carbon.operational_kg;
        c.metrics.carbon_kg = carbon.total_kg;
        if (mode.latency_cap_s && perf.latency_s > *mode.latency_cap_s) {
            std::ostringstream os;
            os << "latency: " << perf.latency_s * 1e3 << " ms exceeds cap " << *mode.latency_cap_s * 1e3
               << " ms";
            add(os.str(), perf.latency_s / *mode.latency_cap_s - 1.0);
        }
    } catch (const MappingError& e) {
        add(std::string("mapping: ") + e.what(), 10.0);
    }

    try {
        c.metrics.accuracy = ctx.proxy(model);
    } catch (const std::exception& e) {
        add(std::string("accuracy: ") + e.what(), 10.0);
    }

    c.feasible = c.violations.empty();
    return c;
}

std::vector<Candidate> evaluate_batch(const std::vector<std::pair<ModelConfig, HardwareConfig>>& items,
                                      const EvalContext& ctx, const ObjectiveMode& mode, int jobs) {
    std::vector<Candidate> out(items.size());
    const std::size_t n = items.size();
    const std::size_t workers = std::clamp<std::size_t>(jobs < 1 ? 1 : static_cast<std::size_t>(jobs), 1,
                                                        std::max<std::size_t>(n, 1));
    auto work = [&](std::size_t w) {
        for (std::size_t i = w; i < n; i += workers)
            out[i] = evaluate_candidate(items[i].first, items[i].second, ctx, mode);
    };
    if (workers == 1) {
        work(0);
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Candidate& c) {
    nlohmann::json encs = nlohmann::json::object();
    for (std::size_t i = 0; i < c.model.encoders().size(); ++i) {
        const auto& e = c.model.encoder(i);
        encs[c.model.base().encoders[i].name] = {e.num_layers, e.ffn_dim, e.hidden_dim, e.num_heads};
    }
    const auto& m = c.metrics;
    return {{"trial", c.provenance.trial},
            {"seed", c.provenance.seed},
            {"strategy", c.provenance.strategy},
            {"mode", to_string(c.provenance.mode)},
            {"model", std::move(encs)},
            {"hw", to_json(c.hw)},
            {"feasible", c.feasible},
            {"violations", c.violations},
            {"violation_magnitude", c.violation_magnitude},
            {"metrics",
             {{"accuracy", m.accuracy},
              {"latency_s", m.latency_s},
              {"energy_j", m.energy_j},
              {"carbon_kg", m.carbon_kg},
              {"area_mm2", m.area_mm2},
              {"embodied_kg", m.embodied_kg},
              {"operational_kg", m.operational_kg},
              {"peak_tops", m.peak_tops}}}};
}

Candidate candidate_from_json(const nlohmann::json& j, std::shared_ptr<const BaseModel> base) {
    Candidate c;
    std::vector<EncoderConfig> encs;
    for (const auto& def : base->encoders) {
        const auto& d = j.at("model").at(def.name);
        EncoderConfig e = def.base;
        e.num_layers = d.at(0).get<int>();
        e.ffn_dim = d.at(1).get<int>();
        e.hidden_dim = d.at(2).get<int>();
        e.num_heads = d.at(3).get<int>();
        encs.push_back(e);
    }
    c.model = ModelConfig(std::move(base), std::move(encs));
    c.hw = hardware_from_json(j.at("hw"));
    c.feasible = j.at("feasible").get<bool>();
    c.violations = j.value("violations", std::vector<std::string>{});
    c.violation_magnitude = j.value("violation_magnitude", 0.0);
    c.provenance.trial = j.value("trial", std::int64_t{0});
    c.provenance.seed = j.value("seed", std::uint64_t{0});
    c.provenance.strategy = j.value("strategy", std::string());
    c.provenance.mode = parse_mode(j.value("mode", std::string("carbon")));
    const auto& m = j.at("metrics");
    c.metrics.accuracy = m.at("accuracy").get<double>();
    c.metrics.latency_s = m.at("latency_s").get<double>();
    c.metrics.energy_j = m.at("energy_j").get<double>();
    c.metrics.carbon_kg = m.at("carbon_kg").get<double>();
    c.metrics.area_mm2 = m.at("area_mm2").get<double>();
    c.metrics.embodied_kg = m.at("embodied_kg").get<double>();
    c.metrics.operational_kg = m.at("operational_kg").get<double>();
    c.metrics.peak_tops = m.value("peak_tops", 0.0);
    return c;
}

nlohmann::json to_json(const ObjectiveMode& m) {
    nlohmann::json j{{"mode", to_string(m.variant)}, {"tops_budget", m.tops_budget}};
    j["latency_cap_s"] = m.latency_cap_s ? nlohmann::json(*m.latency_cap_s) : nlohmann::json(nullptr);
    nlohmann::json objs = nlohmann::json::array();
    for (auto o : m.objectives()) objs.push_back(to_string(o));
    j["objectives"] = std::move(objs);
    return j;
}

ObjectiveMode mode_from_json(const nlohmann::json& j) {
    ObjectiveMode m;
    m.variant = parse_mode(j.at("mode").get<std::string>());
    m.tops_budget = j.value("tops_budget", 20.0);
    if (j.contains("latency_cap_s") && !j["latency_cap_s"].is_null())
        m.latency_cap_s = j["latency_cap_s"].get<double>();
    else
        m.latency_cap_s = std::nullopt;
    m.validate();
    return m;
}

}  // namespace carbondse
