#include "carbondse/perf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace carbondse {

namespace {

constexpr double kPico = 1e-12;

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// ceil(count * cpe / lanes), exact when cpe is integral.
std::int64_t vector_cycles(std::int64_t count, double cpe, std::int64_t lanes) {
    if (cpe == std::floor(cpe)) return ceil_div(count * static_cast<std::int64_t>(cpe), lanes);
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(count) * cpe / static_cast<double>(lanes)));
}

void finish_roofline(OpCost& cost) {
    cost.cycles = 0;
    for (std::size_t i = 0; i < cost.terms.size(); ++i) {
        if (cost.terms[i] > cost.cycles) {
            cost.cycles = cost.terms[i];
            cost.bound = static_cast<Bound>(i);
        }
    }
}

}  // namespace

void CostCoefficients::validate() const {
    if (!(e_mac > 0)) throw std::invalid_argument("coefficients: e_mac must be > 0");
    if (!(e_l2 > 0 && e_glb > e_l2 && e_dram > e_glb))
        throw std::invalid_argument("coefficients: need e_dram > e_glb > e_l2 > 0");
    if (e_vec < 0 || a_pe < 0 || a_sram < 0 || a_vec < 0 || a_fixed < 0 || p_static < 0)
        throw std::invalid_argument("coefficients: energies, areas and static power must be >= 0");
    if (!(dram_bw > 0)) throw std::invalid_argument("coefficients: dram_bw must be > 0");
    for (double v : cpe)
        if (!(v > 0)) throw std::invalid_argument("coefficients: cycles-per-element must be > 0");
}

nlohmann::json to_json(const CostCoefficients& c) {
    return {{"schema_version", c.schema_version},
            {"e_mac_pj", c.e_mac},
            {"e_l2_pj_per_byte", c.e_l2},
            {"e_glb_pj_per_byte", c.e_glb},
            {"e_dram_pj_per_byte", c.e_dram},
            {"e_vec_pj_per_lane", c.e_vec},
            {"a_pe_mm2", c.a_pe},
            {"a_sram_mm2_per_byte", c.a_sram},
            {"a_vec_mm2_per_lane", c.a_vec},
            {"a_fixed_mm2", c.a_fixed},
            {"p_static_mw_per_mm2", c.p_static},
            {"dram_bw_bytes_per_cycle", c.dram_bw},
            {"cycles_per_element",
             {{"softmax", c.cpe[0]}, {"layernorm", c.cpe[1]}, {"gelu", c.cpe[2]}, {"residual_add", c.cpe[3]}}}};
}

CostCoefficients coefficients_from_json(const nlohmann::json& j) {
    CostCoefficients c;
    c.schema_version = j.value("schema_version", 1);
    if (c.schema_version != 1)
        throw std::invalid_argument("coefficients: unsupported schema_version " +
                                    std::to_string(c.schema_version));
    c.e_mac = j.value("e_mac_pj", c.e_mac);
    c.e_l2 = j.value("e_l2_pj_per_byte", c.e_l2);
    c.e_glb = j.value("e_glb_pj_per_byte", c.e_glb);
    c.e_dram = j.value("e_dram_pj_per_byte", c.e_dram);
    c.e_vec = j.value("e_vec_pj_per_lane", c.e_mac);  // falls back to e_mac
    c.a_pe = j.value("a_pe_mm2", c.a_pe);
    if (j.contains("a_sram_mm2_per_byte")) c.a_sram = j["a_sram_mm2_per_byte"].get<double>();
    else if (j.contains("a_sram_mm2_per_mib")) c.a_sram = j["a_sram_mm2_per_mib"].get<double>() / kMiB;
    c.a_vec = j.value("a_vec_mm2_per_lane", c.a_vec);
    c.a_fixed = j.value("a_fixed_mm2", c.a_fixed);
    c.p_static = j.value("p_static_mw_per_mm2", c.p_static);
    c.dram_bw = j.value("dram_bw_bytes_per_cycle", c.dram_bw);
    if (j.contains("cycles_per_element")) {
        const auto& cp = j["cycles_per_element"];
        c.cpe[0] = cp.value("softmax", c.cpe[0]);
        c.cpe[1] = cp.value("layernorm", c.cpe[1]);
        c.cpe[2] = cp.value("gelu", c.cpe[2]);
        c.cpe[3] = cp.value("residual_add", c.cpe[3]);
    }
    c.validate();
    return c;
}

CostCoefficients load_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coefficient file '" + path + "'");
    return coefficients_from_json(nlohmann::json::parse(in));
}

std::string to_string(Bound b) {
    switch (b) {
        case Bound::Compute: return "compute";
        case Bound::Glb: return "glb";
        case Bound::Dram: return "dram";
        case Bound::L2: return "l2";
    }
    return "?";
}

OpCost gemm_cost(const Operator& op, const HardwareConfig& hw, const Platform& p,
                 const CostCoefficients& c) {
    if (op.kind != OpKind::Gemm) throw std::invalid_argument("gemm_cost called on a vector op");
    const std::int64_t M = op.m, K = op.k, N = op.n, rep = op.repeat;
    const std::int64_t px = hw.pe_x, py = hw.pe_y, bpw = p.bytes_per_word();

    // Output-stationary tile of px x py partials plus a K-slice of each operand.
    const std::int64_t partials = px * py * bpw;
    const std::int64_t per_k = (px + py) * bpw;
    if (partials + per_k > hw.l2_bytes) {
        throw MappingError("GEMM '" + op.name + "' cannot map: a " + std::to_string(px) + "x" +
                           std::to_string(py) + " tile needs at least " +
                           std::to_string(partials + per_k) + " bytes of local buffer, have " +
                           std::to_string(hw.l2_bytes));
    }
    // Smallest chunk count whose share of the whole working set fits in L2.
    const std::int64_t chunks = std::min(K, ceil_div(partials + K * per_k, hw.l2_bytes));
    const std::int64_t refill = ceil_div(2 * px * py, hw.l2_bw);
    const std::int64_t k_eff = K + (chunks - 1) * refill;

    const std::int64_t tiles_m = ceil_div(M, px), tiles_n = ceil_div(N, py);
    const std::int64_t tiles = tiles_m * tiles_n;
    const std::int64_t per_tile = k_eff + px + py - 2;

    OpCost cost;
    cost.name = op.name;
    cost.kind = OpKind::Gemm;
    cost.macs = op.macs();
    cost.k_chunks = chunks;
    cost.traffic.dram = (M * K + K * N + M * N) * rep * bpw;
    cost.traffic.glb = (M * K + K * N * tiles_m + M * N) * rep * bpw;
    cost.traffic.l2 = (K * (M * tiles_n + N * tiles_m) + 2 * M * N * (chunks - 1)) * rep * bpw;

    cost.terms[static_cast<int>(Bound::Compute)] = ceil_div(tiles, hw.tc) * per_tile * rep;
    cost.terms[static_cast<int>(Bound::Glb)] = ceil_div(cost.traffic.glb, std::int64_t{p.glb_bw} * bpw);
    cost.terms[static_cast<int>(Bound::Dram)] =
        static_cast<std::int64_t>(std::ceil(static_cast<double>(cost.traffic.dram) / c.dram_bw));
    cost.terms[static_cast<int>(Bound::L2)] =
        ceil_div(cost.traffic.l2, std::int64_t{hw.tc} * hw.l2_bw * bpw);
    finish_roofline(cost);

    const double pj = static_cast<double>(cost.macs) * c.e_mac +
                      static_cast<double>(cost.traffic.dram) * c.e_dram +
                      static_cast<double>(cost.traffic.glb) * c.e_glb +
                      static_cast<double>(cost.traffic.l2) * c.e_l2;
    cost.dyn_energy_j = pj * kPico;
    return cost;
}

OpCost vector_cost(const Operator& op, const HardwareConfig& hw, const Platform& p,
                   const CostCoefficients& c) {
    if (op.kind != OpKind::Vector) throw std::invalid_argument("vector_cost called on a GEMM");
    const double cpe = c.cycles_per_element(op.vector_kind);
    OpCost cost;
    cost.name = op.name;
    cost.kind = OpKind::Vector;
    cost.terms[static_cast<int>(Bound::Compute)] =
        vector_cycles(op.element_count, cpe, std::int64_t{hw.tc} * hw.v_pe()) * op.repeat;
    finish_roofline(cost);
    cost.traffic.glb = 2 * op.element_count * op.repeat * p.bytes_per_word();
    cost.dyn_energy_j = static_cast<double>(op.element_count) * static_cast<double>(op.repeat) *
                        cpe * c.e_vec * kPico;
    return cost;
}

OpCost op_cost(const Operator& op, const HardwareConfig& hw, const Platform& p,
               const CostCoefficients& c) {
    return op.kind == OpKind::Gemm ? gemm_cost(op, hw, p, c) : vector_cost(op, hw, p, c);
}

double area_mm2(const HardwareConfig& hw, const CostCoefficients& c) {
    const double core = static_cast<double>(hw.pe_x) * hw.pe_y * c.a_pe +
                        static_cast<double>(hw.l2_bytes) * c.a_sram + hw.v_pe() * c.a_vec;
    return hw.tc * core + static_cast<double>(hw.glb_bytes) * c.a_sram + c.a_fixed;
}

PerfReport graph_cost(const OperatorGraph& g, const HardwareConfig& hw, const Platform& p,
                      const CostCoefficients& c) {
    PerfReport r;
    r.area_mm2 = area_mm2(hw, c);
    r.ops.reserve(g.ops.size());
    for (const auto& op : g.ops) {
        auto cost = op_cost(op, hw, p, c);
        r.total_cycles += cost.cycles;
        r.total_macs += cost.macs;
        r.dyn_energy_j += cost.dyn_energy_j;
        r.traffic.dram += cost.traffic.dram;
        r.traffic.glb += cost.traffic.glb;
        r.traffic.l2 += cost.traffic.l2;
        r.ops.push_back(std::move(cost));
    }
    r.latency_s = static_cast<double>(r.total_cycles) / p.freq_hz;
    // mW/mm^2 * mm^2 * s = mJ
    r.static_energy_j = c.p_static * r.area_mm2 * r.latency_s * 1e-3;
    r.energy_j = r.dyn_energy_j + r.static_energy_j;
    if (r.total_cycles > 0)
        r.utilization = static_cast<double>(r.total_macs) /
                        (static_cast<double>(r.total_cycles) * static_cast<double>(hw.total_pes()));
    return r;
}

nlohmann::json to_json(const PerfReport& r, bool with_ops) {
    nlohmann::json j{{"latency_s", r.latency_s},
                     {"energy_j", r.energy_j},
                     {"dyn_energy_j", r.dyn_energy_j},
                     {"static_energy_j", r.static_energy_j},
                     {"area_mm2", r.area_mm2},
                     {"total_cycles", r.total_cycles},
                     {"total_macs", r.total_macs},
                     {"utilization", r.utilization},
                     {"traffic_bytes", {{"dram", r.traffic.dram}, {"glb", r.traffic.glb}, {"l2", r.traffic.l2}}}};
    if (with_ops) {
        nlohmann::json ops = nlohmann::json::array();
        for (const auto& o : r.ops)
            ops.push_back({{"name", o.name},
                           {"cycles", o.cycles},
                           {"bound", to_string(o.bound)},
                           {"energy_j", o.dyn_energy_j},
                           {"k_chunks", o.k_chunks},
                           {"dram_bytes", o.traffic.dram},
                           {"glb_bytes", o.traffic.glb},
                           {"l2_bytes", o.traffic.l2}});
        j["operators"] = std::move(ops);
    }
    return j;
}

std::string per_op_csv(const OperatorGraph& g, const PerfReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "op,kind,M,K,N,elements,repeat,cycles,bound,energy_pj,dram_bytes,glb_bytes,l2_bytes\n";
    for (std::size_t i = 0; i < g.ops.size() && i < r.ops.size(); ++i) {
        const auto& op = g.ops[i];
        const auto& c = r.ops[i];
        const bool gemm = op.kind == OpKind::Gemm;
        os << op.name << ',' << (gemm ? "gemm" : to_string(op.vector_kind)) << ','
           << (gemm ? op.m : 0) << ',' << (gemm ? op.k : 0) << ',' << (gemm ? op.n : 0) << ','
           << (gemm ? 0 : op.element_count) << ',' << op.repeat << ',' << c.cycles << ','
           << to_string(c.bound) << ',' << c.dyn_energy_j * 1e12 << ',' << c.traffic.dram << ','
           << c.traffic.glb << ',' << c.traffic.l2 << '\n';
    }
    return os.str();
}

}  // namespace carbondse
