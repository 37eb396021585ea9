#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "carbondse/archspace.hpp"
#include "carbondse/workload.hpp"

namespace carbondse {

// Per-event energy and per-unit area figures for the accelerator template.
// The shipped defaults are representative 22nm numbers, not measured values.
struct CostCoefficients {
    int schema_version = 1;
    double e_mac = 0.2;    // pJ/MAC
    double e_l2 = 1.0;     // pJ/byte
    double e_glb = 2.0;    // pJ/byte
    double e_dram = 20.0;  // pJ/byte
    double e_vec = 0.2;    // pJ per lane-cycle
    double a_pe = 1.2e-3;  // mm^2 per PE
    double a_sram = 1.5 / static_cast<double>(kMiB);  // mm^2 per byte
    double a_vec = 2.0e-3;  // mm^2 per vector lane
    double a_fixed = 1.0;   // mm^2
    double p_static = 1.0;  // mW/mm^2
    double dram_bw = 64.0;  // bytes/cycle
    std::array<double, kNumVectorKinds> cpe{4.0, 3.0, 2.0, 1.0};  // softmax, layernorm, gelu, add

    double cycles_per_element(VectorKind k) const { return cpe[static_cast<int>(k)]; }
    // Throws std::invalid_argument when the energy ordering or signs are broken.
    void validate() const;
};

nlohmann::json to_json(const CostCoefficients& c);
CostCoefficients coefficients_from_json(const nlohmann::json& j);
CostCoefficients load_coefficients(const std::string& path);

// Raised when an operator cannot be mapped onto the local buffer.
class MappingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Bound { Compute = 0, Glb = 1, Dram = 2, L2 = 3 };
std::string to_string(Bound b);

struct Traffic {
    std::int64_t dram = 0;
    std::int64_t glb = 0;
    std::int64_t l2 = 0;
};

struct OpCost {
    std::string name;
    OpKind kind = OpKind::Gemm;
    std::int64_t cycles = 0;
    Bound bound = Bound::Compute;
    // Individual roofline terms, in cycles; cycles is their maximum.
    std::array<std::int64_t, 4> terms{};
    std::int64_t macs = 0;
    std::int64_t k_chunks = 1;
    double dyn_energy_j = 0.0;
    Traffic traffic;
};

OpCost gemm_cost(const Operator& op, const HardwareConfig& hw, const Platform& p,
                 const CostCoefficients& c);
OpCost vector_cost(const Operator& op, const HardwareConfig& hw, const Platform& p,
                   const CostCoefficients& c);
OpCost op_cost(const Operator& op, const HardwareConfig& hw, const Platform& p,
               const CostCoefficients& c);

double area_mm2(const HardwareConfig& hw, const CostCoefficients& c);

struct PerfReport {
    double latency_s = 0.0;
    double dyn_energy_j = 0.0;
    double static_energy_j = 0.0;
    double energy_j = 0.0;
    double area_mm2 = 0.0;
    std::int64_t total_cycles = 0;
    std::int64_t total_macs = 0;
    Traffic traffic;
    double utilization = 0.0;
    std::vector<OpCost> ops;
};

PerfReport graph_cost(const OperatorGraph& g, const HardwareConfig& hw, const Platform& p,
                      const CostCoefficients& c);

nlohmann::json to_json(const PerfReport& r, bool with_ops);
// "op,kind,M,K,N,elements,repeat,cycles,bound,energy_pj,dram_bytes,glb_bytes,l2_bytes"
std::string per_op_csv(const OperatorGraph& g, const PerfReport& r);

}  // namespace carbondse
