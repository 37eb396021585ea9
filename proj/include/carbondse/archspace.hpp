#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace carbondse {

inline constexpr std::int64_t kKiB = 1024;
inline constexpr std::int64_t kMiB = 1024 * 1024;
inline constexpr std::int64_t kGiB = 1024 * 1024 * 1024;

// One accelerator instance of the tensor-core template. The vector unit is
// always as wide as the PE array's X dimension.
struct HardwareConfig {
    int tc = 1;
    int pe_x = 1;
    int pe_y = 1;
    std::int64_t glb_bytes = 1 * kMiB;
    std::int64_t l2_bytes = 64 * kKiB;
    int l2_bw = 1;  // words/cycle per core

    int v_pe() const { return pe_x; }
    std::int64_t total_pes() const { return std::int64_t{tc} * pe_x * pe_y; }

    // "{tc, pe_x, pe_y, L2 KB, L2 bw, GLB MB}", the ordering used in result tables.
    std::string to_string() const;
    static HardwareConfig parse(const std::string& tuple);

    bool operator==(const HardwareConfig&) const = default;
    auto operator<=>(const HardwareConfig&) const = default;
};

struct Platform {
    int glb_bw = 256;  // words/cycle
    std::int64_t dram_bytes = kGiB;
    int tech_nm = 22;
    int bitwidth = 8;
    double tops_budget = 20.0;
    double freq_hz = 500e6;
    // Local-buffer bounds accepted by validate_hw.
    std::int64_t l2_min_bytes = 64 * kKiB;
    std::int64_t l2_max_bytes = 4 * kMiB;

    int bytes_per_word() const { return (bitwidth + 7) / 8; }
};

// Peak-compute presets for edge devices.
inline constexpr double kTopsPresets[] = {20.0, 4.0, 1.0};

double peak_tops(const HardwareConfig& hw, const Platform& p);

struct HwViolation {
    std::string field;
    std::string bound;
    double magnitude = 0.0;  // relative overshoot; > 0
};

std::vector<HwViolation> validate_hw(const HardwareConfig& hw, const Platform& p);

struct ArchSpace {
    std::vector<int> tc{1, 2, 4};
    std::vector<int> pe_x{1, 2, 4, 8, 16, 32, 64, 128, 256};
    std::vector<int> pe_y{1, 2, 4, 8, 16, 32, 64, 128, 256};
    std::vector<std::int64_t> glb_bytes{1 * kMiB, 2 * kMiB, 4 * kMiB, 8 * kMiB};
    std::vector<std::int64_t> l2_bytes{64 * kKiB, 128 * kKiB, 256 * kKiB, 512 * kKiB, 1 * kMiB};
    std::vector<int> l2_bw{1, 2, 4, 8, 16, 32, 64, 128, 256};
    Platform platform;

    static constexpr std::size_t kGenes = 6;

    // Size of the unfiltered cartesian product.
    std::uint64_t cartesian_size() const;
    std::size_t gene_arity(std::size_t gene) const;
    HardwareConfig from_genes(const std::size_t* genes) const;
    // Lexicographic decode; the last field (l2_bw) varies fastest.
    HardwareConfig at(std::uint64_t index) const;
};

// Visits the valid members of the space in lexicographic order.
void for_each_config(const ArchSpace& space, const std::function<void(const HardwareConfig&)>& fn);
std::vector<HardwareConfig> enumerate_space(const ArchSpace& space);

nlohmann::json to_json(const HardwareConfig& hw);
HardwareConfig hardware_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Platform& p);
Platform platform_from_json(const nlohmann::json& j, Platform defaults = {});
nlohmann::json to_json(const ArchSpace& s);
ArchSpace arch_space_from_json(const nlohmann::json& j, const Platform& platform);

}  // namespace carbondse
