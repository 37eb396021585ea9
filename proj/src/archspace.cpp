#include "carbondse/archspace.hpp"

#include <sstream>
#include <stdexcept>

namespace carbondse {

namespace {

bool is_pow2(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

void check_pow2_range(std::vector<HwViolation>& out, const char* field, std::int64_t v,
                      std::int64_t lo, std::int64_t hi) {
    if (!is_pow2(v) || v < lo || v > hi) {
        std::ostringstream bound;
        bound << "power of two in [" << lo << ", " << hi << "], got " << v;
        double mag = 1.0;
        if (v > hi) mag = static_cast<double>(v) / static_cast<double>(hi) - 1.0;
        else if (v < lo && v > 0) mag = static_cast<double>(lo) / static_cast<double>(v) - 1.0;
        out.push_back({field, bound.str(), mag > 0 ? mag : 1.0});
    }
}

}  // namespace

std::string HardwareConfig::to_string() const {
    std::ostringstream os;
    os << '{' << tc << ", " << pe_x << ", " << pe_y << ", " << l2_bytes / kKiB << ", " << l2_bw
       << ", " << glb_bytes / kMiB << '}';
    return os.str();
}

HardwareConfig HardwareConfig::parse(const std::string& tuple) {
    std::string s;
    for (char c : tuple)
        if (c != '{' && c != '}' && c != ' ') s += c;
    std::vector<std::int64_t> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stoll(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw std::invalid_argument("hardware tuple field '" + item + "' is not an integer");
        }
    }
    if (v.size() != 6)
        throw std::invalid_argument("hardware tuple needs 6 fields {tc, pe_x, pe_y, L2 KB, L2 bw, GLB MB}, got '" +
                                    tuple + "'");
    HardwareConfig hw;
    hw.tc = static_cast<int>(v[0]);
    hw.pe_x = static_cast<int>(v[1]);
    hw.pe_y = static_cast<int>(v[2]);
    hw.l2_bytes = v[3] * kKiB;
    hw.l2_bw = static_cast<int>(v[4]);
    hw.glb_bytes = v[5] * kMiB;
    return hw;
}

double peak_tops(const HardwareConfig& hw, const Platform& p) {
    return static_cast<double>(hw.total_pes()) * 2.0 * p.freq_hz / 1e12;
}

std::vector<HwViolation> validate_hw(const HardwareConfig& hw, const Platform& p) {
    std::vector<HwViolation> out;
    if (hw.tc != 1 && hw.tc != 2 && hw.tc != 4)
        out.push_back({"tc", "one of {1, 2, 4}, got " + std::to_string(hw.tc),
                       hw.tc > 4 ? hw.tc / 4.0 - 1.0 : 1.0});
    check_pow2_range(out, "pe_x", hw.pe_x, 1, 256);
    check_pow2_range(out, "pe_y", hw.pe_y, 1, 256);
    check_pow2_range(out, "glb_bytes", hw.glb_bytes, 1 * kMiB, 8 * kMiB);
    check_pow2_range(out, "l2_bytes", hw.l2_bytes, p.l2_min_bytes, p.l2_max_bytes);
    check_pow2_range(out, "l2_bw", hw.l2_bw, 1, 256);
    if (hw.total_pes() > 0) {
        const double tops = peak_tops(hw, p);
        if (tops > p.tops_budget) {
            std::ostringstream bound;
            bound << "peak " << tops << " TOPS exceeds budget " << p.tops_budget << " TOPS";
            out.push_back({"tops", bound.str(), tops / p.tops_budget - 1.0});
        }
    }
    return out;
}

std::uint64_t ArchSpace::cartesian_size() const {
    return std::uint64_t{tc.size()} * pe_x.size() * pe_y.size() * glb_bytes.size() *
           l2_bytes.size() * l2_bw.size();
}

std::size_t ArchSpace::gene_arity(std::size_t gene) const {
    switch (gene) {
        case 0: return tc.size();
        case 1: return pe_x.size();
        case 2: return pe_y.size();
        case 3: return glb_bytes.size();
        case 4: return l2_bytes.size();
        case 5: return l2_bw.size();
    }
    throw std::out_of_range("hardware gene index");
}

HardwareConfig ArchSpace::from_genes(const std::size_t* g) const {
    HardwareConfig hw;
    hw.tc = tc.at(g[0]);
    hw.pe_x = pe_x.at(g[1]);
    hw.pe_y = pe_y.at(g[2]);
    hw.glb_bytes = glb_bytes.at(g[3]);
    hw.l2_bytes = l2_bytes.at(g[4]);
    hw.l2_bw = l2_bw.at(g[5]);
    return hw;
}

HardwareConfig ArchSpace::at(std::uint64_t index) const {
    if (index >= cartesian_size()) throw std::out_of_range("arch space index out of range");
    std::size_t g[kGenes];
    for (std::size_t i = kGenes; i-- > 0;) {
        const auto arity = gene_arity(i);
        g[i] = index % arity;
        index /= arity;
    }
    return from_genes(g);
}

void for_each_config(const ArchSpace& space, const std::function<void(const HardwareConfig&)>& fn) {
    const auto n = space.cartesian_size();
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto hw = space.at(i);
        if (validate_hw(hw, space.platform).empty()) fn(hw);
    }
}

std::vector<HardwareConfig> enumerate_space(const ArchSpace& space) {
    if (space.cartesian_size() == 0) throw std::invalid_argument("architecture space is empty");
    std::vector<HardwareConfig> out;
    for_each_config(space, [&](const HardwareConfig& hw) { out.push_back(hw); });
    return out;
}

nlohmann::json to_json(const HardwareConfig& hw) {
    return {{"tc", hw.tc},       {"pe_x", hw.pe_x},         {"pe_y", hw.pe_y},
            {"v_pe", hw.v_pe()}, {"glb_bytes", hw.glb_bytes}, {"l2_bytes", hw.l2_bytes},
            {"l2_bw", hw.l2_bw}};
}

HardwareConfig hardware_from_json(const nlohmann::json& j) {
    if (j.is_string()) return HardwareConfig::parse(j.get<std::string>());
    HardwareConfig hw;
    hw.tc = j.at("tc").get<int>();
    hw.pe_x = j.at("pe_x").get<int>();
    hw.pe_y = j.at("pe_y").get<int>();
    hw.glb_bytes = j.at("glb_bytes").get<std::int64_t>();
    hw.l2_bytes = j.at("l2_bytes").get<std::int64_t>();
    hw.l2_bw = j.at("l2_bw").get<int>();
    if (j.contains("v_pe") && j["v_pe"].get<int>() != hw.pe_x)
        throw std::invalid_argument("v_pe must equal pe_x");
    return hw;
}

nlohmann::json to_json(const Platform& p) {
    return {{"glb_bw", p.glb_bw},           {"dram_bytes", p.dram_bytes},
            {"tech_nm", p.tech_nm},         {"bitwidth", p.bitwidth},
            {"tops_budget", p.tops_budget}, {"freq_hz", p.freq_hz},
            {"l2_min_bytes", p.l2_min_bytes}, {"l2_max_bytes", p.l2_max_bytes}};
}

Platform platform_from_json(const nlohmann::json& j, Platform p) {
    p.glb_bw = j.value("glb_bw", p.glb_bw);
    p.dram_bytes = j.value("dram_bytes", p.dram_bytes);
    p.tech_nm = j.value("tech_nm", p.tech_nm);
    p.bitwidth = j.value("bitwidth", p.bitwidth);
    p.tops_budget = j.value("tops_budget", p.tops_budget);
    p.freq_hz = j.value("freq_hz", p.freq_hz);
    p.l2_min_bytes = j.value("l2_min_bytes", p.l2_min_bytes);
    p.l2_max_bytes = j.value("l2_max_bytes", p.l2_max_bytes);
    if (p.glb_bw < 1 || p.freq_hz <= 0 || p.tops_budget <= 0 || p.bitwidth < 1)
        throw std::invalid_argument("platform: glb_bw, freq_hz, tops_budget, bitwidth must be positive");
    return p;
}

nlohmann::json to_json(const ArchSpace& s) {
    return {{"tc", s.tc},
            {"pe_x", s.pe_x},
            {"pe_y", s.pe_y},
            {"glb_bytes", s.glb_bytes},
            {"l2_bytes", s.l2_bytes},
            {"l2_bw", s.l2_bw}};
}

ArchSpace arch_space_from_json(const nlohmann::json& j, const Platform& platform) {
    ArchSpace s;
    s.platform = platform;
    if (j.contains("tc")) s.tc = j["tc"].get<std::vector<int>>();
    if (j.contains("pe_x")) s.pe_x = j["pe_x"].get<std::vector<int>>();
    if (j.contains("pe_y")) s.pe_y = j["pe_y"].get<std::vector<int>>();
    if (j.contains("glb_bytes")) s.glb_bytes = j["glb_bytes"].get<std::vector<std::int64_t>>();
    if (j.contains("l2_bytes")) s.l2_bytes = j["l2_bytes"].get<std::vector<std::int64_t>>();
    if (j.contains("glb_mb")) {
        s.glb_bytes.clear();
        for (auto v : j["glb_mb"].get<std::vector<std::int64_t>>()) s.glb_bytes.push_back(v * kMiB);
    }
    if (j.contains("l2_kb")) {
        s.l2_bytes.clear();
        for (auto v : j["l2_kb"].get<std::vector<std::int64_t>>()) s.l2_bytes.push_back(v * kKiB);
    }
    if (j.contains("l2_bw")) s.l2_bw = j["l2_bw"].get<std::vector<int>>();
    if (s.cartesian_size() == 0) throw std::invalid_argument("arch_space: every tunable needs at least one value");
    return s;
}

}  // namespace carbondse
