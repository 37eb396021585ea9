#include <doctest.h>

#include <algorithm>
#include <set>

#include "carbondse/archspace.hpp"
#include "carbondse/perf.hpp"
#include "support.hpp"

using namespace carbondse;
using testsupport::hw;

namespace {

bool has_field(const std::vector<HwViolation>& v, const std::string& f) {
    return std::any_of(v.begin(), v.end(), [&](const HwViolation& x) { return x.field == f; });
}

std::int64_t cdiv(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Walks every tile and K-chunk explicitly instead of using closed forms.
struct WalkResult {
    std::int64_t compute = 0, dram = 0, glb = 0, l2 = 0, chunks = 0;
};

WalkResult walk_gemm(std::int64_t M, std::int64_t K, std::int64_t N, const HardwareConfig& h) {
    WalkResult r;
    const std::int64_t px = h.pe_x, py = h.pe_y;
    // chunk count: smallest ch with (px*K + K*py + px*py)/ch <= l2
    std::int64_t ch = 1;
    while ((px * K + K * py + px * py) > ch * h.l2_bytes) ++ch;
    r.chunks = ch;
    const std::int64_t refill = cdiv(2 * px * py, h.l2_bw);
    std::vector<std::int64_t> core(h.tc, 0);
    int next = 0;
    for (std::int64_t m0 = 0; m0 < M; m0 += px) {
        r.glb += K * N;  // weights reloaded per row block
        for (std::int64_t n0 = 0; n0 < N; n0 += py) {
            const std::int64_t rows = std::min(px, M - m0), cols = std::min(py, N - n0);
            std::int64_t cyc = px + py - 2;
            for (std::int64_t c = 0; c < ch; ++c) {
                const std::int64_t lo = K * c / ch, hi = K * (c + 1) / ch;
                cyc += hi - lo;
                r.l2 += (hi - lo) * (rows + cols);
                if (c > 0) {
                    cyc += refill;
                    r.l2 += 2 * rows * cols;
                }
            }
            core[next] += cyc;
            next = (next + 1) % h.tc;
        }
    }
    r.glb += M * K + M * N;
    r.dram = M * K + K * N + M * N;
    r.compute = *std::max_element(core.begin(), core.end());
    return r;
}

}  // namespace

TEST_CASE("peak TOPS") {
    Platform p;
    CHECK(peak_tops(hw(1, 256, 8, 64, 1, 1), p) == 2.048);
    CHECK(peak_tops(hw(1, 1, 1, 64, 1, 1), p) == doctest::Approx(1e-3).epsilon(1e-12));
    // 4 x 256 x 64 = 65536 PEs
    CHECK(peak_tops(hw(4, 256, 64, 64, 1, 1), p) == doctest::Approx(65.536).epsilon(1e-12));
    CHECK(peak_tops(hw(4, 256, 256, 64, 1, 1), p) == doctest::Approx(262.144).epsilon(1e-12));
}

TEST_CASE("validate_hw") {
    Platform p;
    p.tops_budget = 20;
    auto ok = hw(2, 256, 16, 128, 32, 2);
    CHECK(validate_hw(ok, p).empty());
    CHECK(peak_tops(ok, p) == doctest::Approx(8.192));

    auto bad = ok;
    bad.pe_x = 300;
    CHECK(has_field(validate_hw(bad, p), "pe_x"));

    auto big = hw(4, 256, 64, 128, 32, 2);
    auto v = validate_hw(big, p);
    CHECK(has_field(v, "tops"));
    CHECK(v.size() == 1);
}

TEST_CASE("arch space enumeration") {
    ArchSpace s;
    s.tc = {1};
    s.pe_x = {16};
    s.pe_y = {16};
    s.glb_bytes = {2 * kMiB};
    s.l2_bytes = {64 * kKiB};
    s.l2_bw = {32};
    CHECK(enumerate_space(s).size() == 1);

    s.tc = {1, 2};
    s.pe_x = {16, 32};
    s.pe_y = {4, 8};
    s.glb_bytes = {1 * kMiB, 2 * kMiB};
    s.l2_bytes = {64 * kKiB, 128 * kKiB};
    s.l2_bw = {8, 16};
    auto all = enumerate_space(s);
    CHECK(all.size() == 64);
    CHECK(std::is_sorted(all.begin(), all.end()));
    CHECK(std::set<HardwareConfig>(all.begin(), all.end()).size() == 64);
}

TEST_CASE("full default space under 20 TOPS matches an independent filter") {
    ArchSpace s;
    s.platform.tops_budget = 20;
    std::uint64_t brute = 0;
    for (int tc : s.tc)
        for (int px : s.pe_x)
            for (int py : s.pe_y)
                if (static_cast<double>(tc) * px * py * 2 * 500e6 <= 20e12)
                    brute += s.glb_bytes.size() * s.l2_bytes.size() * s.l2_bw.size();
    CHECK(enumerate_space(s).size() == brute);
}

TEST_CASE("hardware tuple text round trip") {
    auto h = hw(2, 256, 16, 128, 32, 2);
    CHECK(h.to_string() == "{2, 256, 16, 128, 32, 2}");
    CHECK(HardwareConfig::parse(h.to_string()) == h);
    CHECK(HardwareConfig::parse("{1,256,8,64,128,2}") == hw(1, 256, 8, 64, 128, 2));
    CHECK(hardware_from_json(to_json(h)) == h);
}

TEST_CASE("GEMM worked example") {
    Platform p;
    p.glb_bw = 1 << 20;
    CostCoefficients c;
    c.dram_bw = 1e9;
    auto h = hw(1, 256, 8, 4096, 256, 8);
    auto cost = gemm_cost(Operator::gemm("x", 197, 768, 768), h, p, c);
    CHECK(cost.k_chunks == 1);
    CHECK(cost.terms[0] == 98'880);
    CHECK(cost.cycles == 98'880);
    CHECK(cost.bound == Bound::Compute);
    CHECK(cost.cycles / p.freq_hz == doctest::Approx(197.76e-6));

    auto unit = gemm_cost(Operator::gemm("u", 1, 1, 1), hw(1, 1, 1, 64, 1, 1), p, c);
    CHECK(unit.terms[0] == 1);
    CHECK(unit.traffic.dram == 3);
}

TEST_CASE("tc=2 halves compute cycles when the tile count is even") {
    Platform p;
    CostCoefficients c;
    auto op = Operator::gemm("x", 197, 768, 768);  // 96 tiles on 256x8
    auto one = gemm_cost(op, hw(1, 256, 8, 64, 32, 2), p, c);
    auto two = gemm_cost(op, hw(2, 256, 8, 64, 32, 2), p, c);
    CHECK(two.terms[0] * 2 == one.terms[0]);
}

TEST_CASE("mapping error when one chunk cannot fit") {
    Platform p;
    p.l2_min_bytes = 1;
    CostCoefficients c;
    auto h = hw(1, 256, 256, 64, 8, 1);  // 65536 partials + 512 > 64 KiB
    CHECK_THROWS_AS(gemm_cost(Operator::gemm("x", 8, 8, 8), h, p, c), MappingError);
}

TEST_CASE("GEMM closed forms agree with an explicit tile walk") {
    Platform p;
    CostCoefficients c;
    auto& rng = testsupport::rng();
    const int pow2[] = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    std::uniform_int_distribution<int> dim(1, 600), pi(0, 8), tci(0, 2), l2i(0, 3), bwi(0, 8);
    int checked = 0;
    while (checked < 1000) {
        auto h = hw(1 << tci(rng), pow2[pi(rng)], pow2[pi(rng)], 64 << l2i(rng), pow2[bwi(rng)], 1);
        const std::int64_t M = dim(rng), K = dim(rng) * 4, N = dim(rng);
        const std::int64_t rep = 1 + dim(rng) % 3;
        if (std::int64_t{h.pe_x} * h.pe_y + h.pe_x + h.pe_y > h.l2_bytes) continue;
        auto cost = gemm_cost(Operator::gemm("g", M, K, N, rep), h, p, c);
        auto w = walk_gemm(M, K, N, h);
        CHECK(cost.k_chunks == w.chunks);
        CHECK(cost.terms[0] == w.compute * rep);
        CHECK(cost.traffic.dram == w.dram * rep);
        CHECK(cost.traffic.glb == w.glb * rep);
        CHECK(cost.traffic.l2 == w.l2 * rep);
        // roofline: the answer is the largest term and bounds every other one
        for (auto t : cost.terms) CHECK(cost.cycles >= t);
        CHECK(cost.cycles == cost.terms[static_cast<int>(cost.bound)]);
        // never faster than perfect PE utilization
        CHECK(cost.cycles * h.total_pes() >= cost.macs);
        const double pj = cost.macs * c.e_mac + cost.traffic.dram * c.e_dram + cost.traffic.glb * c.e_glb +
                          cost.traffic.l2 * c.e_l2;
        CHECK(cost.dyn_energy_j == doctest::Approx(pj * 1e-12).epsilon(1e-12));
        ++checked;
    }
}

TEST_CASE("vector ops") {
    Platform p;
    CostCoefficients c;
    auto h = hw(1, 256, 8, 64, 32, 2);
    auto add = vector_cost(Operator::vector("r", VectorKind::ResidualAdd, 1576), h, p, c);
    CHECK(add.cycles == 7);
    CHECK_THROWS(Operator::vector("r", VectorKind::ResidualAdd, 10, 0));

    auto& rng = testsupport::rng();
    std::uniform_int_distribution<std::int64_t> n(1, 100000);
    for (int i = 0; i < 1000; ++i) {
        const auto e = n(rng);
        auto s = vector_cost(Operator::vector("s", VectorKind::Softmax, e), h, p, c);
        auto r = vector_cost(Operator::vector("r", VectorKind::ResidualAdd, e), h, p, c);
        CHECK(s.dyn_energy_j == doctest::Approx(4 * r.dyn_energy_j).epsilon(1e-12));
        CHECK(s.cycles == cdiv(4 * e, 256));
        auto s256 = vector_cost(Operator::vector("s", VectorKind::Softmax, e * 256), h, p, c);
        auto r256 = vector_cost(Operator::vector("r", VectorKind::ResidualAdd, e * 256), h, p, c);
        CHECK(s256.cycles == 4 * r256.cycles);
    }
}

TEST_CASE("e_vec falls back to e_mac") {
    auto c = coefficients_from_json({{"e_mac_pj", 0.5}});
    CHECK(c.e_vec == 0.5);
}

TEST_CASE("area") {
    CostCoefficients z;
    z.a_pe = z.a_sram = z.a_vec = 0;
    z.a_fixed = 3.5;
    CHECK(area_mm2(hw(4, 256, 64, 1024, 8, 8), z) == 3.5);

    CostCoefficients c;
    auto one = hw(1, 64, 16, 128, 8, 2), two = one;
    two.tc = 2;
    const double glb = one.glb_bytes * c.a_sram + c.a_fixed;
    // the core term scales with tc; the GLB and fixed terms do not
    CHECK(area_mm2(two, c) - glb == doctest::Approx(2 * (area_mm2(one, c) - glb)));

    auto& rng = testsupport::rng();
    std::uniform_real_distribution<double> u(1e-9, 1.0);
    for (int i = 0; i < 1000; ++i) {
        CostCoefficients r;
        r.a_pe = u(rng);
        r.a_sram = u(rng) * 1e-6;
        r.a_vec = u(rng);
        r.a_fixed = u(rng);
        CHECK(area_mm2(hw(2, 256, 16, 256, 32, 4), r) > area_mm2(hw(1, 256, 8, 64, 32, 2), r));
    }
}

TEST_CASE("graph cost is additive and deterministic") {
    Platform p;
    CostCoefficients c;
    auto h = hw(1, 32, 16, 64, 8, 1);
    OperatorGraph empty;
    auto z = graph_cost(empty, h, p, c);
    CHECK(z.latency_s == 0);
    CHECK(z.energy_j == 0);

    OperatorGraph a, b, ab;
    a.ops = {Operator::gemm("a", 77, 256, 768, 2)};
    b.ops = {Operator::vector("b", VectorKind::Gelu, 77 * 1024, 2)};
    ab.ops = {a.ops[0], b.ops[0]};
    auto ra = graph_cost(a, h, p, c), rb = graph_cost(b, h, p, c), rab = graph_cost(ab, h, p, c);
    CHECK(rab.total_cycles == ra.total_cycles + rb.total_cycles);
    CHECK(rab.dyn_energy_j == doctest::Approx(ra.dyn_energy_j + rb.dyn_energy_j));
    CHECK(rab.static_energy_j == doctest::Approx(ra.static_energy_j + rb.static_energy_j));
    CHECK(rab.traffic.glb == ra.traffic.glb + rb.traffic.glb);

    auto again = graph_cost(ab, h, p, c);
    CHECK(to_json(again, true).dump() == to_json(rab, true).dump());
}

TEST_CASE("latency does not increase with pe_y on compute-bound shapes") {
    Platform p;
    p.glb_bw = 1 << 24;
    CostCoefficients c;
    c.dram_bw = 1e12;
    auto& rng = testsupport::rng();
    std::uniform_int_distribution<int> m(1, 1024), k(512, 4096), n(256, 4096), pi(0, 8), yi(0, 6);
    const int pow2[] = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    for (int i = 0; i < 1000; ++i) {
        OperatorGraph g;
        g.ops = {Operator::gemm("a", m(rng), k(rng), n(rng)), Operator::gemm("b", m(rng), k(rng), n(rng))};
        const int px = pow2[pi(rng)], py = pow2[yi(rng)];
        auto lo = hw(1, px, py, 4096, 256, 8), hi = hw(1, px, 2 * py, 4096, 256, 8);
        auto a = graph_cost(g, lo, p, c), b = graph_cost(g, hi, p, c);
        bool compute_bound = true;
        for (const auto& r : {a, b})
            for (const auto& op : r.ops) compute_bound = compute_bound && op.bound == Bound::Compute;
        if (!compute_bound) continue;
        CHECK(b.latency_s <= a.latency_s);
    }
}
