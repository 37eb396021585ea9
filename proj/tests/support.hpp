#pragma once

#include <memory>
#include <random>
#include <string>

#include "carbondse/config.hpp"
#include "carbondse/optimize.hpp"

#ifndef CARBONDSE_DATA_DIR
#error "CARBONDSE_DATA_DIR must point at the data/ directory"
#endif

namespace testsupport {

inline std::string data_path(const std::string& rel) { return std::string(CARBONDSE_DATA_DIR) + "/" + rel; }

inline carbondse::EncoderDef encoder(const std::string& name, carbondse::Modality m, int L, int F, int H,
                                     int A, int seq) {
    carbondse::EncoderDef d;
    d.name = name;
    d.modality = m;
    d.base = {L, F, H, A, H / A, seq};
    return d;
}

// Dual encoder with CLIP-style text (seq 77) and ViT/16 vision (seq 197) towers.
inline std::shared_ptr<const carbondse::BaseModel> dual(int tl, int tf, int th, int ta, int vl, int vf, int vh,
                                                        int va, int embed) {
    using namespace carbondse;
    auto m = std::make_shared<BaseModel>();
    m->name = "dual";
    m->family = ModelFamily::DualEncoder;
    m->embed_dim = embed;
    m->encoders = {encoder("text", Modality::Text, tl, tf, th, ta, 77),
                   encoder("vision", Modality::Vision, vl, vf, vh, va, 197)};
    return m;
}

inline std::shared_ptr<const carbondse::BaseModel> clip_b16() {
    return dual(12, 2048, 512, 8, 12, 3072, 768, 12, 512);
}

inline carbondse::HardwareConfig hw(int tc, int px, int py, int l2_kb, int l2_bw, int glb_mb) {
    carbondse::HardwareConfig h;
    h.tc = tc;
    h.pe_x = px;
    h.pe_y = py;
    h.l2_bytes = std::int64_t{l2_kb} * carbondse::kKiB;
    h.l2_bw = l2_bw;
    h.glb_bytes = std::int64_t{glb_mb} * carbondse::kMiB;
    return h;
}

inline const carbondse::RunConfig& desk() {
    static const carbondse::RunConfig cfg = carbondse::load_run_config(data_path("configs/desk.json"));
    return cfg;
}

inline carbondse::RunConfig desk_with(carbondse::ModeVariant v) {
    auto cfg = desk();
    cfg.mode = carbondse::ObjectiveMode::make(v, cfg.mode.tops_budget);
    carbondse::refresh(cfg);
    return cfg;
}

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20240611);
    return g;
}

}  // namespace testsupport
