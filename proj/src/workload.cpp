#include "carbondse/workload.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace carbondse {

std::string to_string(Modality m) { return m == Modality::Text ? "text" : "vision"; }

std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::EncoderOnly: return "encoder-only";
        case ModelFamily::DecoderOnly: return "decoder-only";
        case ModelFamily::DualEncoder: return "dual-encoder";
    }
    return "?";
}

Modality parse_modality(const std::string& s) {
    if (s == "text") return Modality::Text;
    if (s == "vision") return Modality::Vision;
    throw std::invalid_argument("unknown modality '" + s + "' (expected text|vision)");
}

ModelFamily parse_family(const std::string& s) {
    if (s == "encoder-only") return ModelFamily::EncoderOnly;
    if (s == "decoder-only") return ModelFamily::DecoderOnly;
    if (s == "dual-encoder") return ModelFamily::DualEncoder;
    throw std::invalid_argument("unknown model family '" + s +
                                "' (expected encoder-only|decoder-only|dual-encoder)");
}

std::string to_string(PruneDim d) {
    switch (d) {
        case PruneDim::Layers: return "layers";
        case PruneDim::Ffn: return "ffn";
        case PruneDim::Hidden: return "hidden";
        case PruneDim::Heads: return "heads";
    }
    return "?";
}

std::string to_string(OpKind k) { return k == OpKind::Gemm ? "gemm" : "vector"; }

std::string to_string(VectorKind k) {
    switch (k) {
        case VectorKind::Softmax: return "softmax";
        case VectorKind::LayerNorm: return "layernorm";
        case VectorKind::Gelu: return "gelu";
        case VectorKind::ResidualAdd: return "residual_add";
    }
    return "?";
}

int dim_value(const EncoderConfig& e, PruneDim d) {
    switch (d) {
        case PruneDim::Layers: return e.num_layers;
        case PruneDim::Ffn: return e.ffn_dim;
        case PruneDim::Hidden: return e.hidden_dim;
        case PruneDim::Heads: return e.num_heads;
    }
    return 0;
}

void set_dim_value(EncoderConfig& e, PruneDim d, int value) {
    switch (d) {
        case PruneDim::Layers: e.num_layers = value; break;
        case PruneDim::Ffn: e.ffn_dim = value; break;
        case PruneDim::Hidden: e.hidden_dim = value; break;
        case PruneDim::Heads: e.num_heads = value; break;
    }
}

int PruneSteps::of(PruneDim d) const {
    switch (d) {
        case PruneDim::Layers: return layers;
        case PruneDim::Ffn: return ffn;
        case PruneDim::Hidden: return hidden;
        case PruneDim::Heads: return heads;
    }
    return 0;
}

int BaseModel::shared_embed_dim() const {
    if (embed_dim > 0) return embed_dim;
    for (const auto& e : encoders)
        if (e.modality == Modality::Text) return e.base.hidden_dim;
    return encoders.empty() ? 0 : encoders.front().base.hidden_dim;
}

std::size_t BaseModel::index_of(const std::string& encoder) const {
    for (std::size_t i = 0; i < encoders.size(); ++i)
        if (encoders[i].name == encoder) return i;
    throw std::invalid_argument("model '" + name + "' has no encoder named '" + encoder + "'");
}

ModelConfig::ModelConfig(std::shared_ptr<const BaseModel> base, std::vector<EncoderConfig> encoders)
    : base_(std::move(base)), encoders_(std::move(encoders)) {
    if (!base_) throw std::invalid_argument("ModelConfig requires a base model");
    if (encoders_.size() != base_->encoders.size())
        throw std::invalid_argument("ModelConfig encoder count does not match its base");
    if (base_->family == ModelFamily::DualEncoder && encoders_.size() != 2)
        throw std::invalid_argument("dual-encoder models carry exactly two encoders");
    for (std::size_t i = 0; i < encoders_.size(); ++i) {
        auto& e = encoders_[i];
        const auto& b = base_->encoders[i].base;
        e.head_dim = b.head_dim;
        e.seq_len = b.seq_len;
        // Zero layers is allowed: the encoder reduces to its embeddings.
        if (e.num_layers < 0 || e.ffn_dim < 1 || e.hidden_dim < 1 || e.num_heads < 1)
            throw std::invalid_argument("encoder '" + base_->encoders[i].name +
                                        "' has an invalid dimension");
    }
}

ModelConfig ModelConfig::unpruned(std::shared_ptr<const BaseModel> base) {
    std::vector<EncoderConfig> encs;
    for (const auto& e : base->encoders) encs.push_back(e.base);
    return ModelConfig(std::move(base), std::move(encs));
}

std::string ModelConfig::fingerprint() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < encoders_.size(); ++i) {
        const auto& e = encoders_[i];
        if (i) os << '|';
        os << base_->encoders[i].name << ':' << e.num_layers << ',' << e.ffn_dim << ','
           << e.hidden_dim << ',' << e.num_heads;
    }
    return os.str();
}

std::vector<int> ModelConfig::dims() const {
    std::vector<int> out;
    for (const auto& e : encoders_)
        for (int d = 0; d < kNumPruneDims; ++d) out.push_back(dim_value(e, static_cast<PruneDim>(d)));
    return out;
}

// ---------------------------------------------------------------------------
// Prune space

PruneSpace build_prune_space(std::shared_ptr<const BaseModel> base, const PruneSteps& steps) {
    PruneSpace space;
    space.base = base;
    for (const auto& enc : base->encoders) {
        std::array<std::vector<int>, kNumPruneDims> lists;
        for (int d = 0; d < kNumPruneDims; ++d) {
            const auto dim = static_cast<PruneDim>(d);
            const int b = dim_value(enc.base, dim);
            const int step = steps.of(dim);
            if (step < 1)
                throw std::invalid_argument("prune step for " + to_string(dim) + " must be >= 1");
            if (b < 2)
                throw std::invalid_argument("base " + to_string(dim) + " of encoder '" + enc.name +
                                            "' must be >= 2 to define a prune space");
            const int floor = (b + 1) / 2;
            auto& values = lists[d];
            for (int v = b; v >= floor; v -= step) values.push_back(v);
            std::reverse(values.begin(), values.end());
            if (values.size() == 1 && b - floor > 0) {
                space.warnings.push_back(enc.name + "." + to_string(dim) + ": step " +
                                         std::to_string(step) +
                                         " exceeds the prunable range; only the base value " +
                                         std::to_string(b) + " is searched");
            }
        }
        space.candidates.push_back(std::move(lists));
    }
    return space;
}

std::uint64_t PruneSpace::size() const {
    std::uint64_t n = 1;
    for (const auto& enc : candidates)
        for (const auto& l : enc) n *= l.size();
    return n;
}

std::size_t PruneSpace::gene_arity(std::size_t gene) const {
    return candidates.at(gene / kNumPruneDims)[gene % kNumPruneDims].size();
}

ModelConfig PruneSpace::from_genes(const std::vector<std::size_t>& genes) const {
    if (genes.size() != gene_count()) throw std::invalid_argument("gene count mismatch");
    std::vector<EncoderConfig> encs;
    for (std::size_t e = 0; e < candidates.size(); ++e) {
        EncoderConfig cfg = base->encoders[e].base;
        for (int d = 0; d < kNumPruneDims; ++d)
            set_dim_value(cfg, static_cast<PruneDim>(d),
                          candidates[e][d].at(genes[e * kNumPruneDims + d]));
        encs.push_back(cfg);
    }
    return ModelConfig(base, std::move(encs));
}

ModelConfig PruneSpace::at(std::uint64_t index) const {
    if (index >= size()) throw std::out_of_range("prune space index out of range");
    std::vector<std::size_t> genes(gene_count());
    // Last gene varies fastest.
    for (std::size_t g = gene_count(); g-- > 0;) {
        const auto arity = gene_arity(g);
        genes[g] = index % arity;
        index /= arity;
    }
    return from_genes(genes);
}

std::vector<ModelViolation> validate_model_config(const ModelConfig& cfg, const PruneSpace& space) {
    if (cfg.encoders().size() != space.candidates.size())
        throw std::invalid_argument("config and prune space have different encoder counts");
    std::vector<ModelViolation> out;
    for (std::size_t e = 0; e < cfg.encoders().size(); ++e) {
        for (int d = 0; d < kNumPruneDims; ++d) {
            const auto dim = static_cast<PruneDim>(d);
            const int v = dim_value(cfg.encoder(e), dim);
            const auto& list = space.candidates[e][d];
            if (!std::binary_search(list.begin(), list.end(), v))
                out.push_back({space.base->encoders[e].name, dim, v});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lowering

Operator Operator::gemm(std::string name, std::int64_t m, std::int64_t k, std::int64_t n,
                        std::int64_t repeat) {
    if (m < 1 || k < 1 || n < 1 || repeat < 1)
        throw std::invalid_argument("GEMM '" + name + "' needs M, K, N, repeat >= 1");
    Operator op;
    op.name = std::move(name);
    op.kind = OpKind::Gemm;
    op.m = m;
    op.k = k;
    op.n = n;
    op.repeat = repeat;
    return op;
}

Operator Operator::vector(std::string name, VectorKind kind, std::int64_t elements,
                          std::int64_t repeat) {
    if (elements < 1 || repeat < 1)
        throw std::invalid_argument("vector op '" + name + "' needs elements, repeat >= 1");
    Operator op;
    op.name = std::move(name);
    op.kind = OpKind::Vector;
    op.vector_kind = kind;
    op.element_count = elements;
    op.repeat = repeat;
    return op;
}

namespace {

std::int64_t layer_params(const EncoderConfig& e) {
    const std::int64_t h = e.hidden_dim, f = e.ffn_dim, w = e.attention_width();
    const std::int64_t qkv = h * 3 * w + 3 * w;
    const std::int64_t out = w * h + h;
    const std::int64_t ffn = h * f + f + f * h + h;
    const std::int64_t norms = 4 * h;
    return qkv + out + ffn + norms;
}

std::int64_t embedding_params(const EncoderDef& def, const EncoderConfig& e, ModelFamily family) {
    const std::int64_t h = e.hidden_dim;
    if (def.modality == Modality::Text) {
        std::int64_t p = def.vocab_size * h;
        if (family != ModelFamily::DecoderOnly) p += std::int64_t{e.seq_len} * h;
        return p;
    }
    // Patch projection (no bias), class token, positions.
    return std::int64_t{def.channels} * def.patch_size * def.patch_size * h + h +
           std::int64_t{e.seq_len} * h;
}

// Final norm, plus the pre-norm that ViT-style encoders apply to patch tokens.
std::int64_t norm_params(const EncoderDef& def, const EncoderConfig& e) {
    const std::int64_t h = e.hidden_dim;
    return def.modality == Modality::Vision ? 4 * h : 2 * h;
}

void lower_encoder(const std::string& p, const EncoderConfig& e, std::vector<Operator>& ops) {
    const std::int64_t L = e.num_layers, s = e.seq_len, h = e.hidden_dim, f = e.ffn_dim;
    const std::int64_t a = e.num_heads, d = e.head_dim, w = e.attention_width();
    if (L == 0) return;
    ops.push_back(Operator::gemm(p + ".qkv", s, h, 3 * w, L));
    ops.push_back(Operator::gemm(p + ".scores", s, d, s, L * a));
    ops.push_back(Operator::vector(p + ".softmax", VectorKind::Softmax, a * s * s, L));
    ops.push_back(Operator::gemm(p + ".context", s, s, d, L * a));
    ops.push_back(Operator::gemm(p + ".out_proj", s, w, h, L));
    ops.push_back(Operator::vector(p + ".residual1", VectorKind::ResidualAdd, s * h, L));
    ops.push_back(Operator::vector(p + ".ln1", VectorKind::LayerNorm, s * h, L));
    ops.push_back(Operator::gemm(p + ".ffn_up", s, h, f, L));
    ops.push_back(Operator::vector(p + ".gelu", VectorKind::Gelu, s * f, L));
    ops.push_back(Operator::gemm(p + ".ffn_down", s, f, h, L));
    ops.push_back(Operator::vector(p + ".residual2", VectorKind::ResidualAdd, s * h, L));
    ops.push_back(Operator::vector(p + ".ln2", VectorKind::LayerNorm, s * h, L));
}

}  // namespace

std::int64_t param_count(const ModelConfig& cfg) {
    const auto& base = cfg.base();
    std::int64_t total = 0;
    for (std::size_t i = 0; i < cfg.encoders().size(); ++i) {
        const auto& def = base.encoders[i];
        const auto& e = cfg.encoder(i);
        total += std::int64_t{e.num_layers} * layer_params(e);
        total += embedding_params(def, e, base.family) + norm_params(def, e);
        if (base.family == ModelFamily::DualEncoder)
            total += std::int64_t{e.hidden_dim} * base.shared_embed_dim();
    }
    return total;
}

OperatorGraph lower_to_graph(const ModelConfig& cfg) {
    OperatorGraph g;
    const auto& base = cfg.base();
    for (std::size_t i = 0; i < cfg.encoders().size(); ++i)
        lower_encoder(base.encoders[i].name, cfg.encoder(i), g.ops);
    if (base.family == ModelFamily::DualEncoder) {
        // Pooled token projected into the shared embedding space.
        for (std::size_t i = 0; i < cfg.encoders().size(); ++i)
            g.ops.push_back(Operator::gemm(base.encoders[i].name + ".proj", 1,
                                           cfg.encoder(i).hidden_dim, base.shared_embed_dim()));
    }
    for (const auto& op : g.ops) g.total_macs += op.macs();
    g.total_params = param_count(cfg);
    return g;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const OperatorGraph& g) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : g.ops) {
        nlohmann::json j{{"name", op.name}, {"kind", to_string(op.kind)}, {"repeat", op.repeat}};
        if (op.kind == OpKind::Gemm) {
            j["M"] = op.m;
            j["K"] = op.k;
            j["N"] = op.n;
        } else {
            j["vector_kind"] = to_string(op.vector_kind);
            j["elements"] = op.element_count;
        }
        ops.push_back(std::move(j));
    }
    return {{"batch", g.batch},
            {"total_macs", g.total_macs},
            {"total_params", g.total_params},
            {"operators", std::move(ops)}};
}

nlohmann::json to_json(const BaseModel& m) {
    nlohmann::json encs = nlohmann::json::array();
    for (const auto& e : m.encoders) {
        nlohmann::json j{{"name", e.name},
                         {"modality", to_string(e.modality)},
                         {"num_layers", e.base.num_layers},
                         {"ffn_dim", e.base.ffn_dim},
                         {"hidden_dim", e.base.hidden_dim},
                         {"num_heads", e.base.num_heads},
                         {"seq_len", e.base.seq_len}};
        if (e.modality == Modality::Text)
            j["vocab_size"] = e.vocab_size;
        else {
            j["patch_size"] = e.patch_size;
            j["channels"] = e.channels;
        }
        encs.push_back(std::move(j));
    }
    nlohmann::json j{{"name", m.name}, {"family", to_string(m.family)}, {"encoders", std::move(encs)}};
    if (m.embed_dim > 0) j["embed_dim"] = m.embed_dim;
    return j;
}

BaseModel base_model_from_json(const nlohmann::json& j) {
    BaseModel m;
    m.name = j.value("name", std::string("model"));
    m.family = parse_family(j.value("family", std::string("encoder-only")));
    m.embed_dim = j.value("embed_dim", 0);
    for (const auto& je : j.at("encoders")) {
        EncoderDef e;
        e.name = je.at("name").get<std::string>();
        e.modality = parse_modality(je.value("modality", std::string("text")));
        e.base.num_layers = je.at("num_layers").get<int>();
        e.base.ffn_dim = je.at("ffn_dim").get<int>();
        e.base.hidden_dim = je.at("hidden_dim").get<int>();
        e.base.num_heads = je.at("num_heads").get<int>();
        if (e.base.num_heads < 1 || e.base.hidden_dim < 1)
            throw std::invalid_argument("encoder '" + e.name + "' needs hidden_dim, num_heads >= 1");
        e.base.head_dim = je.value("head_dim", e.base.hidden_dim / e.base.num_heads);
        const int default_seq = e.modality == Modality::Text ? 77 : 197;
        e.base.seq_len = je.value("seq_len", default_seq);
        e.vocab_size = je.value("vocab_size", std::int64_t{49408});
        e.patch_size = je.value("patch_size", 16);
        e.channels = je.value("channels", 3);
        if (e.base.head_dim < 1 || e.base.seq_len < 1 || e.base.num_layers < 1 || e.base.ffn_dim < 1)
            throw std::invalid_argument("encoder '" + e.name + "' has a dimension below 1");
        m.encoders.push_back(std::move(e));
    }
    if (m.encoders.empty()) throw std::invalid_argument("model needs at least one encoder");
    if (m.family == ModelFamily::DualEncoder && m.encoders.size() != 2)
        throw std::invalid_argument("dual-encoder models carry exactly two encoders");
    return m;
}

}  // namespace carbondse
