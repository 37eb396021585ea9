#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace carbondse {

enum class Modality { Text, Vision };
enum class ModelFamily { EncoderOnly, DecoderOnly, DualEncoder };

std::string to_string(Modality m);
std::string to_string(ModelFamily f);
Modality parse_modality(const std::string& s);
ModelFamily parse_family(const std::string& s);

// Transformer stack dimensions. head_dim and seq_len are inherited from the
// base model and never pruned; the attention inner width is heads * head_dim.
struct EncoderConfig {
    int num_layers = 1;
    int ffn_dim = 1;
    int hidden_dim = 1;
    int num_heads = 1;
    int head_dim = 1;
    int seq_len = 1;

    std::int64_t attention_width() const { return std::int64_t{num_heads} * head_dim; }
    bool operator==(const EncoderConfig&) const = default;
};

// Unpruned encoder plus the embedding-table shape used for parameter counting.
struct EncoderDef {
    std::string name;
    Modality modality = Modality::Text;
    EncoderConfig base;
    std::int64_t vocab_size = 49408;  // text only
    int patch_size = 16;              // vision only
    int channels = 3;                 // vision only
};

struct BaseModel {
    std::string name;
    ModelFamily family = ModelFamily::EncoderOnly;
    std::vector<EncoderDef> encoders;
    // Width of the shared embedding space for dual encoders; tied to the
    // text encoder's base hidden size when left at 0.
    int embed_dim = 0;

    int shared_embed_dim() const;
    std::size_t index_of(const std::string& encoder) const;
};

class ModelConfig {
public:
    ModelConfig() = default;
    ModelConfig(std::shared_ptr<const BaseModel> base, std::vector<EncoderConfig> encoders);

    static ModelConfig unpruned(std::shared_ptr<const BaseModel> base);

    const BaseModel& base() const { return *base_; }
    const std::shared_ptr<const BaseModel>& base_ptr() const { return base_; }
    const std::vector<EncoderConfig>& encoders() const { return encoders_; }
    const EncoderConfig& encoder(std::size_t i) const { return encoders_.at(i); }

    // Canonical text form, e.g. "text:12,2048,512,8|vision:12,3072,768,12".
    std::string fingerprint() const;

    // Flattened (layers, ffn, hidden, heads) per encoder.
    std::vector<int> dims() const;

    bool operator==(const ModelConfig& o) const { return encoders_ == o.encoders_; }

private:
    std::shared_ptr<const BaseModel> base_;
    std::vector<EncoderConfig> encoders_;
};

enum class PruneDim { Layers = 0, Ffn = 1, Hidden = 2, Heads = 3 };
inline constexpr int kNumPruneDims = 4;
std::string to_string(PruneDim d);
int dim_value(const EncoderConfig& e, PruneDim d);
void set_dim_value(EncoderConfig& e, PruneDim d, int value);

struct PruneSteps {
    int layers = 1;
    int ffn = 128;
    int hidden = 32;
    int heads = 1;

    int of(PruneDim d) const;
};

// Candidate values for every (encoder, dimension); each list ascending.
struct PruneSpace {
    std::shared_ptr<const BaseModel> base;
    std::vector<std::array<std::vector<int>, kNumPruneDims>> candidates;
    std::vector<std::string> warnings;

    const std::vector<int>& values(std::size_t encoder, PruneDim d) const {
        return candidates.at(encoder)[static_cast<int>(d)];
    }
    std::uint64_t size() const;
    // Decodes a mixed-radix index (encoder-major, dimension-minor).
    ModelConfig at(std::uint64_t index) const;
    ModelConfig from_genes(const std::vector<std::size_t>& genes) const;
    std::size_t gene_count() const { return candidates.size() * kNumPruneDims; }
    std::size_t gene_arity(std::size_t gene) const;
};

PruneSpace build_prune_space(std::shared_ptr<const BaseModel> base, const PruneSteps& steps);

struct ModelViolation {
    std::string encoder;
    PruneDim dimension;
    int value;
};

std::vector<ModelViolation> validate_model_config(const ModelConfig& cfg, const PruneSpace& space);

enum class OpKind { Gemm, Vector };
enum class VectorKind { Softmax, LayerNorm, Gelu, ResidualAdd };
inline constexpr int kNumVectorKinds = 4;

std::string to_string(OpKind k);
std::string to_string(VectorKind k);

struct Operator {
    std::string name;
    OpKind kind = OpKind::Gemm;
    std::int64_t m = 1, k = 1, n = 1;  // GEMM
    std::int64_t element_count = 1;    // Vector
    VectorKind vector_kind = VectorKind::ResidualAdd;
    std::int64_t repeat = 1;

    static Operator gemm(std::string name, std::int64_t m, std::int64_t k, std::int64_t n,
                         std::int64_t repeat = 1);
    static Operator vector(std::string name, VectorKind kind, std::int64_t elements,
                           std::int64_t repeat = 1);

    std::int64_t macs() const { return kind == OpKind::Gemm ? repeat * m * k * n : 0; }
    bool operator==(const Operator&) const = default;
};

struct OperatorGraph {
    std::vector<Operator> ops;
    std::int64_t total_macs = 0;
    std::int64_t total_params = 0;
    int batch = 1;
};

std::int64_t param_count(const ModelConfig& cfg);
OperatorGraph lower_to_graph(const ModelConfig& cfg);

nlohmann::json to_json(const OperatorGraph& g);
nlohmann::json to_json(const BaseModel& m);
BaseModel base_model_from_json(const nlohmann::json& j);

}  // namespace carbondse
