#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "carbondse/workload.hpp"

namespace carbondse {

// Power-law accuracy model: acc0 * sum_e w_e * prod_d (dim_d / base_d)^alpha_d.
struct SensitivityProfile {
    double base_accuracy = 0.5;
    // Exponents indexed by PruneDim (layers, ffn, hidden, heads).
    std::array<double, kNumPruneDims> alpha{0.6, 0.3, 1.0, 0.3};
    // Encoder name -> weight; encoders not listed share what is left equally.
    std::map<std::string, double> encoder_weights{{"text", 0.4}, {"vision", 0.6}};

    // Throws unless alpha_hidden >= alpha_layers >= alpha_ffn, alpha_hidden >=
    // alpha_heads, every alpha >= 0 and acc0 is in [0, 1].
    void validate() const;
    std::vector<double> weights_for(const BaseModel& base) const;
};

double analytic_proxy(const ModelConfig& cfg, const SensitivityProfile& prof);

enum class MissPolicy { Strict, Nearest };

class AccuracyTable {
public:
    struct Row {
        std::vector<int> dims;  // (layers, ffn, hidden, heads) per encoder
        double accuracy = 0.0;
    };

    AccuracyTable() = default;
    AccuracyTable(std::vector<std::string> encoder_names, std::vector<Row> rows, MissPolicy policy);

    // Header: <enc>_layers,<enc>_ffn,<enc>_hidden,<enc>_heads,... ,accuracy
    static AccuracyTable parse_csv(const std::string& text, MissPolicy policy);
    static AccuracyTable load_csv(const std::string& path, MissPolicy policy);

    const std::vector<Row>& rows() const { return rows_; }
    MissPolicy policy() const { return policy_; }
    double lookup(const ModelConfig& cfg) const;

private:
    std::vector<std::string> encoders_;
    std::vector<Row> rows_;  // sorted by dims
    MissPolicy policy_ = MissPolicy::Strict;
};

double table_proxy(const ModelConfig& cfg, const AccuracyTable& table);

// Accuracy estimator used by candidate evaluation.
class AccuracyProxy {
public:
    AccuracyProxy() : impl_(SensitivityProfile{}) {}
    explicit AccuracyProxy(SensitivityProfile p) : impl_(std::move(p)) {}
    explicit AccuracyProxy(AccuracyTable t) : impl_(std::move(t)) {}

    double operator()(const ModelConfig& cfg) const;
    std::string kind() const { return impl_.index() == 0 ? "analytic" : "table"; }

private:
    std::variant<SensitivityProfile, AccuracyTable> impl_;
};

// Rank correlation with average ranks for ties. Throws on length mismatch,
// fewer than two samples or a constant input.
double spearman(std::span<const double> xs, std::span<const double> ys);

SensitivityProfile sensitivity_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SensitivityProfile& p);

}  // namespace carbondse
