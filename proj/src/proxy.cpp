#include "carbondse/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace carbondse {

void SensitivityProfile::validate() const {
    if (!(base_accuracy >= 0.0 && base_accuracy <= 1.0))
        throw std::invalid_argument("sensitivity: base accuracy must be in [0, 1]");
    for (double a : alpha)
        if (!(a >= 0)) throw std::invalid_argument("sensitivity: exponents must be >= 0");
    const double layers = alpha[0], ffn = alpha[1], hidden = alpha[2], heads = alpha[3];
    if (!(hidden >= layers && layers >= ffn && hidden >= heads))
        throw std::invalid_argument(
            "sensitivity: need alpha_hidden >= alpha_layers >= alpha_ffn and alpha_hidden >= alpha_heads");
    for (const auto& [name, w] : encoder_weights)
        if (!(w >= 0)) throw std::invalid_argument("sensitivity: weight for '" + name + "' must be >= 0");
}

std::vector<double> SensitivityProfile::weights_for(const BaseModel& base) const {
    std::vector<double> w(base.encoders.size(), -1.0);
    double assigned = 0.0;
    std::size_t unassigned = 0;
    for (std::size_t i = 0; i < base.encoders.size(); ++i) {
        auto it = encoder_weights.find(base.encoders[i].name);
        if (it != encoder_weights.end()) {
            w[i] = it->second;
            assigned += it->second;
        } else {
            ++unassigned;
        }
    }
    if (unassigned > 0) {
        const double rest = std::max(0.0, 1.0 - assigned) / static_cast<double>(unassigned);
        for (auto& v : w)
            if (v < 0) v = rest;
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sum > 0)) throw std::invalid_argument("sensitivity: encoder weights sum to zero");
    for (auto& v : w) v /= sum;
    return w;
}

double analytic_proxy(const ModelConfig& cfg, const SensitivityProfile& prof) {
    const auto& base = cfg.base();
    const auto w = prof.weights_for(base);
    double acc = 0.0;
    for (std::size_t e = 0; e < cfg.encoders().size(); ++e) {
        double term = 1.0;
        for (int d = 0; d < kNumPruneDims; ++d) {
            const auto dim = static_cast<PruneDim>(d);
            const double ratio = static_cast<double>(dim_value(cfg.encoder(e), dim)) /
                                 static_cast<double>(dim_value(base.encoders[e].base, dim));
            term *= std::pow(std::min(ratio, 1.0), prof.alpha[d]);
        }
        acc += w[e] * term;
    }
    return std::clamp(prof.base_accuracy * acc, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

AccuracyTable::AccuracyTable(std::vector<std::string> encoder_names, std::vector<Row> rows,
                             MissPolicy policy)
    : encoders_(std::move(encoder_names)), rows_(std::move(rows)), policy_(policy) {
    for (const auto& r : rows_) {
        if (r.dims.size() != encoders_.size() * kNumPruneDims)
            throw std::invalid_argument("accuracy table: row width does not match encoder count");
        if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0))
            throw std::invalid_argument("accuracy table: accuracy must be in [0, 1]");
    }
    std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) { return a.dims < b.dims; });
    for (std::size_t i = 1; i < rows_.size(); ++i)
        if (rows_[i].dims == rows_[i - 1].dims)
            throw std::invalid_argument("accuracy table: duplicate configuration row");
}

AccuracyTable AccuracyTable::parse_csv(const std::string& text, MissPolicy policy) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("accuracy table: empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.empty() || header.back() != "accuracy" || (header.size() - 1) % kNumPruneDims != 0)
        throw std::invalid_argument("accuracy table: header must be <enc>_layers,<enc>_ffn,<enc>_hidden,<enc>_heads,...,accuracy");
    static const char* suffixes[kNumPruneDims] = {"_layers", "_ffn", "_hidden", "_heads"};
    std::vector<std::string> encoders;
    for (std::size_t i = 0; i + 1 < header.size(); i += kNumPruneDims) {
        const auto& first = header[i];
        const std::string name = first.substr(0, first.rfind('_'));
        for (int d = 0; d < kNumPruneDims; ++d)
            if (header[i + d] != name + suffixes[d])
                throw std::invalid_argument("accuracy table: unexpected column '" + header[i + d] + "'");
        encoders.push_back(name);
    }
    std::vector<Row> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw std::invalid_argument("accuracy table line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields");
        Row r;
        try {
            for (std::size_t i = 0; i + 1 < cells.size(); ++i) r.dims.push_back(std::stoi(cells[i]));
            r.accuracy = std::stod(cells.back());
        } catch (const std::exception&) {
            throw std::invalid_argument("accuracy table line " + std::to_string(lineno) + ": bad number");
        }
        rows.push_back(std::move(r));
    }
    return AccuracyTable(std::move(encoders), std::move(rows), policy);
}

AccuracyTable AccuracyTable::load_csv(const std::string& path, MissPolicy policy) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open accuracy table '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), policy);
}

double AccuracyTable::lookup(const ModelConfig& cfg) const {
    const auto dims = cfg.dims();
    if (dims.size() != encoders_.size() * kNumPruneDims)
        throw std::invalid_argument("accuracy table: encoder count differs from the model");
    auto it = std::lower_bound(rows_.begin(), rows_.end(), dims,
                               [](const Row& r, const std::vector<int>& d) { return r.dims < d; });
    if (it != rows_.end() && it->dims == dims) return it->accuracy;
    if (policy_ == MissPolicy::Strict || rows_.empty())
        throw std::out_of_range("accuracy table has no row for " + cfg.fingerprint());

    // Rows are sorted, so the first row at the minimum distance is the lowest one.
    std::vector<double> scale(dims.size());
    for (std::size_t e = 0; e < cfg.encoders().size(); ++e)
        for (int d = 0; d < kNumPruneDims; ++d)
            scale[e * kNumPruneDims + d] =
                static_cast<double>(dim_value(cfg.base().encoders[e].base, static_cast<PruneDim>(d)));
    const Row* best = nullptr;
    double best_dist = 0.0;
    for (const auto& r : rows_) {
        double dist = 0.0;
        for (std::size_t i = 0; i < dims.size(); ++i)
            dist += std::abs(static_cast<double>(r.dims[i] - dims[i])) / scale[i];
        if (!best || dist < best_dist) {
            best = &r;
            best_dist = dist;
        }
    }
    return best->accuracy;
}

double table_proxy(const ModelConfig& cfg, const AccuracyTable& table) { return table.lookup(cfg); }

double AccuracyProxy::operator()(const ModelConfig& cfg) const {
    if (const auto* p = std::get_if<SensitivityProfile>(&impl_)) return analytic_proxy(cfg, *p);
    return table_proxy(cfg, std::get<AccuracyTable>(impl_));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("spearman: need at least two samples");
    const auto rx = average_ranks(xs), ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) throw std::invalid_argument("spearman: constant input has no ranking");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SensitivityProfile sensitivity_from_json(const nlohmann::json& j) {
    SensitivityProfile p;
    p.base_accuracy = j.value("base_accuracy", p.base_accuracy);
    if (j.contains("alpha")) {
        const auto& a = j["alpha"];
        p.alpha[0] = a.value("layers", p.alpha[0]);
        p.alpha[1] = a.value("ffn", p.alpha[1]);
        p.alpha[2] = a.value("hidden", p.alpha[2]);
        p.alpha[3] = a.value("heads", p.alpha[3]);
    }
    if (j.contains("encoder_weights"))
        p.encoder_weights = j["encoder_weights"].get<std::map<std::string, double>>();
    p.validate();
    return p;
}

nlohmann::json to_json(const SensitivityProfile& p) {
    return {{"base_accuracy", p.base_accuracy},
            {"alpha", {{"layers", p.alpha[0]}, {"ffn", p.alpha[1]}, {"hidden", p.alpha[2]}, {"heads", p.alpha[3]}}},
            {"encoder_weights", p.encoder_weights}};
}

}  // namespace carbondse
