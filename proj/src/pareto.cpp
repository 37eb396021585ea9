#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "carbondse/optimize.hpp"

namespace carbondse {

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominates: dimension mismatch");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

bool dominates(const Candidate& a, const Candidate& b, const ObjectiveMode& mode) {
    if (a.provenance.mode != mode.variant || b.provenance.mode != mode.variant)
        throw std::invalid_argument("dominates: candidates were evaluated under a different mode");
    if (!a.feasible || !b.feasible) throw std::invalid_argument("dominates: both candidates must be feasible");
    const auto va = objective_vector(a, mode), vb = objective_vector(b, mode);
    return dominates(va, vb);
}

std::vector<std::size_t> nondominated_indices(const std::vector<std::vector<double>>& points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    // Any dominator of a point precedes it lexicographically, and domination is
    // transitive, so checking against the kept set is enough.
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool dominated = false;
        for (std::size_t k : kept)
            if (dominates(points[k], points[i])) {
                dominated = true;
                break;
            }
        if (!dominated) kept.push_back(i);
    }
    return kept;
}

ParetoFront pareto_front(std::span<const Candidate> candidates, const ObjectiveMode& mode) {
    std::vector<const Candidate*> feas;
    for (const auto& c : candidates)
        if (c.feasible) feas.push_back(&c);
    std::vector<std::vector<double>> pts;
    std::vector<std::string> fps;
    for (const auto* c : feas) {
        pts.push_back(objective_vector(*c, mode));
        fps.push_back(c->fingerprint());
    }
    auto idx = nondominated_indices(pts);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (pts[a] != pts[b]) return pts[a] < pts[b];
        return fps[a] < fps[b];
    });
    ParetoFront f;
    for (std::size_t i : idx) {
        if (!f.members.empty() && fps[i] == f.members.back().fingerprint()) continue;
        f.members.push_back(*feas[i]);
    }
    return f;
}

// ---------------------------------------------------------------------------
// hypervolume

namespace {

double hv_2d(std::vector<std::vector<double>> pts, double rx, double ry) {
    std::sort(pts.begin(), pts.end());
    double area = 0.0, prev_y = ry;
    for (const auto& p : pts) {
        if (p[1] < prev_y) {
            area += (rx - p[0]) * (prev_y - p[1]);
            prev_y = p[1];
        }
    }
    return area;
}

double hv_rec(std::vector<std::vector<double>> pts, std::span<const double> ref) {
    const std::size_t d = ref.size();
    if (pts.empty()) return 0.0;
    if (d == 1) {
        double best = ref[0];
        for (const auto& p : pts) best = std::min(best, p[0]);
        return ref[0] - best;
    }
    if (d == 2) return hv_2d(std::move(pts), ref[0], ref[1]);

    // Slice along the last axis: between consecutive distinct levels the
    // dominated cross-section is the (d-1)-volume of every point at or below.
    std::sort(pts.begin(), pts.end(), [&](const auto& a, const auto& b) { return a[d - 1] < b[d - 1]; });
    std::vector<std::vector<double>> active;
    double vol = 0.0;
    for (std::size_t i = 0; i < pts.size();) {
        const double z = pts[i][d - 1];
        while (i < pts.size() && pts[i][d - 1] == z) {
            active.emplace_back(pts[i].begin(), pts[i].end() - 1);
            ++i;
        }
        const double next = i < pts.size() ? pts[i][d - 1] : ref[d - 1];
        if (next > z) {
            const auto kept = nondominated_indices(active);
            std::vector<std::vector<double>> reduced;
            for (auto k : kept) reduced.push_back(active[k]);
            active = reduced;
            vol += hv_rec(active, ref.first(d - 1)) * (next - z);
        }
    }
    return vol;
}

}  // namespace

double hypervolume(const std::vector<std::vector<double>>& points, std::span<const double> ref) {
    if (points.empty()) return 0.0;
    if (ref.size() < 1 || ref.size() > 4)
        throw std::invalid_argument("hypervolume: supports 1 to 4 objectives");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != ref.size())
            throw std::invalid_argument("hypervolume: point " + std::to_string(i) + " has wrong dimension");
        for (std::size_t k = 0; k < ref.size(); ++k)
            if (!(points[i][k] < ref[k]))
                throw std::invalid_argument("hypervolume: point " + std::to_string(i) +
                                            " does not strictly dominate the reference point");
    }
    return hv_rec(points, ref);
}

double hypervolume(const ParetoFront& front, std::span<const double> ref, const ObjectiveMode& mode) {
    std::vector<std::vector<double>> pts;
    for (const auto& m : front.members) {
        auto v = objective_vector(m, mode);
        if (v.size() != ref.size()) throw std::invalid_argument("hypervolume: reference has wrong dimension");
        for (std::size_t k = 0; k < v.size(); ++k)
            if (!(v[k] < ref[k]))
                throw std::invalid_argument("hypervolume: front member " + m.fingerprint() +
                                            " does not strictly dominate the reference point");
        pts.push_back(std::move(v));
    }
    return hv_rec(std::move(pts), ref);
}

std::vector<double> reference_point(std::span<const Candidate> pool, const ObjectiveMode& mode) {
    std::vector<double> worst;
    for (const auto& c : pool) {
        if (!c.feasible) continue;
        const auto v = objective_vector(c, mode);
        if (worst.empty())
            worst = v;
        else
            for (std::size_t k = 0; k < v.size(); ++k) worst[k] = std::max(worst[k], v[k]);
    }
    for (double& w : worst) {
        // x1.1 only moves the point outward when the worst value is positive.
        if (w > 0)
            w *= 1.1;
        else
            w = w == 0 ? 1e-12 : w * 0.9;
    }
    return worst;
}

HvNormalization normalization_for(std::span<const Candidate> pool, const ObjectiveMode& mode) {
    HvNormalization n;
    n.ref = reference_point(pool, mode);
    for (const auto& c : pool) {
        if (!c.feasible) continue;
        const auto v = objective_vector(c, mode);
        if (n.lo.empty())
            n.lo = v;
        else
            for (std::size_t k = 0; k < v.size(); ++k) n.lo[k] = std::min(n.lo[k], v[k]);
    }
    return n;
}

double normalized_hypervolume(const ParetoFront& front, const HvNormalization& norm,
                              const ObjectiveMode& mode) {
    if (front.members.empty() || norm.ref.empty()) return 0.0;
    const std::size_t d = norm.ref.size();
    std::vector<std::vector<double>> pts;
    for (const auto& m : front.members) {
        const auto v = objective_vector(m, mode);
        std::vector<double> p(d);
        bool inside = true;
        for (std::size_t k = 0; k < d; ++k) {
            const double span = norm.ref[k] - norm.lo[k];
            p[k] = span > 0 ? (v[k] - norm.lo[k]) / span : 0.0;
            if (!(p[k] < 1.0)) inside = false;
        }
        // Points outside the shared box add nothing.
        if (inside) pts.push_back(std::move(p));
    }
    const std::vector<double> unit(d, 1.0);
    return hv_rec(std::move(pts), unit);
}

void finalize_run(RunRecord& run) {
    run.front = pareto_front(run.log, run.mode);
    run.front.reference_point = reference_point(run.log, run.mode);
    run.hv_norm = normalization_for(run.log, run.mode);
    run.hypervolume = normalized_hypervolume(run.front, run.hv_norm, run.mode);
    if (run.front.members.empty()) {
        const std::string msg = "no feasible candidate among " + std::to_string(run.log.size()) + " evaluations";
        if (std::find(run.diagnostics.begin(), run.diagnostics.end(), msg) == run.diagnostics.end())
            run.diagnostics.push_back(msg);
    }
}

}  // namespace carbondse
