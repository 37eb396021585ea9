#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "carbondse/optimize.hpp"

namespace carbondse {

namespace {

// Portable draws; std distributions differ between standard libraries.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % n;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Platform budget_platform(const ArchSpace& hw, const ObjectiveMode& mode) {
    Platform p = hw.platform;
    p.tops_budget = mode.tops_budget;
    return p;
}

struct Genome {
    std::vector<std::size_t> arity;     // per joint gene
    std::vector<std::size_t> variable;  // indices of genes with arity > 1
    std::size_t model_genes = 0;
};

Genome make_genome(const JointSpace& space) {
    Genome g;
    g.model_genes = space.models.gene_count();
    for (std::size_t i = 0; i < g.model_genes; ++i) g.arity.push_back(space.models.gene_arity(i));
    for (std::size_t i = 0; i < ArchSpace::kGenes; ++i) g.arity.push_back(space.hardware.gene_arity(i));
    for (std::size_t i = 0; i < g.arity.size(); ++i) {
        if (g.arity[i] == 0) throw std::invalid_argument("search: a gene has no candidate values");
        if (g.arity[i] > 1) g.variable.push_back(i);
    }
    return g;
}

std::pair<ModelConfig, HardwareConfig> decode(const JointSpace& space, const Genome& g,
                                              const std::vector<std::size_t>& genes) {
    std::vector<std::size_t> mg(genes.begin(), genes.begin() + static_cast<std::ptrdiff_t>(g.model_genes));
    return {space.models.from_genes(mg), space.hardware.from_genes(genes.data() + g.model_genes)};
}

// Constraint domination: feasible beats infeasible, smaller violation wins
// among infeasible, Pareto dominance among feasible.
bool cdominates(const Candidate& a, const std::vector<double>& va, const Candidate& b,
                const std::vector<double>& vb) {
    if (a.feasible != b.feasible) return a.feasible;
    if (!a.feasible) return a.violation_magnitude < b.violation_magnitude;
    return dominates(va, vb);
}

struct Ranked {
    std::vector<int> rank;
    std::vector<double> crowd;
};

Ranked rank_and_crowd(const std::vector<const Candidate*>& pop, const std::vector<std::vector<double>>& obj) {
    const std::size_t n = pop.size();
    Ranked r{std::vector<int>(n, 0), std::vector<double>(n, 0.0)};
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<int> count(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (cdominates(*pop[i], obj[i], *pop[j], obj[j]))
                dominated[i].push_back(j);
            else if (cdominates(*pop[j], obj[j], *pop[i], obj[i]))
                ++count[i];
        }
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i)
        if (count[i] == 0) current.push_back(i);
    int level = 0;
    while (!current.empty()) {
        // crowding distance within this front
        const std::size_t m = obj.empty() ? 0 : obj[current.front()].size();
        for (std::size_t k = 0; k < m; ++k) {
            auto sorted = current;
            std::stable_sort(sorted.begin(), sorted.end(),
                             [&](std::size_t a, std::size_t b) { return obj[a][k] < obj[b][k]; });
            const double lo = obj[sorted.front()][k], hi = obj[sorted.back()][k];
            r.crowd[sorted.front()] = r.crowd[sorted.back()] = std::numeric_limits<double>::infinity();
            if (hi > lo)
                for (std::size_t t = 1; t + 1 < sorted.size(); ++t)
                    r.crowd[sorted[t]] += (obj[sorted[t + 1]][k] - obj[sorted[t - 1]][k]) / (hi - lo);
        }
        std::vector<std::size_t> next;
        for (std::size_t i : current) {
            r.rank[i] = level;
            for (std::size_t j : dominated[i])
                if (--count[j] == 0) next.push_back(j);
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
        ++level;
    }
    return r;
}

}  // namespace

std::uint64_t joint_size(const JointSpace& space, const ObjectiveMode& mode) {
    ArchSpace hw = space.hardware;
    hw.platform = budget_platform(space.hardware, mode);
    std::uint64_t n = 0;
    for_each_config(hw, [&](const HardwareConfig&) { ++n; });
    return n * space.models.size();
}

RunRecord exhaustive_search(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                            const SearchOptions& opts) {
    mode.validate();
    const std::uint64_t n = joint_size(space, mode);
    if (n > opts.exhaustive_cap)
        throw std::invalid_argument("joint space has " + std::to_string(n) + " members, above the exhaustive cap of " +
                                    std::to_string(opts.exhaustive_cap) + "; use --strategy nsga2");
    ArchSpace hw = space.hardware;
    hw.platform = budget_platform(space.hardware, mode);
    const auto configs = enumerate_space(hw);

    RunRecord run;
    run.strategy = "exhaustive";
    run.seed = opts.seed;
    run.mode = mode;
    run.budget = n;
    run.log.reserve(n);

    constexpr std::size_t kChunk = 4096;
    std::vector<std::pair<ModelConfig, HardwareConfig>> batch;
    auto flush = [&] {
        for (auto& c : evaluate_batch(batch, ctx, mode, opts.jobs)) {
            c.provenance.trial = static_cast<std::int64_t>(run.log.size());
            c.provenance.seed = opts.seed;
            c.provenance.strategy = run.strategy;
            run.log.push_back(std::move(c));
        }
        batch.clear();
    };
    for (std::uint64_t m = 0; m < space.models.size(); ++m) {
        const auto model = space.models.at(m);
        for (const auto& h : configs) {
            batch.emplace_back(model, h);
            if (batch.size() == kChunk) flush();
        }
    }
    flush();
    finalize_run(run);
    return run;
}

RunRecord nsga2_search(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                       const SearchOptions& opts) {
    mode.validate();
    if (opts.population < 2) throw std::invalid_argument("nsga2: population must be >= 2");
    const auto pop_size = static_cast<std::size_t>(opts.population);
    if (opts.budget < pop_size) throw std::invalid_argument("nsga2: budget must be >= population");
    if (!(opts.crossover_p >= 0 && opts.crossover_p <= 1))
        throw std::invalid_argument("nsga2: crossover probability must be in [0, 1]");

    const Genome g = make_genome(space);
    const double pm = opts.mutation_p.value_or(g.variable.empty() ? 0.0 : 1.0 / static_cast<double>(g.variable.size()));
    if (!(pm >= 0 && pm <= 1)) throw std::invalid_argument("nsga2: mutation probability must be in [0, 1]");

    // Upper bound on distinct genomes, saturating.
    std::uint64_t distinct = 1;
    for (std::size_t i : g.variable) {
        if (distinct > std::numeric_limits<std::uint64_t>::max() / g.arity[i]) {
            distinct = std::numeric_limits<std::uint64_t>::max();
            break;
        }
        distinct *= g.arity[i];
    }

    RunRecord run;
    run.strategy = "nsga2";
    run.seed = opts.seed;
    run.mode = mode;
    run.budget = opts.budget;

    std::mt19937_64 rng(opts.seed);
    std::map<std::vector<std::size_t>, std::size_t> cache;  // genome -> log index
    std::vector<std::vector<double>> objs;                  // per log entry
    std::vector<std::vector<std::size_t>> genes_of;         // per log entry

    auto random_genome = [&] {
        std::vector<std::size_t> x(g.arity.size(), 0);
        for (std::size_t i : g.variable) x[i] = uniform_index(rng, g.arity[i]);
        return x;
    };
    auto mutate_gene = [&](std::vector<std::size_t>& x, std::size_t i) {
        // Draw a different value.
        const std::size_t v = uniform_index(rng, g.arity[i] - 1);
        x[i] = v >= x[i] ? v + 1 : v;
    };
    auto force_mutate = [&](std::vector<std::size_t>& x) {
        if (!g.variable.empty()) mutate_gene(x, g.variable[uniform_index(rng, g.variable.size())]);
    };

    // Evaluates new genomes and returns log indices for every genome in order.
    auto evaluate = [&](const std::vector<std::vector<std::size_t>>& genomes) {
        std::vector<std::pair<ModelConfig, HardwareConfig>> items;
        std::vector<std::size_t> out;
        std::vector<std::vector<std::size_t>> fresh;
        for (const auto& x : genomes) {
            if (cache.count(x)) continue;
            if (std::find(fresh.begin(), fresh.end(), x) != fresh.end()) continue;
            fresh.push_back(x);
            items.push_back(decode(space, g, x));
        }
        auto cands = evaluate_batch(items, ctx, mode, opts.jobs);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            auto& c = cands[i];
            c.provenance.trial = static_cast<std::int64_t>(run.log.size());
            c.provenance.seed = opts.seed;
            c.provenance.strategy = run.strategy;
            cache.emplace(fresh[i], run.log.size());
            genes_of.push_back(fresh[i]);
            objs.push_back(objective_vector(c, mode));
            run.log.push_back(std::move(c));
        }
        for (const auto& x : genomes) out.push_back(cache.at(x));
        return out;
    };

    auto remaining = [&] { return static_cast<std::size_t>(opts.budget - run.log.size()); };

    // Initial population of distinct genomes.
    std::vector<std::vector<std::size_t>> init;
    {
        std::set<std::vector<std::size_t>> seen;
        const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(pop_size, distinct));
        std::size_t attempts = 0;
        while (init.size() < want && attempts < want * 64) {
            ++attempts;
            auto x = random_genome();
            if (seen.insert(x).second) init.push_back(std::move(x));
        }
    }
    std::vector<std::size_t> population = evaluate(init);

    std::size_t stalled = 0;
    while (run.log.size() < opts.budget) {
        if (run.log.size() >= distinct) {
            run.diagnostics.push_back("search space exhausted after " + std::to_string(run.log.size()) +
                                      " evaluations");
            break;
        }
        std::vector<const Candidate*> pop_c;
        std::vector<std::vector<double>> pop_o;
        for (std::size_t i : population) {
            pop_c.push_back(&run.log[i]);
            pop_o.push_back(objs[i]);
        }
        const Ranked pr = rank_and_crowd(pop_c, pop_o);
        auto tournament = [&] {
            const std::size_t a = uniform_index(rng, population.size());
            const std::size_t b = uniform_index(rng, population.size());
            if (pr.rank[a] != pr.rank[b]) return pr.rank[a] < pr.rank[b] ? a : b;
            if (pr.crowd[a] != pr.crowd[b]) return pr.crowd[a] > pr.crowd[b] ? a : b;
            return std::min(a, b);
        };
        std::vector<std::vector<std::size_t>> pop_genomes;
        for (std::size_t i : population) pop_genomes.push_back(genes_of[i]);

        const std::size_t n_off = std::min(pop_size, remaining());
        std::vector<std::vector<std::size_t>> offspring;
        std::set<std::vector<std::size_t>> batch_seen;
        while (offspring.size() < n_off) {
            const auto& p1 = pop_genomes[tournament()];
            const auto& p2 = pop_genomes[tournament()];
            auto child = p1;
            if (uniform01(rng) < opts.crossover_p)
                for (std::size_t i : g.variable)
                    if (uniform01(rng) < 0.5) child[i] = p2[i];
            for (std::size_t i : g.variable)
                if (uniform01(rng) < pm) mutate_gene(child, i);
            for (int tries = 0; tries < 20 && (cache.count(child) || batch_seen.count(child)); ++tries)
                force_mutate(child);
            if (batch_seen.count(child)) {
                // Still a repeat within this batch; retry with fresh parents.
                if (++stalled > 1000) break;
                continue;
            }
            batch_seen.insert(child);
            offspring.push_back(std::move(child));
        }
        const std::size_t before = run.log.size();
        const auto off_idx = evaluate(offspring);
        if (run.log.size() == before) {
            if (++stalled > 1000) {
                run.diagnostics.push_back("no new genomes found; stopping at " + std::to_string(before) +
                                          " evaluations");
                break;
            }
        } else {
            stalled = 0;
        }

        // Elitist survival over parents and offspring.
        std::vector<std::size_t> merged = population;
        for (std::size_t i : off_idx)
            if (std::find(merged.begin(), merged.end(), i) == merged.end()) merged.push_back(i);
        std::vector<const Candidate*> mc;
        std::vector<std::vector<double>> mo;
        for (std::size_t i : merged) {
            mc.push_back(&run.log[i]);
            mo.push_back(objs[i]);
        }
        const Ranked mr = rank_and_crowd(mc, mo);
        std::vector<std::size_t> order(merged.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (mr.rank[a] != mr.rank[b]) return mr.rank[a] < mr.rank[b];
            if (mr.crowd[a] != mr.crowd[b]) return mr.crowd[a] > mr.crowd[b];
            return merged[a] < merged[b];
        });
        population.clear();
        for (std::size_t t = 0; t < order.size() && population.size() < pop_size; ++t)
            population.push_back(merged[order[t]]);
    }

    finalize_run(run);
    return run;
}

RunRecord ExhaustiveStrategy::run(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                                  const SearchOptions& opts) const {
    return exhaustive_search(space, mode, ctx, opts);
}

RunRecord Nsga2Strategy::run(const JointSpace& space, const ObjectiveMode& mode, const EvalContext& ctx,
                             const SearchOptions& opts) const {
    return nsga2_search(space, mode, ctx, opts);
}

std::unique_ptr<SearchStrategy> make_strategy(const std::string& name) {
    if (name == "exhaustive" || name == "oracle") return std::make_unique<ExhaustiveStrategy>();
    if (name == "nsga2") return std::make_unique<Nsga2Strategy>();
    throw std::invalid_argument("unknown strategy '" + name + "' (expected nsga2|exhaustive)");
}

nlohmann::json run_summary_json(const RunRecord& r) {
    std::size_t feasible = 0;
    for (const auto& c : r.log) feasible += c.feasible ? 1 : 0;
    nlohmann::json front = nlohmann::json::array();
    for (const auto& m : r.front.members) front.push_back(to_json(m));
    return {{"schema_version", 1},
            {"strategy", r.strategy},
            {"seed", r.seed},
            {"mode", to_json(r.mode)},
            {"budget", r.budget},
            {"evaluations", r.log.size()},
            {"feasible", feasible},
            {"reference_point", r.front.reference_point},
            {"hv_normalization", {{"lo", r.hv_norm.lo}, {"ref", r.hv_norm.ref}}},
            {"hypervolume", r.hypervolume},
            {"front", std::move(front)},
            {"diagnostics", r.diagnostics}};
}

}  // namespace carbondse
