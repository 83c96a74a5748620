#include "compass/ga.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <optional>
#include <ostream>

#include "compass/error.hpp"
#include "compass/parallel.hpp"

namespace compass {

std::string_view to_string(MutationKind k) {
    switch (k) {
    case MutationKind::Merge: return "merge";
    case MutationKind::Split: return "split";
    case MutationKind::Move: return "move";
    case MutationKind::FixedRandom: return "fixed_random";
    case MutationKind::Clone: return "clone";
    }
    return "?";
}

std::string_view to_string(Role r) {
    switch (r) {
    case Role::Initial: return "initial";
    case Role::Survivor: return "survivor";
    case Role::Mutant: return "mutant";
    }
    return "?";
}

void GaParams::validate() const {
    if (n_sel < 1) throw ValidationError("n_sel", "must be >= 1");
    if (n_sel + n_mut != population) throw ValidationError("population", "must equal n_sel + n_mut");
    double sum = 0;
    for (double w : mutation_weights) {
        if (w < 0) throw ValidationError("mutation_weights", "must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("mutation_weights", "must sum to 1");
}

// ---------------------------------------------------------------------------
// Fitness evaluation

void evaluate(Individual& ind, const CostOptions& opts) {
    const auto& chip = ind.group.problem().chip();
    ind.fitness.resize(ind.group.size());
    ind.pgf = 0;
    double drain = 0;
    for (size_t k = 0; k < ind.group.size(); ++k) {
        const auto c = partition_cost(ind.group.partitions[k], chip, opts, drain);
        drain = c.drain_ns;
        ind.fitness[k] = c.fitness;
        ind.pgf += c.fitness;
    }
}

void evaluate_population_serial(std::span<Individual> population, const CostOptions& opts) {
    for (auto& ind : population) evaluate(ind, opts);
}

void evaluate_population(std::span<Individual> population, const CostOptions& opts, int workers) {
    const auto n = static_cast<int64_t>(population.size());
#pragma omp parallel for schedule(dynamic) num_threads(resolve_workers(workers))
    for (int64_t i = 0; i < n; ++i) evaluate(population[i], opts);
}

// ---------------------------------------------------------------------------
// Partition scores

ExpectationTable::ExpectationTable(std::span<const Individual> population) {
    if (population.empty()) return;
    const uint32_t m = population.front().group.problem().model().size();
    std::vector<double> mean(m, 0.0);
    for (const auto& ind : population) {
        for (size_t k = 0; k < ind.group.size(); ++k) {
            const Range span = ind.group.partitions[k].span;
            const double per_unit = ind.fitness[k] / span.size();
            for (uint32_t i = span.begin; i < span.end; ++i) mean[i] += per_unit;
        }
    }
    prefix_.assign(m + 1, 0.0);
    const double n = static_cast<double>(population.size());
    for (uint32_t i = 0; i < m; ++i) prefix_[i + 1] = prefix_[i] + mean[i] / n;
}

size_t ScoreTable::worst() const {
    size_t w = 0;
    for (size_t k = 1; k < score.size(); ++k)
        if (score[k] >= score[w]) w = k;
    return w;
}

size_t ScoreTable::best() const {
    size_t b = 0;
    for (size_t k = 1; k < score.size(); ++k)
        if (score[k] < score[b]) b = k;
    return b;
}

ScoreTable partition_score(const Individual& ind, const ExpectationTable& table) {
    ScoreTable s;
    const auto& parts = ind.group.partitions;
    s.unit_fitness.assign(table.units(), 0.0);
    for (size_t k = 0; k < parts.size(); ++k) {
        const Range span = parts[k].span;
        const double per_unit = ind.fitness[k] / span.size();
        for (uint32_t i = span.begin; i < span.end; ++i) s.unit_fitness[i] = per_unit;
        const double expected = table.expected(span.begin, span.end);
        if (!(expected > 0))
            throw DegenerateExpectation("expected fitness over [" + std::to_string(span.begin) + "," +
                                        std::to_string(span.end) + ") is not positive");
        s.expected.push_back(expected);
        s.score.push_back(ind.fitness[k] / expected);
    }
    return s;
}

ScoreTable partition_score(const Individual& ind, std::span<const Individual> population) {
    return partition_score(ind, ExpectationTable(population));
}

// ---------------------------------------------------------------------------
// Mutations

namespace {

bool merge(const Individual& parent, const ExpectationTable& table, std::vector<uint32_t>& b) {
    const auto& vmap = parent.group.problem().vmap();
    const auto& parts = parent.group.partitions;
    std::optional<size_t> pick;
    double pick_score = 0;
    for (size_t k = 0; k + 1 < parts.size(); ++k) {
        const Range merged{parts[k].span.begin, parts[k + 1].span.end};
        if (!vmap.is_valid(merged.begin, merged.end)) continue;
        const double score = (parent.fitness[k] + parent.fitness[k + 1]) / table.expected(merged.begin, merged.end);
        if (!pick || score > pick_score) {
            pick = k;
            pick_score = score;
        }
    }
    if (!pick) return false;
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(*pick + 1));
    return true;
}

bool split(const Individual& parent, size_t target, Rng& rng, std::vector<uint32_t>& b) {
    const auto& vmap = parent.group.problem().vmap();
    const Range span = parent.group.partitions[target].span;
    std::vector<uint32_t> cuts;
    const auto [lo, hi] = vmap.boundaries_in(span.begin, span.end - 1);
    for (size_t i = lo; i < hi; ++i) {
        const uint32_t c = vmap.boundaries()[i];
        if (vmap.is_valid(span.begin, c) && vmap.is_valid(c, span.end)) cuts.push_back(c);
    }
    if (cuts.empty()) return false;
    b.insert(b.begin() + static_cast<std::ptrdiff_t>(target + 1), cuts[rng.index(cuts.size())]);
    return true;
}

bool move(const Individual& parent, size_t target, Rng& rng, std::vector<uint32_t>& b) {
    const auto& vmap = parent.group.problem().vmap();
    const auto& bounds = vmap.boundaries();
    // (boundary index in b, direction): shift one aligned position left or right.
    std::vector<std::pair<size_t, int>> options;
    if (target > 0) options.insert(options.end(), {{target, -1}, {target, +1}});
    if (target + 1 < parent.group.size()) options.insert(options.end(), {{target + 1, -1}, {target + 1, +1}});
    for (size_t i = options.size(); i > 1; --i) std::swap(options[i - 1], options[rng.index(i)]);

    for (auto [bi, dir] : options) {
        const auto pos = static_cast<size_t>(std::lower_bound(bounds.begin(), bounds.end(), b[bi]) - bounds.begin());
        if (dir < 0 && pos == 0) continue;
        if (dir > 0 && pos + 1 >= bounds.size()) continue;
        const uint32_t moved = bounds[dir < 0 ? pos - 1 : pos + 1];
        if (moved <= b[bi - 1] || moved >= b[bi + 1]) continue;
        if (!vmap.is_valid(b[bi - 1], moved) || !vmap.is_valid(moved, b[bi + 1])) continue;
        b[bi] = moved;
        return true;
    }
    return false;
}

void fixed_random(const Individual& parent, size_t keep, Rng& rng, std::vector<uint32_t>& b) {
    const auto& problem = parent.group.problem();
    const Range span = parent.group.partitions[keep].span;
    std::vector<uint32_t> out{0};
    random_boundaries(problem.vmap(), 0, span.begin, rng, out);
    out.push_back(span.end);
    random_boundaries(problem.vmap(), span.end, problem.model().size(), rng, out);
    b = std::move(out);
}

}  // namespace

bool try_mutation(MutationKind kind, const Individual& parent, const ScoreTable& scores, const ExpectationTable& table,
                  Rng& rng, std::vector<uint32_t>& boundaries) {
    boundaries = parent.group.boundaries();
    switch (kind) {
    case MutationKind::Merge: return merge(parent, table, boundaries);
    case MutationKind::Split: return split(parent, scores.worst(), rng, boundaries);
    case MutationKind::Move: return move(parent, scores.worst(), rng, boundaries);
    case MutationKind::FixedRandom: fixed_random(parent, scores.best(), rng, boundaries); return true;
    case MutationKind::Clone: return true;
    }
    return false;
}

MutationOutcome mutate(const Individual& parent, const ScoreTable& scores, const ExpectationTable& table,
                       const GaParams& params, Rng& rng) {
    MutationOutcome out;
    std::array<double, 4> weights = params.mutation_weights;
    std::vector<uint32_t> boundaries;
    for (;;) {
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(total > 0)) break;
        double u = rng.uniform01() * total;
        size_t kind = 0;
        while (kind < 3 && (weights[kind] == 0 || u >= weights[kind])) {
            u -= weights[kind];
            ++kind;
        }
        while (weights[kind] == 0) kind = (kind + 3) % 4;  // rounding landed on a disabled scheme
        if (try_mutation(static_cast<MutationKind>(kind), parent, scores, table, rng, boundaries)) {
            out.applied = static_cast<MutationKind>(kind);
            out.group = make_group(parent.group.problem_ptr(), boundaries);
            return out;
        }
        weights[kind] = 0;
        ++out.rejected;
    }
    out.applied = MutationKind::Clone;
    out.group = parent.group;
    return out;
}

// ---------------------------------------------------------------------------
// Search loop

namespace {

void sort_population(std::vector<Individual>& pop) {
    std::sort(pop.begin(), pop.end(), [](const Individual& a, const Individual& b) {
        if (a.pgf != b.pgf) return a.pgf < b.pgf;
        return a.serial < b.serial;
    });
}

void log_population(GaResult& result, const std::vector<Individual>& pop, uint32_t generation) {
    for (uint32_t s = 0; s < pop.size(); ++s)
        result.log.push_back({generation, s, pop[s].pgf, static_cast<uint32_t>(pop[s].group.size()), pop[s].role,
                              pop[s].mutation});
}

}  // namespace

GaResult run_compass(std::shared_ptr<const Problem> problem, const GaParams& params, const CostOptions& opts) {
    params.validate();
    const int threads = resolve_workers(params.workers);
    GaResult result;

    std::vector<Individual> pop(params.population);
    const auto n_init = static_cast<int64_t>(params.population);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int64_t s = 0; s < n_init; ++s) {
        Rng rng = Rng::stream(params.seed, 0, static_cast<uint64_t>(s));
        pop[s].group = generate_random_group(problem, rng);
        pop[s].serial = static_cast<uint64_t>(s);
        pop[s].role = Role::Initial;
        evaluate(pop[s], opts);
    }
    uint64_t next_serial = params.population;
    log_population(result, pop, 0);
    sort_population(pop);
    result.best_per_generation.push_back(pop.front().pgf);

    uint32_t stalled = 0;
    for (uint32_t g = 0; g < params.generations; ++g) {
        sort_population(pop);
        const ExpectationTable table(pop);
        std::vector<Individual> next(pop.begin(), pop.begin() + params.n_sel);
        for (auto& s : next) s.role = Role::Survivor;
        next.resize(params.population);

        const auto n_mut = static_cast<int64_t>(params.n_mut);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (int64_t k = 0; k < n_mut; ++k) {
            Rng rng = Rng::stream(params.seed, g + 1, static_cast<uint64_t>(k));
            const Individual& parent = next[rng.index(params.n_sel)];
            const auto scores = partition_score(parent, table);
            auto outcome = mutate(parent, scores, table, params, rng);
            Individual& child = next[params.n_sel + k];
            child.group = std::move(outcome.group);
            child.serial = next_serial + static_cast<uint64_t>(k);
            child.role = Role::Mutant;
            child.mutation = outcome.applied;
            evaluate(child, opts);
        }
        next_serial += params.n_mut;
        for (uint32_t k = params.n_sel; k < params.population; ++k) {
            ++result.applied[static_cast<size_t>(next[k].mutation)];
            if (next[k].mutation == MutationKind::Clone) ++result.infeasible_mutations;
        }

        pop = std::move(next);
        log_population(result, pop, g + 1);
        ++result.generations_run;

        const double prev = result.best_per_generation.back();
        double best = prev;
        for (const auto& ind : pop) best = std::min(best, ind.pgf);
        result.best_per_generation.push_back(best);
        stalled = (prev - best) <= params.early_stop_tolerance * prev ? stalled + 1 : 0;
        if (params.early_stop_patience > 0 && stalled >= params.early_stop_patience) break;
    }

    sort_population(pop);
    result.best = std::move(pop.front().group);
    result.best_pgf = pop.front().pgf;
    finalize(result.best, true);
    return result;
}

void write_convergence_csv(const GaResult& result, std::ostream& out) {
    out << "# compass-convergence v1\n";
    out << "generation,slot,pgf,partitions,role,mutation\n";
    char buf[64];
    for (const auto& r : result.log) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.pgf);
        out << r.generation << ',' << r.slot << ',' << buf << ',' << r.partitions << ',' << to_string(r.role) << ','
            << (r.role == Role::Mutant ? to_string(r.mutation) : "-") << '\n';
    }
}

}  // namespace compass
