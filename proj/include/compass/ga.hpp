#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "compass/cost_model.hpp"
#include "compass/partitioner.hpp"
#include "compass/rng.hpp"

namespace compass {

enum class MutationKind { Merge = 0, Split = 1, Move = 2, FixedRandom = 3, Clone = 4 };
std::string_view to_string(MutationKind k);

struct GaParams {
    uint32_t generations = 30;
    uint32_t population = 100;
    uint32_t n_sel = 20;
    uint32_t n_mut = 80;
    // Merge, Split, Move, FixedRandom.
    std::array<double, 4> mutation_weights{0.25, 0.25, 0.25, 0.25};
    uint32_t early_stop_patience = 5;
    double early_stop_tolerance = 1e-6;  // relative best-PGF improvement
    uint64_t seed = 0;
    int workers = 0;

    void validate() const;
};

enum class Role { Initial, Survivor, Mutant };
std::string_view to_string(Role r);

struct Individual {
    PartitionGroup group;
    std::vector<double> fitness;  // f(P) per partition
    double pgf = 0;
    uint64_t serial = 0;  // creation order; breaks PGF ties
    Role role = Role::Initial;
    MutationKind mutation = MutationKind::Clone;
};

// Fills fitness and pgf. The OpenMP version must match the serial one bit for bit.
void evaluate(Individual& ind, const CostOptions& opts);
void evaluate_population(std::span<Individual> population, const CostOptions& opts, int workers);
void evaluate_population_serial(std::span<Individual> population, const CostOptions& opts);

// Population expectation of summed unit fitness over any unit span.
class ExpectationTable {
public:
    ExpectationTable() = default;
    explicit ExpectationTable(std::span<const Individual> population);

    double expected(uint32_t p, uint32_t q) const { return prefix_[q] - prefix_[p]; }
    uint32_t units() const { return prefix_.empty() ? 0 : static_cast<uint32_t>(prefix_.size() - 1); }

private:
    std::vector<double> prefix_;
};

struct ScoreTable {
    std::vector<double> unit_fitness;  // m(x) for every unit of the individual
    std::vector<double> expected;      // expectation over each partition's span
    std::vector<double> score;         // R per partition

    // Highest R, ties to the later partition (last of an ascending sort).
    size_t worst() const;
    // Lowest R, ties to the earlier partition.
    size_t best() const;
};

ScoreTable partition_score(const Individual& ind, const ExpectationTable& table);
ScoreTable partition_score(const Individual& ind, std::span<const Individual> population);

struct MutationOutcome {
    PartitionGroup group;
    MutationKind applied = MutationKind::Clone;
    uint32_t rejected = 0;  // schemes that were infeasible before one applied
};

// Tries the drawn scheme, redraws among the rest on infeasibility, and
// clones the parent if none of the four applies.
MutationOutcome mutate(const Individual& parent, const ScoreTable& scores, const ExpectationTable& table,
                       const GaParams& params, Rng& rng);

// Single-scheme entry point; returns false when the scheme is infeasible.
bool try_mutation(MutationKind kind, const Individual& parent, const ScoreTable& scores,
                  const ExpectationTable& table, Rng& rng, std::vector<uint32_t>& boundaries);

struct ConvergenceRecord {
    uint32_t generation = 0;
    uint32_t slot = 0;
    double pgf = 0;
    uint32_t partitions = 0;
    Role role = Role::Initial;
    MutationKind mutation = MutationKind::Clone;
};

struct GaResult {
    PartitionGroup best;
    double best_pgf = 0;
    std::vector<double> best_per_generation;  // index 0 is the initial population
    std::vector<ConvergenceRecord> log;
    uint32_t generations_run = 0;
    uint64_t infeasible_mutations = 0;  // mutants that fell back to a clone
    std::array<uint64_t, 5> applied{};  // per MutationKind
};

GaResult run_compass(std::shared_ptr<const Problem> problem, const GaParams& params, const CostOptions& opts);

void write_convergence_csv(const GaResult& result, std::ostream& out);

}  // namespace compass
