#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "compass/decomposer.hpp"
#include "compass/hw_model.hpp"

namespace compass {

class Partition;
class PartitionGroup;

enum class Objective { Latency, Edp };
std::string_view to_string(Objective o);
Objective parse_objective(std::string_view s);

struct CostOptions {
    uint32_t batch = 16;
    Objective objective = Objective::Latency;
    // Let a partition's weight replacement start while the previous one drains.
    bool overlap_writes = false;
};

// Per-sample pipeline stage time of one layer inside a partition.
struct StageInputs {
    int layer_id = 0;
    uint64_t invocations = 0;
    uint32_t replication = 1;
    double acc_bytes = 0;  // partial-sum traffic on the bus, per sample
    uint64_t out_elements = 0;
};

struct StageTime {
    int layer_id = 0;
    double mvm_ns = 0;
    double acc_ns = 0;
    double vfu_ns = 0;

    double total() const { return mvm_ns + acc_ns + vfu_ns; }
};

StageTime stage_time(const StageInputs& in, const ChipSpec& chip);
StageTime stage_time(const Partition& partition, int layer_id, const ChipSpec& chip);

struct EnergyBreakdown {
    double mvm_pj = 0;
    double write_pj = 0;
    double dram_pj = 0;
    double static_pj = 0;

    double total() const { return mvm_pj + write_pj + dram_pj + static_pj; }
};

struct PartitionCost {
    uint32_t index = 0;
    Range span;
    uint32_t batch = 1;

    double write_ns = 0;            // W_P
    double write_ns_effective = 0;  // after overlap with the previous drain
    double io_in_ns = 0;
    double io_out_ns = 0;
    double fill_ns = 0;
    double bottleneck_ns = 0;
    double steady_ns = 0;  // max(bottleneck, io_in, io_out)
    double drain_ns = 0;   // tail available to hide the next partition's writes
    double latency_ns = 0;

    EnergyBreakdown energy;
    double weight_load_pj = 0;  // DRAM share spent fetching weights
    double fitness = 0;

    uint64_t weight_bits = 0;
    uint64_t weight_bytes = 0;
    uint64_t entry_bytes_per_sample = 0;
    uint64_t exit_bytes_per_sample = 0;
    uint64_t dram_read_bytes = 0;
    uint64_t dram_write_bytes = 0;
    uint64_t mvm_activations = 0;  // crossbar MVM invocations for the batch
    uint32_t entries = 0;
    uint32_t exits = 0;
    uint32_t cores_used = 0;
    uint32_t layers = 0;
};

PartitionCost partition_cost(const Partition& partition, const ChipSpec& chip, const CostOptions& opts,
                             double previous_drain_ns = 0);

struct RunReport {
    std::string scheme;
    std::string network;
    std::string chip;
    CostOptions options;
    std::vector<PartitionCost> partitions;

    double batch_latency_ns = 0;  // also the end-to-end latency of every sample
    double throughput_sps = 0;
    EnergyBreakdown energy;
    double energy_per_sample_pj = 0;
    double edp_per_sample_pj_ns = 0;
    double write_energy_per_sample_pj = 0;
    double weight_load_energy_per_sample_pj = 0;
    double write_to_mvm_ratio = 0;  // (crossbar writes + weight loads) / MVM
    uint64_t dram_read_bytes = 0;
    uint64_t dram_write_bytes = 0;
    uint64_t dram_io_bytes = 0;  // activation traffic only
    double pgf = 0;
};

RunReport group_cost(const PartitionGroup& group, const CostOptions& opts);

// Sum of partition fitness values; lower is better.
double partition_group_fitness(const PartitionGroup& group, const CostOptions& opts);

}  // namespace compass
