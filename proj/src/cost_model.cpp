#include "compass/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "compass/error.hpp"
#include "compass/partitioner.hpp"

namespace compass {

std::string_view to_string(Objective o) { return o == Objective::Latency ? "latency" : "edp"; }

Objective parse_objective(std::string_view s) {
    if (s == "latency") return Objective::Latency;
    if (s == "edp") return Objective::Edp;
    throw ValidationError("objective", "expected latency or edp, got '" + std::string(s) + "'");
}

StageTime stage_time(const StageInputs& in, const ChipSpec& chip) {
    const uint32_t r = std::max<uint32_t>(1, in.replication);
    StageTime t;
    t.layer_id = in.layer_id;
    const uint64_t slots = (in.invocations + r - 1) / r;
    t.mvm_ns = static_cast<double>(slots) * chip.xbar.mvm_latency_ns;
    t.acc_ns = in.acc_bytes / chip.bus_bandwidth_bytes_per_ns;
    t.vfu_ns = static_cast<double>(in.out_elements) / (chip.core.vfu_throughput_elems_per_ns * r);
    return t;
}

StageTime stage_time(const Partition& partition, int layer_id, const ChipSpec& chip) {
    const auto* lp = partition.plan ? partition.plan->find(layer_id) : nullptr;
    if (!lp) throw ValidationError("layer_id", "layer " + std::to_string(layer_id) + " is not in the partition");
    return stage_time(StageInputs{lp->layer_id, lp->invocations, lp->replication, lp->acc_bytes, lp->out_elements},
                      chip);
}

PartitionCost partition_cost(const Partition& partition, const ChipSpec& chip, const CostOptions& opts,
                             double previous_drain_ns) {
    const auto& plan = *partition.plan;
    const auto& dram = chip.dram;
    const double batch = opts.batch;

    PartitionCost c;
    c.index = partition.index;
    c.span = partition.span;
    c.batch = opts.batch;
    c.layers = static_cast<uint32_t>(plan.layers.size());
    c.cores_used = plan.cores_used;
    c.weight_bits = plan.weight_bits_written;
    c.weight_bytes = plan.weight_bytes_written;
    c.entries = static_cast<uint32_t>(partition.entries.size());
    c.exits = static_cast<uint32_t>(partition.exits.size());
    c.entry_bytes_per_sample = partition.entry_bytes();
    c.exit_bytes_per_sample = partition.exit_bytes();

    c.write_ns = std::max(static_cast<double>(c.weight_bytes) / dram.bandwidth_bytes_per_ns,
                          static_cast<double>(plan.busiest_core_rows) * chip.xbar.row_write_latency_ns);
    c.write_ns_effective = opts.overlap_writes ? std::max(0.0, c.write_ns - previous_drain_ns) : c.write_ns;
    if (c.entries > 0)
        c.io_in_ns = static_cast<double>(c.entry_bytes_per_sample) / dram.bandwidth_bytes_per_ns + c.entries * dram.latency_ns;
    if (c.exits > 0)
        c.io_out_ns = static_cast<double>(c.exit_bytes_per_sample) / dram.bandwidth_bytes_per_ns + c.exits * dram.latency_ns;

    for (const auto& lp : plan.layers) {
        const double t = lp.stage.total();
        c.fill_ns += t;
        c.bottleneck_ns = std::max(c.bottleneck_ns, t);
        c.mvm_activations += lp.invocations * lp.crossbars;
    }
    c.mvm_activations *= opts.batch;
    c.steady_ns = std::max({c.bottleneck_ns, c.io_in_ns, c.io_out_ns});
    c.latency_ns = c.write_ns_effective + c.io_in_ns + c.fill_ns + (batch - 1) * c.steady_ns + c.io_out_ns;
    const double first_stage = plan.layers.empty() ? 0.0 : plan.layers.front().stage.total();
    c.drain_ns = c.fill_ns - first_stage + c.io_out_ns;

    c.dram_read_bytes = c.weight_bytes + uint64_t{opts.batch} * c.entry_bytes_per_sample;
    c.dram_write_bytes = uint64_t{opts.batch} * c.exit_bytes_per_sample;
    c.energy.mvm_pj = static_cast<double>(c.mvm_activations) * chip.xbar.mvm_energy_pj;
    c.energy.write_pj = static_cast<double>(c.weight_bits) * chip.xbar.write_energy_pj_per_bit;
    c.energy.dram_pj = static_cast<double>(c.dram_read_bytes + c.dram_write_bytes) * dram.energy_pj_per_byte;
    c.weight_load_pj = static_cast<double>(c.weight_bytes) * dram.energy_pj_per_byte;
    c.energy.static_pj = chip.static_power_w * c.latency_ns * 1e3;  // W * ns = nJ

    c.fitness = opts.objective == Objective::Latency ? c.latency_ns : c.latency_ns * c.energy.total();
    return c;
}

RunReport group_cost(const PartitionGroup& group, const CostOptions& opts) {
    if (opts.batch < 1) throw ValidationError("batch", "must be >= 1");
    const auto& chip = group.problem().chip();
    RunReport r;
    r.network = group.problem().graph().name();
    r.chip = chip.name;
    r.options = opts;
    r.partitions.reserve(group.size());

    double drain = 0;
    double weight_load = 0;
    for (const auto& p : group.partitions) {
        auto c = partition_cost(p, chip, opts, drain);
        drain = c.drain_ns;
        r.batch_latency_ns += c.latency_ns;
        r.energy.mvm_pj += c.energy.mvm_pj;
        r.energy.write_pj += c.energy.write_pj;
        r.energy.dram_pj += c.energy.dram_pj;
        r.energy.static_pj += c.energy.static_pj;
        weight_load += c.weight_load_pj;
        r.dram_read_bytes += c.dram_read_bytes;
        r.dram_write_bytes += c.dram_write_bytes;
        r.dram_io_bytes += uint64_t{opts.batch} * (c.entry_bytes_per_sample + c.exit_bytes_per_sample);
        r.pgf += c.fitness;
        r.partitions.push_back(c);
    }
    const double batch = opts.batch;
    r.throughput_sps = batch / r.batch_latency_ns * 1e9;
    r.energy_per_sample_pj = r.energy.total() / batch;
    r.edp_per_sample_pj_ns = r.energy_per_sample_pj * r.batch_latency_ns;
    r.write_energy_per_sample_pj = r.energy.write_pj / batch;
    r.weight_load_energy_per_sample_pj = weight_load / batch;
    r.write_to_mvm_ratio = r.energy.mvm_pj > 0 ? (r.energy.write_pj + weight_load) / r.energy.mvm_pj : 0.0;
    return r;
}

double partition_group_fitness(const PartitionGroup& group, const CostOptions& opts) {
    const auto& chip = group.problem().chip();
    double drain = 0;
    double pgf = 0;
    for (const auto& p : group.partitions) {
        auto c = partition_cost(p, chip, opts, drain);
        drain = c.drain_ns;
        pgf += c.fitness;
    }
    return pgf;
}

}  // namespace compass
