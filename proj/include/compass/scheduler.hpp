#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "compass/cost_model.hpp"
#include "compass/partitioner.hpp"

namespace compass {

enum class Opcode : uint8_t { WriteXbar, Load, Store, Mvm, Vfu, Send, Recv, Barrier };
std::string_view to_string(Opcode op);

struct Instruction {
    uint32_t core = 0;
    Opcode op = Opcode::Barrier;
    uint32_t partition = 0;
    int32_t sample = -1;  // -1 outside the per-sample pipeline
    uint64_t bytes = 0;
    uint64_t address = 0;  // global memory address for WRITE_XBAR / LOAD / STORE
    uint64_t issue_cycle = 0;
    uint64_t end_cycle = 0;
    int32_t tensor = -1;    // GlobalAllocation::tensors index for LOAD / STORE
    int32_t layer_id = -1;  // MVM / VFU / WRITE_XBAR; graph node id for aux VFU
    uint32_t uid = 0;
    uint32_t replica = 0;
    uint32_t index = 0;  // crossbar within the unit (WRITE_XBAR) or invocation block (MVM)
    uint32_t invocations = 0;
    uint32_t peer = 0;  // SEND / RECV counterpart core
    uint64_t seq = 0;   // generation order, final tie-breaker
};

struct TensorAlloc {
    int node_id = -1;  // -1 is the network input
    int producer_partition = -1;
    uint64_t bytes_per_sample = 0;
    uint64_t stride = 0;  // per-sample stride, 64 B aligned
    uint64_t address = 0;
    uint64_t size = 0;
    uint32_t alloc_epoch = 0;  // partition whose start makes it live
    uint32_t last_use = 0;     // last partition that reads it; UINT32_MAX for network outputs
};

struct GlobalAllocation {
    uint64_t capacity = 0;
    uint64_t weight_bytes = 0;             // weight region [0, weight_bytes)
    std::vector<uint64_t> unit_address;    // uid -> weight address
    std::vector<TensorAlloc> tensors;
    uint64_t peak_bytes = 0;

    int find(int node_id, int producer_partition) const;
};

struct ScheduleOptions {
    uint32_t mvm_block = 64;  // invocations coalesced into one MVM instruction
};

struct PartitionWindow {
    uint64_t start_cycle = 0;
    uint64_t latency_cycles = 0;  // cost-model latency in cycles
    uint64_t makespan_cycles = 0;  // last instruction end minus start
};

struct Schedule {
    uint32_t batch = 1;
    double clock_ghz = 1.0;
    std::vector<Instruction> instructions;  // by (partition, issue_cycle, core, seq)
    GlobalAllocation allocation;
    std::vector<PartitionWindow> windows;
};

// Needs a finalized group; partitions without a core map are mapped here.
// Throws GlobalMemoryOverflow when live tensors exceed DRAM capacity.
Schedule schedule(const PartitionGroup& group, const CostOptions& opts, const ScheduleOptions& sopts = {});

size_t count(const Schedule& s, Opcode op);

// Dependence safety, allocator liveness, SEND/RECV pairing, accounting
// identities and makespan agreement. Returns one string per violation.
std::vector<std::string> check_schedule(const Schedule& s, const PartitionGroup& group, const CostOptions& opts);

struct TraceSummary {
    uint64_t read_bytes = 0;
    uint64_t write_bytes = 0;
    uint64_t lines = 0;
};

TraceSummary write_trace(const Schedule& s, const ChipSpec& chip, std::ostream& out);
TraceSummary emit_trace(const Schedule& s, const ChipSpec& chip, const std::filesystem::path& path);
// Totals without writing anything.
TraceSummary trace_summary(const Schedule& s);

void write_instructions(const Schedule& s, std::ostream& out);
void emit_instructions(const Schedule& s, const std::filesystem::path& path);

}  // namespace compass
