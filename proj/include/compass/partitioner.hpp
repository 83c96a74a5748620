#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "compass/cost_model.hpp"
#include "compass/decomposer.hpp"
#include "compass/hw_model.hpp"
#include "compass/network_ir.hpp"
#include "compass/rng.hpp"

namespace compass {

struct PartitionOptions {
    uint32_t activation_bits = 4;
};

// The slice of one Conv/Linear layer that falls inside a partition.
struct LayerPart {
    int layer_id = 0;
    uint32_t layer_index = 0;
    Range units;
    Range channels;
    uint32_t replication = 1;
    uint64_t invocations = 0;
    uint32_t crossbars = 0;  // one replica
    uint64_t weight_bits = 0;
    uint64_t weight_bytes = 0;
    uint64_t out_elements = 0;
    double acc_bytes = 0;
    StageTime stage;
};

// Everything about a partition that depends only on its unit span:
// replication, the packing it implies and the per-layer stage times.
struct SpanPlan {
    Range span;
    std::vector<LayerPart> layers;
    uint64_t weight_bits_written = 0;  // replicas included
    uint64_t weight_bytes_written = 0;
    uint64_t instance_crossbars = 0;
    uint64_t busiest_core_rows = 0;
    uint32_t cores_used = 0;

    const LayerPart* find(int layer_id) const;
};

// Immutable compile context shared by every partition group of one run.
class Problem {
public:
    static std::shared_ptr<const Problem> create(NetworkGraph graph, ChipSpec chip, PartitionOptions opts = {},
                                                 int workers = 0);

    const NetworkGraph& graph() const { return graph_; }
    const ChipSpec& chip() const { return chip_; }
    const DecomposedModel& model() const { return model_; }
    const ValidityMap& vmap() const { return vmap_; }
    const PartitionOptions& options() const { return opts_; }

    // Memoized allocate_replication for a valid span; thread-safe.
    std::shared_ptr<const SpanPlan> plan(Range span) const;

    // Activation bytes per sample for `channels` of a node's output.
    uint64_t tensor_bytes(size_t node_index, uint32_t channels) const;
    uint64_t input_bytes() const;

    Problem(NetworkGraph graph, ChipSpec chip, PartitionOptions opts, int workers);

private:
    NetworkGraph graph_;
    ChipSpec chip_;
    PartitionOptions opts_;
    DecomposedModel model_;
    ValidityMap vmap_;

    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<uint64_t, std::shared_ptr<const SpanPlan>> cache_;
};

// An activation tensor slice moved through global memory. node_id -1 is the
// network input.
struct TensorIo {
    int node_id = -1;
    int producer_partition = -1;
    uint64_t bytes_per_sample = 0;

    auto operator<=>(const TensorIo&) const = default;
};

struct Placement {
    uint32_t uid = 0;
    uint32_t replica = 0;
    uint32_t core = 0;
    uint32_t xbar_offset = 0;
    uint32_t crossbars = 0;
};

class Partition {
public:
    uint32_t index = 0;
    Range span;
    std::shared_ptr<const SpanPlan> plan;
    std::vector<int> attached_aux;
    std::vector<TensorIo> entries;
    std::vector<TensorIo> exits;
    std::vector<Placement> core_map;  // filled by map_cores

    uint32_t replication(int layer_id) const;
    uint64_t entry_bytes() const;
    uint64_t exit_bytes() const;
};

class PartitionGroup {
public:
    PartitionGroup() = default;
    explicit PartitionGroup(std::shared_ptr<const Problem> problem) : problem_(std::move(problem)) {}

    const Problem& problem() const { return *problem_; }
    const std::shared_ptr<const Problem>& problem_ptr() const { return problem_; }

    std::vector<Partition> partitions;

    // Interior cut positions plus 0 and M.
    std::vector<uint32_t> boundaries() const;
    size_t size() const { return partitions.size(); }

private:
    std::shared_ptr<const Problem> problem_;
};

// Builds a group from ascending boundaries (0 ... M) and finalizes it.
PartitionGroup make_group(std::shared_ptr<const Problem> problem, const std::vector<uint32_t>& boundaries,
                          bool with_core_map = false);

// Replication, aux attachment and io markers (plus the core map on request).
void finalize(PartitionGroup& group, bool with_core_map = false);

PartitionGroup generate_random_group(std::shared_ptr<const Problem> problem, uint64_t seed);
PartitionGroup generate_random_group(std::shared_ptr<const Problem> problem, Rng& rng);
// Random boundaries on [from, to), both aligned.
void random_boundaries(const ValidityMap& vmap, uint32_t from, uint32_t to, Rng& rng, std::vector<uint32_t>& out);

PartitionGroup greedy_group(std::shared_ptr<const Problem> problem);
PartitionGroup layerwise_group(std::shared_ptr<const Problem> problem);

void attach_aux_layers(PartitionGroup& group);
void mark_io(PartitionGroup& group);
SpanPlan allocate_replication(const Problem& problem, Range span);
void map_cores(Partition& partition, const Problem& problem);

// Empty when the group satisfies every structural invariant.
std::vector<std::string> check_group(const PartitionGroup& group);

}  // namespace compass
