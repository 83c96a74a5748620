#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "compass/hw_model.hpp"
#include "compass/network_ir.hpp"

namespace compass {

// Half-open [begin, end).
struct Range {
    uint32_t begin = 0;
    uint32_t end = 0;

    uint32_t size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    bool contains(uint32_t i) const { return i >= begin && i < end; }
    bool operator==(const Range&) const = default;
};

// Minimum-granularity weight slice. Units of one layer that share an output
// slice but cover different input rows form an accumulation group; their
// partial sums are reduced on chip, so partition boundaries never split one.
struct PartitionUnit {
    uint32_t uid = 0;
    int layer_id = 0;
    uint32_t layer_index = 0;  // position in DecomposedModel::layers
    Range out_slice;           // output channels
    Range in_block;            // weight-matrix rows
    uint32_t row_tiles = 0;
    uint32_t col_tiles = 0;
    uint32_t crossbars_needed = 0;
    uint64_t weight_bits = 0;
    uint64_t weight_bytes = 0;  // sum over crossbars of ceil(bits / 8)
    uint64_t rows_written = 0;  // crossbar rows written to program the unit
    uint32_t group_id = 0;
};

struct DecomposedLayer {
    int layer_id = 0;
    size_t node_index = 0;  // topological position in the graph
    Range units;
    uint64_t invocations = 0;
    uint32_t out_channels = 0;
    uint64_t pixels = 0;  // output height * width
};

struct DecomposedModel {
    std::vector<PartitionUnit> units;
    std::vector<DecomposedLayer> layers;  // topological order
    std::vector<Range> groups;            // group_id -> uid span

    uint32_t size() const { return static_cast<uint32_t>(units.size()); }
    // Boundary b (0..M) does not cut an accumulation group.
    bool aligned(uint32_t b) const {
        return b == 0 || b == size() || units[b].group_id != units[b - 1].group_id;
    }
    const DecomposedLayer& layer_of(const PartitionUnit& u) const { return layers[u.layer_index]; }
};

// Throws UnmappableLayer if a single output channel or a whole accumulation
// group cannot be placed on the chip.
DecomposedModel decompose(const NetworkGraph& graph, const ChipSpec& chip);

class ValidityMap {
public:
    ValidityMap() = default;
    ValidityMap(std::vector<uint32_t> max_end, std::vector<uint8_t> aligned);

    uint32_t size() const { return static_cast<uint32_t>(max_end_.size()); }
    // Largest group-aligned j such that every aligned prefix [i, j') with
    // j' <= j fits the chip at replication 1.
    uint32_t max_end(uint32_t i) const { return max_end_[i]; }
    bool aligned(uint32_t b) const { return aligned_[b] != 0; }
    bool is_valid(uint32_t i, uint32_t j) const {
        return i < j && j <= size() && aligned(i) && aligned(j) && j <= max_end_[i];
    }
    // Aligned boundary positions in ascending order, including 0 and M.
    const std::vector<uint32_t>& boundaries() const { return boundaries_; }
    // Aligned boundaries b with lo < b <= hi.
    std::pair<size_t, size_t> boundaries_in(uint32_t lo, uint32_t hi) const;

    size_t valid_cells() const;
    bool operator==(const ValidityMap& o) const { return max_end_ == o.max_end_ && aligned_ == o.aligned_; }

private:
    std::vector<uint32_t> max_end_;
    std::vector<uint8_t> aligned_;
    std::vector<uint32_t> boundaries_;
};

// OpenMP over start indices; output is independent of the thread count.
ValidityMap build_validity_map(const DecomposedModel& model, const ChipSpec& chip, int workers = 0);
// Serial reference kept for tests and benchmarks.
ValidityMap build_validity_map_serial(const DecomposedModel& model, const ChipSpec& chip);

// Rows are start positions, columns end positions 0..M, cells 0/1.
void write_validity_csv(const ValidityMap& vmap, std::ostream& out);

}  // namespace compass
