#include "compass/decomposer.hpp"

#include <algorithm>
#include <ostream>

#include "compass/error.hpp"
#include "compass/packing.hpp"
#include "compass/parallel.hpp"

namespace compass {

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

struct TileGeometry {
    uint64_t rows = 0;            // weight-matrix rows
    uint32_t channels = 0;        // output channels
    uint32_t weight_bits = 0;
    uint32_t xbar_rows = 0;
    uint32_t chans_per_tile = 0;  // output channels held by one crossbar

    uint64_t rows_in_tile(uint64_t rt) const { return std::min<uint64_t>(xbar_rows, rows - rt * xbar_rows); }
    uint64_t chans_in_tile(uint64_t ct) const {
        return std::min<uint64_t>(chans_per_tile, channels - ct * chans_per_tile);
    }
};

PartitionUnit make_unit(const TileGeometry& g, uint64_t rt0, uint64_t rt1, uint64_t ct0, uint64_t ct1) {
    PartitionUnit u;
    u.in_block = {static_cast<uint32_t>(rt0 * g.xbar_rows),
                  static_cast<uint32_t>(std::min<uint64_t>(g.rows, rt1 * g.xbar_rows))};
    u.out_slice = {static_cast<uint32_t>(ct0 * g.chans_per_tile),
                   static_cast<uint32_t>(std::min<uint64_t>(g.channels, ct1 * g.chans_per_tile))};
    u.row_tiles = static_cast<uint32_t>(rt1 - rt0);
    u.col_tiles = static_cast<uint32_t>(ct1 - ct0);
    u.crossbars_needed = u.row_tiles * u.col_tiles;
    u.weight_bits = uint64_t{u.in_block.size()} * u.out_slice.size() * g.weight_bits;
    for (uint64_t rt = rt0; rt < rt1; ++rt)
        for (uint64_t ct = ct0; ct < ct1; ++ct)
            u.weight_bytes += ceil_div(g.rows_in_tile(rt) * g.chans_in_tile(ct) * g.weight_bits, 8);
    u.rows_written = uint64_t{u.in_block.size()} * u.col_tiles;
    return u;
}

}  // namespace

DecomposedModel decompose(const NetworkGraph& graph, const ChipSpec& chip) {
    DecomposedModel model;
    const uint32_t per_core = chip.core.crossbars_per_core;
    for (size_t ni = 0; ni < graph.size(); ++ni) {
        const auto& node = graph.nodes()[ni];
        if (!is_crossbar_kind(node.kind)) continue;

        const auto stats = layer_stats(graph, node.id, chip.xbar.cell_bits);
        const uint32_t cells_per_weight = static_cast<uint32_t>(ceil_div(node.weight_bits, chip.xbar.cell_bits));
        if (cells_per_weight > chip.xbar.cols)
            throw UnmappableLayer("layer " + node.name + ": one weight needs " + std::to_string(cells_per_weight) +
                                  " cells but a crossbar row has " + std::to_string(chip.xbar.cols));

        TileGeometry g;
        g.rows = stats.rows;
        g.channels = node.cout;
        g.weight_bits = node.weight_bits;
        g.xbar_rows = chip.xbar.rows;
        g.chans_per_tile = chip.xbar.cols / cells_per_weight;
        const uint64_t row_tiles = ceil_div(g.rows, g.xbar_rows);
        const uint64_t col_tiles = ceil_div(g.channels, g.chans_per_tile);

        DecomposedLayer layer;
        layer.layer_id = node.id;
        layer.node_index = ni;
        layer.invocations = stats.mvm_invocations_per_sample;
        layer.out_channels = node.cout;
        layer.pixels = uint64_t{node.out_shape.height} * node.out_shape.width;
        layer.units.begin = model.size();
        const auto layer_index = static_cast<uint32_t>(model.layers.size());

        auto push = [&](PartitionUnit u) {
            u.uid = model.size();
            u.layer_id = node.id;
            u.layer_index = layer_index;
            u.group_id = static_cast<uint32_t>(model.groups.size() - 1);
            model.groups.back().end = u.uid + 1;
            model.units.push_back(u);
        };

        if (row_tiles <= per_core) {
            // Whole input rows fit one core: widest output slice that fits.
            const uint64_t tiles_per_unit = per_core / row_tiles;
            for (uint64_t ct = 0; ct < col_tiles; ct += tiles_per_unit) {
                model.groups.push_back({model.size(), model.size()});
                push(make_unit(g, 0, row_tiles, ct, std::min(col_tiles, ct + tiles_per_unit)));
            }
        } else {
            // One crossbar column per slice, input rows split into core-sized blocks.
            const uint64_t group_xbars = row_tiles;
            if (group_xbars > chip.chip_crossbars())
                throw UnmappableLayer("layer " + node.name + ": one output slice needs " + std::to_string(group_xbars) +
                                      " crossbars, chip has " + std::to_string(chip.chip_crossbars()));
            for (uint64_t ct = 0; ct < col_tiles; ++ct) {
                model.groups.push_back({model.size(), model.size()});
                for (uint64_t rt = 0; rt < row_tiles; rt += per_core)
                    push(make_unit(g, rt, std::min(row_tiles, rt + per_core), ct, ct + 1));
            }
        }
        layer.units.end = model.size();
        model.layers.push_back(layer);
    }
    return model;
}

// ---------------------------------------------------------------------------

ValidityMap::ValidityMap(std::vector<uint32_t> max_end, std::vector<uint8_t> aligned)
    : max_end_(std::move(max_end)), aligned_(std::move(aligned)) {
    for (uint32_t b = 0; b < aligned_.size(); ++b)
        if (aligned_[b]) boundaries_.push_back(b);
}

std::pair<size_t, size_t> ValidityMap::boundaries_in(uint32_t lo, uint32_t hi) const {
    auto first = std::upper_bound(boundaries_.begin(), boundaries_.end(), lo);
    auto last = std::upper_bound(boundaries_.begin(), boundaries_.end(), hi);
    return {static_cast<size_t>(first - boundaries_.begin()), static_cast<size_t>(last - boundaries_.begin())};
}

size_t ValidityMap::valid_cells() const {
    size_t n = 0;
    for (uint32_t i = 0; i < size(); ++i) {
        if (!aligned(i)) continue;
        auto [a, b] = boundaries_in(i, max_end_[i]);
        n += b - a;
    }
    return n;
}

namespace {

uint32_t scan_max_end(const DecomposedModel& model, const ChipSpec& chip, uint32_t start,
                      std::vector<uint32_t>& counts) {
    const uint32_t per_core = chip.core.crossbars_per_core;
    const uint64_t capacity = chip.chip_crossbars();
    std::fill(counts.begin(), counts.end(), 0u);
    uint64_t used = 0;
    uint32_t best = start;
    for (uint32_t j = start; j < model.size(); ++j) {
        const uint32_t x = model.units[j].crossbars_needed;
        used += x;
        if (used > capacity) break;
        ++counts[x];
        if (!model.aligned(j + 1)) continue;
        if (!ffd_fits(counts, chip.num_cores, per_core)) break;
        best = j + 1;
    }
    return best;
}

std::vector<uint8_t> aligned_flags(const DecomposedModel& model) {
    std::vector<uint8_t> flags(model.size() + 1);
    for (uint32_t b = 0; b <= model.size(); ++b) flags[b] = model.aligned(b) ? 1 : 0;
    return flags;
}

void check_progress(const DecomposedModel& model, const std::vector<uint32_t>& max_end) {
    for (uint32_t i = 0; i < max_end.size(); ++i)
        if (max_end[i] <= i)
            throw UnmappableLayer("partition unit " + std::to_string(i) + " (layer " +
                                  std::to_string(model.units[i].layer_id) + ") cannot be placed on the chip");
}

}  // namespace

ValidityMap build_validity_map_serial(const DecomposedModel& model, const ChipSpec& chip) {
    std::vector<uint32_t> max_end(model.size());
    std::vector<uint32_t> counts(chip.core.crossbars_per_core + 1);
    for (uint32_t i = 0; i < model.size(); ++i) max_end[i] = scan_max_end(model, chip, i, counts);
    check_progress(model, max_end);
    return ValidityMap(std::move(max_end), aligned_flags(model));
}

ValidityMap build_validity_map(const DecomposedModel& model, const ChipSpec& chip, int workers) {
    std::vector<uint32_t> max_end(model.size());
    const auto n = static_cast<int64_t>(model.size());
    const int threads = resolve_workers(workers);
#pragma omp parallel num_threads(threads)
    {
        std::vector<uint32_t> counts(chip.core.crossbars_per_core + 1);
#pragma omp for schedule(dynamic, 16)
        for (int64_t i = 0; i < n; ++i)
            max_end[i] = scan_max_end(model, chip, static_cast<uint32_t>(i), counts);
    }
    check_progress(model, max_end);
    return ValidityMap(std::move(max_end), aligned_flags(model));
}

void write_validity_csv(const ValidityMap& vmap, std::ostream& out) {
    const uint32_t m = vmap.size();
    out << "start";
    for (uint32_t j = 0; j <= m; ++j) out << ',' << j;
    out << '\n';
    for (uint32_t i = 0; i < m; ++i) {
        out << i;
        for (uint32_t j = 0; j <= m; ++j) out << ',' << (vmap.is_valid(i, j) ? '1' : '0');
        out << '\n';
    }
}

}  // namespace compass
