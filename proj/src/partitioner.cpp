#include "compass/partitioner.hpp"

#include <algorithm>
#include <set>

#include "compass/error.hpp"
#include "compass/packing.hpp"

namespace compass {

namespace {

uint64_t span_key(Range r) { return (uint64_t{r.begin} << 32) | r.end; }

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Instance list in (group, replica, uid) order; FFD then sorts by size only,
// so siblings of one accumulation group stay adjacent among equal sizes.
struct Instances {
    std::vector<PackItem> items;
    std::vector<Placement> placements;
};

Instances list_instances(const Problem& problem, const SpanPlan& plan) {
    const auto& model = problem.model();
    Instances out;
    for (const auto& lp : plan.layers) {
        uint32_t u = lp.units.begin;
        while (u < lp.units.end) {
            const Range g = model.groups[model.units[u].group_id];
            const uint32_t g_end = std::min(g.end, lp.units.end);
            for (uint32_t rep = 0; rep < lp.replication; ++rep)
                for (uint32_t v = u; v < g_end; ++v) {
                    out.items.push_back({model.units[v].crossbars_needed, out.items.size()});
                    out.placements.push_back({v, rep, 0, 0, model.units[v].crossbars_needed});
                }
            u = g_end;
        }
    }
    return out;
}

// Fills core/offset fields; throws PackingFailure if the instances do not fit.
std::vector<Placement> pack_instances(const Problem& problem, const SpanPlan& plan, std::vector<uint32_t>* bin_rows) {
    const auto& chip = problem.chip();
    auto inst = list_instances(problem, plan);
    auto packed = ffd_pack(inst.items, chip.num_cores, chip.core.crossbars_per_core);
    if (!packed.ok)
        throw PackingFailure("span [" + std::to_string(plan.span.begin) + "," + std::to_string(plan.span.end) +
                             ") does not pack at its replication counts");
    if (bin_rows) bin_rows->assign(packed.bin_load.size(), 0);
    for (size_t i = 0; i < inst.placements.size(); ++i) {
        inst.placements[i].core = packed.bin_of[i];
        inst.placements[i].xbar_offset = packed.offset_of[i];
        if (bin_rows) (*bin_rows)[packed.bin_of[i]] += problem.model().units[inst.placements[i].uid].rows_written;
    }
    return std::move(inst.placements);
}

StageInputs stage_inputs(const LayerPart& lp) {
    return {lp.layer_id, lp.invocations, lp.replication, lp.acc_bytes, lp.out_elements};
}

}  // namespace

const LayerPart* SpanPlan::find(int layer_id) const {
    for (const auto& lp : layers)
        if (lp.layer_id == layer_id) return &lp;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Problem

Problem::Problem(NetworkGraph graph, ChipSpec chip, PartitionOptions opts, int workers)
    : graph_(std::move(graph)), chip_(std::move(chip)), opts_(opts) {
    validate(chip_);
    if (opts_.activation_bits == 0) throw ValidationError("activation_bits", "must be >= 1");
    model_ = decompose(graph_, chip_);
    if (model_.size() == 0) throw UnmappableLayer("network has no Conv/Linear layers");
    vmap_ = build_validity_map(model_, chip_, workers);
}

std::shared_ptr<const Problem> Problem::create(NetworkGraph graph, ChipSpec chip, PartitionOptions opts, int workers) {
    return std::make_shared<const Problem>(std::move(graph), std::move(chip), opts, workers);
}

std::shared_ptr<const SpanPlan> Problem::plan(Range span) const {
    const uint64_t key = span_key(span);
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto computed = std::make_shared<const SpanPlan>(allocate_replication(*this, span));
    std::lock_guard lock(cache_mutex_);
    return cache_.emplace(key, std::move(computed)).first->second;
}

uint64_t Problem::tensor_bytes(size_t node_index, uint32_t channels) const {
    const auto& s = graph_.nodes()[node_index].out_shape;
    return ceil_div(uint64_t{channels} * s.height * s.width * opts_.activation_bits, 8);
}

uint64_t Problem::input_bytes() const { return ceil_div(graph_.input_shape().elements() * opts_.activation_bits, 8); }

// ---------------------------------------------------------------------------
// Partition / group accessors

uint32_t Partition::replication(int layer_id) const {
    const auto* lp = plan ? plan->find(layer_id) : nullptr;
    return lp ? lp->replication : 0;
}

uint64_t Partition::entry_bytes() const {
    uint64_t n = 0;
    for (const auto& e : entries) n += e.bytes_per_sample;
    return n;
}

uint64_t Partition::exit_bytes() const {
    uint64_t n = 0;
    for (const auto& e : exits) n += e.bytes_per_sample;
    return n;
}

std::vector<uint32_t> PartitionGroup::boundaries() const {
    std::vector<uint32_t> b;
    b.reserve(partitions.size() + 1);
    for (const auto& p : partitions) b.push_back(p.span.begin);
    b.push_back(partitions.empty() ? 0 : partitions.back().span.end);
    return b;
}

// ---------------------------------------------------------------------------
// Replication and core mapping

SpanPlan allocate_replication(const Problem& problem, Range span) {
    const auto& model = problem.model();
    const auto& chip = problem.chip();
    const uint32_t per_core = chip.core.crossbars_per_core;

    SpanPlan plan;
    plan.span = span;
    std::vector<std::vector<uint32_t>> hist;  // per layer part: size -> count
    for (uint32_t u = span.begin; u < span.end;) {
        const auto& layer = model.layers[model.units[u].layer_index];
        const uint32_t end = std::min(span.end, layer.units.end);
        LayerPart lp;
        lp.layer_id = layer.layer_id;
        lp.layer_index = model.units[u].layer_index;
        lp.units = {u, end};
        lp.channels = {model.units[u].out_slice.begin, model.units[end - 1].out_slice.end};
        lp.invocations = layer.invocations;
        lp.out_elements = uint64_t{lp.channels.size()} * layer.pixels;
        auto& h = hist.emplace_back(per_core + 1, 0u);
        for (uint32_t v = u; v < end; ++v) {
            const auto& unit = model.units[v];
            lp.crossbars += unit.crossbars_needed;
            lp.weight_bits += unit.weight_bits;
            lp.weight_bytes += unit.weight_bytes;
            ++h[unit.crossbars_needed];
        }
        for (uint32_t v = u; v < end;) {
            const Range g = model.groups[model.units[v].group_id];
            const uint32_t fanin = g.end - g.begin;
            if (fanin > 1)
                lp.acc_bytes += static_cast<double>(fanin) *
                                static_cast<double>(problem.tensor_bytes(layer.node_index, model.units[v].out_slice.size()));
            v = g.end;
        }
        plan.layers.push_back(lp);
        u = end;
    }

    std::vector<uint32_t> counts(per_core + 1, 0);
    uint64_t used = 0;
    for (size_t l = 0; l < plan.layers.size(); ++l) {
        for (uint32_t s = 1; s <= per_core; ++s) counts[s] += hist[l][s];
        used += plan.layers[l].crossbars;
    }
    for (auto& lp : plan.layers) lp.stage = stage_time(stage_inputs(lp), chip);

    // Grow the bottleneck stage until its next useful replica no longer packs.
    for (;;) {
        size_t worst = 0;
        for (size_t l = 1; l < plan.layers.size(); ++l) {
            const double t = plan.layers[l].stage.total(), tw = plan.layers[worst].stage.total();
            if (t > tw || (t == tw && plan.layers[l].layer_id < plan.layers[worst].layer_id)) worst = l;
        }
        auto& lp = plan.layers[worst];
        const uint64_t slots = ceil_div(lp.invocations, lp.replication);
        if (slots <= 1) break;
        const auto next_r = static_cast<uint32_t>(ceil_div(lp.invocations, slots - 1));
        const uint32_t extra = next_r - lp.replication;
        const uint64_t next_used = used + uint64_t{extra} * lp.crossbars;
        if (next_used > chip.chip_crossbars()) break;
        std::vector<uint32_t> trial = counts;
        for (uint32_t s = 1; s <= per_core; ++s) trial[s] += extra * hist[worst][s];
        if (!ffd_fits(trial, chip.num_cores, per_core)) break;
        counts = std::move(trial);
        used = next_used;
        lp.replication = next_r;
        lp.stage = stage_time(stage_inputs(lp), chip);
    }

    for (const auto& lp : plan.layers) {
        plan.weight_bits_written += uint64_t{lp.replication} * lp.weight_bits;
        plan.weight_bytes_written += uint64_t{lp.replication} * lp.weight_bytes;
        plan.instance_crossbars += uint64_t{lp.replication} * lp.crossbars;
    }
    std::vector<uint32_t> rows;
    pack_instances(problem, plan, &rows);
    plan.cores_used = static_cast<uint32_t>(rows.size());
    for (auto r : rows) plan.busiest_core_rows = std::max<uint64_t>(plan.busiest_core_rows, r);
    return plan;
}

void map_cores(Partition& partition, const Problem& problem) {
    partition.core_map = pack_instances(problem, *partition.plan, nullptr);
}

// ---------------------------------------------------------------------------
// Aux attachment and io markers

namespace {

struct NodeSlice {
    uint32_t partition = 0;
    uint32_t channels = 0;
};

uint32_t partition_of(const std::vector<uint32_t>& bounds, uint32_t uid) {
    return static_cast<uint32_t>(std::upper_bound(bounds.begin(), bounds.end(), uid) - bounds.begin()) - 1;
}

// Where each node's output is produced: Conv/Linear per partition slice,
// everything else in one partition next to its latest crossbar ancestor.
std::vector<std::vector<NodeSlice>> place_nodes(const PartitionGroup& group) {
    const auto& problem = group.problem();
    const auto& graph = problem.graph();
    const auto& model = problem.model();
    const auto bounds = group.boundaries();

    std::vector<int> layer_of_node(graph.size(), -1);
    for (uint32_t l = 0; l < model.layers.size(); ++l) layer_of_node[model.layers[l].node_index] = static_cast<int>(l);

    std::vector<std::vector<NodeSlice>> slices(graph.size());
    for (size_t n = 0; n < graph.size(); ++n) {
        const auto& node = graph.nodes()[n];
        if (layer_of_node[n] >= 0) {
            const Range units = model.layers[layer_of_node[n]].units;
            for (uint32_t p = partition_of(bounds, units.begin); p < group.size() && bounds[p] < units.end; ++p) {
                const uint32_t a = std::max(units.begin, bounds[p]);
                const uint32_t b = std::min(units.end, bounds[p + 1]);
                slices[n].push_back({p, model.units[b - 1].out_slice.end - model.units[a].out_slice.begin});
            }
        } else {
            uint32_t home = 0;
            for (size_t prod : graph.producers()[n]) home = std::max(home, slices[prod].back().partition);
            slices[n].push_back({home, node.out_shape.channels});
        }
    }
    return slices;
}

}  // namespace

void attach_aux_layers(PartitionGroup& group) {
    const auto& graph = group.problem().graph();
    const auto slices = place_nodes(group);
    for (auto& p : group.partitions) p.attached_aux.clear();
    for (size_t n = 0; n < graph.size(); ++n)
        if (!is_crossbar_kind(graph.nodes()[n].kind))
            group.partitions[slices[n].front().partition].attached_aux.push_back(graph.nodes()[n].id);
}

void mark_io(PartitionGroup& group) {
    const auto& problem = group.problem();
    const auto& graph = problem.graph();
    const auto slices = place_nodes(group);
    std::vector<std::set<TensorIo>> entries(group.size()), exits(group.size());

    for (size_t v = 0; v < graph.size(); ++v) {
        if (graph.producers()[v].empty())
            for (const auto& q : slices[v])
                entries[q.partition].insert({-1, -1, problem.input_bytes()});
        for (size_t u : graph.producers()[v]) {
            for (const auto& p : slices[u]) {
                const TensorIo t{graph.nodes()[u].id, static_cast<int>(p.partition), problem.tensor_bytes(u, p.channels)};
                for (const auto& q : slices[v]) {
                    if (q.partition == p.partition) continue;
                    exits[p.partition].insert(t);
                    entries[q.partition].insert(t);
                }
            }
        }
        if (graph.consumers()[v].empty())
            for (const auto& p : slices[v])
                exits[p.partition].insert(
                    {graph.nodes()[v].id, static_cast<int>(p.partition), problem.tensor_bytes(v, p.channels)});
    }
    for (size_t k = 0; k < group.size(); ++k) {
        group.partitions[k].entries.assign(entries[k].begin(), entries[k].end());
        group.partitions[k].exits.assign(exits[k].begin(), exits[k].end());
    }
}

void finalize(PartitionGroup& group, bool with_core_map) {
    const auto& problem = group.problem();
    for (uint32_t k = 0; k < group.size(); ++k) {
        auto& p = group.partitions[k];
        p.index = k;
        if (!p.plan || !(p.plan->span == p.span)) p.plan = problem.plan(p.span);
        p.core_map.clear();
        if (with_core_map) map_cores(p, problem);
    }
    attach_aux_layers(group);
    mark_io(group);
}

PartitionGroup make_group(std::shared_ptr<const Problem> problem, const std::vector<uint32_t>& boundaries,
                          bool with_core_map) {
    PartitionGroup group(std::move(problem));
    for (size_t k = 0; k + 1 < boundaries.size(); ++k) {
        Partition p;
        p.span = {boundaries[k], boundaries[k + 1]};
        group.partitions.push_back(std::move(p));
    }
    finalize(group, with_core_map);
    return group;
}

// ---------------------------------------------------------------------------
// Generators

void random_boundaries(const ValidityMap& vmap, uint32_t from, uint32_t to, Rng& rng, std::vector<uint32_t>& out) {
    for (uint32_t s = from; s < to;) {
        const uint32_t hi = std::min(vmap.max_end(s), to);
        const auto [a, b] = vmap.boundaries_in(s, hi);
        s = vmap.boundaries()[a + rng.index(b - a)];
        out.push_back(s);
    }
}

PartitionGroup generate_random_group(std::shared_ptr<const Problem> problem, Rng& rng) {
    std::vector<uint32_t> b{0};
    random_boundaries(problem->vmap(), 0, problem->model().size(), rng, b);
    return make_group(std::move(problem), b);
}

PartitionGroup generate_random_group(std::shared_ptr<const Problem> problem, uint64_t seed) {
    Rng rng(seed);
    return generate_random_group(std::move(problem), rng);
}

PartitionGroup greedy_group(std::shared_ptr<const Problem> problem) {
    const auto& vmap = problem->vmap();
    std::vector<uint32_t> b{0};
    for (uint32_t s = 0; s < vmap.size(); s = vmap.max_end(s)) b.push_back(vmap.max_end(s));
    return make_group(std::move(problem), b);
}

PartitionGroup layerwise_group(std::shared_ptr<const Problem> problem) {
    const auto& vmap = problem->vmap();
    std::vector<uint32_t> b{0};
    for (const auto& layer : problem->model().layers) {
        // Layers larger than the chip fall back to greedy cuts inside the layer.
        for (uint32_t s = layer.units.begin; s < layer.units.end;) {
            s = std::min(vmap.max_end(s), layer.units.end);
            b.push_back(s);
        }
    }
    return make_group(std::move(problem), b);
}

// ---------------------------------------------------------------------------
// Invariant checker

std::vector<std::string> check_group(const PartitionGroup& group) {
    std::vector<std::string> bad;
    auto fail = [&](uint32_t k, const std::string& what) { bad.push_back("P" + std::to_string(k) + ": " + what); };
    const auto& problem = group.problem();
    const auto& model = problem.model();
    const auto& chip = problem.chip();
    const auto& graph = problem.graph();
    const uint32_t per_core = chip.core.crossbars_per_core;

    if (group.partitions.empty()) return {"group has no partitions"};
    uint32_t expect_begin = 0;
    for (uint32_t k = 0; k < group.size(); ++k) {
        const auto& p = group.partitions[k];
        if (p.index != k) fail(k, "index out of order");
        if (p.span.begin != expect_begin) fail(k, "spans are not contiguous");
        if (p.span.empty()) fail(k, "empty span");
        expect_begin = p.span.end;
        if (!problem.vmap().is_valid(p.span.begin, p.span.end)) fail(k, "span not valid per validity map");
        if (!p.plan || !(p.plan->span == p.span)) {
            fail(k, "missing or stale plan");
            continue;
        }

        // Condition 1 and 2: unit size and one replication count per layer.
        std::vector<uint32_t> counts(per_core + 1, 0);
        uint64_t used = 0;
        uint64_t instances = 0;
        uint32_t covered = p.span.begin;
        for (const auto& lp : p.plan->layers) {
            if (lp.units.begin != covered) fail(k, "layer parts do not tile the span");
            covered = lp.units.end;
            if (lp.replication < 1) fail(k, "replication < 1");
            instances += uint64_t{lp.replication} * lp.units.size();
            for (uint32_t v = lp.units.begin; v < lp.units.end; ++v) {
                const auto& u = model.units[v];
                if (u.layer_id != lp.layer_id) fail(k, "unit attributed to the wrong layer");
                if (u.crossbars_needed > per_core) fail(k, "unit larger than one core");
                if (u.crossbars_needed <= per_core) counts[u.crossbars_needed] += lp.replication;
                used += uint64_t{lp.replication} * u.crossbars_needed;
            }
        }
        if (covered != p.span.end) fail(k, "layer parts do not cover the span");
        // Condition 3: replicated footprint fits and packs.
        if (used > chip.chip_crossbars()) fail(k, "replicated footprint exceeds the chip");
        if (!ffd_fits(counts, chip.num_cores, per_core)) fail(k, "replicated units do not pack into cores");

        if (!p.core_map.empty()) {
            std::vector<uint64_t> occupancy(chip.num_cores, 0);
            std::set<std::pair<uint32_t, uint32_t>> seen;
            for (const auto& pl : p.core_map) {
                if (pl.core >= chip.num_cores || pl.xbar_offset + pl.crossbars > per_core)
                    fail(k, "placement outside a core");
                else
                    occupancy[pl.core] += pl.crossbars;
                if (!seen.emplace(pl.uid, pl.replica).second) fail(k, "unit instance placed twice");
                if (!p.span.contains(pl.uid)) fail(k, "placement of a unit outside the span");
            }
            for (auto o : occupancy)
                if (o > per_core) fail(k, "core over capacity");
            if (seen.size() != instances) fail(k, "core map does not place every unit instance");
        }
    }
    if (expect_begin != model.size()) bad.push_back("partitions do not cover all units");
    if (!bad.empty()) return bad;

    // Every non-crossbar node attached exactly once.
    std::vector<int> attached(graph.size(), 0);
    for (const auto& p : group.partitions)
        for (int id : p.attached_aux) ++attached[graph.index_of(id)];
    for (size_t n = 0; n < graph.size(); ++n) {
        const bool aux = !is_crossbar_kind(graph.nodes()[n].kind);
        if (aux && attached[n] != 1) bad.push_back("node " + graph.nodes()[n].name + " attached " +
                                                   std::to_string(attached[n]) + " times");
        if (!aux && attached[n] != 0) bad.push_back("crossbar node " + graph.nodes()[n].name + " attached as aux");
    }

    // Recompute where every node executes straight from the unit spans.
    std::vector<std::vector<std::pair<uint32_t, uint32_t>>> where(graph.size());  // (partition, channels)
    std::vector<uint32_t> part_of_uid(model.size());
    for (const auto& p : group.partitions)
        for (uint32_t v = p.span.begin; v < p.span.end; ++v) part_of_uid[v] = p.index;
    for (const auto& layer : model.layers) {
        std::vector<std::pair<uint32_t, uint32_t>> s;
        for (uint32_t v = layer.units.begin; v < layer.units.end; ++v) {
            const auto& u = model.units[v];
            if (u.in_block.begin != 0) continue;  // count each output slice once
            if (!s.empty() && s.back().first == part_of_uid[v]) s.back().second += u.out_slice.size();
            else s.emplace_back(part_of_uid[v], u.out_slice.size());
        }
        where[layer.node_index] = std::move(s);
    }
    for (const auto& p : group.partitions)
        for (int id : p.attached_aux) where[graph.index_of(id)] = {{p.index, graph.node(id).out_shape.channels}};

    // Every producer must be resident no later than its consumers.
    for (size_t v = 0; v < graph.size(); ++v)
        for (size_t u : graph.producers()[v])
            if (where[u].back().first > where[v].front().first)
                bad.push_back("node " + graph.nodes()[v].name + " runs before its producer " + graph.nodes()[u].name);

    std::vector<std::set<TensorIo>> want_in(group.size()), want_out(group.size());
    for (size_t v = 0; v < graph.size(); ++v) {
        if (graph.producers()[v].empty())
            for (auto [q, c] : where[v]) want_in[q].insert({-1, -1, problem.input_bytes()});
        for (size_t u : graph.producers()[v])
            for (auto [p, c] : where[u])
                for (auto [q, c2] : where[v])
                    if (p != q) {
                        TensorIo t{graph.nodes()[u].id, static_cast<int>(p), problem.tensor_bytes(u, c)};
                        want_out[p].insert(t);
                        want_in[q].insert(t);
                    }
        if (graph.consumers()[v].empty())
            for (auto [p, c] : where[v])
                want_out[p].insert({graph.nodes()[v].id, static_cast<int>(p), problem.tensor_bytes(v, c)});
    }
    for (const auto& p : group.partitions) {
        std::set<TensorIo> in(p.entries.begin(), p.entries.end()), out(p.exits.begin(), p.exits.end());
        if (in != want_in[p.index]) fail(p.index, "entry markers do not match the DAG cut");
        if (out != want_out[p.index]) fail(p.index, "exit markers do not match the DAG cut");
        for (const auto& e : p.entries)
            if (e.producer_partition >= static_cast<int>(p.index)) fail(p.index, "loads a tensor not yet stored");
    }

    // Stored bytes cover every distinct tensor later partitions load from k.
    for (const auto& p : group.partitions) {
        std::set<TensorIo> loaded;
        for (const auto& q : group.partitions)
            for (const auto& e : q.entries)
                if (e.producer_partition == static_cast<int>(p.index)) loaded.insert(e);
        uint64_t loaded_bytes = 0;
        for (const auto& e : loaded) loaded_bytes += e.bytes_per_sample;
        if (p.exit_bytes() < loaded_bytes) fail(p.index, "stores fewer bytes than later partitions load");
        for (const auto& e : loaded)
            if (std::find(p.exits.begin(), p.exits.end(), e) == p.exits.end())
                fail(p.index, "a loaded tensor is never stored");
    }
    return bad;
}

}  // namespace compass
