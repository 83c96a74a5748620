#include "compass/report.hpp"

#include <cstdio>
#include <ostream>

namespace compass {

std::string_view compass_version() { return COMPASS_VERSION; }

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json to_json(const EnergyBreakdown& e) {
    return Json{{"mvm_pj", e.mvm_pj},
                {"write_pj", e.write_pj},
                {"dram_pj", e.dram_pj},
                {"static_pj", e.static_pj},
                {"total_pj", e.total()}};
}

Json to_json(const PartitionCost& c) {
    return Json{{"index", c.index},
                {"span", {c.span.begin, c.span.end}},
                {"layers", c.layers},
                {"cores_used", c.cores_used},
                {"write_ns", c.write_ns},
                {"write_ns_effective", c.write_ns_effective},
                {"io_in_ns", c.io_in_ns},
                {"fill_ns", c.fill_ns},
                {"bottleneck_ns", c.bottleneck_ns},
                {"steady_ns", c.steady_ns},
                {"io_out_ns", c.io_out_ns},
                {"drain_ns", c.drain_ns},
                {"latency_ns", c.latency_ns},
                {"energy", to_json(c.energy)},
                {"weight_load_pj", c.weight_load_pj},
                {"fitness", c.fitness},
                {"weight_bits", c.weight_bits},
                {"weight_bytes", c.weight_bytes},
                {"entries", c.entries},
                {"exits", c.exits},
                {"entry_bytes_per_sample", c.entry_bytes_per_sample},
                {"exit_bytes_per_sample", c.exit_bytes_per_sample},
                {"dram_read_bytes", c.dram_read_bytes},
                {"dram_write_bytes", c.dram_write_bytes},
                {"mvm_activations", c.mvm_activations}};
}

Json to_json(const RunReport& r) {
    Json parts = Json::array();
    for (const auto& c : r.partitions) parts.push_back(to_json(c));
    return Json{{"scheme", r.scheme},
                {"network", r.network},
                {"chip", r.chip},
                {"batch", r.options.batch},
                {"objective", to_string(r.options.objective)},
                {"overlap_writes", r.options.overlap_writes},
                {"partition_count", r.partitions.size()},
                {"batch_latency_ns", r.batch_latency_ns},
                {"end_to_end_latency_ns", r.batch_latency_ns},
                {"throughput_sps", r.throughput_sps},
                {"energy", to_json(r.energy)},
                {"energy_per_sample_pj", r.energy_per_sample_pj},
                {"edp_per_sample_pj_ns", r.edp_per_sample_pj_ns},
                {"write_energy_per_sample_pj", r.write_energy_per_sample_pj},
                {"weight_load_energy_per_sample_pj", r.weight_load_energy_per_sample_pj},
                {"write_to_mvm_ratio", r.write_to_mvm_ratio},
                {"dram_read_bytes", r.dram_read_bytes},
                {"dram_write_bytes", r.dram_write_bytes},
                {"dram_io_bytes", r.dram_io_bytes},
                {"pgf", r.pgf},
                {"partitions", std::move(parts)}};
}

namespace {

Json io_json(const std::vector<TensorIo>& ios) {
    Json a = Json::array();
    for (const auto& t : ios)
        a.push_back({{"node", t.node_id}, {"producer_partition", t.producer_partition}, {"bytes_per_sample", t.bytes_per_sample}});
    return a;
}

}  // namespace

Json group_to_json(const PartitionGroup& group) {
    Json parts = Json::array();
    for (const auto& p : group.partitions) {
        Json layers = Json::array();
        for (const auto& lp : p.plan->layers)
            layers.push_back({{"layer_id", lp.layer_id},
                              {"units", {lp.units.begin, lp.units.end}},
                              {"channels", {lp.channels.begin, lp.channels.end}},
                              {"replication", lp.replication},
                              {"crossbars_per_replica", lp.crossbars},
                              {"invocations", lp.invocations},
                              {"stage_ns", lp.stage.total()}});
        Json core_map = Json::array();
        for (const auto& pl : p.core_map)
            core_map.push_back({pl.uid, pl.replica, pl.core, pl.xbar_offset, pl.crossbars});
        parts.push_back({{"index", p.index},
                         {"span", {p.span.begin, p.span.end}},
                         {"layers", std::move(layers)},
                         {"attached_aux", p.attached_aux},
                         {"entries", io_json(p.entries)},
                         {"exits", io_json(p.exits)},
                         {"core_map", std::move(core_map)}});
    }
    return Json{{"units", group.problem().model().size()},
                {"boundaries", group.boundaries()},
                {"core_map_columns", {"uid", "replica", "core", "xbar_offset", "crossbars"}},
                {"partitions", std::move(parts)}};
}

Json ga_to_json(const GaResult& result) {
    Json applied = Json::object();
    for (size_t k = 0; k < result.applied.size(); ++k)
        applied[std::string(to_string(static_cast<MutationKind>(k)))] = result.applied[k];
    return Json{{"generations_run", result.generations_run},
                {"best_pgf", result.best_pgf},
                {"best_per_generation", result.best_per_generation},
                {"mutations_applied", std::move(applied)},
                {"infeasible_mutations", result.infeasible_mutations}};
}

Json schedule_to_json(const Schedule& s, const TraceSummary& trace) {
    Json counts = Json::object();
    for (int op = 0; op <= static_cast<int>(Opcode::Barrier); ++op)
        counts[std::string(to_string(static_cast<Opcode>(op)))] = count(s, static_cast<Opcode>(op));
    return Json{{"instructions", s.instructions.size()},
                {"opcode_counts", std::move(counts)},
                {"global_memory_peak_bytes", s.allocation.peak_bytes},
                {"weight_region_bytes", s.allocation.weight_bytes},
                {"tensors", s.allocation.tensors.size()},
                {"trace_read_bytes", trace.read_bytes},
                {"trace_write_bytes", trace.write_bytes},
                {"trace_lines", trace.lines}};
}

void write_partition_csv(const RunReport& r, std::ostream& out) {
    out << "# compass-partitions v1\n";
    out << "partition,span_begin,span_end,layers,write_ns,io_in_ns,fill_ns,steady_total_ns,io_out_ns,latency_ns,"
           "mvm_pj,write_pj,dram_pj,static_pj,fitness\n";
    char buf[512];
    for (const auto& c : r.partitions) {
        const int n = std::snprintf(buf, sizeof(buf), "%u,%u,%u,%u,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                                    c.index, c.span.begin, c.span.end, c.layers, c.write_ns_effective, c.io_in_ns,
                                    c.fill_ns, (c.batch - 1) * c.steady_ns, c.io_out_ns, c.latency_ns, c.energy.mvm_pj,
                                    c.energy.write_pj, c.energy.dram_pj, c.energy.static_pj, c.fitness);
        out.write(buf, n);
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace compass
