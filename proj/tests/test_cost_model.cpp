#include <doctest.h>

#include <cmath>

#include "compass/cost_model.hpp"
#include "compass/partitioner.hpp"
#include "toy.hpp"

using namespace compass;

namespace {

ChipSpec bare_chip() {
    ChipSpec c = builtin_chip("M");
    c.xbar.mvm_latency_ns = 100;
    return c;
}

}  // namespace

TEST_CASE("stage time examples") {
    const auto c = bare_chip();
    CHECK(stage_time(StageInputs{0, 1024, 1, 0, 0}, c).total() == 102400.0);
    CHECK(stage_time(StageInputs{0, 1024, 4, 0, 0}, c).total() == 25600.0);
    CHECK(stage_time(StageInputs{0, 10, 3, 0, 0}, c).mvm_ns == 400.0);

    const auto t = stage_time(StageInputs{0, 10, 1, 64, 120}, c);
    CHECK(t.acc_ns == 64 / c.bus_bandwidth_bytes_per_ns);
    CHECK(t.vfu_ns == 120 / c.core.vfu_throughput_elems_per_ns);
}

TEST_CASE("stage time is non-increasing in replication") {
    const auto c = bare_chip();
    for (uint64_t inv : {1ull, 7ull, 196ull, 3136ull})
        for (uint32_t r = 1; r < 40; ++r)
            CHECK(stage_time(StageInputs{0, inv, r + 1, 100, 5000}, c).total() <=
                  stage_time(StageInputs{0, inv, r, 100, 5000}, c).total());
}

TEST_CASE("partition cost formulas") {
    const auto p = Problem::create(build_benchmark("resnet18"), builtin_chip("M"));
    const auto g = greedy_group(p);
    const auto& chip = p->chip();
    for (const auto& part : g.partitions) {
        CostOptions o1;
        o1.batch = 1;
        const auto c1 = partition_cost(part, chip, o1);
        CHECK(c1.latency_ns == doctest::Approx(c1.write_ns + c1.io_in_ns + c1.fill_ns + c1.io_out_ns).epsilon(1e-14));

        CostOptions o;
        o.batch = 8;
        const auto c8 = partition_cost(part, chip, o);
        o.batch = 16;
        const auto c16 = partition_cost(part, chip, o);
        CHECK(c16.latency_ns - c8.latency_ns == doctest::Approx(8 * c8.steady_ns).epsilon(1e-12));
        CHECK(c16.latency_ns > c8.latency_ns);
        CHECK(c8.steady_ns == std::max({c8.bottleneck_ns, c8.io_in_ns, c8.io_out_ns}));

        const double w = std::max(static_cast<double>(part.plan->weight_bytes_written) / chip.dram.bandwidth_bytes_per_ns,
                                  static_cast<double>(part.plan->busiest_core_rows) * chip.xbar.row_write_latency_ns);
        CHECK(c16.write_ns == w);
        CHECK(c16.energy.write_pj == static_cast<double>(part.plan->weight_bits_written) * chip.xbar.write_energy_pj_per_bit);
        CHECK(c16.energy.write_pj == c1.energy.write_pj);
        CHECK(c16.dram_read_bytes == part.plan->weight_bytes_written + 16 * part.entry_bytes());
        CHECK(c16.dram_write_bytes == 16 * part.exit_bytes());
        const double io_in = static_cast<double>(part.entry_bytes()) / chip.dram.bandwidth_bytes_per_ns +
                             static_cast<double>(part.entries.size()) * chip.dram.latency_ns;
        CHECK(c16.io_in_ns == io_in);
        CHECK(c16.energy.mvm_pj >= 0);
        CHECK(c16.energy.static_pj == chip.static_power_w * c16.latency_ns * 1e3);
    }
}

TEST_CASE("a partition without io has zero io terms") {
    const auto p = Problem::create(build_benchmark("squeezenet"), builtin_chip("L"));
    auto g = greedy_group(p);
    REQUIRE(g.size() == 1);
    auto part = g.partitions[0];
    part.entries.clear();
    part.exits.clear();
    const auto c = partition_cost(part, p->chip(), CostOptions{});
    CHECK(c.io_in_ns == 0);
    CHECK(c.io_out_ns == 0);
}

TEST_CASE("group report accounting") {
    for (const char* chip : {"S", "M", "L"}) {
        const auto p = Problem::create(build_benchmark("resnet18"), builtin_chip(chip));
        for (const auto& g : {greedy_group(p), layerwise_group(p), generate_random_group(p, 5)}) {
            for (bool overlap : {false, true})
                for (auto obj : {Objective::Latency, Objective::Edp}) {
                    CostOptions o;
                    o.overlap_writes = overlap;
                    o.objective = obj;
                    const auto r = group_cost(g, o);
                    double lat = 0, e = 0, pgf = 0;
                    uint64_t rd = 0, wr = 0;
                    for (const auto& c : r.partitions) {
                        lat += c.latency_ns;
                        e += c.energy.total();
                        pgf += c.fitness;
                        rd += c.dram_read_bytes;
                        wr += c.dram_write_bytes;
                        CHECK(c.fitness == (obj == Objective::Latency ? c.latency_ns : c.latency_ns * c.energy.total()));
                    }
                    CHECK(r.batch_latency_ns == lat);
                    CHECK(r.energy.total() == doctest::Approx(e).epsilon(1e-14));
                    CHECK(r.pgf == pgf);
                    CHECK(r.pgf == partition_group_fitness(g, o));
                    CHECK(r.dram_read_bytes == rd);
                    CHECK(r.dram_write_bytes == wr);
                    CHECK(r.throughput_sps * r.batch_latency_ns / 1e9 >= o.batch * (1 - 1e-12));
                    CHECK(r.edp_per_sample_pj_ns == r.energy_per_sample_pj * r.batch_latency_ns);
                }
        }
    }
}

TEST_CASE("single-partition report equals its partition") {
    const auto p = Problem::create(build_benchmark("squeezenet"), builtin_chip("L"));
    const auto g = greedy_group(p);
    const auto r = group_cost(g, CostOptions{});
    const auto c = partition_cost(g.partitions[0], p->chip(), CostOptions{});
    CHECK(r.batch_latency_ns == c.latency_ns);
    CHECK(r.energy.total() == c.energy.total());
    CHECK(r.pgf == c.fitness);
}

TEST_CASE("batch amortization on every benchmark and chip") {
    for (const auto& name : benchmark_names())
        for (const char* chip : {"S", "M", "L"}) {
            const auto p = Problem::create(build_benchmark(name), builtin_chip(chip));
            const auto g = greedy_group(p);
            CostOptions o;
            o.batch = 1;
            const auto r1 = group_cost(g, o);
            double prev_thr = 0, prev_lat = 0;
            for (uint32_t b : {1u, 2u, 4u, 8u, 16u, 32u}) {
                o.batch = b;
                const auto r = group_cost(g, o);
                CHECK(std::abs(r.write_energy_per_sample_pj * b / r1.write_energy_per_sample_pj - 1) < 1e-12);
                CHECK(r.throughput_sps >= prev_thr);
                CHECK(r.batch_latency_ns > prev_lat);
                prev_thr = r.throughput_sps;
                prev_lat = r.batch_latency_ns;
            }
        }
}

TEST_CASE("overlapping writes never increases latency") {
    for (const auto& name : benchmark_names()) {
        const auto p = Problem::create(build_benchmark(name), builtin_chip("S"));
        for (const auto& g : {greedy_group(p), layerwise_group(p)}) {
            CostOptions seq, ovl;
            ovl.overlap_writes = true;
            const auto a = group_cost(g, seq), b = group_cost(g, ovl);
            CHECK(b.batch_latency_ns <= a.batch_latency_ns);
            for (size_t k = 0; k < a.partitions.size(); ++k)
                CHECK(b.partitions[k].latency_ns <= a.partitions[k].latency_ns);
        }
    }
}

TEST_CASE("layerwise moves more activations through DRAM than greedy on resnet18-M-16") {
    const auto p = Problem::create(build_benchmark("resnet18"), builtin_chip("M"));
    CostOptions o;
    CHECK(group_cost(layerwise_group(p), o).dram_io_bytes > group_cost(greedy_group(p), o).dram_io_bytes);
}

TEST_CASE("objective parsing") {
    CHECK(parse_objective("edp") == Objective::Edp);
    CHECK(parse_objective("latency") == Objective::Latency);
    CHECK_THROWS(parse_objective("speed"));
}
