#include <doctest.h>

#include <sstream>

#include "compass/decomposer.hpp"
#include "compass/error.hpp"
#include "toy.hpp"

using namespace compass;

TEST_CASE("conv 512->512 3x3 on chip M tiles into 8 groups of 16+2 crossbars") {
    NetworkGraph g("t", {512, 14, 14}, {toy::conv(0, {}, 512, 512)});
    const auto m = decompose(g, builtin_chip("M"));
    REQUIRE(m.size() == 16);
    CHECK(m.groups.size() == 8);
    uint32_t total = 0;
    for (uint32_t u = 0; u < m.size(); ++u) {
        CHECK(m.units[u].crossbars_needed == (u % 2 == 0 ? 16u : 2u));
        CHECK(m.units[u].out_slice.size() == 64);
        total += m.units[u].crossbars_needed;
    }
    CHECK(total == 144);
}

TEST_CASE("VGG16 fc1 on chip S needs 11 units per 64-channel group") {
    const auto g = toy::linear_chain({25088, 4096});
    const auto c = builtin_chip("S");
    const auto m = decompose(g, c);
    CHECK(m.groups.size() == 4096 / 64);
    const Range g0 = m.groups[0];
    REQUIRE(g0.size() == 11);
    uint32_t xbars = 0;
    for (uint32_t u = g0.begin; u < g0.end; ++u) {
        CHECK(m.units[u].crossbars_needed == (u + 1 < g0.end ? 9u : 8u));
        xbars += m.units[u].crossbars_needed;
    }
    CHECK(xbars == 98);
    CHECK(xbars <= c.chip_crossbars());
}

TEST_CASE("conv 3->8 1x1 on chip S is one unit on one crossbar") {
    NetworkGraph g("t", {3, 8, 8}, {toy::conv(0, {}, 3, 8, 1)});
    const auto m = decompose(g, builtin_chip("S"));
    REQUIRE(m.size() == 1);
    CHECK(m.units[0].crossbars_needed == 1);
}

TEST_CASE("unit invariants on the benchmarks") {
    for (const auto& name : benchmark_names())
        for (const char* chip : {"S", "M", "L"}) {
            const auto c = builtin_chip(chip);
            const auto g = build_benchmark(name);
            const auto m = decompose(g, c);
            uint32_t next = 0;
            uint64_t bits = 0;
            for (const auto& layer : m.layers) {
                CHECK(layer.units.begin == next);
                next = layer.units.end;
                bits += layer_stats(g, layer.layer_id).weight_bits;
            }
            CHECK(next == m.size());
            uint64_t unit_bits = 0;
            for (uint32_t u = 0; u < m.size(); ++u) {
                const auto& x = m.units[u];
                CHECK(x.uid == u);
                CHECK(x.crossbars_needed >= 1);
                CHECK(x.crossbars_needed <= c.core.crossbars_per_core);
                CHECK(!x.out_slice.empty());
                CHECK(!x.in_block.empty());
                unit_bits += x.weight_bits;
            }
            CHECK(unit_bits == bits);
        }
}

TEST_CASE("one weight wider than a crossbar row is unmappable") {
    auto g = toy::linear_chain({4, 4});
    auto c = toy::chip(8, 2, 2, 2);  // 4-bit weights need 4 cells
    CHECK_THROWS_AS(decompose(g, c), UnmappableLayer);
}

TEST_CASE("four one-core units on a two-core chip: valid spans have length <= 2") {
    const auto g = toy::linear_chain({16, 8, 8, 8, 8});
    const auto c = toy::chip(16, 16, 2, 2);
    const auto m = decompose(g, c);
    REQUIRE(m.size() == 4);
    for (const auto& u : m.units) CHECK(u.crossbars_needed == 2);
    const auto v = build_validity_map(m, c);
    for (uint32_t i = 0; i < 4; ++i)
        for (uint32_t j = 0; j <= 4; ++j) CHECK(v.is_valid(i, j) == (i < j && j - i <= 2));
}

TEST_CASE("every aligned single unit is a valid span") {
    for (const auto& name : benchmark_names()) {
        const auto c = builtin_chip("S");
        const auto m = decompose(build_benchmark(name), c);
        const auto v = build_validity_map(m, c);
        for (uint32_t i = 0; i < m.size(); ++i) {
            if (!m.aligned(i)) continue;
            uint32_t j = i + 1;
            while (!m.aligned(j)) ++j;
            CHECK(v.is_valid(i, j));
            CHECK(v.max_end(i) > i);
        }
    }
}

TEST_CASE("validity map matches brute-force packing on random small instances") {
    int instances = 0;
    uint64_t raw_mismatch = 0, closed_mismatch = 0;
    for (uint64_t seed = 0; instances < 200 && seed < 5000; ++seed) {
        NetworkGraph g;
        ChipSpec c;
        DecomposedModel m;
        if (!toy::random_instance(seed, g, c, m)) continue;
        ++instances;
        const auto v = build_validity_map(m, c);
        for (uint32_t i = 0; i <= m.size(); ++i)
            for (uint32_t j = 0; j <= m.size(); ++j) {
                const bool raw = i < j && m.aligned(i) && m.aligned(j) && toy::span_fits(m, c, i, j);
                raw_mismatch += raw != v.is_valid(i, j);
                closed_mismatch += toy::brute_valid(m, c, i, j) != v.is_valid(i, j);
            }
    }
    CHECK(instances == 200);
    CHECK(closed_mismatch == 0);
    CHECK(raw_mismatch == 0);
}

TEST_CASE("validity map is prefix closed") {
    const auto c = builtin_chip("S");
    const auto m = decompose(build_benchmark("resnet18"), c);
    const auto v = build_validity_map(m, c);
    for (uint32_t i = 0; i < m.size(); ++i)
        for (uint32_t j = i + 1; j <= m.size(); ++j)
            if (v.is_valid(i, j))
                for (uint32_t k = i + 1; k <= j; ++k) CHECK(v.is_valid(i, k) == m.aligned(k));
}

TEST_CASE("parallel and serial validity maps agree") {
    for (const auto& name : benchmark_names())
        for (const char* chip : {"S", "M", "L"}) {
            const auto c = builtin_chip(chip);
            const auto m = decompose(build_benchmark(name), c);
            const auto serial = build_validity_map_serial(m, c);
            for (int w : {1, 2, 4, 7}) CHECK(build_validity_map(m, c, w) == serial);
        }
}

TEST_CASE("a larger chip has a superset of valid spans") {
    // M and L share the crossbar and core geometry, so the units are identical.
    for (const auto& name : benchmark_names()) {
        const auto g = build_benchmark(name);
        const auto cm = builtin_chip("M"), cl = builtin_chip("L");
        const auto mm = decompose(g, cm), ml = decompose(g, cl);
        REQUIRE(mm.size() == ml.size());
        const auto vm = build_validity_map(mm, cm), vl = build_validity_map(ml, cl);
        for (uint32_t i = 0; i < mm.size(); ++i)
            for (uint32_t j = i + 1; j <= mm.size(); ++j)
                if (vm.is_valid(i, j)) CHECK(vl.is_valid(i, j));
        // Strictly fewer only when the model does not fit the smaller chip whole.
        if (vm.max_end(0) < mm.size()) CHECK(vm.valid_cells() < vl.valid_cells());
        else CHECK(vm.valid_cells() == vl.valid_cells());

        // S decomposes differently; compare the valid fraction of aligned pairs.
        const auto cs = builtin_chip("S");
        const auto ms = decompose(g, cs);
        const auto vs = build_validity_map(ms, cs);
        auto fraction = [](const ValidityMap& v) {
            const double b = static_cast<double>(v.boundaries().size());
            return static_cast<double>(v.valid_cells()) / (b * (b - 1) / 2);
        };
        if (vs.max_end(0) < ms.size()) CHECK(fraction(vs) < fraction(vl));
        else CHECK(fraction(vs) == 1.0);
    }
}

TEST_CASE("validity CSV has one row per start and one column per end") {
    const auto g = toy::linear_chain({16, 8, 8, 8, 8});
    const auto c = toy::chip(16, 16, 2, 2);
    const auto m = decompose(g, c);
    std::ostringstream os;
    write_validity_csv(build_validity_map(m, c), os);
    std::istringstream is(os.str());
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    REQUIRE(rows.size() == 1 + 4);  // header + starts
    CHECK(rows[1].substr(0, 2) == "0,");
}
