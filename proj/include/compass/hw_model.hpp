#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace compass {

struct CrossbarSpec {
    uint32_t rows = 256;
    uint32_t cols = 256;
    uint32_t cell_bits = 1;
    double mvm_latency_ns = 100.0;
    double mvm_energy_pj = 270.0;  // calibration parameter
    double row_write_latency_ns = 2.0;
    double write_energy_pj_per_bit = 0.1;  // calibration parameter

    uint64_t capacity_bits() const { return uint64_t{rows} * cols * cell_bits; }

    bool operator==(const CrossbarSpec&) const = default;
};

struct CoreSpec {
    uint32_t crossbars_per_core = 16;
    uint32_t vfu_count = 12;
    double vfu_throughput_elems_per_ns = 12.0;
    uint64_t local_mem_bytes = 64 * 1024;
    // VFU + local memory + control unit.
    double power_active_mw = 22.8 + 18.0 + 8.0;

    bool operator==(const CoreSpec&) const = default;
};

struct DramSpec {
    double bandwidth_bytes_per_ns = 12.8;
    double latency_ns = 100.0;
    double energy_pj_per_byte = 20.0;
    uint64_t capacity_bytes = uint64_t{8} << 30;
    double clock_ghz = 0.8;  // clock used for trace cycle stamps

    bool operator==(const DramSpec&) const = default;
};

struct ChipSpec {
    std::string name = "custom";
    uint32_t num_cores = 16;
    CoreSpec core;
    CrossbarSpec xbar;
    double bus_bandwidth_bytes_per_ns = 32.0;
    double bus_latency_ns = 2.0;
    double static_power_w = 2.80;
    double clock_ghz = 1.0;
    DramSpec dram;

    uint64_t core_capacity_bits() const { return uint64_t{core.crossbars_per_core} * xbar.capacity_bits(); }
    uint64_t chip_capacity_bits() const { return uint64_t{num_cores} * core_capacity_bits(); }
    uint64_t chip_crossbars() const { return uint64_t{num_cores} * core.crossbars_per_core; }
    double chip_capacity_mib() const { return static_cast<double>(chip_capacity_bits()) / 8.0 / (1 << 20); }

    bool operator==(const ChipSpec&) const = default;
};

// Throws ValidationError naming the first offending field.
void validate(const ChipSpec& chip);

// Flat `key = value` configuration document; see docs/formats.md.
ChipSpec parse_chip_spec(std::string_view text);
ChipSpec load_chip_spec(const std::filesystem::path& path);
std::string serialize_chip_spec(const ChipSpec& chip);

// Hardware configurations S, M and L.
ChipSpec builtin_chip(std::string_view name);

// A builtin name (S/M/L) or a path to a configuration file.
ChipSpec resolve_chip(const std::string& name_or_path);

}  // namespace compass
