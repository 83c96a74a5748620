#include "compass/hw_model.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>
#include <vector>

#include "compass/error.hpp"

namespace compass {

namespace {

constexpr int kChipFormatVersion = 1;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ParseError("bad numeric value for '" + std::string(key) + "': '" + std::string(value) + "'");
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// One row per configuration key. Keeping the table in one place makes the
// parser and the serializer agree by construction.
struct Field {
    const char* key;
    std::function<void(ChipSpec&, std::string_view)> set;
    std::function<std::string(const ChipSpec&)> get;
};

#define COMPASS_U(KEY, EXPR)                                                                       \
    Field {                                                                                        \
        KEY, [](ChipSpec& c, std::string_view v) { EXPR = parse_number<std::remove_reference_t<decltype(EXPR)>>(KEY, v); }, \
            [](const ChipSpec& c) { return std::to_string(EXPR); }                                 \
    }
#define COMPASS_D(KEY, EXPR)                                                                   \
    Field {                                                                                    \
        KEY, [](ChipSpec& c, std::string_view v) { EXPR = parse_number<double>(KEY, v); },     \
            [](const ChipSpec& c) { return format_double(EXPR); }                              \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        Field{"name", [](ChipSpec& c, std::string_view v) { c.name = std::string(v); },
              [](const ChipSpec& c) { return c.name; }},
        COMPASS_U("num_cores", c.num_cores),
        COMPASS_U("crossbars_per_core", c.core.crossbars_per_core),
        COMPASS_U("xbar_rows", c.xbar.rows),
        COMPASS_U("xbar_cols", c.xbar.cols),
        COMPASS_U("xbar_cell_bits", c.xbar.cell_bits),
        COMPASS_D("xbar_mvm_latency_ns", c.xbar.mvm_latency_ns),
        COMPASS_D("xbar_mvm_energy_pj", c.xbar.mvm_energy_pj),
        COMPASS_D("xbar_row_write_latency_ns", c.xbar.row_write_latency_ns),
        COMPASS_D("xbar_write_energy_pj_per_bit", c.xbar.write_energy_pj_per_bit),
        COMPASS_U("vfu_count", c.core.vfu_count),
        COMPASS_D("vfu_throughput_elems_per_ns", c.core.vfu_throughput_elems_per_ns),
        COMPASS_U("local_mem_bytes", c.core.local_mem_bytes),
        COMPASS_D("core_power_active_mw", c.core.power_active_mw),
        COMPASS_D("bus_bandwidth_bytes_per_ns", c.bus_bandwidth_bytes_per_ns),
        COMPASS_D("bus_latency_ns", c.bus_latency_ns),
        COMPASS_D("static_power_w", c.static_power_w),
        COMPASS_D("clock_ghz", c.clock_ghz),
        COMPASS_D("dram_bandwidth_bytes_per_ns", c.dram.bandwidth_bytes_per_ns),
        COMPASS_D("dram_latency_ns", c.dram.latency_ns),
        COMPASS_D("dram_energy_pj_per_byte", c.dram.energy_pj_per_byte),
        COMPASS_U("dram_capacity_bytes", c.dram.capacity_bytes),
        COMPASS_D("dram_clock_ghz", c.dram.clock_ghz),
    };
    return table;
}

#undef COMPASS_U
#undef COMPASS_D

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw ValidationError(field, what);
}

}  // namespace

void validate(const ChipSpec& c) {
    require(c.num_cores >= 1, "num_cores", "must be >= 1");
    require(c.core.crossbars_per_core >= 1, "crossbars_per_core", "must be >= 1");
    require(c.xbar.rows > 0, "xbar_rows", "must be > 0");
    require(c.xbar.cols > 0, "xbar_cols", "must be > 0");
    require(c.xbar.cell_bits >= 1, "xbar_cell_bits", "must be >= 1");
    require(c.xbar.mvm_latency_ns >= 0, "xbar_mvm_latency_ns", "must be >= 0");
    require(c.xbar.mvm_energy_pj >= 0, "xbar_mvm_energy_pj", "must be >= 0");
    require(c.xbar.row_write_latency_ns >= 0, "xbar_row_write_latency_ns", "must be >= 0");
    require(c.xbar.write_energy_pj_per_bit >= 0, "xbar_write_energy_pj_per_bit", "must be >= 0");
    require(c.core.vfu_throughput_elems_per_ns > 0, "vfu_throughput_elems_per_ns", "must be > 0");
    require(c.core.power_active_mw >= 0, "core_power_active_mw", "must be >= 0");
    require(c.bus_bandwidth_bytes_per_ns > 0, "bus_bandwidth_bytes_per_ns", "must be > 0");
    require(c.bus_latency_ns >= 0, "bus_latency_ns", "must be >= 0");
    require(c.static_power_w >= 0, "static_power_w", "must be >= 0");
    require(c.clock_ghz > 0, "clock_ghz", "must be > 0");
    require(c.dram.bandwidth_bytes_per_ns > 0, "dram_bandwidth_bytes_per_ns", "must be > 0");
    require(c.dram.latency_ns >= 0, "dram_latency_ns", "must be >= 0");
    require(c.dram.energy_pj_per_byte >= 0, "dram_energy_pj_per_byte", "must be >= 0");
    require(c.dram.capacity_bytes > 0, "dram_capacity_bytes", "must be > 0");
    require(c.dram.clock_ghz > 0, "dram_clock_ghz", "must be > 0");
}

ChipSpec parse_chip_spec(std::string_view text) {
    std::map<std::string, std::string, std::less<>> kv;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
        auto key = std::string(trim(line.substr(0, eq)));
        auto value = std::string(trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) throw ParseError("duplicate key '" + key + "'");
    }

    auto version = kv.find("format_version");
    if (version == kv.end()) throw ParseError("missing format_version");
    if (parse_number<int>("format_version", version->second) != kChipFormatVersion)
        throw ParseError("unsupported format_version " + version->second);
    kv.erase(version);

    ChipSpec chip;
    for (const auto& f : fields()) {
        auto it = kv.find(f.key);
        if (it == kv.end()) continue;  // unspecified keys keep their defaults
        f.set(chip, it->second);
        kv.erase(it);
    }
    if (!kv.empty()) throw ParseError("unknown key '" + kv.begin()->first + "'");
    validate(chip);
    return chip;
}

ChipSpec load_chip_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open chip config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_chip_spec(ss.str());
}

std::string serialize_chip_spec(const ChipSpec& chip) {
    std::string out = "# compass chip configuration\nformat_version = 1\n";
    for (const auto& f : fields()) {
        out += f.key;
        out += " = ";
        out += f.get(chip);
        out += '\n';
    }
    return out;
}

ChipSpec builtin_chip(std::string_view name) {
    ChipSpec chip;
    chip.name = std::string(name);
    if (name == "S") {
        chip.num_cores = 16;
        chip.core.crossbars_per_core = 9;
        chip.static_power_w = 1.57;
    } else if (name == "M") {
        chip.num_cores = 16;
        chip.core.crossbars_per_core = 16;
        chip.static_power_w = 2.80;
    } else if (name == "L") {
        chip.num_cores = 36;
        chip.core.crossbars_per_core = 16;
        chip.static_power_w = 6.30;
    } else {
        throw UnknownChip("unknown chip '" + std::string(name) + "' (expected S, M or L)");
    }
    return chip;
}

ChipSpec resolve_chip(const std::string& name_or_path) {
    if (name_or_path == "S" || name_or_path == "M" || name_or_path == "L") return builtin_chip(name_or_path);
    if (std::filesystem::exists(name_or_path)) return load_chip_spec(name_or_path);
    throw UnknownChip("unknown chip '" + name_or_path + "' (expected S, M, L or a config path)");
}

}  // namespace compass
