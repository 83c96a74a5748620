#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "compass/cost_model.hpp"
#include "compass/ga.hpp"
#include "compass/partitioner.hpp"
#include "compass/scheduler.hpp"

namespace compass {

using Json = nlohmann::ordered_json;

inline constexpr int kReportFormatVersion = 1;

std::string_view compass_version();

// FNV-1a, stable across platforms; used for provenance hashes.
uint64_t fnv1a64(std::string_view data);
std::string hex64(uint64_t v);

Json to_json(const EnergyBreakdown& e);
Json to_json(const PartitionCost& c);
// Totals followed by the per-partition rows.
Json to_json(const RunReport& r);
// Spans, replication, io markers and (when mapped) the core map.
Json group_to_json(const PartitionGroup& group);
Json ga_to_json(const GaResult& result);
Json schedule_to_json(const Schedule& s, const TraceSummary& trace);

void write_partition_csv(const RunReport& r, std::ostream& out);

// Pretty JSON with a trailing newline.
std::string dump_json(const Json& j);

}  // namespace compass
