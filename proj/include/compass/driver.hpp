#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "compass/cost_model.hpp"
#include "compass/ga.hpp"
#include "compass/partitioner.hpp"
#include "compass/report.hpp"
#include "compass/scheduler.hpp"

namespace compass {

enum class Scheme { Compass, Greedy, Layerwise };
std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

// Output files; empty paths are skipped.
struct OutputPaths {
    std::filesystem::path report;
    std::filesystem::path instructions;
    std::filesystem::path trace;
    std::filesystem::path convergence;
    std::filesystem::path partitions_csv;
};

struct CompileRequest {
    std::string model = "resnet18";
    std::string chip = "M";
    Scheme scheme = Scheme::Compass;
    CostOptions cost;
    uint64_t seed = 0;
    int workers = 0;
    GaParams ga;  // seed and workers are taken from the request
    uint32_t activation_bits = 4;
    ScheduleOptions sched;
    OutputPaths out;
};

struct Compiled {
    std::shared_ptr<const Problem> problem;
    Scheme scheme = Scheme::Compass;
    PartitionGroup group;  // finalized, with core map
    RunReport report;
    std::optional<GaResult> ga;
};

std::shared_ptr<const Problem> make_problem(const CompileRequest& req);
Compiled compile(const CompileRequest& req);
Compiled compile(std::shared_ptr<const Problem> problem, Scheme scheme, const CompileRequest& req);

// Everything that determines the outputs. Worker count is excluded on purpose.
Json request_json(const CompileRequest& req, bool with_scheme = true);
Json provenance_json(const CompileRequest& req, const Problem& problem);

Json compile_report(const CompileRequest& req, const Compiled& c, const Json& schedule_summary);
Json compare_report(const CompileRequest& req, const Compiled& compass, const Compiled& greedy,
                    const Compiled& layerwise);
Json sweep_report(const CompileRequest& req, const Compiled& c, const std::vector<RunReport>& rows);

// Commands return the process exit code. Diagnostics go to `log`.
int cmd_compile(const CompileRequest& req, std::ostream& log);
int cmd_compare(const CompileRequest& req, std::ostream& log);
int cmd_sweep(const CompileRequest& req, const std::vector<uint32_t>& batches, std::ostream& log);
int cmd_models(const std::filesystem::path& out_dir, std::ostream& log);
int cmd_chips(const std::filesystem::path& out_dir, std::ostream& log);

// Maps errors to exit codes: 2 for UnmappableLayer, 1 for everything else.
int guarded(const std::function<int()>& f, std::ostream& log);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace compass
