#include "compass/driver.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "compass/error.hpp"

namespace compass {

std::string_view to_string(Scheme s) {
    switch (s) {
    case Scheme::Compass: return "compass";
    case Scheme::Greedy: return "greedy";
    case Scheme::Layerwise: return "layerwise";
    }
    return "?";
}

Scheme parse_scheme(std::string_view s) {
    if (s == "compass") return Scheme::Compass;
    if (s == "greedy") return Scheme::Greedy;
    if (s == "layerwise") return Scheme::Layerwise;
    throw ValidationError("scheme", "expected compass, greedy or layerwise, got '" + std::string(s) + "'");
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

int guarded(const std::function<int()>& f, std::ostream& log) {
    try {
        return f();
    } catch (const UnmappableLayer& e) {
        log << "error: unmappable: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
}

// ---------------------------------------------------------------------------
// Compilation

std::shared_ptr<const Problem> make_problem(const CompileRequest& req) {
    if (req.cost.batch < 1) throw ValidationError("batch", "must be >= 1");
    return Problem::create(resolve_network(req.model), resolve_chip(req.chip), PartitionOptions{req.activation_bits},
                           req.workers);
}

Compiled compile(std::shared_ptr<const Problem> problem, Scheme scheme, const CompileRequest& req) {
    Compiled c;
    c.problem = problem;
    c.scheme = scheme;
    switch (scheme) {
    case Scheme::Compass: {
        GaParams gp = req.ga;
        gp.seed = req.seed;
        gp.workers = req.workers;
        c.ga = run_compass(problem, gp, req.cost);
        c.group = c.ga->best;
        break;
    }
    case Scheme::Greedy: c.group = greedy_group(problem); break;
    case Scheme::Layerwise: c.group = layerwise_group(problem); break;
    }
    finalize(c.group, true);
    c.report = group_cost(c.group, req.cost);
    c.report.scheme = std::string(to_string(scheme));
    return c;
}

Compiled compile(const CompileRequest& req) { return compile(make_problem(req), req.scheme, req); }

// ---------------------------------------------------------------------------
// Reports

Json request_json(const CompileRequest& req, bool with_scheme) {
    Json j{{"model", req.model}, {"chip", req.chip}};
    if (with_scheme) j["scheme"] = to_string(req.scheme);
    j["objective"] = to_string(req.cost.objective);
    j["batch"] = req.cost.batch;
    j["seed"] = req.seed;
    j["overlap_writes"] = req.cost.overlap_writes;
    j["activation_bits"] = req.activation_bits;
    j["mvm_block"] = req.sched.mvm_block;
    if (!with_scheme || req.scheme == Scheme::Compass)
        j["ga"] = {{"generations", req.ga.generations},
                   {"population", req.ga.population},
                   {"n_sel", req.ga.n_sel},
                   {"n_mut", req.ga.n_mut},
                   {"mutation_weights", req.ga.mutation_weights},
                   {"early_stop_patience", req.ga.early_stop_patience},
                   {"early_stop_tolerance", req.ga.early_stop_tolerance}};
    return j;
}

Json provenance_json(const CompileRequest& req, const Problem& problem) {
    const std::string net = serialize_network(problem.graph());
    const std::string chip = serialize_chip_spec(problem.chip());
    const std::string request = request_json(req).dump();
    return Json{{"tool", "compass"},
                {"version", compass_version()},
                {"seed", req.seed},
                {"model_hash", hex64(fnv1a64(net))},
                {"chip_hash", hex64(fnv1a64(chip))},
                {"config_hash", hex64(fnv1a64(net + '\n' + chip + '\n' + request))}};
}

namespace {

Json header(const char* kind, const CompileRequest& req, const Problem& problem, bool with_scheme) {
    return Json{{"format_version", kReportFormatVersion},
                {"kind", kind},
                {"provenance", provenance_json(req, problem)},
                {"request", request_json(req, with_scheme)},
                {"problem",
                 {{"network", problem.graph().name()},
                  {"chip", problem.chip().name},
                  {"units", problem.model().size()},
                  {"crossbar_layers", problem.model().layers.size()},
                  {"valid_spans", problem.vmap().valid_cells()},
                  {"chip_capacity_mib", problem.chip().chip_capacity_mib()},
                  {"weight_footprint_mib", weight_footprint(problem.graph()).total_mib()}}}};
}

std::string label(const CompileRequest& req, const Problem& problem) {
    return problem.graph().name() + "-" + problem.chip().name + "-" + std::to_string(req.cost.batch);
}

void summary_line(std::ostream& log, const std::string& label, const RunReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %s: %zu partitions, throughput %.6g samples/s, energy/sample %.6g pJ, EDP %.6g pJ*ns\n",
                  label.c_str(), r.scheme.c_str(), r.partitions.size(), r.throughput_sps, r.energy_per_sample_pj,
                  r.edp_per_sample_pj_ns);
    log << buf;
}

}  // namespace

Json compile_report(const CompileRequest& req, const Compiled& c, const Json& schedule_summary) {
    Json j = header("compile", req, *c.problem, true);
    j["result"] = to_json(c.report);
    j["group"] = group_to_json(c.group);
    if (c.ga) j["ga"] = ga_to_json(*c.ga);
    if (!schedule_summary.is_null()) j["schedule"] = schedule_summary;
    return j;
}

Json compare_report(const CompileRequest& req, const Compiled& compass, const Compiled& greedy,
                    const Compiled& layerwise) {
    Json j = header("compare", req, *compass.problem, false);
    const auto& c = compass.report;
    const auto& g = greedy.report;
    const auto& l = layerwise.report;
    j["ratios"] = {{"throughput_vs_greedy", c.throughput_sps / g.throughput_sps},
                   {"throughput_vs_layerwise", c.throughput_sps / l.throughput_sps},
                   {"edp_gain_vs_greedy", g.edp_per_sample_pj_ns / c.edp_per_sample_pj_ns},
                   {"edp_gain_vs_layerwise", l.edp_per_sample_pj_ns / c.edp_per_sample_pj_ns},
                   {"energy_gain_vs_greedy", g.energy_per_sample_pj / c.energy_per_sample_pj},
                   {"energy_gain_vs_layerwise", l.energy_per_sample_pj / c.energy_per_sample_pj},
                   {"pgf_gain_vs_greedy", g.pgf / c.pgf},
                   {"pgf_gain_vs_layerwise", l.pgf / c.pgf}};
    j["schemes"] = {{"compass", to_json(c)}, {"greedy", to_json(g)}, {"layerwise", to_json(l)}};
    j["groups"] = {{"compass", group_to_json(compass.group)},
                   {"greedy", group_to_json(greedy.group)},
                   {"layerwise", group_to_json(layerwise.group)}};
    if (compass.ga) j["ga"] = ga_to_json(*compass.ga);
    return j;
}

Json sweep_report(const CompileRequest& req, const Compiled& c, const std::vector<RunReport>& rows) {
    Json j = header("sweep", req, *c.problem, true);
    Json batches = Json::array(), thr = Json::array(), ratio = Json::array(), wpe = Json::array(),
         edp = Json::array(), reports = Json::array();
    for (const auto& r : rows) {
        batches.push_back(r.options.batch);
        thr.push_back(r.throughput_sps);
        ratio.push_back(r.write_to_mvm_ratio);
        wpe.push_back(r.write_energy_per_sample_pj);
        edp.push_back(r.edp_per_sample_pj_ns);
        reports.push_back(to_json(r));
    }
    j["series"] = {{"batch", std::move(batches)},
                   {"throughput_sps", std::move(thr)},
                   {"write_to_mvm_ratio", std::move(ratio)},
                   {"write_energy_per_sample_pj", std::move(wpe)},
                   {"edp_per_sample_pj_ns", std::move(edp)}};
    j["reports"] = std::move(reports);
    j["group"] = group_to_json(c.group);
    if (c.ga) j["ga"] = ga_to_json(*c.ga);
    return j;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void write_convergence(const Compiled& c, const std::filesystem::path& path) {
    if (path.empty() || !c.ga) return;
    std::ostringstream os;
    write_convergence_csv(*c.ga, os);
    write_text(path, os.str());
}

void write_partitions(const RunReport& r, const std::filesystem::path& path) {
    if (path.empty()) return;
    std::ostringstream os;
    write_partition_csv(r, os);
    write_text(path, os.str());
}

std::filesystem::path with_suffix(const std::filesystem::path& p, std::string_view tag) {
    if (p.empty()) return p;
    return p.parent_path() / (p.stem().string() + "." + std::string(tag) + p.extension().string());
}

}  // namespace

int cmd_compile(const CompileRequest& req, std::ostream& log) {
    const Compiled c = compile(req);
    const Schedule s = schedule(c.group, req.cost, req.sched);
    const auto violations = check_schedule(s, c.group, req.cost);
    if (!violations.empty()) throw Error("schedule check failed: " + violations.front());
    TraceSummary trace = trace_summary(s);
    if (!req.out.instructions.empty()) {
        if (req.out.instructions.has_parent_path()) std::filesystem::create_directories(req.out.instructions.parent_path());
        emit_instructions(s, req.out.instructions);
    }
    if (!req.out.trace.empty()) {
        if (req.out.trace.has_parent_path()) std::filesystem::create_directories(req.out.trace.parent_path());
        trace = emit_trace(s, c.problem->chip(), req.out.trace);
    }
    const Json report = compile_report(req, c, schedule_to_json(s, trace));
    if (!req.out.report.empty()) write_text(req.out.report, dump_json(report));
    write_convergence(c, req.out.convergence);
    write_partitions(c.report, req.out.partitions_csv);
    summary_line(log, label(req, *c.problem), c.report);
    return 0;
}

int cmd_compare(const CompileRequest& req, std::ostream& log) {
    const auto problem = make_problem(req);
    const Compiled c = compile(problem, Scheme::Compass, req);
    const Compiled g = compile(problem, Scheme::Greedy, req);
    const Compiled l = compile(problem, Scheme::Layerwise, req);
    const Json report = compare_report(req, c, g, l);
    if (!req.out.report.empty()) write_text(req.out.report, dump_json(report));
    write_convergence(c, req.out.convergence);
    write_partitions(c.report, with_suffix(req.out.partitions_csv, "compass"));
    write_partitions(g.report, with_suffix(req.out.partitions_csv, "greedy"));
    write_partitions(l.report, with_suffix(req.out.partitions_csv, "layerwise"));
    const std::string lb = label(req, *problem);
    for (const auto* x : {&c, &g, &l}) summary_line(log, lb, x->report);
    char buf[200];
    std::snprintf(buf, sizeof(buf), "throughput ratio: %.4gx vs greedy, %.4gx vs layerwise\n",
                  report["ratios"]["throughput_vs_greedy"].get<double>(),
                  report["ratios"]["throughput_vs_layerwise"].get<double>());
    log << buf;
    return 0;
}

int cmd_sweep(const CompileRequest& req, const std::vector<uint32_t>& batches, std::ostream& log) {
    if (batches.empty()) throw ValidationError("batches", "needs at least one batch size");
    for (uint32_t b : batches)
        if (b < 1) throw ValidationError("batches", "batch sizes must be >= 1");
    // The group is compiled once at --batch and then evaluated at every batch.
    const Compiled c = compile(req);
    std::vector<RunReport> rows;
    for (uint32_t b : batches) {
        CostOptions o = req.cost;
        o.batch = b;
        rows.push_back(group_cost(c.group, o));
        rows.back().scheme = c.report.scheme;
    }
    const Json report = sweep_report(req, c, rows);
    if (!req.out.report.empty()) write_text(req.out.report, dump_json(report));
    write_convergence(c, req.out.convergence);
    if (!req.out.partitions_csv.empty()) {
        std::ostringstream os;
        os << "# compass-sweep v1\n";
        os << "batch,throughput_sps,batch_latency_ns,energy_per_sample_pj,write_energy_per_sample_pj,"
              "weight_load_energy_per_sample_pj,write_to_mvm_ratio,edp_per_sample_pj_ns\n";
        char buf[320];
        for (const auto& r : rows) {
            const int n = std::snprintf(buf, sizeof(buf), "%u,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.options.batch,
                                        r.throughput_sps, r.batch_latency_ns, r.energy_per_sample_pj,
                                        r.write_energy_per_sample_pj, r.weight_load_energy_per_sample_pj,
                                        r.write_to_mvm_ratio, r.edp_per_sample_pj_ns);
            os.write(buf, n);
        }
        write_text(req.out.partitions_csv, os.str());
    }
    for (const auto& r : rows) {
        char buf[200];
        std::snprintf(buf, sizeof(buf), "B=%u throughput %.6g samples/s, write/MVM energy %.4g\n", r.options.batch,
                      r.throughput_sps, r.write_to_mvm_ratio);
        log << buf;
    }
    return 0;
}

int cmd_models(const std::filesystem::path& out_dir, std::ostream& log) {
    for (const auto& name : benchmark_names()) {
        const auto g = build_benchmark(name);
        const auto fp = weight_footprint(g);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-12s %4zu nodes  weights %.4f MiB (conv %.4f, linear %.4f)\n", name.c_str(),
                      g.size(), fp.total_mib(), fp.conv_mib, fp.linear_mib);
        log << buf;
        if (!out_dir.empty()) write_text(out_dir / (name + ".json"), serialize_network(g));
    }
    return 0;
}

int cmd_chips(const std::filesystem::path& out_dir, std::ostream& log) {
    for (const char* name : {"S", "M", "L"}) {
        const auto chip = builtin_chip(name);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-2s %3u cores x %2u crossbars %ux%u  %.4f MiB  %.2f W\n", name, chip.num_cores,
                      chip.core.crossbars_per_core, chip.xbar.rows, chip.xbar.cols, chip.chip_capacity_mib(),
                      chip.static_power_w);
        log << buf;
        if (!out_dir.empty()) write_text(out_dir / ("chip_" + std::string(name) + ".cfg"), serialize_chip_spec(chip));
    }
    return 0;
}

}  // namespace compass
