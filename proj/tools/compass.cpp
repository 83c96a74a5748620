#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "compass/driver.hpp"
#include "compass/error.hpp"

namespace {

struct Flags {
    compass::CompileRequest req;
    std::string scheme = "compass";
    std::string objective = "latency";
    std::string out_dir = "compass-out";
    std::string report, instructions, trace, convergence, partitions;
    int workers = -1;
    uint32_t population = 0;
    uint32_t survivors = 0;
    uint32_t mutants = 0;
    std::vector<double> mutation_weights;
    std::vector<uint32_t> batches{1, 2, 4, 8, 16};
};

void add_common(CLI::App* cmd, Flags& f) {
    auto& r = f.req;
    cmd->add_option("--model", r.model, "Builtin model name or network JSON path")->capture_default_str();
    cmd->add_option("--chip", r.chip, "Builtin chip (S, M, L) or chip config path")->capture_default_str();
    cmd->add_option("--objective", f.objective, "latency or edp")->capture_default_str();
    cmd->add_option("--batch", r.cost.batch, "Batch size B")->capture_default_str();
    cmd->add_option("--seed", r.seed, "Random seed")->capture_default_str();
    cmd->add_option("--workers", f.workers, "Worker threads (default: COMPASS_WORKERS or all cores)");
    cmd->add_flag("--overlap-writes", r.cost.overlap_writes, "Overlap weight replacement with the previous drain");
    cmd->add_option("--activation-bits", r.activation_bits, "Activation precision in bits")->capture_default_str();
    cmd->add_option("--mvm-block", r.sched.mvm_block, "Invocations per MVM instruction")->capture_default_str();
    cmd->add_option("--out-dir", f.out_dir, "Directory for default output files")->capture_default_str();
    cmd->add_option("--report", f.report, "Report path (overrides --out-dir)");
    cmd->add_option("--convergence", f.convergence, "Convergence log path");
    cmd->add_option("--partitions", f.partitions, "Per-partition CSV path");
    cmd->add_option("--generations", r.ga.generations, "GA generations")->capture_default_str();
    cmd->add_option("--population", f.population, "GA population (survivors + mutants)");
    cmd->add_option("--survivors", f.survivors, "GA survivors per generation");
    cmd->add_option("--mutants", f.mutants, "GA mutants per generation");
    cmd->add_option("--mutation-weights", f.mutation_weights, "Merge, split, move, fixed-random weights")
        ->expected(4)
        ->delimiter(',');
    cmd->add_option("--patience", r.ga.early_stop_patience, "Early-stop patience, 0 disables")->capture_default_str();
    cmd->add_option("--tolerance", r.ga.early_stop_tolerance, "Early-stop relative tolerance")->capture_default_str();
}

int resolve(Flags& f, const std::string& report_name, bool schedule_outputs) {
    auto& r = f.req;
    try {
        r.scheme = compass::parse_scheme(f.scheme);
    } catch (const compass::ValidationError& e) {
        std::cerr << "error: --scheme: unknown scheme '" << f.scheme << "' (expected compass, greedy or layerwise)\n";
        return 1;
    }
    try {
        r.cost.objective = compass::parse_objective(f.objective);
    } catch (const compass::ValidationError& e) {
        std::cerr << "error: --objective: unknown objective '" << f.objective << "' (expected latency or edp)\n";
        return 1;
    }
    if (r.cost.batch < 1) {
        std::cerr << "error: --batch: must be >= 1\n";
        return 1;
    }
    if (f.workers < 0) {
        f.workers = 0;
        if (const char* env = std::getenv("COMPASS_WORKERS")) {
            try {
                f.workers = std::stoi(env);
            } catch (const std::exception&) {
                std::cerr << "error: COMPASS_WORKERS: not an integer: '" << env << "'\n";
                return 1;
            }
        }
    }
    r.workers = f.workers;

    auto& ga = r.ga;
    if (f.population > 0) {
        ga.population = f.population;
        if (f.survivors == 0 && f.mutants == 0) {
            ga.n_sel = std::max<uint32_t>(1, f.population / 5);
            ga.n_mut = f.population - ga.n_sel;
        }
    }
    if (f.survivors > 0) ga.n_sel = f.survivors;
    if (f.mutants > 0) ga.n_mut = f.mutants;
    if (f.population == 0 && (f.survivors > 0 || f.mutants > 0)) ga.population = ga.n_sel + ga.n_mut;
    if (!f.mutation_weights.empty())
        for (size_t k = 0; k < 4; ++k) ga.mutation_weights[k] = f.mutation_weights[k];

    const std::filesystem::path dir = f.out_dir;
    auto pick = [&](const std::string& flag, const char* name) {
        return flag.empty() ? dir / name : std::filesystem::path(flag);
    };
    r.out.report = pick(f.report, report_name.c_str());
    r.out.convergence = pick(f.convergence, "convergence.csv");
    r.out.partitions_csv = pick(f.partitions, report_name == "sweep.json" ? "sweep.csv" : "partitions.csv");
    if (schedule_outputs) {
        r.out.instructions = pick(f.instructions, "instructions.txt");
        r.out.trace = pick(f.trace, "trace.txt");
    }
    return -1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"COMPASS: partitioning compiler for crossbar processing-in-memory chips"};
    app.require_subcommand(1);

    Flags compile_f, compare_f, sweep_f;
    std::string models_out, chips_out;

    auto* compile = app.add_subcommand("compile", "Partition, schedule and report one scheme");
    add_common(compile, compile_f);
    compile->add_option("--scheme", compile_f.scheme, "compass, greedy or layerwise")->capture_default_str();
    compile->add_option("--instructions", compile_f.instructions, "Instruction dump path");
    compile->add_option("--trace", compile_f.trace, "DRAM trace path");

    auto* compare = app.add_subcommand("compare", "Run all three schemes side by side");
    add_common(compare, compare_f);

    auto* sweep = app.add_subcommand("sweep", "Evaluate one compiled group over several batch sizes");
    add_common(sweep, sweep_f);
    sweep->add_option("--scheme", sweep_f.scheme, "compass, greedy or layerwise")->capture_default_str();
    sweep->add_option("--batches", sweep_f.batches, "Batch sizes to evaluate")->delimiter(',')->capture_default_str();

    auto* models = app.add_subcommand("models", "List builtin models and optionally dump them as JSON");
    models->add_option("--out", models_out, "Directory to write <model>.json files into");

    auto* chips = app.add_subcommand("chips", "List builtin chips and optionally dump their configs");
    chips->add_option("--out", chips_out, "Directory to write chip_<name>.cfg files into");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*compile) {
        if (int rc = resolve(compile_f, "report.json", true); rc >= 0) return rc;
        if (compile_f.req.scheme != compass::Scheme::Compass && compile_f.convergence.empty())
            compile_f.req.out.convergence.clear();
        return compass::guarded([&] { return compass::cmd_compile(compile_f.req, std::cout); }, std::cerr);
    }
    if (*compare) {
        if (int rc = resolve(compare_f, "compare.json", false); rc >= 0) return rc;
        return compass::guarded([&] { return compass::cmd_compare(compare_f.req, std::cout); }, std::cerr);
    }
    if (*sweep) {
        if (int rc = resolve(sweep_f, "sweep.json", false); rc >= 0) return rc;
        if (sweep_f.req.scheme != compass::Scheme::Compass && sweep_f.convergence.empty())
            sweep_f.req.out.convergence.clear();
        return compass::guarded([&] { return compass::cmd_sweep(sweep_f.req, sweep_f.batches, std::cout); },
                                std::cerr);
    }
    if (*models) return compass::guarded([&] { return compass::cmd_models(models_out, std::cout); }, std::cerr);
    if (*chips) return compass::guarded([&] { return compass::cmd_chips(chips_out, std::cout); }, std::cerr);
    return 1;
}
