#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "compass/driver.hpp"
#include "compass/error.hpp"
#include "toy.hpp"

using namespace compass;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "compass_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

CompileRequest quick(const std::string& model, const std::string& chip) {
    CompileRequest r;
    r.model = model;
    r.chip = chip;
    r.ga.generations = 4;
    return r;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(COMPASS_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("scheme parsing") {
    CHECK(parse_scheme("compass") == Scheme::Compass);
    CHECK(parse_scheme("greedy") == Scheme::Greedy);
    CHECK(parse_scheme("layerwise") == Scheme::Layerwise);
    CHECK_THROWS_AS(parse_scheme("bogus"), ValidationError);
}

TEST_CASE("compile twice gives identical outputs") {
    const auto dir = scratch("determinism");
    auto req = quick("resnet18", "S");
    std::ostringstream log;
    std::string first[4];
    for (int run = 0; run < 2; ++run) {
        req.workers = run == 0 ? 1 : 4;
        req.out.report = dir / "report.json";
        req.out.instructions = dir / "instructions.txt";
        req.out.trace = dir / "trace.txt";
        req.out.convergence = dir / "convergence.csv";
        REQUIRE(cmd_compile(req, log) == 0);
        const std::string now[4] = {slurp(req.out.report), slurp(req.out.instructions), slurp(req.out.trace),
                                    slurp(req.out.convergence)};
        for (int k = 0; k < 4; ++k) {
            CHECK_FALSE(now[k].empty());
            if (run == 0) first[k] = now[k];
            else CHECK(now[k] == first[k]);
        }
    }
}

TEST_CASE("greedy on squeezenet-L fits in one partition") {
    auto req = quick("squeezenet", "L");
    req.scheme = Scheme::Greedy;
    const auto c = compile(req);
    CHECK(c.group.size() == 1);
    CHECK(c.report.partitions.size() == 1);
    CHECK_FALSE(c.ga);
}

TEST_CASE("compare ratios are recomputable from the per-scheme reports") {
    const auto dir = scratch("compare");
    auto req = quick("resnet18", "M");
    req.out.report = dir / "compare.json";
    std::ostringstream log;
    REQUIRE(cmd_compare(req, log) == 0);
    const auto j = read_json(req.out.report);
    const auto& s = j["schemes"];
    const double c = s["compass"]["throughput_sps"], g = s["greedy"]["throughput_sps"],
                 l = s["layerwise"]["throughput_sps"];
    CHECK(j["ratios"]["throughput_vs_greedy"].get<double>() == c / g);
    CHECK(j["ratios"]["throughput_vs_layerwise"].get<double>() == c / l);
    const double ec = s["compass"]["edp_per_sample_pj_ns"], eg = s["greedy"]["edp_per_sample_pj_ns"];
    CHECK(j["ratios"]["edp_gain_vs_greedy"].get<double>() == eg / ec);
    CHECK(j["groups"]["layerwise"]["partitions"].size() == 21);
    CHECK(j.contains("provenance"));
}

TEST_CASE("a single-layer network costs the same under every scheme") {
    const auto dir = scratch("single");
    write_text(dir / "one.json", serialize_network(toy::linear_chain({64, 32})));
    auto req = quick((dir / "one.json").string(), "M");
    const auto p = make_problem(req);
    REQUIRE(p->model().size() == 1);
    const auto c = compile(p, Scheme::Compass, req);
    const auto g = compile(p, Scheme::Greedy, req);
    const auto l = compile(p, Scheme::Layerwise, req);
    CHECK(c.report.batch_latency_ns == g.report.batch_latency_ns);
    CHECK(c.report.batch_latency_ns == l.report.batch_latency_ns);
    CHECK(c.report.energy.total() == g.report.energy.total());
    CHECK(c.report.energy.total() == l.report.energy.total());
}

TEST_CASE("sweep write energy per sample shrinks 16:1 from B=1 to B=16") {
    const auto dir = scratch("sweep");
    auto req = quick("resnet18", "S");
    req.out.report = dir / "sweep.json";
    req.out.partitions_csv = dir / "sweep.csv";
    std::ostringstream log;
    REQUIRE(cmd_sweep(req, {1, 16}, log) == 0);
    const auto j = read_json(req.out.report);
    const auto& w = j["series"]["write_energy_per_sample_pj"];
    CHECK(w[0].get<double>() / w[1].get<double>() == doctest::Approx(16.0).epsilon(1e-12));
    const auto& t = j["series"]["throughput_sps"];
    CHECK(t[1].get<double>() >= t[0].get<double>());
    CHECK(slurp(req.out.partitions_csv).rfind("# compass-sweep v1\n", 0) == 0);
}

TEST_CASE("sweep at the compile batch reproduces the compile result") {
    const auto dir = scratch("sweep1");
    auto req = quick("squeezenet", "M");
    req.cost.batch = 1;
    req.out.report = dir / "sweep.json";
    std::ostringstream log;
    REQUIRE(cmd_sweep(req, {1}, log) == 0);
    const auto j = read_json(req.out.report);
    const auto c = compile(req);
    CHECK(j["reports"][0]["throughput_sps"].get<double>() == c.report.throughput_sps);
    CHECK(j["reports"][0]["pgf"].get<double>() == c.report.pgf);
}

TEST_CASE("errors map to exit codes") {
    std::ostringstream log;
    CHECK(guarded([] { return 0; }, log) == 0);
    CHECK(guarded([]() -> int { throw UnmappableLayer("too big"); }, log) == 2);
    CHECK(guarded([]() -> int { throw ValidationError("x", "bad"); }, log) == 1);
    auto req = quick("nonexistent.json", "M");
    CHECK(guarded([&] { return cmd_compile(req, log); }, log) == 1);
}

TEST_CASE("command-line tool") {
    const auto dir = scratch("cli");
    const auto log = dir / "log.txt";
    CHECK(run_cli("compile --scheme bogus", log) == 1);
    CHECK(slurp(log).find("unknown scheme 'bogus'") != std::string::npos);
    CHECK(run_cli("compile --objective speed", log) == 1);
    CHECK(run_cli("compile --model resnet18 --chip M --scheme greedy --out-dir " + (dir / "a").string(), log) == 0);
    CHECK(fs::exists(dir / "a" / "report.json"));
    CHECK(fs::exists(dir / "a" / "trace.txt"));
    CHECK(fs::exists(dir / "a" / "instructions.txt"));
    CHECK(run_cli("chips --out " + (dir / "chips").string(), log) == 0);
    CHECK(load_chip_spec(dir / "chips" / "chip_M.cfg").chip_crossbars() == 256);

    // A chip too small for one output slice of any resnet18 layer.
    write_text(dir / "tiny.cfg", serialize_chip_spec(toy::chip(16, 16, 1, 2)));
    CHECK(run_cli("compile --model resnet18 --scheme greedy --chip " + (dir / "tiny.cfg").string() + " --out-dir " +
                      (dir / "b").string(),
                  log) == 2);
}

TEST_CASE("shipped configs and models match the builtins") {
    const fs::path root = COMPASS_SOURCE_DIR;
    for (const char* name : {"S", "M", "L"})
        CHECK(serialize_chip_spec(load_chip_spec(root / "configs" / ("chip_" + std::string(name) + ".cfg"))) ==
              serialize_chip_spec(builtin_chip(name)));
    for (const auto& name : benchmark_names())
        CHECK(serialize_network(load_network(root / "models" / (name + ".json"))) ==
              serialize_network(build_benchmark(name)));
}
