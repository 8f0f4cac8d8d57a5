#include <doctest.h>

#include "georay/config.hpp"
#include "georay/layer_strip.hpp"
#include "georay/pipeline.hpp"
#include "georay/setup.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace georay;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("georay_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const char* kSmall =
    "metric.kind = radial_herglotz\n"
    "grid.dims = 8,9,9\n"
    "ray.n_omega = 8\n"
    "ray.n_lambda = 5\n"
    "phantom.sigma = 0.02\n"
    "phantom.support = 0.05\n";

fs::path write_config(const fs::path& dir, const std::string& extra = "") {
    const fs::path p = dir / "run.cfg";
    std::ofstream(p) << kSmall << extra;
    return p;
}

// Runs the installed binary when available, otherwise the in-process entry point.
int run(const std::vector<std::string>& args) {
    if (const char* bin = std::getenv("GEORAY_BIN")) {
        std::string cmd = std::string("\"") + bin + "\"";
        for (const auto& a : args) cmd += " \"" + a + "\"";
        cmd += " > /dev/null 2>&1";
        const int st = std::system(cmd.c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }
    std::vector<std::string> store{"georay"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : store) argv.push_back(s.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config round-trips through serialization") {
    RunConfig a = RunConfig::parse("chart.c = 0.1\n# note\nsolve.method = cgnr  # trailing\n\ngrid.dims = 8, 9, 9\n");
    CHECK(a.real("chart.c") == 0.1);
    CHECK(a.str("solve.method") == "cgnr");
    CHECK(a.integers("grid.dims") == std::vector<int>{8, 9, 9});
    const RunConfig b = RunConfig::parse(a.serialize());
    CHECK(a == b);
    CHECK(b.serialize() == a.serialize());
    CHECK(RunConfig() == RunConfig::parse(""));
}

TEST_CASE("config rejects unknown, duplicate and malformed entries") {
    CHECK_THROWS_AS(RunConfig::parse("chart.cc = 1\n"), ValidationError);
    CHECK_THROWS_AS(RunConfig::parse("chart.c = 1\nchart.c = 2\n"), ValidationError);
    CHECK_THROWS_AS(RunConfig::parse("chart.c\n"), ValidationError);
    RunConfig c = RunConfig::parse("chart.c = abc\nsolve.max_iter = 2.5\nchart.auto_c = maybe\n");
    CHECK_THROWS_AS(c.real("chart.c"), ValidationError);
    CHECK_THROWS_AS(c.integer("solve.max_iter"), ValidationError);
    CHECK_THROWS_AS(c.boolean("chart.auto_c"), ValidationError);
    CHECK_THROWS_AS(c.set("nope", "1"), ValidationError);
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/georay.cfg"), ValidationError);
}

TEST_CASE("every schema default is valid") {
    const RunConfig cfg;
    CHECK_NOTHROW(slab_from_config(cfg));
    CHECK_NOTHROW(solve_from_config(cfg));
    CHECK_NOTHROW(phantom_from_config(cfg, cfg.real("chart.c")));
    CHECK_NOTHROW(parse_layer_intervals(cfg.str("layer.intervals")));
}

TEST_CASE("invalid values name the offending key") {
    RunConfig cfg;
    cfg.set("cutoff.F_over_c", "0");
    try {
        slab_from_config(cfg);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("cutoff.F_over_c") != std::string::npos);
    }
    RunConfig d;
    d.set("grid.dims", "8,9");
    CHECK_THROWS_AS(slab_from_config(d), ValidationError);
    RunConfig m;
    m.set("solve.method", "magic");
    CHECK_THROWS_AS(solve_from_config(m), ValidationError);
}

TEST_CASE("environment overrides") {
    CHECK(env_override_name("solve.max_iter") == "GEORAY_OVERRIDE_SOLVE_MAX_ITER");
    ::setenv("GEORAY_OVERRIDE_SOLVE_MAX_ITER", " 7 ", 1);
    RunConfig cfg;
    const auto hit = cfg.apply_env_overrides();
    ::unsetenv("GEORAY_OVERRIDE_SOLVE_MAX_ITER");
    REQUIRE(hit.size() == 1);
    CHECK(hit[0] == "solve.max_iter");
    CHECK(cfg.integer("solve.max_iter") == 7);
}

TEST_CASE("command-line exit statuses") {
    const fs::path d = scratch("exit");
    CHECK(run({"selftest", "--list"}) == exit_ok);
    CHECK(run({"--bogus"}) == exit_usage);
    CHECK(run({"--config", (d / "missing.cfg").string(), "forward"}) == exit_usage);
    const fs::path bad = write_config(d, "input.data = " + (d / "nope.xray").string() + "\n");
    CHECK(run({"--config", bad.string(), "--out", (d / "o1").string(), "reconstruct"}) == exit_usage);
    const fs::path f0 = write_config(d, "symbol.F = 0\n");
    CHECK(run({"--config", f0.string(), "--out", (d / "o2").string(), "symbol-scan"}) == exit_usage);
    const fs::path unk = d / "unknown.cfg";
    std::ofstream(unk) << "solve.speed = 11\n";
    CHECK(run({"--config", unk.string(), "forward"}) == exit_usage);
    fs::remove_all(d);
}

TEST_CASE("forward output is byte-identical across runs and checksummed") {
    const fs::path d = scratch("fwd");
    const fs::path cfg = write_config(d);
    REQUIRE(run({"--config", cfg.string(), "--out", (d / "a").string(), "forward"}) == exit_ok);
    REQUIRE(run({"--config", cfg.string(), "--out", (d / "b").string(), "forward"}) == exit_ok);
    for (const char* f : {"phantom.field", "data.xray"}) CHECK(slurp(d / "a" / f) == slurp(d / "b" / f));
    // manifests differ only in the output directory
    auto strip_out = [](std::string m) {
        const auto a = m.find("output.dir = ");
        return a == std::string::npos ? m : m.erase(a, m.find('\n', a) - a);
    };
    CHECK(strip_out(slurp(d / "a" / "manifest.txt")) == strip_out(slurp(d / "b" / "manifest.txt")));

    const std::string man = slurp(d / "a" / "manifest.txt");
    CHECK(man.find("command = forward") != std::string::npos);
    CHECK(man.find("grid.dims = 8,9,9") != std::string::npos);
    const std::string sum = sha256_file((d / "a" / "data.xray").string());
    CHECK(sum.size() == 64);
    CHECK(man.find(sum + "  data.xray") != std::string::npos);
    fs::remove_all(d);
}

TEST_CASE("reconstruct from written data") {
    const fs::path d = scratch("rec");
    const fs::path cfg = write_config(d, "solve.method = dense_direct\n");
    REQUIRE(run({"--config", cfg.string(), "--out", (d / "fwd").string(), "forward"}) == exit_ok);
    const fs::path cfg2 =
        write_config(d, "solve.method = dense_direct\ninput.data = " + (d / "fwd" / "data.xray").string() + "\n");
    REQUIRE(run({"--config", cfg2.string(), "--out", (d / "rec").string(), "reconstruct"}) == exit_ok);
    for (const char* f : {"f_hat.field", "report.txt", "residuals.csv", "manifest.txt"})
        CHECK(fs::exists(d / "rec" / f));
    const std::string rep = slurp(d / "rec" / "report.txt");
    CHECK(rep.find("converged = true") != std::string::npos);
    fs::remove_all(d);
}

TEST_CASE("sha256 of a known string") {
    const fs::path d = scratch("sha");
    std::ofstream(d / "abc", std::ios::binary) << "abc";
    CHECK(sha256_file((d / "abc").string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    fs::remove_all(d);
}
