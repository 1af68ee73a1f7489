#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bubbleloja/harness.hpp"

using namespace bubbleloja;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("fit_loglog: exact power law, constant data, domain errors") {
    std::vector<double> xs, ys;
    for (double x : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        xs.push_back(x);
        ys.push_back(3.0 * x * x);
    }
    const FitResult f = fit_loglog(xs, ys);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

    std::fill(ys.begin(), ys.end(), 5.0);
    CHECK(fit_loglog(xs, ys).slope == doctest::Approx(0.0).epsilon(1e-12));

    ys[0] = -1.0;
    CHECK_THROWS_AS(fit_loglog(xs, ys), FitDomainError);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 2.0}), FitDomainError);
}

TEST_CASE("config: parse, comments, overrides, diagnostics") {
    const std::string path = "test_config.cfg";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "n = 128\n";
        out << "lambdas = 8, 12\n";
        out << "r = 0.04  # trailing comment\n";
        out << "seed = 9\n";
    }
    RunConfig cfg = load_config(path);
    CHECK(cfg.n == 128);
    CHECK(cfg.lambdas == std::vector<double>{8.0, 12.0});
    CHECK(cfg.r == 0.04);
    CHECK(cfg.seed == 9);
    apply_override(cfg, "flow_steps", "7");
    CHECK(cfg.flow_steps == 7);
    CHECK_THROWS_AS(apply_override(cfg, "bogus", "1"), ConfigError);

    {
        std::ofstream out(path);
        out << "garbage line without equals\n";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("auto_resolution honours the 16 lambda guard") {
    CHECK(auto_resolution(8.0) == 256);
    CHECK(auto_resolution(16.0) == 256);
    CHECK(auto_resolution(24.0) == 384);
    CHECK(auto_resolution(32.0) == 512);
    CHECK(auto_resolution(48.0) == 768);
    CHECK(auto_resolution(64.0) == 1024);
}

TEST_CASE("format_double: shortest round trip") {
    for (double v : {0.1, 1.0 / 3.0, 39.47841760435743, -6.283185307179586, 1e-300}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("csv output is byte-identical across repeated runs") {
    RunConfig cfg;
    cfg.lambdas = {8.0};
    cfg.n = 128;
    cfg.eps_list = {1e-2};
    cfg.probes_per_cell = 3;
    cfg.seed = 7;
    cfg.out_csv = "probe_a.csv";
    const RunResult a = run_probe(cfg);
    write_csv("probe_a.csv", a.table);
    const RunResult b = run_probe(cfg);
    write_csv("probe_b.csv", b.table);
    CHECK(slurp("probe_a.csv") == slurp("probe_b.csv"));
    CHECK(!a.table.rows.empty());
    std::filesystem::remove("probe_a.csv");
    std::filesystem::remove("probe_b.csv");
}

TEST_CASE("probe: pure-bubble baseline rows carry zero distance") {
    RunConfig cfg;
    cfg.lambdas = {8.0};
    cfg.n = 128;
    cfg.eps_list = {1e-2};
    cfg.probes_per_cell = 3;
    cfg.seed = 11;
    const RunResult res = run_probe(cfg);
    REQUIRE(!res.table.rows.empty());
    // first row of each cell is the eps = 0 baseline
    const auto& row = res.table.rows.front();
    CHECK(row[4] == 0.0);       // eps
    CHECK(row[5] <= 1e-7);      // dist
    CHECK(row[6] > 0.0);        // dE_l2 of the bubble itself
}

TEST_CASE("expansion and green checks run at smoke scale") {
    RunConfig cfg;
    cfg.lambdas = {8.0, 10.0, 12.0, 14.0, 16.0};
    cfg.n = 256;
    const RunResult res = run_expansion(cfg);
    CHECK(res.table.rows.size() == 5);
    // E > 4 pi / 3 for every lambda in the sweep
    bool above = true;
    for (const auto& row : res.table.rows) above = above && row[5] > 0.0;
    CHECK(above);

    const RunResult green = run_greencheck(cfg);
    CHECK(green.pass());
}

TEST_CASE("toy and exponent runs pass") {
    RunConfig cfg;
    CHECK(run_exponents(cfg).pass());
    CHECK(run_toys(cfg).pass());
}
