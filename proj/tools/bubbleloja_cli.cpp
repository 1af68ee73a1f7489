// Command-line driver: reproducible experiment runs with CSV + JSON reports.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>

#include "bubbleloja/harness.hpp"
#include "bubbleloja/loj_calc.hpp"

using namespace bubbleloja;

namespace {

struct CommonFlags {
    std::string config;
    std::string out_csv;
    std::string out_json;
    std::vector<double> lambdas;
    std::vector<double> eps;
    int n = -1;
    double r = -1.0;
    long long seed = -1;
    int probes = -1;
    int flow_steps = -1;
    double flow_lambda0 = -1.0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "key = value config file");
    cmd->add_option("--out-csv", f.out_csv, "CSV output path");
    cmd->add_option("--out-json", f.out_json, "JSON summary path");
    cmd->add_option("--lambda", f.lambdas, "bubble scales");
    cmd->add_option("--eps", f.eps, "perturbation sizes");
    cmd->add_option("--n", f.n, "grid resolution (0 = auto per lambda)");
    cmd->add_option("--r", f.r, "cutoff radius");
    cmd->add_option("--seed", f.seed, "RNG seed");
    cmd->add_option("--probes", f.probes, "probes per (lambda, eps) cell");
    cmd->add_option("--flow-steps", f.flow_steps, "gradient descent steps");
    cmd->add_option("--flow-lambda0", f.flow_lambda0, "initial bubble scale for flow");
}

RunConfig build_config(const CommonFlags& f, const char* default_csv) {
    RunConfig cfg;
    if (!f.config.empty()) cfg = load_config(f.config);
    if (!f.lambdas.empty()) cfg.lambdas = f.lambdas;
    if (!f.eps.empty()) cfg.eps_list = f.eps;
    if (f.n >= 0) cfg.n = f.n;
    if (f.r > 0) cfg.r = f.r;
    if (f.seed >= 0) cfg.seed = std::uint64_t(f.seed);
    if (f.probes > 0) cfg.probes_per_cell = f.probes;
    if (f.flow_steps > 0) cfg.flow_steps = f.flow_steps;
    if (f.flow_lambda0 > 0) cfg.flow_lambda0 = f.flow_lambda0;
    if (!f.out_csv.empty()) cfg.out_csv = f.out_csv;
    if (cfg.out_csv.empty()) cfg.out_csv = default_csv;
    if (!f.out_json.empty()) cfg.out_json = f.out_json;
    return cfg;
}

int finish(const RunConfig& cfg, const RunResult& res, double wall_s) {
    write_csv(cfg.out_csv, res.table);
    if (!cfg.out_json.empty()) write_json_summary(cfg.out_json, cfg, res.checks, wall_s);
    for (const auto& c : res.checks)
        std::printf("%-40s value=%- 14.8g bound=%- 12.6g %s\n", c.check.c_str(), c.value, c.bound,
                    c.pass ? "PASS" : "FAIL");
    return res.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adapted-bubble numerics on flat unit-area tori"};
    app.require_subcommand(1);

    std::map<std::string, CommonFlags> flags;
    std::string exp_preset = "h-energy-l2";
    std::string exp_rates;

    const std::vector<std::string> names = {"expansion", "norms",  "probe", "spectrum",
                                            "exponents", "wente",  "flow",  "greencheck",
                                            "toys"};
    for (const auto& name : names) {
        auto* cmd = app.add_subcommand(name);
        add_common(cmd, flags[name]);
        if (name == "exponents") {
            cmd->add_option("--preset", exp_preset, "h-energy-l2 | h-energy-hm1 | custom");
            cmd->add_option("--rates", exp_rates,
                            "custom rates g0,g1,g2,g3,g4;s0,s1,s2,s3,s4;nu (exact rationals)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\n";
        return app.exit(e) == 0 ? 0 : 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    try {
        if (cmd == "exponents" && exp_preset == "custom" && !exp_rates.empty()) {
            // parse "g0,..,g4;s0,..,s4;nu" as exact rationals and print exponents
            DecayRates r;
            std::stringstream ss(exp_rates);
            std::string part;
            std::vector<std::string> parts;
            while (std::getline(ss, part, ';')) parts.push_back(part);
            if (parts.size() != 3) throw ConfigError("--rates expects three ';' groups");
            auto fill = [](const std::string& s, std::array<Rational, 5>& dst) {
                std::stringstream gs(s);
                std::string tok;
                int i = 0;
                while (std::getline(gs, tok, ',') && i < 5) dst[i++] = Rational::parse(tok);
                if (i != 5) throw ConfigError("expected 5 entries in rate group");
            };
            fill(parts[0], r.gamma);
            fill(parts[1], r.sigma);
            r.nu = Rational::parse(parts[2]);
            const LojExponents e =
                r.gamma[0] == Rational(0) ? exponents_log(r) : exponents_poly(r);
            if (e.regime == LojExponents::kPoly) {
                std::printf("alpha = (%s, %s, %s)\nbeta  = (%s, %s, %s)\n", e.alpha[0].str().c_str(),
                            e.alpha[1].str().c_str(), e.alpha[2].str().c_str(),
                            e.beta[0].str().c_str(), e.beta[1].str().c_str(),
                            e.beta[2].str().c_str());
            } else {
                std::printf("eta = (%s, %s, %s)\n", e.alpha[0].str().c_str(),
                            e.alpha[1].str().c_str(), e.alpha[2].str().c_str());
            }
            return 0;
        }

        RunConfig cfg = build_config(flags[cmd], (cmd + ".csv").c_str());
        RunResult res;
        if (cmd == "expansion") res = run_expansion(cfg);
        else if (cmd == "norms") res = run_norms(cfg);
        else if (cmd == "probe") res = run_probe(cfg);
        else if (cmd == "spectrum") {
            if (flags[cmd].lambdas.empty()) cfg.lambdas = {32, 64};
            if (cfg.n == 0) {
                // guard-respecting resolutions per scale
            }
            res = run_spectrum(cfg);
        } else if (cmd == "wente") res = run_wente(cfg);
        else if (cmd == "flow") res = run_flow(cfg);
        else if (cmd == "greencheck") {
            res = run_greencheck(cfg);
            if (!res.table.rows.empty())
                std::printf("scriptJ = %.9f, bergman agreement within %.3g\n",
                            res.table.rows.front()[3], res.checks.back().value);
        } else if (cmd == "exponents") {
            res = run_exponents(cfg);
            const LojExponents e = exp_preset == "h-energy-hm1"
                                       ? exponents_poly(h_energy_hm1_rates())
                                       : exponents_poly(h_energy_l2_rates());
            std::printf("alpha = (%s, %s, %s)\nbeta  = (%s, %s, %s)\n", e.alpha[0].str().c_str(),
                        e.alpha[1].str().c_str(), e.alpha[2].str().c_str(),
                        e.beta[0].str().c_str(), e.beta[1].str().c_str(), e.beta[2].str().c_str());
        } else if (cmd == "toys") res = run_toys(cfg);

        return finish(cfg, res, wall());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
