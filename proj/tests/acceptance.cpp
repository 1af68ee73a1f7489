// Acceptance suite: one line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "bubbleloja/harness.hpp"

using namespace bubbleloja;

namespace {

struct Criterion {
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
};

std::vector<Criterion> g_results;

template <class Fn>
void run_criterion(const std::string& name, Fn&& fn) {
    Criterion c;
    c.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        c.detail = fn(c.pass);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %-28s %7.1fs  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.seconds,
                c.detail.c_str());
    std::fflush(stdout);
    g_results.push_back(c);
}

std::string describe(const RunResult& res) {
    std::string s;
    for (const auto& c : res.checks) {
        if (!s.empty()) s += "; ";
        s += c.check + "=" + format_double(c.value) + (c.pass ? "" : " (FAIL)");
    }
    return s;
}

}  // namespace

int main() {
    // 1. Green principal term
    run_criterion("01 green-principal-term", [](bool& pass) {
        RunConfig cfg;
        const RunResult res = run_greencheck(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 2-4 share the lambda sweep at N = 1024
    run_criterion("02 energy-expansion", [](bool& pass) {
        RunConfig cfg;
        cfg.n = 1024;
        cfg.lambdas = {16, 24, 32, 48, 64};
        const RunResult res = run_expansion(cfg);
        pass = res.pass();
        return describe(res);
    });

    run_criterion("03+04 norm-and-variation", [](bool& pass) {
        RunConfig cfg;
        cfg.n = 1024;
        cfg.lambdas = {16, 24, 32, 48, 64};
        const RunResult res = run_norms(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 5. exponent calculus golden values
    run_criterion("05 exponent-golden", [](bool& pass) {
        RunConfig cfg;
        const RunResult res = run_exponents(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 6. Wente identities
    run_criterion("06 wente-identities", [](bool& pass) {
        RunConfig cfg;
        cfg.n = 256;
        const RunResult res = run_wente(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 7. calculus oracles on random smooth fields
    run_criterion("07 calculus-oracles", [](bool& pass) {
        auto torus = make_grid(Eigen::Matrix2d::Identity(), 128);
        double worst_de = 0.0, worst_d2e = 0.0, worst_dual = 0.0, worst_e16 = 0.0;
        for (int k = 0; k < 20; ++k) {
            Field u = random_band_limited(torus, 3, 16, 1000 + k);
            u *= 0.8 / h1_norm(u);
            Field v = random_band_limited(torus, 3, 16, 2000 + k);
            Field w = random_band_limited(torus, 3, 16, 3000 + k);

            const FirstVariation fv = first_variation(u);
            const double de = l2_dot(fv.rho.density, v);
            const double h = 1e-4 / std::max(1.0, h1_norm(v));
            Field up(u), um(u);
            up.axpy(h, v);
            um.axpy(-h, v);
            const double fd = (energy(up).E - energy(um).E) / (2.0 * h);
            worst_de = std::max(worst_de, std::abs(de - fd) / std::max(1.0, std::abs(de)));

            const double d2 = second_variation(u, w, v);
            Field uw(u), uw2(u);
            const double h2 = 1e-5 / std::max(1.0, h1_norm(w));
            uw.axpy(h2, w);
            uw2.axpy(-h2, w);
            const double fd2 = (l2_dot(first_variation(uw).rho.density, v) -
                                l2_dot(first_variation(uw2).rho.density, v)) /
                               (2.0 * h2);
            worst_d2e = std::max(worst_d2e, std::abs(d2 - fd2) / std::max(1.0, std::abs(d2)));

            const double dual = h1_dot(jacobi_apply(u, w), v);
            worst_dual = std::max(worst_dual, std::abs(dual - d2) / std::max(1.0, std::abs(d2)));

            const double e16 =
                energy(u).E - h1_dot(u, u) / 6.0 - l2_dot(fv.rho.density, u) / 3.0;
            worst_e16 = std::max(worst_e16, std::abs(e16));
        }
        pass = worst_de <= 1e-5 && worst_d2e <= 1e-5 && worst_dual <= 1e-8 && worst_e16 <= 1e-9;
        return "dE_fd=" + format_double(worst_de) + "; d2E_fd=" + format_double(worst_d2e) +
               "; jacobi_dual=" + format_double(worst_dual) + "; E16=" + format_double(worst_e16);
    });

    // 8. spectral gap signature; lambda = 64 runs at the guard-respecting
    //    resolution N = 1024 (same lambda/N ratio as the N = 512 base case)
    run_criterion("08 spectral-gap", [](bool& pass) {
        RunConfig cfg;
        cfg.lambdas = {32, 64};
        cfg.n = 0;  // per-lambda resolution: 512 and 1024
        cfg.spectrum_k = 6;
        cfg.spectrum_tol = 1e-5;
        const RunResult res = run_spectrum(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 9. Lojasiewicz probe ensemble
    run_criterion("09 lojasiewicz-probe", [](bool& pass) {
        RunConfig cfg;
        cfg.lambdas = {24, 32, 48};
        cfg.eps_list = {1e-3, 3e-3, 1e-2};
        cfg.probes_per_cell = 23;  // 3 x 3 x 23 + 3 baselines = 210 records
        cfg.seed = 20240817;
        const RunResult res = run_probe(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 10. gap signature along the gradient flow
    run_criterion("10 flow-gap-signature", [](bool& pass) {
        RunConfig cfg;
        cfg.n = 512;
        cfg.flow_lambda0 = 16.0;
        cfg.flow_steps = 60;
        const RunResult res = run_flow(cfg);
        pass = res.pass();
        return describe(res);
    });

    // 11. abstract toy models
    run_criterion("11 abstract-toys", [](bool& pass) {
        RunConfig cfg;
        const RunResult res = run_toys(cfg);
        pass = res.pass();
        return describe(res);
    });

    int failures = 0;
    for (const auto& c : g_results)
        if (!c.pass) ++failures;
    std::printf("%d/%zu criteria passed\n", int(g_results.size()) - failures, g_results.size());
    return failures == 0 ? 0 : 1;
}
