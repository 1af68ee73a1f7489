#ifndef BUBBLELOJA_HARNESS_HPP
#define BUBBLELOJA_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bubbleloja/bubbles.hpp"
#include "bubbleloja/green.hpp"
#include "bubbleloja/h_energy.hpp"
#include "bubbleloja/loj_calc.hpp"
#include "bubbleloja/spectrum.hpp"

namespace bubbleloja {

/// Experiment configuration; plain `key = value` files with `#` comments,
/// overridable by CLI flags.
struct RunConfig {
    Eigen::Matrix2d basis = Eigen::Matrix2d::Identity();
    int n = 0;  // 0 = choose per lambda (smallest FFT-friendly grid with N >= 16 lambda)
    std::vector<double> lambdas{16, 24, 32, 48, 64};
    double r = 0.05;
    std::uint64_t seed = 1;
    int probes_per_cell = 25;
    std::vector<double> eps_list{1e-3, 3e-3, 1e-2};
    double flow_lambda0 = 16.0;
    int flow_steps = 60;
    int spectrum_k = 6;
    double spectrum_tol = 1e-5;
    double spectrum_floor = 0.05;  // regression floor, machine-determined
    std::string out_csv;
    std::string out_json;
};

RunConfig load_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

struct CheckResult {
    std::string check;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct Table {
    std::vector<std::string> columns;  // names, units in brackets where useful
    std::vector<std::vector<double>> rows;
};

/// Shortest round-trip decimal rendering.
std::string format_double(double v);
void write_csv(const std::string& path, const Table& t);
/// results/summary JSON: {config_echo, results:[{check,value,bound,pass}],
/// seed, version, wall_time_s}.
void write_json_summary(const std::string& path, const RunConfig& cfg,
                        const std::vector<CheckResult>& results, double wall_time_s);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares on (log x, log y); throws FitDomainError on nonpositive data
/// or fewer than 5 records.
FitResult fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys);

struct ProbeRecord {
    double lambda_true = 0.0;
    double eps = 0.0;
    double dist = 0.0;           // |u - z|_H1 from nearest_bubble
    double dE_l2 = 0.0;
    double dE_hm1 = 0.0;
    double energy_defect = 0.0;  // E(u) - 4 pi / 3
    double lambda_fit = 0.0;
    int n = 0;
    std::uint64_t cell_seed = 0;
    bool ok = true;
};

struct RunResult {
    Table table;
    std::vector<CheckResult> checks;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Energy expansion sweep: per-lambda E, scaled defects, dE(z)[d_lambda z],
/// and the fitted lambda^-2 / lambda^-3 coefficients.
RunResult run_expansion(const RunConfig& cfg);

/// Norm scalings of d_lambda z and the first/second variation bounds.
RunResult run_norms(const RunConfig& cfg);

/// Lojasiewicz probe ensemble.
RunResult run_probe(const RunConfig& cfg);

/// Projected-Jacobi spectrum sweep.
RunResult run_spectrum(const RunConfig& cfg);

/// Wente identities on random pairs and a near-bubble pair.
RunResult run_wente(const RunConfig& cfg);

/// H1-gradient descent with Armijo backtracking from a concentrated bubble.
RunResult run_flow(const RunConfig& cfg);

/// Green principal-term checks on the square and a sheared torus.
RunResult run_greencheck(const RunConfig& cfg);

/// Exponent-calculus golden values (both presets), exact rationals.
RunResult run_exponents(const RunConfig& cfg);

/// Abstract toy-model lemma checks.
RunResult run_toys(const RunConfig& cfg);

/// Random band-limited field: modes |m|_inf <= kmax with |k|^-2 amplitudes,
/// Hermitian-symmetric, mean-zero. Deterministic in seed.
Field random_band_limited(const TorusPtr& torus, int components, int kmax, std::uint64_t seed);

/// FFT-friendly grid for a bubble of scale lambda (resolution guard 16 lambda).
int auto_resolution(double lambda);

}  // namespace bubbleloja

#endif
