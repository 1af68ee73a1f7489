#include "bubbleloja/green.hpp"

#include <cmath>

#include "bubbleloja/parallel.hpp"

namespace bubbleloja {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEulerGamma = 0.57721566490153286061;

// E1(w) + log(w) + gamma, entire in w; series converges fast for w <= 5.
double e1_plus_log_gamma_series(double w) {
    double s = 0.0, t = 1.0;
    for (int m = 1; m <= 60; ++m) {
        t *= -w / m;
        const double add = -t / m;
        s += add;
        if (std::abs(t) < 1e-18 * (1.0 + std::abs(s)) && m > 3) break;
    }
    return s;
}

// Exponential integral E1 for w > 0 (series below 5, Lentz continued
// fraction above).
double exp_int_e1(double w) {
    if (w <= 5.0) return e1_plus_log_gamma_series(w) - kEulerGamma - std::log(w);
    const double tiny = 1e-300;
    double b = w + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 200; ++i) {
        const double a = -double(i) * i;
        b += 2.0;
        d = a * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + a / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-w);
}

// h(s) = (1 - exp(-s/sigma^2))/s and its s-derivative, stable through s = 0.
void smoothed_core(double s, double inv_sig2, double& h, double& hp) {
    const double w = s * inv_sig2;
    if (w < 1e-4) {
        // series of (1 - e^-w)/w in w, times inv_sig2
        const double hw = 1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0;
        const double hwp = -0.5 + w / 3.0 - w * w / 8.0;
        h = inv_sig2 * hw;
        hp = inv_sig2 * inv_sig2 * hwp;
    } else {
        const double em = -std::expm1(-w);  // 1 - e^-w
        h = em / s;
        hp = (std::exp(-w) * inv_sig2 * s - em) / (s * s);
    }
}

}  // namespace

GreenPtr build_green(TorusPtr torus, double sigma_override) {
    auto gt = std::make_shared<GreenTable>();
    gt->torus = torus;
    const double shortest = 2.0 * torus->injectivity_radius;
    const double sigma = sigma_override > 0.0 ? sigma_override : shortest / 3.0;
    gt->ewald_split = sigma;

    // Circumradius bound for wrapped chart points.
    const double rho_c = 0.5 * (torus->basis.col(0).norm() + torus->basis.col(1).norm());

    // Real-lattice points: keep n while exp(-((|n|-rho_c)/sigma)^2) >= 1e-18.
    const double real_cut = 6.4 * sigma + rho_c;
    gt->real_radius = real_cut;
    for (int m1 = -24; m1 <= 24; ++m1)
        for (int m2 = -24; m2 <= 24; ++m2) {
            if (m1 == 0 && m2 == 0) continue;
            const Eigen::Vector2d v = torus->basis * Eigen::Vector2d(m1, m2);
            if (v.norm() <= real_cut) gt->real_points_.push_back(v);
        }

    // Dual-lattice terms: keep k while the largest factor (the Hessian one,
    // 2 pi exp(-pi^2 sigma^2 |k|^2)) is >= 1e-16.
    const double dual_cut = std::sqrt(std::log(2.0 * kPi * 1e16)) / (kPi * sigma);
    gt->dual_radius = dual_cut;
    int m1max = 0, m2max = 0;
    for (int m1 = 0; m1 <= 64; ++m1)
        for (int m2 = -64; m2 <= 64; ++m2) {
            if (m1 == 0 && m2 <= 0) continue;  // half lattice, k and -k folded
            const Eigen::Vector2d k = torus->dual * Eigen::Vector2d(m1, m2);
            const double kk = k.squaredNorm();
            if (std::sqrt(kk) > dual_cut) continue;
            GreenTable::DualTerm t;
            t.m1 = m1;
            t.m2 = m2;
            t.kx = k.x();
            t.ky = k.y();
            const double coeff = std::exp(-kPi * kPi * sigma * sigma * kk) / (2.0 * kPi * kk);
            t.c2 = 2.0 * coeff;
            t.gx = -2.0 * kPi * k.x() * t.c2;
            t.gy = -2.0 * kPi * k.y() * t.c2;
            const double hf = -4.0 * kPi * kPi * t.c2;
            t.hxx = hf * k.x() * k.x();
            t.hxy = hf * k.x() * k.y();
            t.hyy = hf * k.y() * k.y();
            gt->dual_terms_.push_back(t);
            m1max = std::max(m1max, m1);
            m2max = std::max(m2max, std::abs(m2));
        }
    gt->m1_max_ = m1max;
    gt->m2_max_ = m2max;

    // Additive constant: zero grid mean of Ghat, origin excluded (the value
    // there is -inf; the continuum integral of Ghat is zero analytically).
    const int n = torus->n;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    std::vector<double> partial(nn, 0.0);
    parallel_for(nn, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            if (idx == 0) continue;
            const int i = int(idx / n), j = int(idx % n);
            partial[idx] = gt->eval(torus->point(i, j), GreenTable::kValue).G;
        }
    });
    long double acc = 0.0;
    for (std::size_t i = 1; i < nn; ++i) acc += partial[i];
    gt->normalization = double(acc / (long double)(nn - 1));
    return gt;
}

GreenEval GreenTable::eval(const Eigen::Vector2d& p, int parts) const {
    const Eigen::Vector2d x = torus->wrap(p);
    const double sigma = ewald_split;
    const double inv_sig2 = 1.0 / (sigma * sigma);
    const bool want_value = parts & kValue;
    const bool want_derivs = parts & kDerivs;

    GreenEval out;
    double val = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;

    // Dual series via per-point complex powers.
    {
        const double th1 = 2.0 * kPi * torus->dual.col(0).dot(x);
        const double th2 = 2.0 * kPi * torus->dual.col(1).dot(x);
        const Complex e1(std::cos(th1), std::sin(th1));
        const Complex e2(std::cos(th2), std::sin(th2));
        std::vector<Complex> p1(m1_max_ + 1), p2p(m2_max_ + 1);
        p1[0] = 1.0;
        for (int m = 1; m <= m1_max_; ++m) p1[m] = p1[m - 1] * e1;
        p2p[0] = 1.0;
        for (int m = 1; m <= m2_max_; ++m) p2p[m] = p2p[m - 1] * e2;
        for (const auto& t : dual_terms_) {
            const int m1 = int(t.m1), m2 = int(t.m2);
            Complex w = p1[m1];
            w *= (m2 >= 0) ? p2p[m2] : std::conj(p2p[-m2]);
            const double c = w.real(), s = w.imag();
            if (want_value) val += t.c2 * c;
            if (want_derivs) {
                grad.x() += t.gx * s;
                grad.y() += t.gy * s;
                hxx += t.hxx * c;
                hxy += t.hxy * c;
                hyy += t.hyy * c;
            }
        }
    }

    // Off-origin real-lattice terms (shared by G and J).
    for (const auto& nvec : real_points_) {
        const Eigen::Vector2d xi = x - nvec;
        const double s = xi.squaredNorm();
        const double w = s * inv_sig2;
        if (w > 45.0) continue;
        const double e = std::exp(-w);
        if (want_value) val += 0.5 * exp_int_e1(w);
        if (want_derivs) {
            const double g = -e / s;
            grad += g * xi;
            const double q = 2.0 * e * (inv_sig2 / s + 1.0 / (s * s));
            hxx += g + q * xi.x() * xi.x();
            hxy += q * xi.x() * xi.y();
            hyy += g + q * xi.y() * xi.y();
        }
    }

    // n = 0 term combined with +log|x|: analytic through x = 0.
    const double s0 = x.squaredNorm();
    const double w0 = s0 * inv_sig2;
    if (want_value) {
        const double core = (w0 < 5.0) ? (e1_plus_log_gamma_series(w0) - kEulerGamma)
                                       : (exp_int_e1(w0) + std::log(w0));
        val += 0.5 * core + std::log(sigma);
    }
    if (want_derivs) {
        double h, hp;
        smoothed_core(s0, inv_sig2, h, hp);
        grad += h * x;
        hxx += h + 2.0 * hp * x.x() * x.x();
        hxy += 2.0 * hp * x.x() * x.y();
        hyy += h + 2.0 * hp * x.y() * x.y();
    }

    // Constant terms of the splitting and the mean normalisation.
    out.J = val - kPi * sigma * sigma / 2.0 - normalization;
    out.dJ = grad;
    out.d2J << hxx, hxy, hxy, hyy;

    const double r2 = s0;
    out.G = out.J - 0.5 * std::log(r2);
    out.dG = out.dJ - x / r2;
    Eigen::Matrix2d log_hess;
    log_hess << (r2 - 2.0 * x.x() * x.x()), -2.0 * x.x() * x.y(),
                -2.0 * x.x() * x.y()      , (r2 - 2.0 * x.y() * x.y());
    log_hess /= r2 * r2;
    out.d2G = out.d2J - log_hess;
    return out;
}

double GreenTable::mixed_trace_at_coincidence() const {
    const double sigma = ewald_split;
    const double inv_sig2 = 1.0 / (sigma * sigma);
    // -Delta J(0): theta-like sums over both lattices.
    double real_sum = 1.0;  // n = 0
    for (const auto& nvec : real_points_) {
        const double w = nvec.squaredNorm() * inv_sig2;
        if (w < 45.0) real_sum += std::exp(-w);
    }
    double dual_sum = 0.0;
    for (const auto& t : dual_terms_) {
        const double kk = t.kx * t.kx + t.ky * t.ky;
        dual_sum += 2.0 * std::exp(-kPi * kPi * sigma * sigma * kk);
    }
    return -(2.0 * inv_sig2 * real_sum - 2.0 * kPi * dual_sum);
}

RegularPart regular_part(const GreenTable& gt, const Eigen::Vector2d& x) {
    if (x.norm() >= gt.torus->iota)
        throw ChartDomainError("regular_part requested outside the chart |x| < iota");
    const GreenEval e = gt.eval(x);
    return RegularPart{e.J, -e.dJ};  // grad_y J_a(x,0) = -grad_x J(x)
}

double script_J(const GreenTable& gt, const Eigen::Vector2d&) {
    return gt.mixed_trace_at_coincidence();
}

double bergman_mixed(const GreenTable& gt) {
    // 4 Re d_z d_zetabar G_a(x,0) = -trace Hess Ghat(x) for x off the
    // diagonal; the -log singularity has identically vanishing mixed trace.
    const double delta = 1e-3;
    const int n_angles = 8;
    double sum = 0.0, mn = 1e300, mx = -1e300;
    for (int a = 0; a < n_angles; ++a) {
        const double th = 2.0 * kPi * (a + 0.3) / n_angles;
        const Eigen::Vector2d x(delta * std::cos(th), delta * std::sin(th));
        const double v = -gt.eval(x, GreenTable::kDerivs).d2G.trace();
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mx - mn > 1e-7)
        throw GeometryError("bergman_mixed: angular spread exceeds tolerance");
    return sum / n_angles;
}

}  // namespace bubbleloja
