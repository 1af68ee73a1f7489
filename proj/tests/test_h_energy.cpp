#include <doctest.h>

#include <cmath>

#include "bubbleloja/h_energy.hpp"
#include "bubbleloja/harness.hpp"

using namespace bubbleloja;

namespace {

constexpr double kPi = 3.14159265358979323846;

TorusPtr square(int n) { return make_grid(Eigen::Matrix2d::Identity(), n); }

Field random3(const TorusPtr& t, std::uint64_t seed) {
    return random_band_limited(t, 3, t->n / 8, seed);
}

double fd_energy_derivative(const Field& u, const Field& v, double h) {
    Field up(u), um(u);
    up.axpy(h, v);
    um.axpy(-h, v);
    return (energy(up).E - energy(um).E) / (2.0 * h);
}

}  // namespace

TEST_CASE("energy: zero field and parity of the cubic term") {
    auto t = square(64);
    Field zero(t, 3);
    const EnergyReport r0 = energy(zero);
    CHECK(r0.E == 0.0);
    CHECK(r0.V == 0.0);

    Field u = random3(t, 3);
    const EnergyReport ru = energy(u);
    const EnergyReport rm = energy(scaled(u, -1.0));
    CHECK(ru.E + rm.E == doctest::Approx(2.0 * ru.dirichlet).epsilon(1e-10));
    CHECK(ru.E == doctest::Approx(ru.dirichlet - 2.0 * ru.V).epsilon(1e-12));
}

TEST_CASE("first variation: finite-difference oracle and E16 identity") {
    auto t = square(64);
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        Field u = scaled(random3(t, seed), 0.8);
        Field v = random3(t, seed + 100);
        const FirstVariation fv = first_variation(u);
        const double de = l2_dot(fv.rho.density, v);
        const double h = 1e-4 / std::max(1.0, h1_norm(v));
        const double fd = fd_energy_derivative(u, v, h);
        const double vn = h1_norm(v);
        CHECK(std::abs(de - fd) <= 1e-6 * (1.0 + vn * vn * vn));

        // E(u) = (1/6)|u|^2 + (1/3) dE(u)[u]
        const double e16 = energy(u).E - h1_dot(u, u) / 6.0 - l2_dot(fv.rho.density, u) / 3.0;
        CHECK(std::abs(e16) <= 1e-9 * std::max(1.0, std::abs(energy(u).E)));
    }
}

TEST_CASE("second variation: symmetry, u = 0 case, finite-difference oracle") {
    auto t = square(64);
    Field u = scaled(random3(t, 21), 0.7);
    Field w = random3(t, 22);
    Field v = random3(t, 23);

    CHECK(second_variation(u, w, v) == doctest::Approx(second_variation(u, v, w)).epsilon(1e-10));

    Field zero(t, 3);
    CHECK(second_variation(zero, w, w) == doctest::Approx(h1_dot(w, w)).epsilon(1e-12));

    // d2E(u)[w,v] ~ (dE(u+hw)[v] - dE(u-hw)[v]) / 2h
    const double h = 1e-5 / std::max(1.0, h1_norm(w));
    Field up(u), um(u);
    up.axpy(h, w);
    um.axpy(-h, w);
    const double fd =
        (l2_dot(first_variation(up).rho.density, v) - l2_dot(first_variation(um).rho.density, v)) /
        (2.0 * h);
    const double d2 = second_variation(u, w, v);
    CHECK(std::abs(d2 - fd) <= 1e-5 * std::max(1.0, std::abs(d2)));
}

TEST_CASE("second variation is Lipschitz in the base point") {
    auto t = square(64);
    Field u1 = scaled(random3(t, 31), 0.6);
    Field u2 = scaled(random3(t, 32), 0.6);
    Field w = random3(t, 33);
    Field v = random3(t, 34);
    const double lhs = std::abs(second_variation(u1, w, v) - second_variation(u2, w, v));
    const double prod = h1_norm(sub(u1, u2)) * h1_norm(w) * h1_norm(v);
    // Wente-type bound with a modest universal constant
    CHECK(lhs <= 1.0 * prod);
}

TEST_CASE("wente_solve: degenerate pair, single mode, sharp constant") {
    auto t = square(64);
    Field a = Field::from_values(t, 1, [&] {
        std::vector<double> v(t->n * t->n);
        for (int i = 0; i < t->n; ++i)
            for (int j = 0; j < t->n; ++j)
                v[i * t->n + j] = std::sin(2 * kPi * i / t->n);
        return v;
    }());
    Field b = Field::from_values(t, 1, [&] {
        std::vector<double> v(t->n * t->n);
        for (int i = 0; i < t->n; ++i)
            for (int j = 0; j < t->n; ++j)
                v[i * t->n + j] = std::sin(2 * kPi * j / t->n);
        return v;
    }());

    CHECK(h1_norm(wente_solve(a, a)) < 1e-12);

    Field phi = wente_solve(a, b);
    for (int i = 0; i < t->n; i += 9)
        for (int j = 0; j < t->n; j += 7) {
            const double want =
                0.5 * std::cos(2 * kPi * i / t->n) * std::cos(2 * kPi * j / t->n);
            CHECK(phi.value(0, i, j) == doctest::Approx(want).epsilon(1e-10));
        }

    // sharp-constant probe on random pairs
    const double cw = std::sqrt(3.0 / (32.0 * kPi));
    for (std::uint64_t s : {41ull, 42ull, 43ull, 44ull}) {
        Field ra = random_band_limited(t, 1, 8, s);
        Field rb = random_band_limited(t, 1, 8, s + 50);
        const double bound = cw * h1_norm(ra) * h1_norm(rb);
        CHECK(h1_norm(wente_solve(ra, rb)) <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("wente energy and lift: W = 8 E(u), lower bound, dW relation") {
    auto t = square(64);
    double minw = 1e300;
    for (std::uint64_t s : {1ull, 2ull, 3ull, 4ull, 5ull, 6ull, 7ull, 8ull}) {
        Field a = random_band_limited(t, 1, 8, s);
        Field b = random_band_limited(t, 1, 8, s + 1000);
        a *= 1.0 / h1_norm(a);
        b *= 1.0 / h1_norm(b);
        const WenteLift lift = wente_energy_and_lift(a, b);
        CHECK(std::abs(8.0 * energy(lift.u).E - lift.W) <= 1e-8 * lift.W);
        // scaling invariance: dE(u)[u] = 0
        const FirstVariation fv = first_variation(lift.u);
        CHECK(std::abs(l2_dot(fv.rho.density, lift.u)) <= 1e-8 * std::max(1.0, lift.W));
        minw = std::min(minw, lift.W);
    }
    CHECK(minw >= 32.0 * kPi / 3.0 - 1e-9);

    // dW(a,b)[(w1, 0)] = 4 W^{1/2} dE(u)[(w1, 0, 0)] by finite differences of W
    Field a = random_band_limited(t, 1, 6, 71);
    Field b = random_band_limited(t, 1, 6, 72);
    a *= 1.0 / h1_norm(a);
    b *= 1.0 / h1_norm(b);
    const WenteLift lift = wente_energy_and_lift(a, b);
    Field w1 = random_band_limited(t, 1, 6, 73);
    auto wente_of = [](const Field& aa, const Field& bb) {
        Field phi = wente_solve(aa, bb);
        const double pn = h1_norm(phi);
        const double na = h1_norm(aa), nb = h1_norm(bb);
        return na * na * nb * nb / (pn * pn);
    };
    const double h = 1e-5;
    Field ap(a), am(a);
    ap.axpy(h, w1);
    am.axpy(-h, w1);
    const double dw = (wente_of(ap, b) - wente_of(am, b)) / (2.0 * h);
    // dE(u)[(w1,0,0)]
    const std::size_t nn = a.grid_size();
    std::vector<double> vv(3 * nn, 0.0);
    std::copy(w1.values().begin(), w1.values().end(), vv.begin());
    Field w3 = Field::from_values(t, 3, std::move(vv));
    const double de = l2_dot(first_variation(lift.u).rho.density, w3);
    CHECK(std::abs(dw - 4.0 * std::sqrt(lift.W) * de) <= 1e-6 * std::max(1.0, std::abs(dw)));

    // {a,b} = 0 pair has infinite Wente energy
    Field c = a;
    CHECK_THROWS_AS(wente_energy_and_lift(a, c), DegeneratePair);
}

TEST_CASE("jacobi operator: identity at u = 0, duality, self-adjointness") {
    auto t = square(64);
    Field zero(t, 3);
    Field w = random3(t, 81);
    Field lw = jacobi_apply(zero, w);
    CHECK(h1_norm(sub(lw, w)) <= 1e-12 * h1_norm(w));

    Field u = scaled(random3(t, 82), 0.7);
    Field v = random3(t, 83);
    const JacobiOperator op(u);
    const double dual = h1_dot(op.apply(w), v);
    const double d2 = second_variation(u, w, v);
    CHECK(std::abs(dual - d2) <= 1e-8 * std::max(1.0, std::abs(d2)));
    const double sym = h1_dot(w, op.apply(v));
    CHECK(std::abs(dual - sym) <= 1e-8 * std::max(1.0, std::abs(dual)));
}

TEST_CASE("first variation flags an aliasing-scale mean residue") {
    auto t = square(64);
    Field u = random3(t, 91);
    CHECK_NOTHROW(first_variation(u));
}
