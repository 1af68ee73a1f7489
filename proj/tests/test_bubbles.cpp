#include <doctest.h>

#include <cmath>
#include <random>

#include "bubbleloja/bubbles.hpp"
#include "bubbleloja/h_energy.hpp"
#include "bubbleloja/harness.hpp"

using namespace bubbleloja;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Setup {
    TorusPtr torus;
    GreenPtr green;
    CutoffProfile cut;
    explicit Setup(int n)
        : torus(make_grid(Eigen::Matrix2d::Identity(), n)),
          green(build_green(torus)),
          cut(0.05, torus->iota) {}
};

Eigen::Matrix3d rot_xyz(double a, double b, double c) {
    return (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitX()) *
            Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(c, Eigen::Vector3d::UnitZ()))
        .toRotationMatrix();
}

}  // namespace

TEST_CASE("std_bubble: poles, equator, unit norm") {
    CHECK((std_bubble(Eigen::Vector2d(0, 0)) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
    CHECK((std_bubble(Eigen::Vector2d(1, 0)) - Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unif(-30.0, 30.0);
    for (int k = 0; k < 1000; ++k) {
        const Eigen::Vector2d x(unif(rng), unif(rng));
        CHECK(std::abs(std_bubble(x).norm() - 1.0) < 1e-14);
    }
    // partials agree with finite differences
    for (int k = 0; k < 20; ++k) {
        const Eigen::Vector2d x(0.1 * unif(rng), 0.1 * unif(rng));
        Eigen::Vector3d d1, d2;
        std_bubble_partials(x, d1, d2);
        const double h = 1e-6;
        const Eigen::Vector3d f1 =
            (std_bubble(x + Eigen::Vector2d(h, 0)) - std_bubble(x - Eigen::Vector2d(h, 0))) /
            (2 * h);
        const Eigen::Vector3d f2 =
            (std_bubble(x + Eigen::Vector2d(0, h)) - std_bubble(x - Eigen::Vector2d(0, h))) /
            (2 * h);
        CHECK((d1 - f1).norm() < 1e-8);
        CHECK((d2 - f2).norm() < 1e-8);
    }
}

TEST_CASE("cutoff profile: plateaus, support, j interpolation") {
    CutoffProfile cut(0.05, 0.25);
    CHECK(cut.psi(0.0) == 1.0);
    CHECK(cut.psi(0.024) == 1.0);
    CHECK(cut.psi(0.051) == 0.0);
    CHECK(cut.phi(0.05) == 1.0);
    CHECK(cut.phi(0.101) == 0.0);
    CHECK(cut.j(0.0) == doctest::Approx(1.0 / (0.05 * 0.05)));
    CHECK(cut.j(0.08) == doctest::Approx(1.0 / (0.08 * 0.08)));
    for (double rho : {0.01, 0.03, 0.04, 0.06, 0.08}) {
        CHECK(cut.psi(rho) >= 0.0);
        CHECK(cut.psi(rho) <= 1.0);
        const double h = 1e-7;
        CHECK(cut.dj(rho) ==
              doctest::Approx((cut.j(rho + h) - cut.j(rho - h)) / (2 * h)).epsilon(1e-5));
        CHECK(cut.dphi(rho) ==
              doctest::Approx((cut.phi(rho + h) - cut.phi(rho - h)) / (2 * h)).epsilon(1e-5));
    }
    CHECK_THROWS_AS(CutoffProfile(0.07, 0.25), GeometryError);  // r >= iota/4
}

TEST_CASE("adapted bubble: preconditions") {
    Setup s(128);
    BubbleParams p;
    p.lambda = 8.0;
    CHECK_NOTHROW(adapted_bubble(*s.green, s.cut, p));  // 8 = 128/16 boundary is fine
    p.lambda = 6.0;
    CHECK_THROWS_AS(adapted_bubble(*s.green, s.cut, p), GeometryError);  // below lambda_min
    p.lambda = 16.0;
    CHECK_THROWS_AS(adapted_bubble(*s.green, s.cut, p), UnderResolvedBubble);  // 16 > 128/16
    p.lambda = 8.0;
    p.rot(0, 0) = 2.0;
    CHECK_THROWS_AS(adapted_bubble(*s.green, s.cut, p), GeometryError);
}

TEST_CASE("adapted bubble: piecewise formulas coincide on the overlap rings") {
    // sample the two closed-form pieces directly on rings |x| in {2r, 0.99 iota}
    Setup s(128);
    const double lam = 8.0;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, 2 * kPi);
    for (double radius : {2.0 * s.cut.r(), 0.99 * s.torus->iota}) {
        for (int k = 0; k < 24; ++k) {
            const double th = ang(rng);
            const Eigen::Vector2d x(radius * std::cos(th), radius * std::sin(th));
            const GreenEval ge = s.green->eval(x);
            // chart expression at phi = 0
            const Eigen::Vector2d grad_yJ = -ge.dJ;
            const Eigen::Vector2d chart =
                2.0 / lam * (x / x.squaredNorm() + grad_yJ);
            // outside expression
            const Eigen::Vector2d outside = 2.0 / lam * (-ge.dG);
            CHECK((chart - outside).norm() < 1e-10);
        }
    }
}

TEST_CASE("adapted bubble: mean zero and far-field decay O(1/lambda)") {
    Setup s(512);
    BubbleParams p32, p16;
    p32.lambda = 32.0;
    p16.lambda = 16.0;
    p32.a = p16.a = Eigen::Vector2d(0.21, -0.13);

    Field z32 = adapted_bubble(*s.green, s.cut, p32);
    Field z16 = adapted_bubble(*s.green, s.cut, p16);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(z32.component_mean(c)) < 1e-10);

    // max |z| outside B_2r(a): ratio across doubled lambda close to 2
    auto far_max = [&](const Field& z, const Eigen::Vector2d& a) {
        double mx = 0.0;
        const int n = z.n();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Eigen::Vector2d x = s.torus->wrap(s.torus->point(i, j) - a);
                if (x.norm() <= 2.0 * s.cut.r()) continue;
                const Eigen::Vector3d v(z.value(0, i, j), z.value(1, i, j), z.value(2, i, j));
                mx = std::max(mx, v.norm());
            }
        return mx;
    };
    const double ratio = far_max(z16, p16.a) / far_max(z32, p32.a);
    CHECK(ratio > 1.8);
    CHECK(ratio < 2.2);
}

TEST_CASE("adapted bubble: Dirichlet energy concentrates to 8 pi" * doctest::skip(false)) {
    // heavier: lambda = 64 requires N = 1024. The defect is still gluing
    // dominated at these scales (see the decisions ledger), so assert the
    // strong decay toward 8 pi rather than a fixed small tolerance.
    Setup s(1024);
    BubbleParams p32, p64;
    p32.lambda = 32.0;
    p64.lambda = 64.0;
    p32.a = p64.a = Eigen::Vector2d(0.29, 0.17);
    const double d32 = h1_dot(adapted_bubble(*s.green, s.cut, p32),
                              adapted_bubble(*s.green, s.cut, p32));
    const double d64 = h1_dot(adapted_bubble(*s.green, s.cut, p64),
                              adapted_bubble(*s.green, s.cut, p64));
    const double e32 = std::abs(d32 - 8.0 * kPi);
    const double e64 = std::abs(d64 - 8.0 * kPi);
    MESSAGE("Dirichlet defect vs 8pi: lam=32: ", e32 / (8 * kPi), " lam=64: ", e64 / (8 * kPi));
    CHECK(e64 < 0.5 * e32);
    CHECK(e64 < 0.10 * 8.0 * kPi);
}

TEST_CASE("d_lambda_adapted: pointwise core formula and FD cross-validation") {
    Setup s(256);
    BubbleParams p;
    p.lambda = 12.0;
    p.a = Eigen::Vector2d(0.11, 0.07);

    // |d_lambda pi_lambda(x)|^2 = 4 |x|^2 / (1 + lambda^2 |x|^2)^2
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-0.02, 0.02);
    for (int k = 0; k < 40; ++k) {
        const Eigen::Vector2d x(unif(rng), unif(rng));
        Eigen::Vector3d d1, d2;
        std_bubble_partials(p.lambda * x, d1, d2);
        const Eigen::Vector3d dpl = x.x() * d1 + x.y() * d2;
        const double want = 4.0 * x.squaredNorm() /
                            std::pow(1.0 + p.lambda * p.lambda * x.squaredNorm(), 2);
        CHECK(dpl.squaredNorm() == doctest::Approx(want).epsilon(1e-12));
    }

    Field dl = d_lambda_adapted(*s.green, s.cut, p);
    const double h = p.lambda * 1e-4;
    BubbleParams pp = p, pm = p;
    pp.lambda += h;
    pm.lambda -= h;
    Field fd = sub(adapted_bubble(*s.green, s.cut, pp), adapted_bubble(*s.green, s.cut, pm));
    fd *= 1.0 / (2.0 * h);
    CHECK(h1_norm(sub(dl, fd)) <= 1e-5 * h1_norm(dl));
}

TEST_CASE("d_center matches finite differences in the centre") {
    // the cutoff transitions have third derivatives of size 1/r^3, so the
    // central-difference error is visible; verify the clean h^2 decay toward
    // the analytic derivative instead of a fixed tolerance
    Setup s(256);
    BubbleParams p;
    p.lambda = 12.0;
    p.a = Eigen::Vector2d(0.05, -0.03);
    BubbleAtlas atlas(s.green, s.cut, p.a);
    for (int axis = 0; axis < 2; ++axis) {
        Field da = atlas.d_center(p, axis);
        auto fd_err = [&](double h) {
            BubbleParams pp = p, pm = p;
            pp.a[axis] += h;
            pm.a[axis] -= h;
            Field fd =
                sub(adapted_bubble(*s.green, s.cut, pp), adapted_bubble(*s.green, s.cut, pm));
            fd *= 1.0 / (2.0 * h);
            return h1_norm(sub(da, fd)) / h1_norm(da);
        };
        const double h0 = 1.0 / (8.0 * s.torus->n);
        const double e0 = fd_err(h0);
        const double e1 = fd_err(h0 / 2.0);
        const double e2 = fd_err(h0 / 4.0);
        CHECK(e0 < 5e-3);
        CHECK(e0 / e1 == doctest::Approx(4.0).epsilon(0.15));
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
    }
}

TEST_CASE("norm scalings of d_lambda across a lambda sweep") {
    // at desk scale the gluing terms still dominate lam |d_lambda z|_H1 (see
    // the decisions ledger); the quantity approaches its plateau from above,
    // while the scaled L2 norm is already bounded with a decreasing trend
    Setup s(1024);
    std::vector<double> q1, q2;
    for (double lam : {16.0, 32.0, 64.0}) {
        BubbleParams p;
        p.lambda = lam;
        p.a = Eigen::Vector2d(0.29, 0.17);
        Field dl = d_lambda_adapted(*s.green, s.cut, p);
        q1.push_back(lam * h1_norm(dl));
        q2.push_back(lam * lam / std::sqrt(std::log(lam)) * l2_norm(dl));
        MESSAGE("lambda=", lam, " lam*h1=", q1.back(), " scaled l2=", q2.back());
    }
    CHECK(q1[1] < q1[0]);
    CHECK(q1[2] < q1[1]);
    const double r2 = *std::max_element(q2.begin(), q2.end()) /
                      *std::min_element(q2.begin(), q2.end());
    CHECK(r2 <= 2.0);
    CHECK(q2[1] <= 1.02 * q2[0]);
    CHECK(q2[2] <= 1.02 * q2[1]);
}

TEST_CASE("tangent frame: orthonormality, nonsingular Gram, rotation structure") {
    Setup s(512);
    BubbleParams p;
    p.lambda = 32.0;
    p.a = Eigen::Vector2d(0.29, 0.17);
    const TangentFrame frame = tangent_frame(*s.green, s.cut, p);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j <= i; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHECK(std::abs(h1_dot(frame.basis[i], frame.basis[j]) - want) < 1e-10);
        }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(frame.raw_gram);
    CHECK(es.eigenvalues().minCoeff() > 0.0);

    // the third rotation generator leaves the third component untouched
    Field z = adapted_bubble(*s.green, s.cut, p);
    BubbleAtlas atlas(s.green, s.cut, p.a);
    auto raw = atlas.raw_tangents(p, z);
    double third = 0.0, total = 0.0;
    const std::size_t nn = z.grid_size();
    for (std::size_t i = 0; i < nn; ++i) {
        third += raw[5].values()[2 * nn + i] * raw[5].values()[2 * nn + i];
        for (int c = 0; c < 3; ++c)
            total += raw[5].values()[c * nn + i] * raw[5].values()[c * nn + i];
    }
    CHECK(std::sqrt(third / total) < 1e-12);
}

TEST_CASE("nearest_bubble: exact fixed point") {
    Setup s(256);
    BubbleParams p;
    p.lambda = 14.0;
    p.a = Eigen::Vector2d(0.08, 0.02);
    p.rot = rot_xyz(0.3, -0.2, 0.5);
    Field z = adapted_bubble(*s.green, s.cut, p);
    const ProjectionResult pr = nearest_bubble(z, *s.green, s.cut, p);
    CHECK(pr.residual <= 1e-8);
    CHECK(std::abs(pr.params.lambda - p.lambda) <= 1e-8 * p.lambda);
    CHECK(s.torus->wrap(pr.params.a - p.a).norm() <= 1e-8);
    CHECK((pr.params.rot - p.rot).norm() <= 1e-8);
}

TEST_CASE("nearest_bubble: tangent and orthogonal perturbations") {
    Setup s(256);
    BubbleParams p;
    p.lambda = 14.0;
    p.a = Eigen::Vector2d(0.08, 0.02);
    const TangentFrame frame = tangent_frame(*s.green, s.cut, p);
    Field z = adapted_bubble(*s.green, s.cut, p);

    // tangent shift: second-order residual
    {
        Field u(z);
        u.axpy(1e-3, frame.basis[0]);
        const ProjectionResult pr = nearest_bubble(u, *s.green, s.cut, p);
        CHECK(pr.residual <= 1e-5);
    }

    // orthogonal shift: parameters fixed to first order, residual = |w|
    {
        Field w = random_band_limited(s.torus, 3, s.torus->n / 8, 2024);
        for (const Field& t : frame.basis) w.axpy(-h1_dot(w, t), t);
        w *= 1e-2 / h1_norm(w);
        Field u(z);
        u.axpy(1.0, w);
        const ProjectionResult pr = nearest_bubble(u, *s.green, s.cut, p);
        CHECK(std::abs(pr.params.lambda - p.lambda) <= 1e-4 * p.lambda);
        CHECK(s.torus->wrap(pr.params.a - p.a).norm() <= 1e-4);
        CHECK(pr.residual == doctest::Approx(1e-2).epsilon(0.01));
        // first-order optimality at the reported optimum
        const TangentFrame ff = tangent_frame(*s.green, s.cut, pr.params);
        for (const Field& t : ff.basis)
            CHECK(std::abs(h1_dot(pr.w, t)) <= 1e-7 * std::max(pr.residual, 1e-30));
    }
}
