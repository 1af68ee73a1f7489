#include <doctest.h>

#include <cmath>

#include "bubbleloja/harness.hpp"
#include "bubbleloja/spectrum.hpp"

using namespace bubbleloja;

namespace {

struct Setup {
    TorusPtr torus;
    GreenPtr green;
    CutoffProfile cut;
    BubbleParams params;
    Field z;
    TangentFrame frame;

    explicit Setup(int n, double lambda)
        : torus(make_grid(Eigen::Matrix2d::Identity(), n)),
          green(build_green(torus)),
          cut(0.05, torus->iota) {
        params.lambda = lambda;
        params.a = Eigen::Vector2d(0.29, 0.17);
        z = adapted_bubble(*green, cut, params);
        frame = tangent_frame(*green, cut, params);
    }
};

}  // namespace

TEST_CASE("projected_apply: frame annihilation, identity at u = 0, self-adjointness") {
    Setup s(256, 16.0);
    ProjectedJacobi lz(s.z, s.frame);

    // frame members are annihilated by the projection
    for (int i = 0; i < 6; ++i)
        CHECK(h1_norm(lz.apply(s.frame.basis[i])) <= 1e-10);

    // idempotence of P
    Field w = random_band_limited(s.torus, 3, 16, 7);
    Field pw = lz.project(w);
    CHECK(h1_norm(sub(lz.project(pw), pw)) <= 1e-10 * h1_norm(pw));

    // L_0 = Id on the projected space
    Field zero(s.torus, 3);
    ProjectedJacobi l0(zero, s.frame);
    Field w_perp = lz.project(w);
    CHECK(h1_norm(sub(l0.apply(w_perp), w_perp)) <= 1e-10 * h1_norm(w_perp));

    // self-adjointness on V_z
    Field w2 = random_band_limited(s.torus, 3, 16, 8);
    const double a = h1_dot(lz.apply(w), w2);
    const double b = h1_dot(w, lz.apply(w2));
    CHECK(std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a)));
}

TEST_CASE("small_spectrum: converged eigenpairs with small residuals") {
    Setup s(256, 16.0);
    ProjectedJacobi lz(s.z, s.frame);
    const SpectrumReport rep = small_spectrum(lz, 4, 1e-5, 200, 99);
    CHECK(rep.converged);
    REQUIRE(rep.smallest_eigs.size() == 4);
    // sorted by magnitude
    for (std::size_t i = 0; i + 1 < rep.smallest_eigs.size(); ++i)
        CHECK(std::abs(rep.smallest_eigs[i]) <= std::abs(rep.smallest_eigs[i + 1]) + 1e-12);
    for (double r : rep.eig_residuals) CHECK(r <= 1e-5);
    // a gap is present at this scale
    CHECK(std::abs(rep.smallest_eigs[0]) > 0.05);

    // sign-split structure: eigenvectors with distinct-sign eigenvalues are
    // d2E-orthogonal by self-adjointness; verified via the residual bound
    CHECK(rep.tangent_residuals[0] < 1.0);
}

TEST_CASE("small_spectrum: argument validation") {
    Setup s(256, 16.0);
    ProjectedJacobi lz(s.z, s.frame);
    CHECK_THROWS_AS(small_spectrum(lz, 0, 1e-6), ShapeError);
    CHECK_THROWS_AS(small_spectrum(lz, 17, 1e-6), ShapeError);
    CHECK_THROWS_AS(small_spectrum(lz, 3, 1e-14, 2), EigsNotConverged);
}
