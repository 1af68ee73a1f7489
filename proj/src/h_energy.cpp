#include "bubbleloja/h_energy.hpp"

#include <cmath>

namespace bubbleloja {

namespace {

void require_3c(const Field& u, const char* who) {
    if (u.components() != 3) throw ShapeError(std::string(who) + " expects a 3-component field");
}

// Epsilon-contraction of two padded partial tables:
//   out_i = sum_{jk} eps_{ijk} (d1 a_j d2 b_k - d2 a_j d1 b_k)
// which is the wedge of the x1/x2 partials for (a, b) = (u, u) and the
// wedge-dot product for general pairs after symmetrisation.
std::vector<double> eps_contract(const std::vector<double>& da, const std::vector<double>& db,
                                 std::size_t mm) {
    std::vector<double> out(3 * mm);
    const double* a1 = da.data();            // d1 a, components 0..2
    const double* a2 = da.data() + 3 * mm;   // d2 a
    const double* b1 = db.data();
    const double* b2 = db.data() + 3 * mm;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        double* dst = out.data() + i * mm;
        const double *aj1 = a1 + j * mm, *aj2 = a2 + j * mm;
        const double *ak1 = b1 + k * mm, *ak2 = b2 + k * mm;
        const double *bj1 = b1 + j * mm, *bj2 = b2 + j * mm;
        const double *bk1 = a1 + k * mm, *bk2 = a2 + k * mm;
        for (std::size_t p = 0; p < mm; ++p) {
            // J(a_j, b_k) + J(b_j, a_k) = J(a_j, b_k) - J(a_k, b_j)
            const double jab = aj1[p] * ak2[p] - aj2[p] * ak1[p];
            const double jba = bj1[p] * bk2[p] - bj2[p] * bk1[p];
            dst[p] = jab + jba;
        }
    }
    return out;
}

Field band_field(const Field& like, std::vector<double> padded, int m) {
    auto spec = detail::values_to_band(m, like.n(), 3, padded);
    const std::size_t nn = like.grid_size();
    for (int c = 0; c < 3; ++c) spec[c * nn] = 0.0;  // wedge terms integrate to zero
    return Field::from_spectral(like.torus(), 3, std::move(spec));
}

}  // namespace

Field wedge_dot(const Field& v, const Field& w) {
    require_3c(v, "wedge_dot");
    require_3c(w, "wedge_dot");
    const int m = detail::dealias_size(v.n());
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    auto dv = detail::padded_partials(v, m);
    auto dw = detail::padded_partials(w, m);
    // wedge_dot(v, w)_i = J(v_j, w_k) - J(v_k, w_j) summed with eps_{ijk};
    // eps_contract computes the symmetrised version, identical by eq-symmetry.
    std::vector<double> prod(3 * mm);
    {
        const double* v1 = dv.data();
        const double* v2 = dv.data() + 3 * mm;
        const double* w1 = dw.data();
        const double* w2 = dw.data() + 3 * mm;
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            double* dst = prod.data() + i * mm;
            for (std::size_t p = 0; p < mm; ++p) {
                const double jvw = v1[j * mm + p] * w2[k * mm + p] - v2[j * mm + p] * w1[k * mm + p];
                const double jwv = v1[k * mm + p] * w2[j * mm + p] - v2[k * mm + p] * w1[j * mm + p];
                dst[p] = jvw - jwv;
            }
        }
    }
    return band_field(v, std::move(prod), m);
}

Field cross_partials(const Field& u) {
    require_3c(u, "cross_partials");
    const int m = detail::dealias_size(u.n());
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    auto du = detail::padded_partials(u, m);
    std::vector<double> prod(3 * mm);
    const double* d1 = du.data();
    const double* d2 = du.data() + 3 * mm;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        double* dst = prod.data() + i * mm;
        for (std::size_t p = 0; p < mm; ++p)
            dst[p] = d1[j * mm + p] * d2[k * mm + p] - d1[k * mm + p] * d2[j * mm + p];
    }
    return band_field(u, std::move(prod), m);
}

EnergyReport energy(const Field& u) {
    require_3c(u, "energy");
    EnergyReport rep;
    rep.dirichlet = 0.5 * h1_dot(u, u);
    const Field c = cross_partials(u);
    rep.V = l2_dot(u, c) / 3.0;
    rep.E = rep.dirichlet - 2.0 * rep.V;
    return rep;
}

FirstVariation first_variation(const Field& u) {
    require_3c(u, "first_variation");
    const Field c = cross_partials(u);
    Field rho = laplacian(u);
    rho *= -1.0;
    rho.axpy(-2.0, c);
    double linf = 0.0;
    for (double v : rho.values()) linf = std::max(linf, std::abs(v));
    for (int comp = 0; comp < 3; ++comp) {
        const double mean = rho.component_mean(comp);
        if (std::abs(mean) > 1e-6 * std::max(1.0, linf))
            throw DealiasDiagnostic("first_variation: density mean residue " +
                                    std::to_string(mean) + " exceeds the aliasing watermark");
    }
    rho.subtract_mean();
    FirstVariation fv{DensityFunctional(std::move(rho)), 0.0, 0.0};
    fv.l2_norm = l2_norm(fv.rho.density);
    fv.hm1_norm = h_minus1_norm(fv.rho.density);
    return fv;
}

double second_variation(const Field& u, const Field& w, const Field& v) {
    require_3c(u, "second_variation");
    require_3c(w, "second_variation");
    require_3c(v, "second_variation");
    return h1_dot(w, v) - 2.0 * l2_dot(u, wedge_dot(v, w));
}

Field wente_solve(const Field& a, const Field& b) {
    Field jb = jacobian_bracket(a, b);
    Field phi = inv_laplacian(jb);
    phi *= -1.0;  // -Lap phi = {a, b}
    return phi;
}

WenteLift wente_energy_and_lift(const Field& a, const Field& b) {
    if (a.components() != 1 || b.components() != 1)
        throw ShapeError("wente_energy_and_lift expects scalar fields");
    if (std::abs(h1_norm(a) - 1.0) > 1e-10 || std::abs(h1_norm(b) - 1.0) > 1e-10)
        throw ShapeError("wente_energy_and_lift expects unit H1-dot norms");
    Field phi = wente_solve(a, b);
    const double pn = h1_norm(phi);
    if (pn < 1e-14) throw DegeneratePair("wente energy is infinite, {a,b} = 0");
    const double W = 1.0 / (pn * pn);

    const std::size_t nn = a.grid_size();
    std::vector<double> vals(3 * nn);
    const double s = 0.5 * std::sqrt(W);
    for (std::size_t i = 0; i < nn; ++i) {
        vals[i] = s * a.values()[i];
        vals[nn + i] = s * b.values()[i];
        vals[2 * nn + i] = s / pn * phi.values()[i];
    }
    Field u = Field::from_values(a.torus(), 3, std::move(vals));
    u.subtract_mean();
    return WenteLift{W, std::move(u)};
}

JacobiOperator::JacobiOperator(Field u) : u_(std::move(u)) {
    require_3c(u_, "JacobiOperator");
    m_ = detail::dealias_size(u_.n());
    du_padded_ = detail::padded_partials(u_, m_);
}

Field JacobiOperator::compact_part(const Field& w) const {
    require_3c(w, "JacobiOperator::compact_part");
    const std::size_t mm = static_cast<std::size_t>(m_) * m_;
    auto dw = detail::padded_partials(w, m_);
    auto prod = eps_contract(du_padded_, dw, mm);
    Field wd = band_field(u_, std::move(prod), m_);
    // <c_u(w), v>_H1 = -2 int v . wedge_dot(u, w)  =>  Lap c = 2 wedge_dot
    Field c = inv_laplacian(wd);
    c *= 2.0;
    return c;
}

Field JacobiOperator::apply(const Field& w) const {
    Field out = compact_part(w);
    out.axpy(1.0, w);
    return out;
}

Field jacobi_apply(const Field& u, const Field& w) { return JacobiOperator(u).apply(w); }

}  // namespace bubbleloja
