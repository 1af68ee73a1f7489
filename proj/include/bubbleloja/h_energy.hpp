#ifndef BUBBLELOJA_H_ENERGY_HPP
#define BUBBLELOJA_H_ENERGY_HPP

#include "bubbleloja/lattice.hpp"

namespace bubbleloja {

struct EnergyReport {
    double E = 0.0;
    double V = 0.0;
    double dirichlet = 0.0;  // (1/2) int |grad u|^2
};

/// E(u) = (1/2) int |grad u|^2 - 2 V(u) with the enclosed volume
/// V(u) = (1/3) int u . (u_x1 ^ u_x2); the cubic term uses dealiased products.
EnergyReport energy(const Field& u);

struct FirstVariation {
    DensityFunctional rho;  // -Lap u - grad u wedge-dot perp-grad u, mean-zero
    double l2_norm = 0.0;
    double hm1_norm = 0.0;
};

FirstVariation first_variation(const Field& u);

/// d2E(u)[w,v] = int grad w . grad v - 2 u . (grad v wedge-dot perp-grad w);
/// symmetric in (w, v).
double second_variation(const Field& u, const Field& w, const Field& v);

/// Unique mean-zero solution of -Lap phi = {a, b}.
Field wente_solve(const Field& a, const Field& b);

struct WenteLift {
    double W = 0.0;
    Field u;
};

/// Wente energy W(a,b) = |a|^2 |b|^2 / |phi_ab|^2 (all H1-dot norms) for unit
/// inputs, and its lift u = (sqrt(W)/2) (a, b, phi/|phi|) with 8 E(u) = W.
WenteLift wente_energy_and_lift(const Field& a, const Field& b);

/// Jacobi operator of E in the H1-dot metric: L_u(w) = w + c_u(w), where c_u
/// solves a Poisson problem so that <L_u(w), v>_H1 = d2E(u)[w, v].
class JacobiOperator {
  public:
    explicit JacobiOperator(Field u);
    Field apply(const Field& w) const;
    Field compact_part(const Field& w) const;  // c_u(w)
    const Field& base_point() const { return u_; }

  private:
    Field u_;
    int m_ = 0;                       // dealias grid size
    std::vector<double> du_padded_;   // cached padded partials of u
};

Field jacobi_apply(const Field& u, const Field& w);

/// The symmetric product grad v wedge-dot perp-grad w (3-component).
Field wedge_dot(const Field& v, const Field& w);

/// u_x1 ^ u_x2 with dealiased products; wedge_dot(u, u) = 2 cross_partials(u).
Field cross_partials(const Field& u);

}  // namespace bubbleloja

#endif
