#ifndef BUBBLELOJA_SPECTRUM_HPP
#define BUBBLELOJA_SPECTRUM_HPP

#include <cstdint>

#include "bubbleloja/bubbles.hpp"
#include "bubbleloja/h_energy.hpp"

namespace bubbleloja {

struct SpectrumReport {
    double lambda = 0.0;
    std::vector<double> smallest_eigs;        // eigenvalues of L-hat, by |.|
    std::vector<double> eig_residuals;        // |L-hat w - mu w|_H1
    std::array<double, 6> tangent_residuals;  // |L_z t_i|_H1, unprojected
    int iterations = 0;
    bool converged = false;
};

/// Projected Jacobi operator L-hat = P o L_z o P on the orthocomplement of
/// the bubble tangent frame.
class ProjectedJacobi {
  public:
    ProjectedJacobi(Field z, TangentFrame frame);

    Field project(const Field& w) const;          // P w
    Field apply(const Field& w) const;            // P L_z P w
    Field apply_unprojected(const Field& w) const;  // L_z w

    const TangentFrame& frame() const { return frame_; }
    const Field& base_point() const { return op_.base_point(); }

  private:
    JacobiOperator op_;
    TangentFrame frame_;
};

Field projected_apply(const ProjectedJacobi& lz, const Field& w);

/// Smallest-magnitude eigenvalues of L-hat by block Rayleigh-quotient
/// minimisation of L-hat^2 in the H1-dot metric (matrix-free, deterministic
/// start from `seed`). Throws EigsNotConverged when the residuals fail to
/// reach tol within maxit iterations.
SpectrumReport small_spectrum(const ProjectedJacobi& lz, int k, double tol, int maxit = 200,
                              std::uint64_t seed = 0x5eed);

}  // namespace bubbleloja

#endif
