#ifndef BUBBLELOJA_BUBBLES_HPP
#define BUBBLELOJA_BUBBLES_HPP

#include <array>

#include "bubbleloja/green.hpp"
#include "bubbleloja/lattice.hpp"

namespace bubbleloja {

/// Smallest admissible bubble scale.
constexpr double kLambdaMin = 8.0;

/// Coordinates (lambda, a, R) on the adapted-bubble manifold.
struct BubbleParams {
    double lambda = 16.0;
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();

    void validate() const;
};

/// Radial cutoff profiles psi (supported in D_r, 1 on D_{r/2}) and phi
/// (supported in D_{2r}, 1 on D_r), with the interpolation
/// j = psi / r^2 + (1 - psi) / |x|^2. Transitions are the polynomial
/// smoothstep 35 t^4 - 84 t^5 + 70 t^6 - 20 t^7.
class CutoffProfile {
  public:
    CutoffProfile(double r, double iota);

    double r() const { return r_; }
    double psi(double rho) const;
    double dpsi(double rho) const;
    double phi(double rho) const;
    double dphi(double rho) const;
    double j(double rho) const;
    double dj(double rho) const;

  private:
    double r_ = 0.0;
};

/// Inverse stereographic projection, |std_bubble(x)| = 1 for all x.
Eigen::Vector3d std_bubble(const Eigen::Vector2d& x);
/// Partials d1 pi, d2 pi of the inverse stereographic projection.
void std_bubble_partials(const Eigen::Vector2d& x, Eigen::Vector3d& d1, Eigen::Vector3d& d2);

/// Chart geometry sampled once per (torus, green, cutoff, centre); every
/// member of the bubble family at this centre assembles from these tables.
class BubbleAtlas {
  public:
    BubbleAtlas(GreenPtr green, const CutoffProfile& cut, const Eigen::Vector2d& a);

    const Eigen::Vector2d& center() const { return a_; }
    const TorusPtr& torus() const { return green_->torus; }

    Field bubble(const BubbleParams& p) const;
    Field d_lambda(const BubbleParams& p) const;
    Field d_center(const BubbleParams& p, int axis) const;

    // Raw tangent directions {d_lambda, d_a1, d_a2, w1 z, w2 z, w3 z}.
    std::array<Field, 6> raw_tangents(const BubbleParams& p) const;
    std::array<Field, 6> raw_tangents(const BubbleParams& p, const Field& z) const;

  private:
    GreenPtr green_;
    CutoffProfile cut_;
    Eigen::Vector2d a_;
    // per grid point: chart vector, |x|, gradient and Hessian table entries
    // (J-based inside the chart, G-based outside)
    std::vector<double> x1_, x2_, rho_;
    std::vector<double> g1_, g2_, h11_, h12_, h22_;
    std::vector<unsigned char> chart_;

    void check(const BubbleParams& p) const;
    template <class PointFn>
    Field assemble(const BubbleParams& p, PointFn&& fn) const;
};

/// z_{lambda,a} rotated by R: the glued bubble-plus-Green-tail map, mean-zero.
Field adapted_bubble(const GreenTable& gt, const CutoffProfile& cut, const BubbleParams& p);

/// Analytic lambda-derivative of adapted_bubble.
Field d_lambda_adapted(const GreenTable& gt, const CutoffProfile& cut, const BubbleParams& p);

struct TangentFrame {
    std::array<Field, 6> basis;                  // H1-dot orthonormal
    Eigen::Matrix<double, 6, 6> raw_gram;        // Gram of the raw directions
};

TangentFrame tangent_frame(const GreenTable& gt, const CutoffProfile& cut, const BubbleParams& p);

struct ProjectionResult {
    BubbleParams params;
    Field w;               // u - R z at the optimum
    double residual = 0.0;  // |w|_H1
    int iterations = 0;
};

/// Gauss-Newton / trust-region minimisation of |u - R z_{lambda,a}|_H1 over
/// (lambda, a, R), using the raw tangent directions as the Jacobian.
ProjectionResult nearest_bubble(const Field& u, const GreenTable& gt, const CutoffProfile& cut,
                                const BubbleParams& guess);

}  // namespace bubbleloja

#endif
