#ifndef BUBBLELOJA_GREEN_HPP
#define BUBBLELOJA_GREEN_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "bubbleloja/lattice.hpp"

namespace bubbleloja {

/// Values and derivatives of the torus Green's function at a chart point x,
/// with G(p, a) = Ghat(p - a) and regular part J(x) = Ghat(x) + log|x|.
/// The J entries are finite for every x including 0; the G entries carry the
/// log singularity and are meaningful only for x != 0.
struct GreenEval {
    double G = 0.0;
    Eigen::Vector2d dG = Eigen::Vector2d::Zero();
    Eigen::Matrix2d d2G = Eigen::Matrix2d::Zero();
    double J = 0.0;
    Eigen::Vector2d dJ = Eigen::Vector2d::Zero();
    Eigen::Matrix2d d2J = Eigen::Matrix2d::Zero();
};

/// Ewald-split evaluator for the Green's function of
///   -Delta_p G(p,a) = 2 pi delta_a - 2 pi
/// on a unit-area flat torus. The splitting writes Ghat as a short-range
/// lattice sum of exponential-integral terms plus a rapidly converging
/// dual-lattice cosine series; both sums truncate where terms drop below
/// 1e-16. The additive constant is fixed so the grid mean of Ghat vanishes.
class GreenTable {
  public:
    TorusPtr torus;
    double ewald_split = 0.0;    // sigma
    double normalization = 0.0;  // subtracted constant
    double real_radius = 0.0;    // recorded truncation radii
    double dual_radius = 0.0;

    enum Parts { kValue = 1, kDerivs = 2, kAll = 3 };

    // x may be any point in the plane; it is wrapped to the centred cell.
    GreenEval eval(const Eigen::Vector2d& x, int parts = kAll) const;

    // Coincidence limit of the mixed-derivative trace of the regular part,
    // -Delta J(0), from term-by-term differentiation of the split series.
    double mixed_trace_at_coincidence() const;

  private:
    friend std::shared_ptr<const GreenTable> build_green(TorusPtr, double);

    std::vector<Eigen::Vector2d> real_points_;  // lattice points, n = 0 excluded
    struct DualTerm {
        double m1, m2;            // integer mode pair (stored as doubles)
        double kx, ky;            // wave vector
        double c2;                // 2 * coefficient (cosine pair folded)
        double gx, gy;            // gradient factor, times -sin
        double hxx, hxy, hyy;     // Hessian factor, times cos
    };
    std::vector<DualTerm> dual_terms_;  // half lattice
    int m1_max_ = 0, m2_max_ = 0;
};

using GreenPtr = std::shared_ptr<const GreenTable>;

/// sigma_override = 0 selects the default split, a third of the shortest
/// lattice vector.
GreenPtr build_green(TorusPtr torus, double sigma_override = 0.0);

struct RegularPart {
    double J = 0.0;
    Eigen::Vector2d gradJ = Eigen::Vector2d::Zero();  // y-gradient of J_a(x, 0)
};

/// Regular part J(x) and grad_y J_a(x, 0) on the chart |x| < iota.
RegularPart regular_part(const GreenTable& gt, const Eigen::Vector2d& x);

/// Coincidence-limit mixed trace of G_a; equals -2 pi on every flat
/// unit-area torus. The argument a is immaterial by translation invariance.
double script_J(const GreenTable& gt, const Eigen::Vector2d& a = Eigen::Vector2d::Zero());

/// 4 Re d_z d_zetabar G at coincidence, computed from the Hessian of the
/// evaluator on a small ring around the diagonal. Cross-checks script_J.
double bergman_mixed(const GreenTable& gt);

}  // namespace bubbleloja

#endif
