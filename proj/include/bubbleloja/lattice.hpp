#ifndef BUBBLELOJA_LATTICE_HPP
#define BUBBLELOJA_LATTICE_HPP

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "bubbleloja/errors.hpp"

namespace bubbleloja {

using Complex = std::complex<double>;

/// Flat unit-area torus R^2 / (Z b1 + Z b2) with an N x N sampling grid.
///
/// Grid points are p(i,j) = (i/N) b1 + (j/N) b2. Spectral modes are indexed by
/// integer pairs (m1, m2) in [-N/2, N/2) and carry the dual-lattice wave vector
/// k = m1 d1 + m2 d2 with (d1 d2) = basis^{-T}, so that exp(2*pi*i k.p) is
/// periodic on the torus. Cartesian components of k are tabulated once.
struct LatticeTorus {
    Eigen::Matrix2d basis;   // columns are the lattice vectors b1, b2
    int n = 0;               // grid points per axis
    double injectivity_radius = 0.0;  // half the shortest nonzero lattice vector
    double iota = 0.0;                // injectivity_radius / 2

    Eigen::Matrix2d dual;    // columns are the dual-lattice vectors d1, d2

    // Per-mode tables, row-major over (i, j) like field storage.
    std::vector<double> kx, ky;   // cartesian wave vector components
    std::vector<double> k2;       // |k|^2

    Eigen::Vector2d point(int i, int j) const {
        return basis * Eigen::Vector2d(double(i) / n, double(j) / n);
    }
    // Representative of p in the fundamental cell centred at 0.
    Eigen::Vector2d wrap(const Eigen::Vector2d& p) const {
        Eigen::Vector2d f = basis.inverse() * p;
        f.x() -= std::round(f.x());
        f.y() -= std::round(f.y());
        return basis * f;
    }
};

using TorusPtr = std::shared_ptr<const LatticeTorus>;

/// Validates the basis (unit cell area 1, N even and in range) and tabulates
/// the spectral data. The injectivity radius comes from brute-force lattice
/// enumeration.
TorusPtr make_grid(const Eigen::Matrix2d& basis, int n);

/// Scalar or vector-valued sample grid with a lazily cached spectral
/// representation. Public operations treat Fields as immutable values;
/// mutable_values() drops the cache.
class Field {
  public:
    Field() = default;
    Field(TorusPtr torus, int components);
    Field(const Field& other);
    Field(Field&&) noexcept = default;
    Field& operator=(const Field& other);
    Field& operator=(Field&&) noexcept = default;

    static Field from_values(TorusPtr torus, int components, std::vector<double> values);
    static Field from_spectral(TorusPtr torus, int components, std::vector<Complex> spec);

    int components() const { return comps_; }
    int n() const { return torus_ ? torus_->n : 0; }
    const TorusPtr& torus() const { return torus_; }
    std::size_t grid_size() const { return static_cast<std::size_t>(n()) * n(); }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values();

    double value(int c, int i, int j) const {
        return values_[(static_cast<std::size_t>(c) * n() + i) * n() + j];
    }
    const double* component(int c) const { return values_.data() + c * grid_size(); }

    // Fourier coefficients per component, normalised so that
    // f(p) = sum_k fhat_k exp(2 pi i k.p). Computed on demand, cached.
    const std::vector<Complex>& spectral() const;

    bool mean_zero_flag() const { return mean_zero_; }
    double component_mean(int c) const;
    Field& subtract_mean();

    // In-place linear algebra (drops the spectral cache of *this).
    Field& operator*=(double s);
    Field& axpy(double s, const Field& other);  // *this += s * other

  private:
    TorusPtr torus_;
    int comps_ = 0;
    std::vector<double> values_;
    bool mean_zero_ = false;

    mutable std::mutex spec_mutex_;
    mutable std::shared_ptr<const std::vector<Complex>> spec_;
};

/// L2-representative of a linear functional v -> int rho . v on mean-zero
/// fields; stores the mean-zero representative.
struct DensityFunctional {
    Field density;
    explicit DensityFunctional(Field rho);
};

struct InnerProducts {
    double l2 = 0.0;
    double h1 = 0.0;
};

Field laplacian(const Field& f);
Field inv_laplacian(const Field& f);

// Cartesian gradient of a scalar field, returned as a 2-component Field.
Field grad(const Field& f);
// grad rotated by +90 degrees: (-d2 f, d1 f).
Field perp_grad(const Field& f);

InnerProducts inner_products(const Field& f, const Field& g);
double l2_dot(const Field& f, const Field& g);
double h1_dot(const Field& f, const Field& g);
double l2_norm(const Field& f);
double h1_norm(const Field& f);

/// Jacobian determinant {a,b} = d1 a d2 b - d2 a d1 b, evaluated with
/// dealiased (zero-padded) products and truncated back to the grid band.
Field jacobian_bracket(const Field& a, const Field& b);

double h_minus1_norm(const DensityFunctional& rho);
double h_minus1_norm(const Field& rho);

// Linear combinations as new values.
Field add(const Field& a, const Field& b);
Field sub(const Field& a, const Field& b);
Field scaled(const Field& a, double s);

namespace detail {

// Inverse-transforms the band of `spec` (an n x n coefficient array) onto an
// m x m grid, m >= n; Nyquist rows are dropped. Returns real values.
std::vector<double> pad_to_values(int n, int m, int components, const std::vector<Complex>& spec);

// Forward-transforms m x m real values and truncates to the n x n band.
std::vector<Complex> values_to_band(int m, int n, int components, const std::vector<double>& vals);

// Padded grid size used for product dealiasing (3N/2 rule, rounded even).
int dealias_size(int n);

// Padded values of the two cartesian partials of every component of f:
// layout [deriv(0..1)][component][m*m].
std::vector<double> padded_partials(const Field& f, int m);

}  // namespace detail

}  // namespace bubbleloja

#endif
