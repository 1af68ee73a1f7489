#include "bubbleloja/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "fft_detail.hpp"

namespace bubbleloja {

namespace {

constexpr double kPi = 3.14159265358979323846;

int mode_index(int i, int n) { return i < n / 2 ? i : i - n; }

}  // namespace

TorusPtr make_grid(const Eigen::Matrix2d& basis, int n) {
    const double det = basis.determinant();
    if (std::abs(std::abs(det) - 1.0) > 1e-12)
        throw UnitAreaViolation("lattice basis must span a unit-area cell, |det| = " +
                                std::to_string(std::abs(det)));
    if (n % 2 != 0 || n < 16 || n > 4096)
        throw ResolutionError("grid resolution must be even and in [16, 4096], got " +
                              std::to_string(n));

    auto torus = std::make_shared<LatticeTorus>();
    torus->basis = basis;
    torus->n = n;
    torus->dual = basis.inverse().transpose();

    // Shortest nonzero lattice vector by enumeration over a generous index box.
    double shortest = std::numeric_limits<double>::infinity();
    for (int m1 = -8; m1 <= 8; ++m1)
        for (int m2 = -8; m2 <= 8; ++m2) {
            if (m1 == 0 && m2 == 0) continue;
            shortest = std::min(shortest, (basis * Eigen::Vector2d(m1, m2)).norm());
        }
    torus->injectivity_radius = 0.5 * shortest;
    torus->iota = 0.5 * torus->injectivity_radius;

    const std::size_t nn = static_cast<std::size_t>(n) * n;
    torus->kx.resize(nn);
    torus->ky.resize(nn);
    torus->k2.resize(nn);
    for (int i = 0; i < n; ++i) {
        const int m1 = mode_index(i, n);
        for (int j = 0; j < n; ++j) {
            const int m2 = mode_index(j, n);
            const Eigen::Vector2d k = torus->dual * Eigen::Vector2d(m1, m2);
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            torus->kx[idx] = k.x();
            torus->ky[idx] = k.y();
            torus->k2[idx] = k.squaredNorm();
        }
    }
    return torus;
}

Field::Field(TorusPtr torus, int components)
    : torus_(std::move(torus)), comps_(components) {
    if (comps_ < 1 || comps_ > 3) throw ShapeError("field must have 1, 2 or 3 components");
    values_.assign(static_cast<std::size_t>(comps_) * grid_size(), 0.0);
    mean_zero_ = true;
}

Field::Field(const Field& other)
    : torus_(other.torus_), comps_(other.comps_), values_(other.values_),
      mean_zero_(other.mean_zero_) {
    std::lock_guard<std::mutex> lock(other.spec_mutex_);
    spec_ = other.spec_;
}

Field& Field::operator=(const Field& other) {
    if (this == &other) return *this;
    torus_ = other.torus_;
    comps_ = other.comps_;
    values_ = other.values_;
    mean_zero_ = other.mean_zero_;
    std::lock_guard<std::mutex> lock(other.spec_mutex_);
    spec_ = other.spec_;
    return *this;
}

Field Field::from_values(TorusPtr torus, int components, std::vector<double> values) {
    Field f(std::move(torus), components);
    if (values.size() != f.values_.size())
        throw ShapeError("value array size does not match grid");
    f.values_ = std::move(values);
    f.mean_zero_ = false;
    return f;
}

Field Field::from_spectral(TorusPtr torus, int components, std::vector<Complex> spec) {
    Field f(std::move(torus), components);
    const int n = f.n();
    const std::size_t nn = f.grid_size();
    if (spec.size() != static_cast<std::size_t>(components) * nn)
        throw ShapeError("spectral array size does not match grid");
    std::vector<Complex> out(nn);
    bool mz = true;
    for (int c = 0; c < components; ++c) {
        detail::fft2_inverse(n, spec.data() + c * nn, out.data());
        double* dst = f.values_.data() + c * nn;
        for (std::size_t i = 0; i < nn; ++i) dst[i] = out[i].real();
        if (std::abs(spec[c * nn]) > 1e-12) mz = false;
    }
    f.mean_zero_ = mz;
    {
        std::lock_guard<std::mutex> lock(f.spec_mutex_);
        f.spec_ = std::make_shared<const std::vector<Complex>>(std::move(spec));
    }
    return f;
}

std::vector<double>& Field::mutable_values() {
    std::lock_guard<std::mutex> lock(spec_mutex_);
    spec_.reset();
    mean_zero_ = false;
    return values_;
}

const std::vector<Complex>& Field::spectral() const {
    {
        std::lock_guard<std::mutex> lock(spec_mutex_);
        if (spec_) return *spec_;
    }
    const int n = this->n();
    const std::size_t nn = grid_size();
    auto spec = std::make_shared<std::vector<Complex>>(static_cast<std::size_t>(comps_) * nn);
    std::vector<Complex> in(nn);
    const double inv = 1.0 / double(nn);
    for (int c = 0; c < comps_; ++c) {
        const double* src = values_.data() + c * nn;
        for (std::size_t i = 0; i < nn; ++i) in[i] = src[i];
        detail::fft2_forward(n, in.data(), spec->data() + c * nn);
        Complex* s = spec->data() + c * nn;
        for (std::size_t i = 0; i < nn; ++i) s[i] *= inv;
    }
    std::lock_guard<std::mutex> lock(spec_mutex_);
    if (!spec_) spec_ = std::move(spec);
    return *spec_;
}

double Field::component_mean(int c) const {
    const std::size_t nn = grid_size();
    const double* src = values_.data() + c * nn;
    long double acc = 0.0;
    for (std::size_t i = 0; i < nn; ++i) acc += src[i];
    return double(acc / nn);
}

Field& Field::subtract_mean() {
    const std::size_t nn = grid_size();
    for (int c = 0; c < comps_; ++c) {
        const double m = component_mean(c);
        double* dst = values_.data() + c * nn;
        for (std::size_t i = 0; i < nn; ++i) dst[i] -= m;
    }
    {
        std::lock_guard<std::mutex> lock(spec_mutex_);
        spec_.reset();
    }
    mean_zero_ = true;
    return *this;
}

Field& Field::operator*=(double s) {
    std::shared_ptr<const std::vector<Complex>> old;
    {
        std::lock_guard<std::mutex> lock(spec_mutex_);
        old = std::move(spec_);
        spec_.reset();
    }
    for (double& v : values_) v *= s;
    if (old) {
        auto scaled_spec = std::make_shared<std::vector<Complex>>(*old);
        for (Complex& z : *scaled_spec) z *= s;
        std::lock_guard<std::mutex> lock(spec_mutex_);
        spec_ = std::move(scaled_spec);
    }
    return *this;
}

Field& Field::axpy(double s, const Field& other) {
    if (other.comps_ != comps_ || other.values_.size() != values_.size())
        throw ShapeError("axpy shape mismatch");
    {
        std::lock_guard<std::mutex> lock(spec_mutex_);
        spec_.reset();
    }
    const double* src = other.values_.data();
    double* dst = values_.data();
    for (std::size_t i = 0; i < values_.size(); ++i) dst[i] += s * src[i];
    mean_zero_ = mean_zero_ && other.mean_zero_;
    return *this;
}

DensityFunctional::DensityFunctional(Field rho) : density(std::move(rho)) {
    for (int c = 0; c < density.components(); ++c) {
        if (std::abs(density.component_mean(c)) > 1e-10)
            throw MeanZeroRequired("density functional requires a mean-zero representative");
    }
}

namespace {

void check_same_grid(const Field& a, const Field& b) {
    if (a.n() != b.n() || a.torus()->basis != b.torus()->basis)
        throw ShapeError("fields live on different grids");
}

void check_mean_zero(const Field& f, const char* who) {
    for (int c = 0; c < f.components(); ++c) {
        double linf = 0.0;
        const double* src = f.component(c);
        for (std::size_t i = 0; i < f.grid_size(); ++i) linf = std::max(linf, std::abs(src[i]));
        if (std::abs(f.component_mean(c)) > 1e-9 * std::max(1.0, linf))
            throw MeanZeroRequired(std::string(who) + " requires mean-zero input");
    }
}

}  // namespace

Field laplacian(const Field& f) {
    const auto& spec = f.spectral();
    const auto& t = *f.torus();
    const std::size_t nn = f.grid_size();
    std::vector<Complex> out(spec.size());
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < nn; ++i)
            out[c * nn + i] = -4.0 * kPi * kPi * t.k2[i] * spec[c * nn + i];
    return Field::from_spectral(f.torus(), f.components(), std::move(out));
}

Field inv_laplacian(const Field& f) {
    check_mean_zero(f, "inv_laplacian");
    const auto& spec = f.spectral();
    const auto& t = *f.torus();
    const std::size_t nn = f.grid_size();
    std::vector<Complex> out(spec.size());
    for (int c = 0; c < f.components(); ++c) {
        for (std::size_t i = 0; i < nn; ++i) {
            const double mult = t.k2[i] > 0.0 ? -1.0 / (4.0 * kPi * kPi * t.k2[i]) : 0.0;
            out[c * nn + i] = mult * spec[c * nn + i];
        }
        out[c * nn] = 0.0;  // k = 0 pinned to zero, fixing the additive constant
    }
    return Field::from_spectral(f.torus(), f.components(), std::move(out));
}

namespace {

Field directional_derivatives(const Field& f, bool perp) {
    if (f.components() != 1) throw ShapeError("grad expects a scalar field");
    const auto& spec = f.spectral();
    const auto& t = *f.torus();
    const std::size_t nn = f.grid_size();
    std::vector<Complex> out(2 * nn);
    const Complex i2pi(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < nn; ++i) {
        const Complex dx = i2pi * t.kx[i] * spec[i];
        const Complex dy = i2pi * t.ky[i] * spec[i];
        if (!perp) {
            out[i] = dx;
            out[nn + i] = dy;
        } else {
            out[i] = -dy;
            out[nn + i] = dx;
        }
    }
    return Field::from_spectral(f.torus(), 2, std::move(out));
}

}  // namespace

Field grad(const Field& f) { return directional_derivatives(f, false); }
Field perp_grad(const Field& f) { return directional_derivatives(f, true); }

double l2_dot(const Field& f, const Field& g) {
    check_same_grid(f, g);
    if (f.components() != g.components()) throw ShapeError("component count mismatch");
    const double* a = f.values().data();
    const double* b = g.values().data();
    long double acc = 0.0;
    for (std::size_t i = 0; i < f.values().size(); ++i) acc += (long double)a[i] * b[i];
    return double(acc / (double)f.grid_size());
}

double h1_dot(const Field& f, const Field& g) {
    check_same_grid(f, g);
    if (f.components() != g.components()) throw ShapeError("component count mismatch");
    const auto& sf = f.spectral();
    const auto& sg = g.spectral();
    const auto& t = *f.torus();
    const std::size_t nn = f.grid_size();
    long double acc = 0.0;
    for (int c = 0; c < f.components(); ++c)
        for (std::size_t i = 0; i < nn; ++i) {
            const Complex z = sf[c * nn + i] * std::conj(sg[c * nn + i]);
            acc += (long double)(4.0 * kPi * kPi * t.k2[i]) * z.real();
        }
    return double(acc);
}

InnerProducts inner_products(const Field& f, const Field& g) {
    return InnerProducts{l2_dot(f, g), h1_dot(f, g)};
}

double l2_norm(const Field& f) { return std::sqrt(std::max(0.0, l2_dot(f, f))); }
double h1_norm(const Field& f) { return std::sqrt(std::max(0.0, h1_dot(f, f))); }

double h_minus1_norm(const Field& rho) {
    check_mean_zero(rho, "h_minus1_norm");
    const auto& spec = rho.spectral();
    const auto& t = *rho.torus();
    const std::size_t nn = rho.grid_size();
    long double acc = 0.0;
    for (int c = 0; c < rho.components(); ++c)
        for (std::size_t i = 0; i < nn; ++i)
            if (t.k2[i] > 0.0)
                acc += (long double)std::norm(spec[c * nn + i]) / (4.0 * kPi * kPi * t.k2[i]);
    return std::sqrt(double(acc));
}

double h_minus1_norm(const DensityFunctional& rho) { return h_minus1_norm(rho.density); }

Field add(const Field& a, const Field& b) {
    Field out(a);
    out.axpy(1.0, b);
    return out;
}

Field sub(const Field& a, const Field& b) {
    Field out(a);
    out.axpy(-1.0, b);
    return out;
}

Field scaled(const Field& a, double s) {
    Field out(a);
    out *= s;
    return out;
}

namespace detail {

int dealias_size(int n) {
    int m = (3 * n) / 2;
    if (m % 2 != 0) ++m;
    return m;
}

std::vector<double> pad_to_values(int n, int m, int components, const std::vector<Complex>& spec) {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    std::vector<Complex> big(mm), out(mm);
    std::vector<double> vals(static_cast<std::size_t>(components) * mm);
    for (int c = 0; c < components; ++c) {
        std::fill(big.begin(), big.end(), Complex(0.0));
        for (int i = 0; i < n; ++i) {
            const int m1 = i < n / 2 ? i : i - n;
            if (m1 == -n / 2) continue;  // Nyquist row dropped
            const int bi = m1 >= 0 ? m1 : m1 + m;
            for (int j = 0; j < n; ++j) {
                const int m2 = j < n / 2 ? j : j - n;
                if (m2 == -n / 2) continue;
                const int bj = m2 >= 0 ? m2 : m2 + m;
                big[static_cast<std::size_t>(bi) * m + bj] = spec[c * nn + i * n + j];
            }
        }
        fft2_inverse(m, big.data(), out.data());
        double* dst = vals.data() + c * mm;
        for (std::size_t i = 0; i < mm; ++i) dst[i] = out[i].real();
    }
    return vals;
}

std::vector<Complex> values_to_band(int m, int n, int components, const std::vector<double>& vals) {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    std::vector<Complex> in(mm), big(mm);
    std::vector<Complex> spec(static_cast<std::size_t>(components) * nn, Complex(0.0));
    const double inv = 1.0 / double(mm);
    for (int c = 0; c < components; ++c) {
        const double* src = vals.data() + c * mm;
        for (std::size_t i = 0; i < mm; ++i) in[i] = src[i];
        fft2_forward(m, in.data(), big.data());
        for (int i = 0; i < n; ++i) {
            const int m1 = i < n / 2 ? i : i - n;
            if (m1 == -n / 2) continue;
            const int bi = m1 >= 0 ? m1 : m1 + m;
            for (int j = 0; j < n; ++j) {
                const int m2 = j < n / 2 ? j : j - n;
                if (m2 == -n / 2) continue;
                const int bj = m2 >= 0 ? m2 : m2 + m;
                spec[c * nn + i * n + j] = big[static_cast<std::size_t>(bi) * m + bj] * inv;
            }
        }
    }
    return spec;
}

std::vector<double> padded_partials(const Field& f, int m) {
    const auto& spec = f.spectral();
    const auto& t = *f.torus();
    const int n = f.n();
    const std::size_t nn = f.grid_size();
    const int comps = f.components();
    const Complex i2pi(0.0, 2.0 * kPi);
    std::vector<Complex> dspec(static_cast<std::size_t>(2 * comps) * nn);
    for (int c = 0; c < comps; ++c)
        for (std::size_t i = 0; i < nn; ++i) {
            dspec[(0 * comps + c) * nn + i] = i2pi * t.kx[i] * spec[c * nn + i];
            dspec[(1 * comps + c) * nn + i] = i2pi * t.ky[i] * spec[c * nn + i];
        }
    return pad_to_values(n, m, 2 * comps, dspec);
}

}  // namespace detail

Field jacobian_bracket(const Field& a, const Field& b) {
    check_same_grid(a, b);
    if (a.components() != 1 || b.components() != 1)
        throw ShapeError("jacobian_bracket expects scalar fields");
    const int n = a.n();
    const int m = detail::dealias_size(n);
    const std::size_t mm = static_cast<std::size_t>(m) * m;
    auto da = detail::padded_partials(a, m);
    auto db = detail::padded_partials(b, m);
    std::vector<double> prod(mm);
    for (std::size_t i = 0; i < mm; ++i)
        prod[i] = da[i] * db[mm + i] - da[mm + i] * db[i];
    auto spec = detail::values_to_band(m, n, 1, prod);
    spec[0] = 0.0;  // closed-surface Jacobians integrate to zero
    return Field::from_spectral(a.torus(), 1, std::move(spec));
}

}  // namespace bubbleloja
