#include "bubbleloja/bubbles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "bubbleloja/parallel.hpp"

namespace bubbleloja {

namespace {

double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double t4 = t * t * t * t;
    return t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)));
}

double smoothstep_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double t3 = t * t * t;
    return t3 * (140.0 + t * (-420.0 + t * (420.0 - 140.0 * t)));
}

}  // namespace

void BubbleParams::validate() const {
    if (!(lambda >= kLambdaMin))
        throw GeometryError("bubble scale below lambda_min = " + std::to_string(kLambdaMin));
    const Eigen::Matrix3d defect = rot.transpose() * rot - Eigen::Matrix3d::Identity();
    if (defect.cwiseAbs().maxCoeff() > 1e-12 || std::abs(rot.determinant() - 1.0) > 1e-12)
        throw GeometryError("rotation must be special orthogonal");
}

CutoffProfile::CutoffProfile(double r, double iota) : r_(r) {
    if (!(r > 0.0) || !(r < iota / 4.0))
        throw GeometryError("cutoff radius must satisfy 0 < r < iota/4");
}

double CutoffProfile::psi(double rho) const {
    return smoothstep(2.0 - 2.0 * rho / r_);  // 1 on [0, r/2], 0 beyond r
}

double CutoffProfile::dpsi(double rho) const {
    return smoothstep_deriv(2.0 - 2.0 * rho / r_) * (-2.0 / r_);
}

double CutoffProfile::phi(double rho) const {
    return smoothstep(2.0 - rho / r_);  // 1 on [0, r], 0 beyond 2r
}

double CutoffProfile::dphi(double rho) const {
    return smoothstep_deriv(2.0 - rho / r_) * (-1.0 / r_);
}

double CutoffProfile::j(double rho) const {
    const double p = psi(rho);
    if (p >= 1.0) return 1.0 / (r_ * r_);
    return p / (r_ * r_) + (1.0 - p) / (rho * rho);
}

double CutoffProfile::dj(double rho) const {
    const double p = psi(rho);
    if (p >= 1.0) return 0.0;
    const double dp = dpsi(rho);
    return dp / (r_ * r_) - dp / (rho * rho) + (1.0 - p) * (-2.0 / (rho * rho * rho));
}

Eigen::Vector3d std_bubble(const Eigen::Vector2d& x) {
    const double s = 1.0 + x.squaredNorm();
    return Eigen::Vector3d(2.0 * x.x() / s, 2.0 * x.y() / s, (2.0 - s) / s);
}

void std_bubble_partials(const Eigen::Vector2d& x, Eigen::Vector3d& d1, Eigen::Vector3d& d2) {
    const double s = 1.0 + x.squaredNorm();
    const double f = 2.0 / (s * s);
    d1 = f * Eigen::Vector3d(1.0 - x.x() * x.x() + x.y() * x.y(), -2.0 * x.x() * x.y(), -2.0 * x.x());
    d2 = f * Eigen::Vector3d(-2.0 * x.x() * x.y(), 1.0 + x.x() * x.x() - x.y() * x.y(), -2.0 * x.y());
}

BubbleAtlas::BubbleAtlas(GreenPtr green, const CutoffProfile& cut, const Eigen::Vector2d& a)
    : green_(std::move(green)), cut_(cut), a_(green_->torus->wrap(a)) {
    const auto& t = *green_->torus;
    const int n = t.n;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    x1_.resize(nn);
    x2_.resize(nn);
    rho_.resize(nn);
    g1_.resize(nn);
    g2_.resize(nn);
    h11_.resize(nn);
    h12_.resize(nn);
    h22_.resize(nn);
    chart_.resize(nn);
    const double iota = t.iota;
    parallel_for(nn, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            const int i = int(idx / n), jj = int(idx % n);
            const Eigen::Vector2d x = t.wrap(t.point(i, jj) - a_);
            x1_[idx] = x.x();
            x2_[idx] = x.y();
            const double rho = x.norm();
            rho_[idx] = rho;
            const bool inside = rho < iota;
            chart_[idx] = inside ? 1 : 0;
            const GreenEval ge = green_->eval(x, GreenTable::kDerivs);
            if (inside) {
                g1_[idx] = ge.dJ.x();
                g2_[idx] = ge.dJ.y();
                h11_[idx] = ge.d2J(0, 0);
                h12_[idx] = ge.d2J(0, 1);
                h22_[idx] = ge.d2J(1, 1);
            } else {
                g1_[idx] = ge.dG.x();
                g2_[idx] = ge.dG.y();
                h11_[idx] = ge.d2G(0, 0);
                h12_[idx] = ge.d2G(0, 1);
                h22_[idx] = ge.d2G(1, 1);
            }
        }
    });
}

void BubbleAtlas::check(const BubbleParams& p) const {
    p.validate();
    const auto& t = *green_->torus;
    if (p.lambda / t.n > 1.0 / 16.0 + 1e-12)
        throw UnderResolvedBubble("bubble core under-resolved: lambda/N = " +
                                  std::to_string(p.lambda / t.n) + " > 1/16");
    if (!(2.0 * cut_.r() < t.iota))
        throw GeometryError("cutoff support exceeds the chart");
    if ((t.wrap(p.a - a_)).norm() > 1e-12)
        throw GeometryError("atlas built for a different centre");
}

template <class PointFn>
Field BubbleAtlas::assemble(const BubbleParams& p, PointFn&& fn) const {
    const auto& t = *green_->torus;
    const std::size_t nn = static_cast<std::size_t>(t.n) * t.n;
    std::vector<double> vals(3 * nn);
    parallel_for(nn, [&](std::size_t b, std::size_t e) {
        for (std::size_t idx = b; idx < e; ++idx) {
            const Eigen::Vector3d v = fn(idx);
            vals[idx] = v.x();
            vals[nn + idx] = v.y();
            vals[2 * nn + idx] = v.z();
        }
    });
    // subtract the quadrature mean, then rotate
    for (int c = 0; c < 3; ++c) {
        long double acc = 0.0;
        for (std::size_t i = 0; i < nn; ++i) acc += vals[c * nn + i];
        const double m = double(acc / nn);
        for (std::size_t i = 0; i < nn; ++i) vals[c * nn + i] -= m;
    }
    std::vector<double> rotated(3 * nn);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < nn; ++i)
            rotated[c * nn + i] = p.rot(c, 0) * vals[i] + p.rot(c, 1) * vals[nn + i] +
                                  p.rot(c, 2) * vals[2 * nn + i];
    Field f = Field::from_values(green_->torus, 3, std::move(rotated));
    f.subtract_mean();  // restores the flag; numerically a no-op
    return f;
}

Field BubbleAtlas::bubble(const BubbleParams& p) const {
    check(p);
    const double lam = p.lambda;
    return assemble(p, [&](std::size_t idx) -> Eigen::Vector3d {
        const double rho = rho_[idx];
        // grad_y entries are minus the tabulated grad_x
        const double ty1 = -g1_[idx], ty2 = -g2_[idx];
        if (!chart_[idx])
            return Eigen::Vector3d(2.0 / lam * ty1, 2.0 / lam * ty2, 0.0);
        const double ph = cut_.phi(rho);
        Eigen::Vector3d out = Eigen::Vector3d::Zero();
        if (ph > 0.0) {
            const Eigen::Vector2d x(x1_[idx], x2_[idx]);
            Eigen::Vector3d A = std_bubble(lam * x);
            A.x() += 2.0 / lam * ty1;
            A.y() += 2.0 / lam * ty2;
            A.z() += 2.0 / (lam * lam) * cut_.j(rho) + 1.0;
            out += ph * A;
        }
        if (ph < 1.0) {
            const double r2 = rho * rho;
            const Eigen::Vector3d B(2.0 / lam * (x1_[idx] / r2 + ty1),
                                    2.0 / lam * (x2_[idx] / r2 + ty2), 0.0);
            out += (1.0 - ph) * B;
        }
        return out;
    });
}

Field BubbleAtlas::d_lambda(const BubbleParams& p) const {
    check(p);
    const double lam = p.lambda;
    return assemble(p, [&](std::size_t idx) -> Eigen::Vector3d {
        const double rho = rho_[idx];
        const double ty1 = -g1_[idx], ty2 = -g2_[idx];
        if (!chart_[idx])
            return Eigen::Vector3d(-2.0 / (lam * lam) * ty1, -2.0 / (lam * lam) * ty2, 0.0);
        const double ph = cut_.phi(rho);
        Eigen::Vector3d out = Eigen::Vector3d::Zero();
        if (ph > 0.0) {
            const Eigen::Vector2d x(x1_[idx], x2_[idx]);
            Eigen::Vector3d d1, d2;
            std_bubble_partials(lam * x, d1, d2);
            Eigen::Vector3d dA = x.x() * d1 + x.y() * d2;  // d/dlam of pi(lam x)
            dA.x() += -2.0 / (lam * lam) * ty1;
            dA.y() += -2.0 / (lam * lam) * ty2;
            dA.z() += -4.0 / (lam * lam * lam) * cut_.j(rho);
            out += ph * dA;
        }
        if (ph < 1.0) {
            const double r2 = rho * rho;
            const Eigen::Vector3d dB(-2.0 / (lam * lam) * (x1_[idx] / r2 + ty1),
                                     -2.0 / (lam * lam) * (x2_[idx] / r2 + ty2), 0.0);
            out += (1.0 - ph) * dB;
        }
        return out;
    });
}

Field BubbleAtlas::d_center(const BubbleParams& p, int axis) const {
    check(p);
    const double lam = p.lambda;
    // d/da_i of f(p - a) is -d/dx_i, assembled from the tabulated Hessians.
    return assemble(p, [&](std::size_t idx) -> Eigen::Vector3d {
        const double rho = rho_[idx];
        const double hx1 = axis == 0 ? h11_[idx] : h12_[idx];
        const double hx2 = axis == 0 ? h12_[idx] : h22_[idx];
        if (!chart_[idx]) {
            // tail_m = (2/lam)(-d_m Ghat); d_a tail_m = +(2/lam) Hess_{axis,m}
            return Eigen::Vector3d(2.0 / lam * hx1, 2.0 / lam * hx2, 0.0);
        }
        const Eigen::Vector2d x(x1_[idx], x2_[idx]);
        const double ph = cut_.phi(rho);
        const double xi = axis == 0 ? x.x() : x.y();
        Eigen::Vector3d dz = Eigen::Vector3d::Zero();
        if (ph > 0.0) {
            Eigen::Vector3d d1, d2;
            std_bubble_partials(lam * x, d1, d2);
            Eigen::Vector3d dA = lam * (axis == 0 ? d1 : d2);
            dA.x() += -2.0 / lam * hx1;  // d_i grad_y J = -Hess J row
            dA.y() += -2.0 / lam * hx2;
            dA.z() += 2.0 / (lam * lam) * cut_.dj(rho) * (rho > 0.0 ? xi / rho : 0.0);
            dz += ph * dA;
        }
        if (ph < 1.0) {
            const double r2 = rho * rho;
            const double r4 = r2 * r2;
            const double q1 = ((axis == 0 ? r2 : 0.0) - 2.0 * xi * x.x()) / r4;
            const double q2 = ((axis == 1 ? r2 : 0.0) - 2.0 * xi * x.y()) / r4;
            const Eigen::Vector3d dB(2.0 / lam * (q1 - hx1), 2.0 / lam * (q2 - hx2), 0.0);
            dz += (1.0 - ph) * dB;
        }
        if (ph > 0.0 && ph < 1.0) {
            // the cutoff itself moves: dphi_i (A - B)
            const double dphi_i = cut_.dphi(rho) * xi / rho;
            const double ty1 = -g1_[idx], ty2 = -g2_[idx];
            Eigen::Vector3d A = std_bubble(lam * x);
            A.x() += 2.0 / lam * ty1;
            A.y() += 2.0 / lam * ty2;
            A.z() += 2.0 / (lam * lam) * cut_.j(rho) + 1.0;
            const double r2 = rho * rho;
            const Eigen::Vector3d B(2.0 / lam * (x.x() / r2 + ty1), 2.0 / lam * (x.y() / r2 + ty2),
                                    0.0);
            dz += dphi_i * (A - B);
        }
        return -dz;  // d/da = -d/dx
    });
}

std::array<Field, 6> BubbleAtlas::raw_tangents(const BubbleParams& p) const {
    return raw_tangents(p, bubble(p));
}

std::array<Field, 6> BubbleAtlas::raw_tangents(const BubbleParams& p, const Field& z) const {
    std::array<Field, 6> t{d_lambda(p),          d_center(p, 0),      d_center(p, 1),
                           Field(z.torus(), 3),  Field(z.torus(), 3), Field(z.torus(), 3)};
    // rotation generators act on the target: w_i z = e_i x z
    const std::size_t nn = z.grid_size();
    const double* v0 = z.component(0);
    const double* v1 = z.component(1);
    const double* v2 = z.component(2);
    for (int gi = 0; gi < 3; ++gi) {
        auto& vals = t[3 + gi].mutable_values();
        for (std::size_t i = 0; i < nn; ++i) {
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e[gi] = 1.0;
            const Eigen::Vector3d w = e.cross(Eigen::Vector3d(v0[i], v1[i], v2[i]));
            vals[i] = w.x();
            vals[nn + i] = w.y();
            vals[2 * nn + i] = w.z();
        }
        t[3 + gi].subtract_mean();
    }
    return t;
}

Field adapted_bubble(const GreenTable& gt, const CutoffProfile& cut, const BubbleParams& p) {
    BubbleAtlas atlas(GreenPtr(gt.torus, &gt), cut, p.a);
    return atlas.bubble(p);
}

Field d_lambda_adapted(const GreenTable& gt, const CutoffProfile& cut, const BubbleParams& p) {
    BubbleAtlas atlas(GreenPtr(gt.torus, &gt), cut, p.a);
    return atlas.d_lambda(p);
}

namespace {

Eigen::Matrix<double, 6, 6> gram_of(const std::array<Field, 6>& t) {
    Eigen::Matrix<double, 6, 6> g;
    for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j) {
            g(i, j) = h1_dot(t[i], t[j]);
            g(j, i) = g(i, j);
        }
    return g;
}

}  // namespace

TangentFrame tangent_frame(const GreenTable& gt, const CutoffProfile& cut, const BubbleParams& p) {
    BubbleAtlas atlas(GreenPtr(gt.torus, &gt), cut, p.a);
    auto raw = atlas.raw_tangents(p);
    const Eigen::Matrix<double, 6, 6> gram = gram_of(raw);
    TangentFrame out{std::move(raw), gram};

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(out.raw_gram);
    const double emin = es.eigenvalues().minCoeff();
    const double emax = es.eigenvalues().maxCoeff();
    if (!(emin > 0.0) || emax / emin > 1e8)
        throw DegenerateFrame("tangent frame Gram matrix is ill conditioned");

    // modified Gram-Schmidt in the H1-dot inner product
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < i; ++j) {
            const double c = h1_dot(out.basis[i], out.basis[j]);
            out.basis[i].axpy(-c, out.basis[j]);
        }
        const double nrm = h1_norm(out.basis[i]);
        if (!(nrm > 0.0)) throw DegenerateFrame("tangent frame direction collapsed");
        out.basis[i] *= 1.0 / nrm;
    }
    return out;
}

namespace {

Eigen::Matrix3d rotation_step(const Eigen::Vector3d& omega, const Eigen::Matrix3d& R) {
    const double angle = omega.norm();
    Eigen::Quaterniond q(R);
    if (angle > 0.0) {
        const Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, omega / angle));
        q = dq * q;
    }
    q.normalize();
    return q.toRotationMatrix();
}

}  // namespace

ProjectionResult nearest_bubble(const Field& u, const GreenTable& gt, const CutoffProfile& cut,
                                const BubbleParams& guess) {
    if (u.components() != 3) throw ShapeError("nearest_bubble expects a 3-component field");
    guess.validate();
    GreenPtr green(gt.torus, &gt);
    const double iota = gt.torus->iota;
    const double u_norm = h1_norm(u);

    BubbleParams cur = guess;
    cur.a = gt.torus->wrap(cur.a);
    auto atlas = std::make_unique<BubbleAtlas>(green, cut, cur.a);
    Field z = atlas->bubble(cur);
    Field r = sub(u, z);
    double rn = h1_norm(r);

    for (int iter = 1; iter <= 100; ++iter) {
        auto dirs = atlas->raw_tangents(cur, z);
        Eigen::Matrix<double, 6, 6> g = gram_of(dirs);
        Eigen::Matrix<double, 6, 1> rhs;
        for (int i = 0; i < 6; ++i) rhs(i) = h1_dot(dirs[i], r);

        // equilibrate before factorising
        Eigen::Matrix<double, 6, 1> scale;
        for (int i = 0; i < 6; ++i) scale(i) = 1.0 / std::sqrt(std::max(g(i, i), 1e-300));
        Eigen::Matrix<double, 6, 6> gs = scale.asDiagonal() * g * scale.asDiagonal();
        Eigen::Matrix<double, 6, 1> rs = scale.asDiagonal() * rhs;

        // first-order optimality in the orthonormalised frame
        double opt = std::numeric_limits<double>::infinity();
        Eigen::LLT<Eigen::Matrix<double, 6, 6>> llt(gs);
        if (llt.info() == Eigen::Success)
            opt = llt.matrixL().solve(rs).cwiseAbs().maxCoeff();
        const double floor = 1e-12 * std::max(1.0, u_norm);
        if (opt <= 1e-8 * std::max(rn, 1e-300) || opt <= floor ||
            rn <= 1e-13 * std::max(1.0, u_norm))
            return ProjectionResult{cur, std::move(r), rn, iter};

        double damping = 1e-12;
        bool accepted = false;
        for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
            Eigen::Matrix<double, 6, 6> reg = gs + damping * Eigen::Matrix<double, 6, 6>::Identity();
            const Eigen::Matrix<double, 6, 1> step = scale.asDiagonal() * reg.ldlt().solve(rs);

            double shrink = 1.0;
            for (int half = 0; half < 12; ++half, shrink *= 0.5) {
                BubbleParams trial = cur;
                double dl = shrink * step(0);
                dl = std::clamp(dl, -0.5 * cur.lambda, cur.lambda);
                trial.lambda = cur.lambda + dl;
                if (trial.lambda < kLambdaMin)
                    throw LeftBubbleRegime("nearest_bubble drifted below lambda_min");
                Eigen::Vector2d da(shrink * step(1), shrink * step(2));
                if (da.norm() > iota / 2.0) da *= (iota / 2.0) / da.norm();
                trial.a = gt.torus->wrap(cur.a + da);
                trial.rot =
                    rotation_step(shrink * Eigen::Vector3d(step(3), step(4), step(5)), cur.rot);

                auto trial_atlas = std::make_unique<BubbleAtlas>(green, cut, trial.a);
                Field tz = trial_atlas->bubble(trial);
                Field tr = sub(u, tz);
                const double trn = h1_norm(tr);
                if (trn <= rn * (1.0 + 1e-14)) {
                    cur = trial;
                    atlas = std::move(trial_atlas);
                    z = std::move(tz);
                    r = std::move(tr);
                    rn = trn;
                    accepted = true;
                    break;
                }
            }
            damping *= 1e3;
        }
        if (!accepted) {
            // at the numerical floor of the basin the residual stops moving;
            // accept when the stationarity defect is already small
            if (opt <= 1e-6 * std::max(rn, 1e-300))
                return ProjectionResult{cur, std::move(r), rn, iter};
            throw ProjectionDiverged("nearest_bubble could not decrease the residual");
        }
    }
    throw ProjectionDiverged("nearest_bubble did not converge in 100 iterations");
}

}  // namespace bubbleloja
