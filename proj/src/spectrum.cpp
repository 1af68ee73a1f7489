#include "bubbleloja/spectrum.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace bubbleloja {

ProjectedJacobi::ProjectedJacobi(Field z, TangentFrame frame)
    : op_(std::move(z)), frame_(std::move(frame)) {}

Field ProjectedJacobi::project(const Field& w) const {
    std::array<double, 6> c;
    for (int i = 0; i < 6; ++i) c[i] = h1_dot(w, frame_.basis[i]);
    Field out(w);
    for (int i = 0; i < 6; ++i) out.axpy(-c[i], frame_.basis[i]);
    return out;
}

Field ProjectedJacobi::apply(const Field& w) const { return project(op_.apply(project(w))); }

Field ProjectedJacobi::apply_unprojected(const Field& w) const { return op_.apply(w); }

Field projected_apply(const ProjectedJacobi& lz, const Field& w) { return lz.apply(w); }

namespace {

// Deterministic band-limited random start vector, mean-zero.
Field random_start(const TorusPtr& t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const int n = t->n;
    const int kmax = std::min(12, n / 4);
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    std::vector<Complex> spec(3 * nn, Complex(0.0));
    for (int c = 0; c < 3; ++c)
        for (int m1 = -kmax; m1 <= kmax; ++m1)
            for (int m2 = -kmax; m2 <= kmax; ++m2) {
                if (m1 == 0 && m2 == 0) continue;
                if (m1 < 0 || (m1 == 0 && m2 < 0)) continue;
                const int i = (m1 + n) % n, j = (m2 + n) % n;
                const int ic = (n - m1) % n, jc = (n - m2) % n;
                const double amp = 1.0 / (1.0 + m1 * m1 + m2 * m2);
                const Complex z(amp * unif(rng), amp * unif(rng));
                spec[c * nn + static_cast<std::size_t>(i) * n + j] = z;
                spec[c * nn + static_cast<std::size_t>(ic) * n + jc] = std::conj(z);
            }
    return Field::from_spectral(t, 3, std::move(spec));
}

Eigen::MatrixXd gram_matrix(const std::vector<Field>& s) {
    const int m = int(s.size());
    Eigen::MatrixXd g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            g(i, j) = h1_dot(s[i], s[j]);
            g(j, i) = g(i, j);
        }
    return g;
}

Eigen::MatrixXd cross_gram(const std::vector<Field>& a, const std::vector<Field>& b) {
    Eigen::MatrixXd g(int(a.size()), int(b.size()));
    for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) g(i, j) = h1_dot(a[i], b[j]);
    return g;
}

std::vector<Field> combine(const std::vector<Field>& s, const Eigen::MatrixXd& coeff,
                           const TorusPtr& torus) {
    std::vector<Field> out;
    out.reserve(coeff.cols());
    for (int v = 0; v < coeff.cols(); ++v) {
        Field f(torus, 3);
        for (int i = 0; i < coeff.rows(); ++i)
            if (coeff(i, v) != 0.0) f.axpy(coeff(i, v), s[i]);
        out.push_back(std::move(f));
    }
    return out;
}

// b <- b - q (q^T b) in the H1-dot metric, mirrored on the A-images.
void block_orthogonalize(std::vector<Field>& b, std::vector<Field>& ab,
                         const std::vector<Field>& q, const std::vector<Field>& aq) {
    if (b.empty() || q.empty()) return;
    const Eigen::MatrixXd c = cross_gram(q, b);
    for (std::size_t j = 0; j < b.size(); ++j)
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (c(int(i), int(j)) == 0.0) continue;
            b[j].axpy(-c(int(i), int(j)), q[i]);
            if (!ab.empty()) ab[j].axpy(-c(int(i), int(j)), aq[i]);
        }
}

// Symmetric orthonormalisation of (s, as); near-dependent directions dropped.
void loewdin_pair(std::vector<Field>& s, std::vector<Field>& as, const TorusPtr& torus) {
    if (s.empty()) return;
    const Eigen::MatrixXd g = gram_matrix(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const double gmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
    std::vector<int> keep;
    for (int i = 0; i < g.rows(); ++i)
        if (es.eigenvalues()(i) > 1e-12 * gmax) keep.push_back(i);
    Eigen::MatrixXd coeff(g.rows(), int(keep.size()));
    for (std::size_t v = 0; v < keep.size(); ++v)
        coeff.col(int(v)) = es.eigenvectors().col(keep[v]) / std::sqrt(es.eigenvalues()(keep[v]));
    s = combine(s, coeff, torus);
    if (!as.empty()) as = combine(as, coeff, torus);
}

}  // namespace

SpectrumReport small_spectrum(const ProjectedJacobi& lz, int k, double tol, int maxit,
                              std::uint64_t seed) {
    if (k < 1 || k > 16) throw ShapeError("small_spectrum expects 1 <= k <= 16");
    const TorusPtr torus = lz.base_point().torus();

    SpectrumReport rep;
    for (int i = 0; i < 6; ++i)
        rep.tangent_residuals[i] = h1_norm(lz.apply_unprojected(lz.frame().basis[i]));

    const int bs = std::min(k + 2, 16);
    std::vector<Field> X, AX;
    for (int i = 0; i < bs; ++i) X.push_back(lz.project(random_start(torus, seed + 11 * i)));
    {
        std::vector<Field> none;
        loewdin_pair(X, none, torus);
    }
    for (auto& x : X) AX.push_back(lz.apply(lz.apply(x)));

    std::vector<Field> P, AP;
    std::vector<double> theta(X.size(), 0.0);
    double tol_a = 0.5 * tol;

    auto finish = [&](bool converged) {
        std::vector<double> mu(X.size()), res(X.size());
        std::vector<std::pair<double, int>> order;
        for (std::size_t i = 0; i < X.size(); ++i) {
            Field y = lz.apply(X[i]);
            const double xn2 = std::max(h1_dot(X[i], X[i]), 1e-300);
            mu[i] = h1_dot(y, X[i]) / xn2;
            y.axpy(-mu[i], X[i]);
            res[i] = h1_norm(y) / std::sqrt(xn2);
            order.emplace_back(std::abs(mu[i]), int(i));
        }
        std::sort(order.begin(), order.end());
        rep.smallest_eigs.clear();
        rep.eig_residuals.clear();
        for (int i = 0; i < k && i < int(order.size()); ++i) {
            rep.smallest_eigs.push_back(mu[order[i].second]);
            rep.eig_residuals.push_back(res[order[i].second]);
        }
        bool ok = converged && int(rep.smallest_eigs.size()) == std::min(k, int(X.size()));
        for (double r : rep.eig_residuals)
            if (r > tol) ok = false;
        rep.converged = ok;
        return ok;
    };

    for (int it = 1; it <= maxit; ++it) {
        rep.iterations = it;

        // residuals of the squared operator from the carried images
        std::vector<Field> W, AW;
        bool inner_done = true;
        for (std::size_t i = 0; i < X.size(); ++i) {
            theta[i] = h1_dot(AX[i], X[i]);
            Field r = AX[i];
            r.axpy(-theta[i], X[i]);
            const double rn = h1_norm(r);
            if (int(i) < k && rn > tol_a) inner_done = false;
            if (rn > 1e-13) {
                r *= 1.0 / rn;
                W.push_back(lz.project(r));
            }
        }
        if (inner_done) {
            if (finish(true)) return rep;
            tol_a *= 0.2;  // L-hat residual not yet at tol; tighten and continue
            continue;
        }

        {
            std::vector<Field> noneW;
            block_orthogonalize(W, noneW, X, AX);
            if (!P.empty()) block_orthogonalize(W, noneW, P, AP);
            loewdin_pair(W, noneW, torus);
        }
        for (auto& w : W) AW.push_back(lz.apply(lz.apply(w)));

        // Rayleigh-Ritz over the orthonormal blocks [X | W | P]
        std::vector<Field> S = X, AS = AX;
        const std::size_t nx = S.size();
        for (std::size_t i = 0; i < W.size(); ++i) {
            S.push_back(std::move(W[i]));
            AS.push_back(std::move(AW[i]));
        }
        if (!P.empty()) {
            std::vector<Field> Pb = std::move(P), APb = std::move(AP);
            block_orthogonalize(Pb, APb, S, AS);
            loewdin_pair(Pb, APb, torus);
            for (std::size_t i = 0; i < Pb.size(); ++i) {
                S.push_back(std::move(Pb[i]));
                AS.push_back(std::move(APb[i]));
            }
        }
        const int m = int(S.size());
        Eigen::MatrixXd T(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                T(i, j) = 0.5 * (h1_dot(AS[j], S[i]) + h1_dot(AS[i], S[j]));
                T(j, i) = T(i, j);
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const int nkeep = std::min(bs, m);
        const Eigen::MatrixXd v = es.eigenvectors().leftCols(nkeep);
        Eigen::MatrixXd vp = v;
        vp.topRows(int(nx)).setZero();

        X = combine(S, v, torus);
        AX = combine(AS, v, torus);
        P = combine(S, vp, torus);
        AP = combine(AS, vp, torus);
        theta.assign(X.size(), 0.0);
    }

    finish(false);
    std::ostringstream msg;
    msg << "small_spectrum: not converged after " << rep.iterations << " iterations; residuals:";
    for (double r : rep.eig_residuals) msg << " " << r;
    throw EigsNotConverged(msg.str());
}

}  // namespace bubbleloja
