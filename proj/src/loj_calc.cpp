#include "bubbleloja/loj_calc.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <random>

namespace bubbleloja {

Rational::Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw WrongRegime("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::parse(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    const auto dot = text.find('.');
    if (dot != std::string::npos) {
        const std::string frac = text.substr(dot + 1);
        if (frac.size() > 9) throw WrongRegime("decimal too long for exact rational: " + text);
        long long den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        long long whole = dot == 0 ? 0 : std::stoll(text.substr(0, dot));
        const bool neg = !text.empty() && text[0] == '-';
        long long f = frac.empty() ? 0 : std::stoll(frac);
        long long n = (neg ? -1 : 1) * ((whole < 0 ? -whole : whole) * den + f);
        return Rational(n, den);
    }
    return Rational(std::stoll(text), 1);
}

Rational Rational::operator+(const Rational& o) const {
    return Rational(num * o.den + o.num * den, den * o.den);
}
Rational Rational::operator-(const Rational& o) const {
    return Rational(num * o.den - o.num * den, den * o.den);
}
Rational Rational::operator*(const Rational& o) const { return Rational(num * o.num, den * o.den); }
Rational Rational::operator/(const Rational& o) const {
    if (o.num == 0) throw WrongRegime("rational division by zero");
    return Rational(num * o.den, den * o.num);
}
bool Rational::operator<(const Rational& o) const {
    return (__int128)num * o.den < (__int128)o.num * den;
}

std::string Rational::str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

ExpPair f_infty(const ExpPair& p, const ExpPair& q) {
    if (p.a > q.a) return p;
    if (q.a > p.a) return q;
    return p.b >= q.b ? p : q;
}

ExpPair f_zero(const ExpPair& p, const ExpPair& q) {
    if (p.a < q.a) return p;
    if (q.a < p.a) return q;
    return p.b >= q.b ? p : q;
}

void DecayRates::validate() const {
    const Rational zero = 0;
    for (int i = 0; i < 5; ++i)
        if (gamma[i] < zero) throw WrongRegime("decay powers gamma_i must be nonnegative");
    if (nu < Rational(1)) throw WrongRegime("nu must be at least 1");
    for (int i : {0, 2, 4})
        if (gamma[i] == zero && !(sigma[i] > zero))
            throw WrongRegime("sigma_" + std::to_string(i) + " must be positive when gamma_" +
                              std::to_string(i) + " = 0");
}

ExpPair combine_13(const DecayRates& r) {
    // f_1 + f_3 <= C lambda^{-g}(log lambda)^{-s}: the slower decay dominates,
    // so take f_infty of the negated pairs and negate back.
    const ExpPair p{-r.gamma[1], -r.sigma[1]};
    const ExpPair q{-r.gamma[3], -r.sigma[3]};
    const ExpPair m = f_infty(p, q);
    return ExpPair{-m.a, -m.b};
}

LojExponents exponents_poly(const DecayRates& r) {
    r.validate();
    const Rational zero = 0;
    if (!(r.gamma[0] > zero)) throw WrongRegime("poly regime requires gamma_0 > 0");
    const ExpPair g13 = combine_13(r);

    const ExpPair inv1 = f_infty(ExpPair{r.gamma[0] - g13.a, r.sigma[0] - g13.b},
                                 ExpPair{r.gamma[0] / r.nu, r.sigma[0] / r.nu});
    if (!(inv1.a > zero)) throw WrongRegime("alpha_1 would not be positive");
    LojExponents out;
    out.regime = LojExponents::kPoly;
    out.alpha[0] = Rational(1) / inv1.a;
    out.beta[0] = inv1.b * out.alpha[0];

    const ExpPair p2 = f_zero(ExpPair{1, 0},
                              ExpPair{r.gamma[2] * out.alpha[0],
                                      r.gamma[2] * out.beta[0] - r.sigma[2]});
    out.alpha[1] = p2.a;
    out.beta[1] = p2.b;

    const ExpPair p3 = f_zero(ExpPair{Rational(2) * out.alpha[1], Rational(2) * out.beta[1]},
                              ExpPair{r.gamma[4] * out.alpha[0],
                                      r.gamma[4] * out.beta[0] - r.sigma[4]});
    out.alpha[2] = p3.a;
    out.beta[2] = p3.b;

    for (const Rational& a : out.alpha)
        if (!(a > zero)) throw WrongRegime("derived alpha exponent is not positive");
    return out;
}

LojExponents exponents_log(const DecayRates& r) {
    r.validate();
    const Rational zero = 0;
    if (!(r.gamma[0] == zero) || !(r.sigma[0] > zero))
        throw WrongRegime("log regime requires gamma_0 = 0 and sigma_0 > 0");
    const ExpPair g13 = combine_13(r);

    LojExponents out;
    out.regime = LojExponents::kLog;
    if (g13.a > zero) {
        out.alpha[0] = r.nu / r.sigma[0];
    } else {
        const Rational m =
            (r.sigma[0] - g13.b) > (r.sigma[0] / r.nu) ? (r.sigma[0] - g13.b) : (r.sigma[0] / r.nu);
        out.alpha[0] = Rational(1) / m;
    }
    if (r.gamma[2] > zero) {
        out.alpha[1] = 1;
    } else {
        const Rational cand = r.sigma[2] * out.alpha[0];
        out.alpha[1] = cand < Rational(1) ? cand : Rational(1);
    }
    if (r.gamma[4] > zero) {
        out.alpha[2] = Rational(2) * out.alpha[1];
    } else {
        const Rational c1 = Rational(2) * out.alpha[1];
        const Rational c2 = r.sigma[4] * out.alpha[0];
        out.alpha[2] = c1 < c2 ? c1 : c2;
    }
    for (const Rational& e : out.alpha)
        if (!(e > zero)) throw WrongRegime("derived eta exponent is not positive");
    out.beta = {Rational(0), Rational(0), Rational(0)};
    return out;
}

DecayRates h_energy_l2_rates() {
    DecayRates r;
    r.gamma = {Rational(2), Rational(2), Rational(2), Rational(1), Rational(2)};
    r.sigma = {Rational(0), Rational(-1, 2), Rational(-1, 2), Rational(-1, 2), Rational(0)};
    r.nu = 2;
    return r;
}

DecayRates h_energy_hm1_rates() {
    DecayRates r;
    r.gamma = {Rational(2), Rational(2), Rational(2), Rational(0), Rational(2)};
    r.sigma = {Rational(0), Rational(-1, 2), Rational(-1, 2), Rational(0), Rational(0)};
    r.nu = 2;
    return r;
}

namespace {

// Internal-coordinate toy: I(u) = g(y1) + (1/2) sum_i kappa_i c(y1) eps_i y_i^2
// for y = Q u, with g'(s) = lambda(s)^{-2}, lambda(s) = lambda0 / (1 - s).
struct Toy {
    int dim;
    double c0 = 0.5;
    double beta = 0.0;       // strength of the curvature modulation c(y1)
    double lambda0 = 10.0;
    std::vector<double> kappa;  // in [1, 1.04]
    std::vector<double> eps;    // +-1 on coordinates 2..dim
    Eigen::MatrixXd Q;          // random rotation of the ambient space

    double lambda_of(double s) const { return lambda0 / (1.0 - s); }
    double f0(double s) const {
        const double l = lambda_of(s);
        return 1.0 / (l * l);
    }
    double curv(double s) const { return c0 * (1.0 + beta * std::sin(s)); }
    double dcurv(double s) const { return c0 * beta * std::cos(s); }

    // gradient in ambient coordinates at u
    Eigen::VectorXd grad(const Eigen::VectorXd& u) const {
        const Eigen::VectorXd y = Q * u;
        Eigen::VectorXd g(dim);
        double quad = 0.0;
        for (int i = 1; i < dim; ++i) quad += kappa[i] * eps[i] * y[i] * y[i];
        g[0] = f0(y[0]) + 0.5 * dcurv(y[0]) * quad;
        for (int i = 1; i < dim; ++i) g[i] = kappa[i] * curv(y[0]) * eps[i] * y[i];
        return Q.transpose() * g;
    }
};

Toy make_toy(int dim, std::uint64_t seed, double beta, bool mixed_signs) {
    Toy toy;
    toy.dim = dim;
    toy.beta = beta;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    toy.kappa.resize(dim);
    toy.eps.resize(dim);
    toy.kappa[0] = 1.0;
    toy.eps[0] = 1.0;
    for (int i = 1; i < dim; ++i) {
        toy.kappa[i] = 1.0 + 0.04 * unif(rng);
        toy.eps[i] = (mixed_signs && unif(rng) < 0.5) ? -1.0 : 1.0;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = gauss(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    toy.Q = qr.householderQ();
    return toy;
}

}  // namespace

ToyModelReport toy_model_check(int dim, std::uint64_t seed) {
    if (dim < 3 || dim > 50) throw WrongRegime("toy model dimension must be in [3, 50]");
    ToyModelReport rep;
    rep.dim = dim;
    rep.samples = 1000;

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto sample_pair = [&](const Toy& toy, double wmax, Eigen::VectorXd& z, Eigen::VectorXd& w) {
        const double s = 0.1 + 0.8 * unif(rng);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(toy.dim);
        y[0] = s;
        z = toy.Q.transpose() * y;
        Eigen::VectorXd wy(toy.dim);
        wy[0] = 0.0;
        for (int i = 1; i < toy.dim; ++i) wy[i] = gauss(rng);
        wy *= (0.01 + (wmax - 0.01) * unif(rng)) / wy.norm();
        w = toy.Q.transpose() * wy;
        return s;
    };

    // V_z*-norm of the gradient: ambient gradient minus its y_z component,
    // with y_z = Q^T e_1 the unit curve direction.
    auto vstar_norm = [](const Toy& toy, const Eigen::VectorXd& g) {
        Eigen::VectorXd gy = toy.Q * g;
        gy[0] = 0.0;
        return gy.norm();
    };

    // quadratic toy: distance bound with constant 1/c0
    {
        Toy toy = make_toy(dim, seed, 0.0, true);
        rep.c0 = toy.c0;
        double worst = 0.0;
        for (int k = 0; k < rep.samples; ++k) {
            Eigen::VectorXd z, w;
            sample_pair(toy, 0.1, z, w);
            const Eigen::VectorXd g = toy.grad(z + w);
            worst = std::max(worst, w.norm() / vstar_norm(toy, g));
        }
        rep.quad_constant = worst;
        rep.quad_ok = std::abs(worst * toy.c0 - 1.0) <= 0.05;
    }

    // rate toy with (gamma_0, sigma_0) = (2, 0): f0 <= 2|dI(u)[y_z]| + C |dI|_{V*}^2
    {
        Toy toy = make_toy(dim, seed + 1, 0.2, true);
        const double c_pin = 2.0 * toy.beta / toy.c0;
        int violations = 0;
        for (int k = 0; k < rep.samples; ++k) {
            Eigen::VectorXd z, w;
            const double s = sample_pair(toy, 0.1, z, w);
            const Eigen::VectorXd g = toy.grad(z + w);
            const double along = std::abs((toy.Q * g)[0]);
            const double vs = vstar_norm(toy, g);
            if (toy.f0(s) > 2.0 * along + c_pin * vs * vs + 1e-14) ++violations;
        }
        rep.lemma2_violations = violations;
        rep.lemma2_ok = violations == 0;
    }

    // convex toy (no negative block): the same distance bound
    {
        Toy toy = make_toy(dim, seed + 2, 0.0, false);
        double worst = 0.0;
        for (int k = 0; k < rep.samples; ++k) {
            Eigen::VectorXd z, w;
            sample_pair(toy, 0.1, z, w);
            const Eigen::VectorXd g = toy.grad(z + w);
            worst = std::max(worst, w.norm() / vstar_norm(toy, g));
        }
        rep.convex_constant = worst;
        rep.convex_ok = std::abs(worst * toy.c0 - 1.0) <= 0.05;
    }
    return rep;
}

}  // namespace bubbleloja
