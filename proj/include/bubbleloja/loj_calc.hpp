#ifndef BUBBLELOJA_LOJ_CALC_HPP
#define BUBBLELOJA_LOJ_CALC_HPP

#include <array>
#include <cstdint>
#include <string>

#include "bubbleloja/errors.hpp"

namespace bubbleloja {

/// Exact rational arithmetic for exponent bookkeeping; the worked tables are
/// exact and tie-breaking must not hinge on floating-point equality.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n) : num(n), den(1) {}  // NOLINT: implicit by design
    Rational(long long n, long long d);

    static Rational parse(const std::string& text);  // "3", "-1/2", "0.5"

    Rational operator-() const { return Rational(-num, den); }
    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator<=(const Rational& o) const { return !(o < *this); }
    bool operator>=(const Rational& o) const { return !(*this < o); }

    double value() const { return double(num) / double(den); }
    std::string str() const;
};

/// One (power, log-power) exponent pair.
struct ExpPair {
    Rational a, b;
    bool operator==(const ExpPair& o) const { return a == o.a && b == o.b; }
};

/// Dominant pair for sums at lambda -> infinity: largest power wins, on a tie
/// the larger log power.
ExpPair f_infty(const ExpPair& p, const ExpPair& q);

/// Dominant pair for sums of small positive quantities: smallest power wins,
/// on a tie the larger |log| power.
ExpPair f_zero(const ExpPair& p, const ExpPair& q);

/// Decay-rate records (gamma_i, sigma_i) for f_0..f_4 and the modulus nu.
struct DecayRates {
    std::array<Rational, 5> gamma;
    std::array<Rational, 5> sigma;
    Rational nu = 1;

    void validate() const;
};

/// Combined decay of f_1 + f_3: the slower-decaying envelope of the two,
/// i.e. componentwise -f_infty(-(g1,s1), -(g3,s3)).
ExpPair combine_13(const DecayRates& r);

struct LojExponents {
    enum Regime { kPoly, kLog } regime = kPoly;
    std::array<Rational, 3> alpha;  // eta_i in the log regime
    std::array<Rational, 3> beta;   // unused in the log regime
};

LojExponents exponents_poly(const DecayRates& r);
LojExponents exponents_log(const DecayRates& r);

// The worked rate records for the H-energy.
DecayRates h_energy_l2_rates();
DecayRates h_energy_hm1_rates();

/// Synthetic finite-dimensional functional with a curve of almost-critical
/// points; verifies the two abstract lemmas by sampling.
struct ToyModelReport {
    int dim = 0;
    int samples = 0;
    double c0 = 0.0;
    double quad_constant = 0.0;    // measured distance/gradient ratio, quadratic toy
    bool quad_ok = false;          // quad_constant within 5% of 1/c0
    int lemma2_violations = 0;     // rate toy, pinned constant
    bool lemma2_ok = false;
    double convex_constant = 0.0;  // all-positive toy
    bool convex_ok = false;
};

ToyModelReport toy_model_check(int dim, std::uint64_t seed);

}  // namespace bubbleloja

#endif
