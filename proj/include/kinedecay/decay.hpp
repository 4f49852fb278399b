/**
 * Decay kernel, L^p-L^q rate calculus, k-space norm synthesis, and the
 * model-comparison table.
 *
 * The per-mode decay kernel is phi(|k|) = |k|^4/(1+|k|^2)^3: quartic
 * degeneracy at low frequency (plasma oscillation) and |k|^{-2} degeneracy
 * at high frequency (regularity loss).  theoretical_rate turns kernel
 * exponents (sigma_+, sigma_-) into L^p -> L^q time-decay exponents in
 * exact rational arithmetic; the rest of the module measures the same
 * exponents from propagated modes.
 */
#pragma once

#include "kinedecay/collision.hpp"
#include "kinedecay/propagator.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace kinedecay {

/// Reference decay kernel |k|^4 / (1 + |k|^2)^3.
double phi(double k_norm);

/// Exact rational p/q with gcd-normalized int64 storage, den > 0.
/// num = 1, den = 0 encodes +infinity (used for q = infinity).
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}  // NOLINT: implicit by design
    Rational(std::int64_t n, std::int64_t d);

    static Rational infinity() {
        Rational r;
        r.num = 1;
        r.den = 0;
        return r;
    }
    bool is_infinite() const { return den == 0; }
    /// 1/x; the reciprocal of infinity is 0.
    Rational reciprocal() const;
    /// Largest integer <= value (finite only).
    std::int64_t floor() const;
    double to_double() const;
    std::string to_string() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b);
    friend bool operator<=(const Rational& a, const Rational& b) {
        return a < b || a == b;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }
};

struct RateResult {
    Rational low_freq;        // exponent of the low-frequency part
    Rational high_freq;       // exponent of the derivative-loss part
    std::int64_t derivative_loss = 0;
};

/// Time-decay exponents for L^p data measured in L^q, m extra derivatives,
/// sigma derivatives traded at high frequency, against a kernel with
/// low-frequency power sigma_plus and high-frequency power sigma_minus:
///     low  = (3 (1/p - 1/q) + m) / sigma_plus
///     high = sigma / sigma_minus        (0 if sigma = 0; infinite if
///                                        sigma_minus = 0, no loss)
///     loss = sigma                      if sigma integer and r = q = 2
///            floor(sigma + 3 (1/r - 1/q)) + 1   otherwise
/// Domain: 1 <= p <= 2 <= q <= infinity, 1 <= r <= 2, m >= 0, sigma >= 0,
/// sigma_plus > 0, sigma_minus >= 0.
RateResult theoretical_rate(const Rational& p, const Rational& q, const Rational& r,
                            std::int64_t m, const Rational& sigma,
                            const Rational& sigma_plus, const Rational& sigma_minus);

/// Quadrature weights for integrals over a sorted positive radial grid.
/// Log-uniform grids get composite Simpson in log r (trapezoid closing an
/// odd panel count); anything else falls back to trapezoid in r.
std::vector<double> radial_weights(const std::vector<double>& grid);

/// (4 pi * sum_i w_i r_i^{2+2m} usq_i)^{1/2}: the physical-space norm of the
/// m-th derivative layer synthesized from per-mode squared magnitudes usq.
double norm_over_kspace(const std::vector<double>& grid,
                        const std::vector<double>& weights,
                        const std::vector<double>& usq, int m);

struct ExponentFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    int n_used = 0;
};

/// Least-squares slope of log(value) against log(1+t) over the window.
/// Needs >= 8 samples inside; positive values only.
ExponentFit fit_exponent(const std::vector<double>& times,
                         const std::vector<double>& values, double window_lo,
                         double window_hi);

struct KernelFit {
    double c_measured = 0.0;  // min over grid of gap(r)/phi(r)
    double low_exp = 0.0;     // d log gap / d log r fitted on r <= 0.1
    double high_exp = 0.0;    // same on r >= 10
};

/// Spectral-gap survey of a generator family over a radial grid spanning at
/// least three decades on each side of r = 1.  A nonnegative spectral
/// abscissa anywhere is an error naming the offending |k|.
KernelFit kernel_fit(const std::vector<double>& grid,
                     const std::function<Generator(double)>& gen_at,
                     int threads = 1);

/// Spec of a model-comparison run; grids are shared by all models.
struct CompareConfig {
    std::vector<Model> models{Model::BE, Model::VPB1, Model::VMB1,
                              Model::VMB2RateOnly};
    std::vector<double> radial_grid;  // sorted, positive
    std::vector<double> times;        // sorted, >= 0
    double window_lo = 1e2;
    double window_hi = 1e5;
    double rate_tol = 0.05;
    int threads = 1;
};

struct ModelReport {
    Model model = Model::BE;
    std::string functional;  // which squared magnitude was synthesized
    double fitted = 0.0;
    double fit_stderr = 0.0;
    double theoretical = 0.0;  // expected exponent (negative)
    bool pass = false;
};

/// Unit-magnitude initial datum for one mode: tapered-charge kinetic profile
/// T(r) e_a + e_c + fixed microscopic direction, transverse unit E and B for
/// field models, made admissible and normalized, damped by (1+r^2)^{-2} for
/// r > 1.  The charge taper T = r/sqrt(1+r^2) applies to field-carrying
/// models only, where the Gauss law would otherwise force an unbounded
/// longitudinal field at low frequency; BE and VPB1 keep T = 1.
ModeState standard_datum(const Generator& gen);

/// Expected whole-space L^2 decay exponent of a model (positive convention;
/// the fitted slope should approach its negative).
double table_rate(Model m);

/// Squared functional magnitude of one mode state: plain |X|^2, except VPB1
/// adds the reconstructed field energy |a|^2/|k|^2.
double functional_sq(const Generator& gen, const CVec& x);

std::vector<ModelReport> compare_models(const CompareConfig& config,
                                        const VelocityBasis& basis,
                                        const CollisionOperator& collision);

void write_compare_csv(const std::vector<ModelReport>& table,
                       const std::string& path);

}  // namespace kinedecay
