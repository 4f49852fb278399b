#include "kinedecay/decay.hpp"

#include "kinedecay/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace kinedecay {

double phi(double k_norm) {
    if (k_norm < 0.0) throw std::domain_error("phi: negative |k|");
    const double r2 = k_norm * k_norm;
    const double d = 1.0 + r2;
    return r2 * r2 / (d * d * d);
}

// ---------------------------------------------------------------------------
// Rational arithmetic
// ---------------------------------------------------------------------------

namespace {

using I128 = __int128;

Rational make_rational(I128 n, I128 d) {
    if (d == 0) throw std::invalid_argument("Rational: zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    // Euclid on the 128-bit values, both nonnegative after the sign fix.
    I128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
        const I128 t = a % b;
        a = b;
        b = t;
    }
    if (a != 0) {
        n /= a;
        d /= a;
    }
    constexpr I128 lo = std::numeric_limits<std::int64_t>::min();
    constexpr I128 hi = std::numeric_limits<std::int64_t>::max();
    if (n < lo || n > hi || d > hi)
        throw std::overflow_error("Rational: value out of 64-bit range");
    Rational r;
    r.num = static_cast<std::int64_t>(n);
    r.den = static_cast<std::int64_t>(d);
    return r;
}

void require_finite(const Rational& x, const char* op) {
    if (x.is_infinite())
        throw std::domain_error(std::string("Rational: infinite operand in ") + op);
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) { *this = make_rational(n, d); }

Rational Rational::reciprocal() const {
    if (is_infinite()) return Rational(0);
    if (num == 0) throw std::domain_error("Rational: reciprocal of zero");
    return make_rational(den, num);
}

std::int64_t Rational::floor() const {
    require_finite(*this, "floor");
    std::int64_t q = num / den;
    if (num % den != 0 && num < 0) --q;
    return q;
}

double Rational::to_double() const {
    if (is_infinite()) return std::numeric_limits<double>::infinity();
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string Rational::to_string() const {
    if (is_infinite()) return "inf";
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
}

Rational operator+(const Rational& a, const Rational& b) {
    require_finite(a, "+");
    require_finite(b, "+");
    return make_rational(I128(a.num) * b.den + I128(b.num) * a.den,
                         I128(a.den) * b.den);
}

Rational operator-(const Rational& a, const Rational& b) {
    require_finite(a, "-");
    require_finite(b, "-");
    return make_rational(I128(a.num) * b.den - I128(b.num) * a.den,
                         I128(a.den) * b.den);
}

Rational operator*(const Rational& a, const Rational& b) {
    require_finite(a, "*");
    require_finite(b, "*");
    return make_rational(I128(a.num) * b.num, I128(a.den) * b.den);
}

Rational operator/(const Rational& a, const Rational& b) {
    require_finite(a, "/");
    require_finite(b, "/");
    if (b.num == 0) throw std::domain_error("Rational: division by zero");
    return make_rational(I128(a.num) * b.den, I128(a.den) * b.num);
}

bool operator<(const Rational& a, const Rational& b) {
    if (a.is_infinite()) return false;
    if (b.is_infinite()) return true;
    return I128(a.num) * b.den < I128(b.num) * a.den;
}

// ---------------------------------------------------------------------------
// Rate calculus
// ---------------------------------------------------------------------------

RateResult theoretical_rate(const Rational& p, const Rational& q, const Rational& r,
                            std::int64_t m, const Rational& sigma,
                            const Rational& sigma_plus, const Rational& sigma_minus) {
    const Rational one(1), two(2);
    if (p.is_infinite() || p < one || two < p)
        throw std::invalid_argument("theoretical_rate: p outside [1,2]");
    if (r.is_infinite() || r < one || two < r)
        throw std::invalid_argument("theoretical_rate: r outside [1,2]");
    if (!q.is_infinite() && q < two)
        throw std::invalid_argument("theoretical_rate: q outside [2,inf]");
    if (m < 0) throw std::invalid_argument("theoretical_rate: m < 0");
    if (sigma.is_infinite() || sigma < Rational(0))
        throw std::invalid_argument("theoretical_rate: sigma < 0");
    if (sigma_plus.is_infinite() || !(Rational(0) < sigma_plus))
        throw std::invalid_argument("theoretical_rate: sigma_plus must be positive");
    if (sigma_minus.is_infinite() || sigma_minus < Rational(0))
        throw std::invalid_argument("theoretical_rate: sigma_minus < 0");

    const Rational inv_q = q.is_infinite() ? Rational(0) : q.reciprocal();
    RateResult out;
    out.low_freq =
        (Rational(3) * (p.reciprocal() - inv_q) + Rational(m)) / sigma_plus;
    if (sigma == Rational(0))
        out.high_freq = Rational(0);
    else if (sigma_minus == Rational(0))
        out.high_freq = Rational::infinity();  // saturating kernel: no loss
    else
        out.high_freq = sigma / sigma_minus;

    const bool sigma_integer = sigma.den == 1;
    if (sigma_integer && r == two && q == two)
        out.derivative_loss = sigma.num;
    else
        out.derivative_loss =
            (sigma + Rational(3) * (r.reciprocal() - inv_q)).floor() + 1;
    return out;
}

// ---------------------------------------------------------------------------
// Radial synthesis
// ---------------------------------------------------------------------------

namespace {

void check_grid(const std::vector<double>& grid, const char* who) {
    if (grid.size() < 2)
        throw std::invalid_argument(std::string(who) + ": need at least 2 grid points");
    double prev = 0.0;
    for (double r : grid) {
        if (!(r > prev))
            throw std::invalid_argument(std::string(who) +
                                        ": grid must be positive and strictly increasing");
        prev = r;
    }
}

struct LineFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    int n = 0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double xm = 0.0, ym = 0.0;
    for (int i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate abscissa");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.n = n;
    if (n > 2) {
        double ssr = 0.0;
        for (int i = 0; i < n; ++i) {
            const double resid = y[i] - ym - fit.slope * (x[i] - xm);
            ssr += resid * resid;
        }
        fit.stderr_slope = std::sqrt(std::max(0.0, ssr / ((n - 2) * sxx)));
    }
    return fit;
}

}  // namespace

std::vector<double> radial_weights(const std::vector<double>& grid) {
    check_grid(grid, "radial_weights");
    const int n = static_cast<int>(grid.size());
    std::vector<double> w(n, 0.0);

    std::vector<double> s(n);
    for (int i = 0; i < n; ++i) s[i] = std::log(grid[i]);
    const double h = (s[n - 1] - s[0]) / (n - 1);
    bool log_uniform = true;
    for (int i = 0; i + 1 < n; ++i)
        if (std::abs(s[i + 1] - s[i] - h) > 1e-8 * h) {
            log_uniform = false;
            break;
        }

    if (log_uniform) {
        // composite Simpson in log r; a leftover odd panel closes with a
        // trapezoid.  d r = r d(log r) folds the Jacobian into the weight.
        const int panels = n - 1;
        const int pairs = panels / 2;
        for (int p = 0; p < pairs; ++p) {
            const int j = 2 * p;
            w[j] += h / 3.0;
            w[j + 1] += 4.0 * h / 3.0;
            w[j + 2] += h / 3.0;
        }
        if (panels % 2 == 1) {
            w[n - 2] += h / 2.0;
            w[n - 1] += h / 2.0;
        }
        for (int i = 0; i < n; ++i) w[i] *= grid[i];
    } else {
        for (int i = 0; i + 1 < n; ++i) {
            const double half = 0.5 * (grid[i + 1] - grid[i]);
            w[i] += half;
            w[i + 1] += half;
        }
    }
    return w;
}

double norm_over_kspace(const std::vector<double>& grid,
                        const std::vector<double>& weights,
                        const std::vector<double>& usq, int m) {
    check_grid(grid, "norm_over_kspace");
    if (weights.size() != grid.size() || usq.size() != grid.size())
        throw std::invalid_argument("norm_over_kspace: length mismatch");
    if (m < 0) throw std::invalid_argument("norm_over_kspace: m < 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (usq[i] < 0.0)
            throw std::invalid_argument("norm_over_kspace: negative |U|^2 sample");
        acc += weights[i] * std::pow(grid[i], 2.0 + 2.0 * m) * usq[i];
    }
    return std::sqrt(4.0 * M_PI * std::max(0.0, acc));
}

ExponentFit fit_exponent(const std::vector<double>& times,
                         const std::vector<double>& values, double window_lo,
                         double window_hi) {
    if (times.size() != values.size())
        throw std::invalid_argument("fit_exponent: length mismatch");
    if (!(window_lo < window_hi))
        throw std::invalid_argument("fit_exponent: empty window");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window_lo || times[i] > window_hi) continue;
        if (!(values[i] > 0.0))
            throw std::invalid_argument("fit_exponent: nonpositive value in window");
        x.push_back(std::log1p(times[i]));
        y.push_back(std::log(values[i]));
    }
    if (x.size() < 8)
        throw std::invalid_argument("fit_exponent: fewer than 8 samples in window");
    const LineFit fit = least_squares(x, y);
    return ExponentFit{fit.slope, fit.stderr_slope, fit.n};
}

// ---------------------------------------------------------------------------
// Kernel survey
// ---------------------------------------------------------------------------

KernelFit kernel_fit(const std::vector<double>& grid,
                     const std::function<Generator(double)>& gen_at, int threads) {
    check_grid(grid, "kernel_fit");
    if (grid.front() > 1.0000001e-3 || grid.back() < 0.9999999e3)
        throw std::invalid_argument(
            "kernel_fit: grid must span three decades on each side of r = 1");

    const int n = static_cast<int>(grid.size());
    std::vector<double> gap(n, 0.0);
    parallel_for(n, threads,
                 [&](int i) { gap[i] = -gen_at(grid[i]).spectral_abscissa(); });
    for (int i = 0; i < n; ++i)
        if (!(gap[i] > 0.0))
            throw std::runtime_error("kernel_fit: nonnegative spectral abscissa at |k| = " +
                                     std::to_string(grid[i]));

    KernelFit out;
    out.c_measured = std::numeric_limits<double>::infinity();
    std::vector<double> xlo, ylo, xhi, yhi;
    for (int i = 0; i < n; ++i) {
        out.c_measured = std::min(out.c_measured, gap[i] / phi(grid[i]));
        if (grid[i] <= 0.1) {
            xlo.push_back(std::log(grid[i]));
            ylo.push_back(std::log(gap[i]));
        }
        if (grid[i] >= 10.0) {
            xhi.push_back(std::log(grid[i]));
            yhi.push_back(std::log(gap[i]));
        }
    }
    if (xlo.size() < 2 || xhi.size() < 2)
        throw std::invalid_argument("kernel_fit: too few points in a fit band");
    out.low_exp = least_squares(xlo, ylo).slope;
    out.high_exp = least_squares(xhi, yhi).slope;
    return out;
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

double table_rate(Model m) {
    switch (m) {
        case Model::BE:
            return 0.75;
        case Model::VPB1:
            return 0.25;
        case Model::VMB1:
            return 0.375;
        case Model::VMB2RateOnly:
            return 0.75;
    }
    throw std::logic_error("table_rate: unknown model");
}

namespace {

std::string functional_label(Model m) {
    switch (m) {
        case Model::BE:
            return "|u|^2";
        case Model::VPB1:
            return "|u|^2+|a|^2/|k|^2";
        case Model::VMB1:
            return "|[u;E;B]|^2";
        case Model::VMB2RateOnly:
            return "|[u+;u-;E;B]|^2";
    }
    return "?";
}

}  // namespace

double functional_sq(const Generator& gen, const CVec& x) {
    double val = x.squaredNorm();
    if (gen.model() == Model::VPB1) {
        const std::complex<double> a =
            gen.basis().moment_a().cast<std::complex<double>>().dot(
                x.head(gen.layout().kdim));
        val += std::norm(a) / gen.k().squaredNorm();
    }
    return val;
}

ModeState standard_datum(const Generator& gen) {
    const VelocityBasis& basis = gen.basis();
    const StateLayout& lay = gen.layout();
    const double r = gen.k().norm();
    if (!(r > 0.0)) throw std::invalid_argument("standard_datum: needs |k| > 0");

    const Mat& null_vecs = basis.null_vectors();
    const Vec e_a = null_vecs.col(0);
    const Vec e_c = null_vecs.col(4);
    Vec micro = Vec::Zero(lay.kdim);
    micro[basis.index_of(2, 0, 0)] = 1.0;
    micro -= basis.projector() * micro;
    micro /= micro.norm();

    // Field models must carry O(|k|) charge at low frequency, or the Gauss
    // law forces an unbounded longitudinal field into the datum.
    const double taper = lay.has_fields ? r / std::sqrt(1.0 + r * r) : 1.0;
    Vec u_raw = taper * e_a + e_c + micro;
    u_raw /= u_raw.norm();

    ModeState st;
    st.k = gen.k();
    st.layout = lay;
    st.x = CVec::Zero(lay.total());
    st.x.head(lay.kdim) = u_raw.cast<std::complex<double>>();

    if (lay.has_fields) {
        const Vec3 khat = gen.k() / r;
        Vec3 seed = std::abs(khat[2]) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
        Vec3 e2 = khat.cross(seed).normalized();
        Vec3 e3 = khat.cross(e2);
        st.x.segment<3>(lay.E_offset()) = e2.cast<std::complex<double>>();
        st.x.segment<3>(lay.B_offset()) = e3.cast<std::complex<double>>();
    }

    st = make_admissible(std::move(st), basis);
    st.x /= st.x.norm();
    // continuous at r = 1 (a jump there would ring through the Simpson
    // synthesis), ~ 4 r^{-4} beyond
    if (r > 1.0) {
        const double d = 1.0 + r * r;
        st.x *= 4.0 / (d * d);
    }
    return st;
}

std::vector<ModelReport> compare_models(const CompareConfig& config,
                                        const VelocityBasis& basis,
                                        const CollisionOperator& collision) {
    check_grid(config.radial_grid, "compare_models");
    if (config.times.size() < 8)
        throw std::invalid_argument("compare_models: need at least 8 sample times");
    const std::vector<double> weights = radial_weights(config.radial_grid);
    const int nr = static_cast<int>(config.radial_grid.size());
    const int nt = static_cast<int>(config.times.size());

    std::vector<ModelReport> table;
    table.reserve(config.models.size());
    for (Model model : config.models) {
        const ModelSpec spec{model, &collision};
        std::vector<std::vector<double>> usq(nt, std::vector<double>(nr, 0.0));
        parallel_for(nr, config.threads, [&](int i) {
            const double r = config.radial_grid[i];
            const Generator gen =
                assemble_generator(r * Vec3::UnitX(), spec, basis);
            const ModeState datum = standard_datum(gen);
            for (int j = 0; j < nt; ++j) {
                const CVec xt = evolve(gen, datum.x, config.times[j]);
                usq[j][i] = functional_sq(gen, xt);
            }
        });

        std::vector<double> values(nt);
        for (int j = 0; j < nt; ++j)
            values[j] = norm_over_kspace(config.radial_grid, weights, usq[j], 0);

        const ExponentFit fit =
            fit_exponent(config.times, values, config.window_lo, config.window_hi);
        ModelReport row;
        row.model = model;
        row.functional = functional_label(model);
        row.fitted = fit.slope;
        row.fit_stderr = fit.stderr_slope;
        row.theoretical = -table_rate(model);
        row.pass = std::abs(fit.slope - row.theoretical) <= config.rate_tol;
        table.push_back(std::move(row));
    }
    return table;
}

void write_compare_csv(const std::vector<ModelReport>& table,
                       const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "model,functional,fitted,stderr,theoretical,pass\n");
    for (const ModelReport& row : table)
        std::fprintf(f, "%s,%s,%.17g,%.17g,%.17g,%d\n", to_string(row.model).c_str(),
                     row.functional.c_str(), row.fitted, row.fit_stderr,
                     row.theoretical, row.pass ? 1 : 0);
    std::fclose(f);
}

}  // namespace kinedecay
