#include "kinedecay/propagator.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace kinedecay {

namespace {

using Cd = std::complex<double>;
constexpr Cd kI{0.0, 1.0};

void check_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("propagate: no sample times");
    double prev = -1.0;
    for (double t : times) {
        if (!(t >= 0.0) || t <= prev)
            throw std::invalid_argument(
                "propagate: sample times must be strictly increasing and >= 0");
        prev = t;
    }
}

void check_state(const Generator& gen, const ModeState& state) {
    if (state.x.size() != gen.layout().total())
        throw std::invalid_argument("propagate: state size does not match layout");
    if ((state.k - gen.k()).norm() > 1e-12 * (1.0 + gen.k().norm()))
        throw std::invalid_argument("propagate: state and generator wavevectors differ");
}

// effective electric field seen by the kinetic block
CVec3 effective_E(const Generator& gen, const CVec& x) {
    const StateLayout& lay = gen.layout();
    if (lay.has_fields) return x.segment<3>(lay.E_offset());
    if (gen.model() == Model::VPB1) {
        const Cd a = gen.basis().moment_a().cast<Cd>().dot(x.head(lay.kdim));
        return -kI * a / gen.k().squaredNorm() * gen.k().cast<Cd>();
    }
    return CVec3::Zero();
}

SampleDiagnostics diagnostics_at(const Generator& gen, const ModeState& state) {
    const StateLayout& lay = gen.layout();
    SampleDiagnostics d;
    d.energy = state.x.squaredNorm();
    d.dissipation = -2.0 * std::real(state.x.dot(gen.matrix() * state.x));
    auto [gE, gB] = constraint_residuals(state, gen.basis());
    d.gauss_E = gE;
    d.gauss_B = gB;
    double nu2 = 0.0;
    for (int s = 0; s < lay.species; ++s) nu2 += state.u(s).squaredNorm();
    d.norm_u = std::sqrt(nu2);
    d.norm_E = state.E().norm();
    d.norm_B = state.B().norm();
    d.moment_residual = gen.basis().degree_cap() >= 3
                            ? moment_equation_residual(gen, state.x)
                            : 0.0;
    return d;
}

struct GaussLegendre {
    Vec nodes;    // on [-1, 1]
    Vec weights;  // sum to 2
};

GaussLegendre gauss_legendre(int n) {
    Mat J = Mat::Zero(n, n);
    for (int j = 1; j < n; ++j)
        J(j, j - 1) = J(j - 1, j) = j / std::sqrt(4.0 * j * j - 1.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    GaussLegendre gl;
    gl.nodes = es.eigenvalues();
    gl.weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return gl;
}

}  // namespace

CVec evolve(const Generator& gen, const CVec& x, double t) {
    if (t == 0.0) return x;
    const Eigendecomposition& d = gen.decomposition();
    if (d.usable) {
        CVec c = d.Vinv * x;
        for (int j = 0; j < c.size(); ++j) c[j] *= std::exp(d.eigenvalues[j] * t);
        return d.V * c;
    }
    return (gen.matrix() * t).exp() * x;
}

double moment_equation_residual(const Generator& gen, const CVec& x) {
    const VelocityBasis& basis = gen.basis();
    const StateLayout& lay = gen.layout();
    const Vec3& k = gen.k();
    const CVec xdot = gen.matrix() * x;

    // Two-species runs are judged on the field-free sum channel, which
    // closes as a plain kinetic system.
    CVec u, udot;
    CVec3 E = CVec3::Zero();
    if (lay.species == 2) {
        u = x.segment(lay.u_offset(0), lay.kdim) + x.segment(lay.u_offset(1), lay.kdim);
        udot = xdot.segment(lay.u_offset(0), lay.kdim) +
               xdot.segment(lay.u_offset(1), lay.kdim);
    } else {
        u = x.head(lay.kdim);
        udot = xdot.head(lay.kdim);
        E = effective_E(gen, x);
    }

    const MacroMoments mm = macro_moments(basis, u);
    const MacroMoments md = macro_moments(basis, udot);
    const Mat micro = Mat::Identity(lay.kdim, lay.kdim) - basis.projector();
    const CVec um = micro.cast<Cd>() * u;
    const CVec umdot = micro.cast<Cd>() * udot;

    // L u recovered from the kinetic rows: udot = -i k.T u + sum E_i vb_i + L u
    CVec Lu = udot;
    for (int axis = 0; axis < 3; ++axis)
        if (k[axis] != 0.0)
            Lu += kI * k[axis] * (basis.transport(axis).cast<Cd>() * u);
    for (int i = 0; i < 3; ++i) Lu -= E[i] * basis.moment_b(i).cast<Cd>();

    CVec ell = Lu;
    for (int axis = 0; axis < 3; ++axis)
        if (k[axis] != 0.0)
            ell -= kI * k[axis] * (basis.transport(axis).cast<Cd>() * um);

    const Cd ikb = kI * (k[0] * mm.b[0] + k[1] * mm.b[1] + k[2] * mm.b[2]);
    const Eigen::Matrix3cd th = theta_moment(basis, um);
    const Eigen::Matrix3cd thdot = theta_moment(basis, umdot);
    const Eigen::Matrix3cd thell = theta_moment(basis, ell);
    const CVec3 lam = lambda_moment(basis, um);
    const CVec3 lamdot = lambda_moment(basis, umdot);
    const CVec3 lamell = lambda_moment(basis, ell);
    const Cd iklam = kI * (k[0] * lam[0] + k[1] * lam[1] + k[2] * lam[2]);

    double worst = std::abs(md.a + ikb);
    for (int i = 0; i < 3; ++i) {
        Cd r = md.b[i] + kI * k[i] * (mm.a + 2.0 * mm.c) - E[i];
        for (int j = 0; j < 3; ++j) r += kI * k[j] * th(i, j);
        worst = std::max(worst, std::abs(r));
    }
    worst = std::max(worst,
                     std::abs(md.c + (1.0 / 3.0) * ikb + (5.0 / 3.0) * iklam));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Cd r = thdot(i, j) + kI * k[i] * mm.b[j] + kI * k[j] * mm.b[i] -
                   thell(i, j);
            if (i == j) r -= (2.0 / 3.0) * ikb + (10.0 / 3.0) * iklam;
            worst = std::max(worst, std::abs(r));
        }
    for (int i = 0; i < 3; ++i)
        worst = std::max(std::abs(lamdot[i] + kI * k[i] * mm.c - lamell[i]), worst);
    return worst;
}

Trajectory propagate(const Generator& gen, const ModeState& state,
                     const std::vector<double>& times) {
    check_times(times);
    check_state(gen, state);
    Trajectory traj;
    traj.k = gen.k();
    traj.layout = gen.layout();
    traj.times = times;
    traj.states.reserve(times.size());
    traj.diagnostics.reserve(times.size());
    for (double t : times) {
        ModeState s{gen.k(), gen.layout(), evolve(gen, state.x, t)};
        traj.diagnostics.push_back(diagnostics_at(gen, s));
        traj.states.push_back(std::move(s.x));
    }
    return traj;
}

Trajectory propagate_with_source(const Generator& gen, const ModeState& state,
                                 const SourceFn& h, const std::vector<double>& times,
                                 int gl_points) {
    check_times(times);
    check_state(gen, state);
    if (gen.layout().species != 1)
        throw std::invalid_argument(
            "propagate_with_source: kinetic sources cover single-species models");
    if (gl_points < 2) throw std::invalid_argument("propagate_with_source: gl_points < 2");

    const StateLayout& lay = gen.layout();
    const int n = lay.total();
    const GaussLegendre gl = gauss_legendre(gl_points);
    const Mat& P = gen.basis().projector();

    auto embedded_source = [&](double s) {
        CVec hs = h(s);
        if (hs.size() != lay.kdim)
            throw std::invalid_argument("source must return kinetic-block vectors");
        const double hn = hs.norm();
        if ((P.cast<Cd>() * hs).norm() > 1e-10 * std::max(1.0, hn))
            throw std::invalid_argument(
                "source has a macroscopic component (P h != 0)");
        CVec full = CVec::Zero(n);
        full.head(lay.kdim) = hs;
        return full;
    };

    Trajectory traj;
    traj.k = gen.k();
    traj.layout = lay;
    traj.times = times;
    CVec x = state.x;
    double prev = 0.0;
    for (double t : times) {
        const double dt = t - prev;
        if (dt > 0.0) {
            CVec next = evolve(gen, x, dt);
            for (int q = 0; q < gl_points; ++q) {
                const double s = prev + 0.5 * dt * (gl.nodes[q] + 1.0);
                next += (0.5 * dt * gl.weights[q]) *
                        evolve(gen, embedded_source(s), t - s);
            }
            x = std::move(next);
        }
        ModeState cur{gen.k(), lay, x};
        traj.diagnostics.push_back(diagnostics_at(gen, cur));
        traj.states.push_back(x);
        prev = t;
    }
    return traj;
}

double integrate_quadratic(const Generator& gen, const CVec& x0, const CMat& W,
                           double t1, double t2) {
    if (!(t2 >= t1)) throw std::invalid_argument("integrate_quadratic: t2 < t1");
    const Eigendecomposition& d = gen.decomposition();
    if (!d.usable)
        throw std::runtime_error(
            "integrate_quadratic needs a well-conditioned eigenbasis");
    const CVec c = d.Vinv * x0;
    const CMat Wt = d.V.adjoint() * W * d.V;
    const double dt = t2 - t1;

    auto expm1_over = [](Cd z) {  // (e^z - 1)/z, stable near 0
        if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
        return (std::exp(z) - 1.0) / z;
    };

    Cd acc = 0.0;
    const int n = static_cast<int>(c.size());
    for (int i = 0; i < n; ++i) {
        if (c[i] == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            if (c[j] == 0.0 || Wt(i, j) == 0.0) continue;
            const Cd mu = std::conj(d.eigenvalues[i]) + d.eigenvalues[j];
            acc += std::conj(c[i]) * Wt(i, j) * c[j] * std::exp(mu * t1) * dt *
                   expm1_over(mu * dt);
        }
    }
    return std::real(acc);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "time,E,D,gaussE,gaussB,norm_u,norm_E,norm_B\n");
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        const auto& d = traj.diagnostics[j];
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                     traj.times[j], d.energy, d.dissipation, std::abs(d.gauss_E),
                     std::abs(d.gauss_B), d.norm_u, d.norm_E, d.norm_B);
    }
    std::fclose(f);
}

}  // namespace kinedecay
