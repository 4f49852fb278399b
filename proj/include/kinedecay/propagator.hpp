/**
 * Exact-in-time propagation of a Fourier mode.
 *
 * X(t) = V exp(Lambda t) V^{-1} X(0) through the generator's cached
 * eigendecomposition; a scaling-and-squaring matrix exponential takes over
 * when the eigenvector basis is ill-conditioned.  Sources enter through
 * Duhamel's formula with Gauss-Legendre quadrature on each output
 * subinterval.
 */
#pragma once

#include "kinedecay/generator.hpp"

#include <functional>
#include <vector>

namespace kinedecay {

struct SampleDiagnostics {
    double energy = 0.0;       // |X|^2
    double dissipation = 0.0;  // -d/dt |X|^2 = -2 Re <X, A X>
    std::complex<double> gauss_E{0.0, 0.0};
    std::complex<double> gauss_B{0.0, 0.0};
    double norm_u = 0.0;
    double norm_E = 0.0;
    double norm_B = 0.0;
    double moment_residual = 0.0;  // max residual of the macro moment system
};

struct Trajectory {
    Vec3 k;
    StateLayout layout;
    std::vector<double> times;
    std::vector<CVec> states;
    std::vector<SampleDiagnostics> diagnostics;
};

/// Kinetic-block source h(t); must stay microscopic (P h = 0).
using SourceFn = std::function<CVec(double)>;

/// Solution samples at strictly increasing times >= 0, from X(0) = state.
Trajectory propagate(const Generator& gen, const ModeState& state,
                     const std::vector<double>& times);

/// Same with a Duhamel source on the kinetic block (single-species models).
/// gl_points fixes the quadrature order per output subinterval.
Trajectory propagate_with_source(const Generator& gen, const ModeState& state,
                                 const SourceFn& h, const std::vector<double>& times,
                                 int gl_points = 12);

/// exp(A t) x without sampling overhead.
CVec evolve(const Generator& gen, const CVec& x, double t);

/// Exact integral of X(t)* W X(t) over [t1, t2] along the homogeneous flow,
/// through the eigendecomposition.
double integrate_quadratic(const Generator& gen, const CVec& x0, const CMat& W,
                           double t1, double t2);

/// Residuals of the five macroscopic moment equations evaluated with
/// dX/dt = A X; returns the max magnitude.  The electric field is taken
/// from the state (VMB1), reconstructed (VPB1), or zero (BE).
double moment_equation_residual(const Generator& gen, const CVec& x);

/// Trajectory CSV with the fixed header
/// time,E,D,gaussE,gaussB,norm_u,norm_E,norm_B (17 significant digits).
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace kinedecay
