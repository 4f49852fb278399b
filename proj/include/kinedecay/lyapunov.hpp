/**
 * Quadratic Lyapunov functionals per Fourier mode.
 *
 * For the Maxwell-coupled model the certified functional is
 *
 *   E(X) = |X|^2 + kappa4 * ( E1(X) + kappa3 * E2(X) ),
 *
 *   E1 = 1/(1+|k|^2) Re{ (i k c | Lambda({I-P}u))
 *          + sum_ij (i k_i b_j + i k_j b_i - (2/3) d_ij i k.b | Theta_ij({I-P}u))
 *          + kappa1 (i k a | b) },
 *   E2 = -Re (k x E | k x b) / (1+|k|^2)^2
 *        - kappa2 |k|^2 Re (i k x B | E) / (1+|k|^2)^3,
 *
 * paired with the dissipation form
 *
 *   D(X) = |nu^{1/2} {I-P}u|^2 + |k.E|^2
 *          + |k|^2/(1+|k|^2) |[a,b,c]|^2
 *          + |k|^2/(1+|k|^2)^2 |E|^2 + |k|^4/(1+|k|^2)^3 |B|^2.
 *
 * verify_lyapunov certifies  d/dt X*M_E X <= -lambda D(X)  as a matrix
 * inequality on the tangent space of the Gauss constraints;  tune_constants
 * searches the kappa's until the inequality holds with M_E comparable to
 * the plain norm on a whole |k| grid.
 *
 * The builders cover single-species layouts (BE without fields, VMB1 with
 * them).  The two-species model only participates through its decay rate.
 */
#pragma once

#include "kinedecay/generator.hpp"

#include <functional>
#include <vector>

namespace kinedecay {

struct QuadForm {
    CMat M;  // Hermitian
    double eval(const CVec& x) const { return std::real(x.dot(M * x)); }
};

struct FunctionalCoefficients {
    double kappa1 = 0.1;
    double kappa2 = 0.1;
    double kappa3 = 0.1;
    double kappa4 = 0.1;
};

QuadForm base_form(const StateLayout& layout);
QuadForm dissipation_form(const Vec3& k, const VelocityBasis& basis,
                          const CollisionOperator& coll, const StateLayout& layout);
/// E1 above; lives purely on the kinetic block.  Needs degree_cap >= 3.
QuadForm interaction_form_1(const Vec3& k, double kappa1,
                            const VelocityBasis& basis, const StateLayout& layout);
/// E2 above; zero unless the layout carries fields.
QuadForm interaction_form_2(const Vec3& k, double kappa2,
                            const VelocityBasis& basis, const StateLayout& layout);
QuadForm assemble_E(const Vec3& k, const FunctionalCoefficients& kap,
                    const VelocityBasis& basis, const StateLayout& layout);

/// Weighted form |k|^{2m} * M: the total contribution of all m-th order
/// spatial derivatives of a mode under the multinomial convention.
QuadForm morder_form(const QuadForm& form, const Vec3& k, int m);

/// Eigenvalue range of M_E (equivalence constants against the plain norm).
std::pair<double, double> equivalence_bounds(const QuadForm& ME);

/// Orthonormal basis of the constraint tangent subspace (identity when the
/// model has no constraints).
CMat constraint_tangent_basis(const Generator& gen);

/// Largest lambda >= 0 with  M_E A + A* M_E + lambda M_D <= 0  on the
/// constraint tangent subspace, by bisection to relative tolerance rtol.
double verify_lyapunov(const Generator& gen, const QuadForm& ME, const QuadForm& MD,
                       double rtol = 1e-3);

/// min eig of (M_D, M_base) pencil on the tangent subspace, divided by
/// phi(|k|) = |k|^4/(1+|k|^2)^3: the kernel constant of the dissipation.
double dissipation_kernel_constant(const Generator& gen, const QuadForm& MD);

struct TunePointReport {
    double k_norm = 0.0;
    double lambda = 0.0;
    double equiv_lo = 0.0;
    double equiv_hi = 0.0;
};

struct TuneTargets {
    double equiv_lo_floor = 0.25;
    double equiv_hi_cap = 4.0;
    double lambda_floor = 1e-6;
    int max_iterations = 60;
};

struct TuneResult {
    FunctionalCoefficients coeffs;
    std::vector<TunePointReport> per_k;
    double lambda_min = 0.0;
    double equiv_lo = 0.0;
    double equiv_hi = 0.0;
    double source_constant = 0.0;  // norm of the nu^{-1/2}-weighted kinetic rows of M_E
    int iterations = 0;
};

using GeneratorFactory = std::function<Generator(const Vec3&)>;

/// Logarithmic coordinate descent over (kappa4, kappa3, kappa1, kappa2)
/// from (0.1, 0.1, 0.1, 0.1), halving one coordinate per failed sweep.
/// Throws with the offending |k| if the budget is exhausted.
TuneResult tune_constants(const std::vector<double>& k_grid,
                          const GeneratorFactory& factory,
                          const VelocityBasis& basis, const CollisionOperator& coll,
                          const TuneTargets& targets = {});

/// Bound constant for the Duhamel source coupling: spectral norm of the
/// kinetic rows of M_E under the nu^{-1/2} weight.
double source_coupling_constant(const QuadForm& ME, const CollisionOperator& coll,
                                const StateLayout& layout);

}  // namespace kinedecay
