/**
 * Linearized collision operators on the Hermite basis.
 *
 * All three kinds share the structural contract
 *     L = L^T <= 0,   L e = 0 for the five conserved directions e,
 *     -<v, L v> >= lambda0 <v, W v>   on the microscopic subspace,
 * where W is a nu-weighted Gram matrix.  The relaxation kinds build L from
 * the projector directly; the external kind loads a matrix from disk and is
 * symmetrized and null-projected before the coercivity gate.
 */
#pragma once

#include "kinedecay/velocity_basis.hpp"

#include <string>

namespace kinedecay {

enum class CollisionKind { RelaxationConstNu, RelaxationVariableNu, ExternalMatrix };

class CollisionOperator {
  public:
    /// L = -nu0 (I - P); coercivity constant exactly 1 against W = nu0 I.
    static CollisionOperator relaxation_const_nu(const VelocityBasis& basis,
                                                 double nu0 = 1.0);
    /// L = -(I-P) N (I-P) with N the Gauss-Hermite Gram matrix of
    /// multiplication by the hard-sphere nu(|xi|).
    static CollisionOperator relaxation_variable_nu(const VelocityBasis& basis);
    /// Text file: first line "dim=<n>", then n*n row-major entries.
    /// The matrix is symmetrized and sandwiched by (I-P); rejected if the
    /// dimension mismatches the basis or the result is not coercive.
    static CollisionOperator from_matrix_file(const VelocityBasis& basis,
                                              const std::string& path);

    CollisionKind kind() const { return kind_; }
    const Mat& matrix() const { return L_; }
    /// Full-space nu-weight (nu0 I, or the Gram of nu-multiplication).
    const Mat& nu_gram() const { return N_; }
    /// (I-P) N (I-P): the weight appearing in the dissipation functional.
    const Mat& micro_weight() const { return Wmicro_; }
    double coercivity_lambda0() const { return lambda0_; }
    double nu0() const { return nu0_; }

  private:
    CollisionOperator() = default;

    CollisionKind kind_{CollisionKind::RelaxationConstNu};
    Mat L_, N_, Wmicro_;
    double lambda0_ = 0.0;
    double nu0_ = 1.0;
};

/// Gram matrix of multiplication by nu(|xi|) on the basis, by tensor
/// Gauss-Hermite quadrature with (degree_cap + 4)^3 nodes.
Mat nu_multiplication_gram(const VelocityBasis& basis);

/// Smallest generalized eigenvalue of (-L, W) restricted to the
/// microscopic subspace.  W must be positive definite there.
double micro_coercivity_constant(const VelocityBasis& basis, const Mat& L,
                                 const Mat& W);

}  // namespace kinedecay
