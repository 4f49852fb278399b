/**
 * Maxwellian-weighted Hermite velocity basis.
 *
 * Velocity space is discretized with tensor products of probabilists'
 * Hermite functions
 *
 *     psi_n(xi) = He_{n1}(xi_1) He_{n2}(xi_2) He_{n3}(xi_3)
 *                 M(xi)^{1/2} / sqrt(n1! n2! n3!),
 *
 * where M(xi) = (2 pi)^{-3/2} exp(-|xi|^2/2) is the global Maxwellian.
 * These are orthonormal in L^2(d xi), and multiplication by xi_i acts
 * tridiagonally in n_i (entries sqrt(n_i), sqrt(n_i+1)), so the streaming
 * operator is exact on retained degrees.  The basis is truncated by total
 * degree n1+n2+n3 <= degree_cap and ordered graded-lexicographically, which
 * puts the five conserved directions first:
 *
 *     index 0        M^{1/2}                    (mass)
 *     index 1..3     xi_i M^{1/2}               (momentum)
 *     degree 2       carries (|xi|^2-3) M^{1/2} (energy, not a unit vector)
 *
 * Recurring variables throughout this module:
 *     a, b_i, c   hydrodynamic moments of a coefficient vector u, defined by
 *                 P u = {a + b.xi + c(|xi|^2-3)} M^{1/2}
 *     Theta_ij(u) int (xi_i xi_j - 1) M^{1/2} u d xi
 *     Lambda_i(u) (1/10) int (|xi|^2 - 5) xi_i M^{1/2} u d xi
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <vector>

namespace kinedecay {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

struct MultiIndex {
    std::array<int, 3> n{0, 0, 0};
    int degree() const { return n[0] + n[1] + n[2]; }
};

class VelocityBasis {
  public:
    /// degree_cap >= 2 required (the energy direction lives at degree 2).
    explicit VelocityBasis(int degree_cap);

    int degree_cap() const { return cap_; }
    int dim() const { return static_cast<int>(indices_.size()); }

    const std::vector<MultiIndex>& index_map() const { return indices_; }
    /// Flat position of (n1,n2,n3), or -1 if not retained.
    int index_of(int n1, int n2, int n3) const;

    /// Streaming matrix for multiplication by xi_i, i in {0,1,2}.
    /// Symmetric; exact for inputs of degree <= degree_cap - 1.
    const Mat& transport(int axis) const { return T_[axis]; }

    /// Orthonormal null-space directions of the linearized collision
    /// operator: columns [e_a, e_b1, e_b2, e_b3, e_c].
    const Mat& null_vectors() const { return null_; }
    /// Orthogonal projector onto the five conserved directions.
    const Mat& projector() const { return P_; }

    // Moment extraction vectors: a = va.u, b_i = vb(i).u, c = vc.u.
    const Vec& moment_a() const { return va_; }
    const Vec& moment_b(int i) const { return vb_[i]; }
    const Vec& moment_c() const { return vc_; }

    /// Extraction vector for Theta_ij; w.u = Theta_ij(u).
    Vec theta_vector(int i, int j) const;
    /// Extraction vector for Lambda_i; needs degree_cap >= 3.
    Vec lambda_vector(int i) const;

    // 1-D Gauss-Hermite rule for the weight M_1(x) dx, (degree_cap + 4)
    // points: exact for polynomials of degree <= 2*degree_cap + 7, which
    // leaves headroom for the non-polynomial collision frequency.
    const Vec& quad_nodes() const { return qx_; }
    const Vec& quad_weights() const { return qw_; }

    /// Value of the polynomial part of basis element j at a point
    /// (i.e. psi_j(xi) / M^{1/2}(xi)).
    double poly_value(int j, const Vec3& xi) const;
    /// Polynomial part of the function with coefficients u at a point.
    std::complex<double> synthesize_poly(const CVec& u, const Vec3& xi) const;

  private:
    int cap_;
    std::vector<MultiIndex> indices_;
    std::vector<int> lookup_;  // dense (cap+1)^3 -> flat index or -1
    std::array<Mat, 3> T_;
    Mat null_, P_;
    Vec va_, vc_;
    std::array<Vec, 3> vb_;
    Vec qx_, qw_;

    // normalized 1-D values He_n(x)/sqrt(n!), n = 0..cap
    void hermite_values(double x, std::vector<double>& out) const;
};

struct MacroMoments {
    std::complex<double> a;
    CVec3 b;
    std::complex<double> c;
};

struct ProjectionSplit {
    MacroMoments macro;
    CVec micro;  // {I-P}u in basis coefficients
};

MacroMoments macro_moments(const VelocityBasis& basis, const CVec& u);
ProjectionSplit project_P(const VelocityBasis& basis, const CVec& u);

/// Theta(u) as a 3x3 complex matrix of moments.
Eigen::Matrix3cd theta_moment(const VelocityBasis& basis, const CVec& u);
/// Lambda(u); requires degree_cap >= 3.
CVec3 lambda_moment(const VelocityBasis& basis, const CVec& u);

/// Hard-sphere collision frequency
///     nu(s) = int int |(xi - xi*) . w| M(xi*) dw dxi*,  s = |xi|,
/// evaluated in closed form:
///     nu(s) = 2 pi [ (1+s^2)/s erf(s/sqrt(2)) + sqrt(2/pi) exp(-s^2/2) ].
/// Monotone increasing, nu(0) = 4 sqrt(2 pi), nu(s)/(2 pi s) -> 1.
double collision_frequency(double speed);

}  // namespace kinedecay
