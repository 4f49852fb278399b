/**
 * Per-mode generators dX/dt = A(k) X for the linearized kinetic models.
 *
 * Model catalogue (state layout in brackets):
 *   BE            pure kinetic relaxation            [u]
 *   VPB1          electric field eliminated through the Gauss law,
 *                 E = -i k a / |k|^2                 [u]
 *   VMB1          kinetic + full Maxwell block       [u, E, B]
 *   VMB2RateOnly  two kinetic copies with opposite-sign field coupling
 *                 and inter-species friction         [u+, u-, E, B]
 *
 * The Maxwell models carry two holonomic constraints that the flow must
 * preserve exactly: i k.E = a (VMB2: a+ - a-) and i k.B = 0.
 */
#pragma once

#include "kinedecay/collision.hpp"
#include "kinedecay/velocity_basis.hpp"

#include <complex>
#include <memory>
#include <string>

namespace kinedecay {

enum class Model { BE, VPB1, VMB1, VMB2RateOnly };

Model model_from_string(const std::string& name);  // "be", "vpb1", "vmb1", "vmb2-rate"
std::string to_string(Model m);

struct ModelSpec {
    Model model = Model::VMB1;
    const CollisionOperator* collision = nullptr;
};

struct StateLayout {
    int kdim = 0;     // kinetic coefficients per species
    int species = 1;
    bool has_fields = false;

    int total() const { return species * kdim + (has_fields ? 6 : 0); }
    int u_offset(int s = 0) const { return s * kdim; }
    int E_offset() const { return species * kdim; }
    int B_offset() const { return E_offset() + 3; }
};

StateLayout layout_for(Model m, const VelocityBasis& basis);

struct ModeState {
    Vec3 k = Vec3::Zero();
    StateLayout layout;
    CVec x;

    Eigen::Ref<CVec> u(int s = 0) { return x.segment(layout.u_offset(s), layout.kdim); }
    Eigen::Ref<const CVec> u(int s = 0) const {
        return x.segment(layout.u_offset(s), layout.kdim);
    }
    CVec3 E() const { return layout.has_fields ? CVec3(x.segment<3>(layout.E_offset())) : CVec3::Zero(); }
    CVec3 B() const { return layout.has_fields ? CVec3(x.segment<3>(layout.B_offset())) : CVec3::Zero(); }
};

struct Eigendecomposition {
    CVec eigenvalues;
    CMat V, Vinv;
    double condition = 0.0;
    bool usable = false;  // false when cond(V) suggests a defective basis
};

class Generator {
  public:
    Generator(CMat A, Vec3 k, Model model, StateLayout layout,
              const VelocityBasis* basis);

    const CMat& matrix() const { return A_; }
    const Vec3& k() const { return k_; }
    Model model() const { return model_; }
    const StateLayout& layout() const { return layout_; }
    const VelocityBasis& basis() const { return *basis_; }

    /// Eigendecomposition, computed once per generator and shared.
    const Eigendecomposition& decomposition() const;
    double spectral_abscissa() const;

  private:
    CMat A_;
    Vec3 k_;
    Model model_;
    StateLayout layout_;
    const VelocityBasis* basis_;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

Generator assemble_generator(const Vec3& k, const ModelSpec& spec,
                             const VelocityBasis& basis);

/// Rows g with g . x = constraint residual; empty for constraint-free models.
/// Row 0: i k.E - (a or a+ - a-); row 1: i k.B.
CMat constraint_rows(Model model, const StateLayout& layout,
                     const VelocityBasis& basis, const Vec3& k);

/// (gauss_E, gauss_B) residuals of a state; zero for BE/VPB1.
std::pair<std::complex<double>, std::complex<double>> constraint_residuals(
    const ModeState& state, const VelocityBasis& basis);

/// Minimal projection onto the constraint manifold: shifts the longitudinal
/// part of E and removes the longitudinal part of B.  k = 0 with nonzero
/// charge moment is rejected.
ModeState make_admissible(ModeState state, const VelocityBasis& basis);

/// Cross-product matrix C v = k x v.
Eigen::Matrix3d cross_matrix(const Vec3& k);

}  // namespace kinedecay
