#include "kinedecay/generator.hpp"

#include <limits>
#include <mutex>
#include <stdexcept>

namespace kinedecay {

namespace {

using Cd = std::complex<double>;
constexpr Cd kI{0.0, 1.0};

// -i k.T + L on one kinetic block
CMat kinetic_block(const Vec3& k, const Mat& L, const VelocityBasis& basis) {
    CMat A = L.cast<Cd>();
    for (int axis = 0; axis < 3; ++axis)
        if (k[axis] != 0.0) A -= kI * k[axis] * basis.transport(axis).cast<Cd>();
    return A;
}

}  // namespace

Model model_from_string(const std::string& name) {
    if (name == "be") return Model::BE;
    if (name == "vpb1") return Model::VPB1;
    if (name == "vmb1") return Model::VMB1;
    if (name == "vmb2-rate") return Model::VMB2RateOnly;
    throw std::invalid_argument("unknown model '" + name +
                                "' (expected be, vpb1, vmb1, vmb2-rate)");
}

std::string to_string(Model m) {
    switch (m) {
        case Model::BE: return "be";
        case Model::VPB1: return "vpb1";
        case Model::VMB1: return "vmb1";
        case Model::VMB2RateOnly: return "vmb2-rate";
    }
    return "?";
}

StateLayout layout_for(Model m, const VelocityBasis& basis) {
    StateLayout lay;
    lay.kdim = basis.dim();
    switch (m) {
        case Model::BE:
        case Model::VPB1: lay.species = 1; lay.has_fields = false; break;
        case Model::VMB1: lay.species = 1; lay.has_fields = true; break;
        case Model::VMB2RateOnly: lay.species = 2; lay.has_fields = true; break;
    }
    return lay;
}

Eigen::Matrix3d cross_matrix(const Vec3& k) {
    Eigen::Matrix3d C;
    C << 0, -k[2], k[1],
         k[2], 0, -k[0],
         -k[1], k[0], 0;
    return C;
}

struct Generator::Cache {
    std::once_flag flag;
    Eigendecomposition decomp;
    std::once_flag abscissa_flag;
    double abscissa = 0.0;
};

Generator::Generator(CMat A, Vec3 k, Model model, StateLayout layout,
                     const VelocityBasis* basis)
    : A_(std::move(A)),
      k_(std::move(k)),
      model_(model),
      layout_(layout),
      basis_(basis),
      cache_(std::make_shared<Cache>()) {}

const Eigendecomposition& Generator::decomposition() const {
    std::call_once(cache_->flag, [this] {
        Eigen::ComplexEigenSolver<CMat> es(A_);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("generator eigendecomposition failed");
        Eigendecomposition d;
        d.eigenvalues = es.eigenvalues();
        d.V = es.eigenvectors();
        const auto lu = d.V.partialPivLu();
        const double rc = lu.rcond();
        d.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        d.usable = d.condition <= 1e8;
        if (d.usable) d.Vinv = lu.solve(CMat::Identity(A_.rows(), A_.cols()));
        cache_->decomp = std::move(d);
    });
    return cache_->decomp;
}

double Generator::spectral_abscissa() const {
    std::call_once(cache_->abscissa_flag, [this] {
        const CMat G = constraint_rows(model_, layout_, *basis_, k_);
        if (G.rows() == 0) {
            cache_->abscissa = decomposition().eigenvalues.real().maxCoeff();
            return;
        }
        // The constraint functionals are conserved (G A = 0), so the raw
        // matrix always carries them as extra zero eigenvalues.  The physical
        // spectrum lives on ker G, which G A = 0 makes A-invariant.
        Eigen::JacobiSVD<CMat> svd(G, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double tol = 1e-12 * std::max(1.0, sv(0));
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv(i) > tol) ++rank;
        const CMat Q = svd.matrixV().rightCols(A_.rows() - rank);
        Eigen::ComplexEigenSolver<CMat> es(Q.adjoint() * A_ * Q, false);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("restricted eigendecomposition failed");
        cache_->abscissa = es.eigenvalues().real().maxCoeff();
    });
    return cache_->abscissa;
}

Generator assemble_generator(const Vec3& k, const ModelSpec& spec,
                             const VelocityBasis& basis) {
    if (spec.collision == nullptr)
        throw std::invalid_argument("assemble_generator: collision operator missing");
    const CollisionOperator& coll = *spec.collision;
    if (coll.matrix().rows() != basis.dim())
        throw std::invalid_argument("assemble_generator: collision/basis dim mismatch");

    const StateLayout lay = layout_for(spec.model, basis);
    const int dim = basis.dim();
    const int n = lay.total();
    CMat A = CMat::Zero(n, n);

    switch (spec.model) {
        case Model::BE: {
            A = kinetic_block(k, coll.matrix(), basis);
            break;
        }
        case Model::VPB1: {
            const double k2 = k.squaredNorm();
            if (k2 == 0.0)
                throw std::invalid_argument(
                    "VPB1 requires |k| > 0 (the eliminated field is singular at k = 0)");
            A = kinetic_block(k, coll.matrix(), basis);
            // E_i = -i k_i a / |k|^2 feeds the momentum directions
            for (int i = 0; i < 3; ++i)
                A += (-kI * k[i] / k2) *
                     (basis.moment_b(i) * basis.moment_a().transpose()).cast<Cd>();
            break;
        }
        case Model::VMB1: {
            A.topLeftCorner(dim, dim) = kinetic_block(k, coll.matrix(), basis);
            const int eo = lay.E_offset(), bo = lay.B_offset();
            for (int i = 0; i < 3; ++i) {
                // xi M^{1/2} . E forcing and the -b current source
                A.col(eo + i).head(dim) = basis.moment_b(i).cast<Cd>();
                A.row(eo + i).head(dim) = -basis.moment_b(i).transpose().cast<Cd>();
            }
            const Eigen::Matrix3d C = cross_matrix(k);
            A.block<3, 3>(eo, bo) = kI * C.cast<Cd>();
            A.block<3, 3>(bo, eo) = -kI * C.cast<Cd>();
            break;
        }
        case Model::VMB2RateOnly: {
            // Sum channel keeps the supplied operator (5-dim null space);
            // the difference channel only conserves the charge moment, so
            // its relaxation acts on everything orthogonal to e_a.
            const Mat& Ls = coll.matrix();
            const Mat Pa = basis.moment_a() * basis.moment_a().transpose();
            const Mat Ia = Mat::Identity(dim, dim) - Pa;
            const Mat Ld = -(Ia * coll.nu_gram() * Ia);
            const Mat Lsame = 0.5 * (Ls + Ld);
            const Mat Lcross = 0.5 * (Ls - Ld);

            const CMat K = kinetic_block(k, Lsame, basis);
            A.topLeftCorner(dim, dim) = K;
            A.block(dim, dim, dim, dim) = K;
            A.block(0, dim, dim, dim) = Lcross.cast<Cd>();
            A.block(dim, 0, dim, dim) = Lcross.cast<Cd>();

            const int eo = lay.E_offset(), bo = lay.B_offset();
            for (int i = 0; i < 3; ++i) {
                A.col(eo + i).segment(0, dim) = basis.moment_b(i).cast<Cd>();
                A.col(eo + i).segment(dim, dim) = -basis.moment_b(i).cast<Cd>();
                A.row(eo + i).segment(0, dim) = -basis.moment_b(i).transpose().cast<Cd>();
                A.row(eo + i).segment(dim, dim) = basis.moment_b(i).transpose().cast<Cd>();
            }
            const Eigen::Matrix3d C = cross_matrix(k);
            A.block<3, 3>(eo, bo) = kI * C.cast<Cd>();
            A.block<3, 3>(bo, eo) = -kI * C.cast<Cd>();
            break;
        }
    }
    return Generator(std::move(A), k, spec.model, lay, &basis);
}

CMat constraint_rows(Model model, const StateLayout& layout,
                     const VelocityBasis& basis, const Vec3& k) {
    if (!layout.has_fields) return CMat(0, layout.total());
    CMat G = CMat::Zero(2, layout.total());
    G.row(0).segment(layout.u_offset(0), layout.kdim) =
        -basis.moment_a().transpose().cast<Cd>();
    if (model == Model::VMB2RateOnly)
        G.row(0).segment(layout.u_offset(1), layout.kdim) =
            basis.moment_a().transpose().cast<Cd>();
    for (int i = 0; i < 3; ++i) {
        G(0, layout.E_offset() + i) = kI * k[i];
        G(1, layout.B_offset() + i) = kI * k[i];
    }
    return G;
}

std::pair<Cd, Cd> constraint_residuals(const ModeState& state,
                                       const VelocityBasis& basis) {
    if (!state.layout.has_fields) return {0.0, 0.0};
    Cd charge = basis.moment_a().cast<Cd>().dot(state.u(0));
    if (state.layout.species == 2)
        charge -= basis.moment_a().cast<Cd>().dot(state.u(1));
    const Cd gE = kI * state.k.cast<Cd>().dot(state.E()) - charge;
    const Cd gB = kI * state.k.cast<Cd>().dot(state.B());
    return {gE, gB};
}

ModeState make_admissible(ModeState state, const VelocityBasis& basis) {
    if (!state.layout.has_fields) return state;
    const double k2 = state.k.squaredNorm();
    auto [gE, gB] = constraint_residuals(state, basis);
    if (k2 == 0.0) {
        if (std::abs(gE) > 1e-13 * (1.0 + state.x.norm()))
            throw std::invalid_argument(
                "make_admissible: k = 0 cannot carry a net charge moment");
        return state;
    }
    const CVec3 kc = state.k.cast<Cd>();
    CVec3 E = state.E() + gE * kI * kc / k2;        // shift longitudinal part
    CVec3 B = state.B() - (kc.dot(state.B())) * kc / k2;  // drop longitudinal part
    state.x.segment<3>(state.layout.E_offset()) = E;
    state.x.segment<3>(state.layout.B_offset()) = B;
    return state;
}

}  // namespace kinedecay
