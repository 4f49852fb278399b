#include "kinedecay/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kinedecay {

namespace {

using Cd = std::complex<double>;
constexpr Cd kI{0.0, 1.0};

CMat hermitian_part(const CMat& S) { return 0.5 * (S + S.adjoint()); }

double max_eig_hermitian(const CMat& H) {
    Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

void require_single_species(const StateLayout& layout, const char* who) {
    if (layout.species != 1)
        throw std::invalid_argument(std::string(who) +
                                    ": functional construction covers "
                                    "single-species layouts only");
}

}  // namespace

QuadForm base_form(const StateLayout& layout) {
    return {CMat::Identity(layout.total(), layout.total())};
}

QuadForm dissipation_form(const Vec3& k, const VelocityBasis& basis,
                          const CollisionOperator& coll, const StateLayout& layout) {
    require_single_species(layout, "dissipation_form");
    const int n = layout.total();
    const int dim = layout.kdim;
    const double k2 = k.squaredNorm();
    const double wmacro = k2 / (1.0 + k2);

    CMat M = CMat::Zero(n, n);
    M.topLeftCorner(dim, dim) = coll.micro_weight().cast<Cd>();
    const Mat macro = basis.moment_a() * basis.moment_a().transpose() +
                      basis.moment_b(0) * basis.moment_b(0).transpose() +
                      basis.moment_b(1) * basis.moment_b(1).transpose() +
                      basis.moment_b(2) * basis.moment_b(2).transpose() +
                      basis.moment_c() * basis.moment_c().transpose();
    M.topLeftCorner(dim, dim) += (wmacro * macro).cast<Cd>();

    if (layout.has_fields) {
        const double wE = k2 / ((1.0 + k2) * (1.0 + k2));
        const double wB = k2 * k2 / std::pow(1.0 + k2, 3);
        M.block<3, 3>(layout.E_offset(), layout.E_offset()) =
            (k * k.transpose() + wE * Mat::Identity(3, 3)).cast<Cd>();
        M.block<3, 3>(layout.B_offset(), layout.B_offset()) =
            (wB * Mat::Identity(3, 3)).cast<Cd>();
    }
    return {std::move(M)};
}

QuadForm interaction_form_1(const Vec3& k, double kappa1,
                            const VelocityBasis& basis, const StateLayout& layout) {
    require_single_species(layout, "interaction_form_1");
    const int n = layout.total();
    const int dim = layout.kdim;
    const double k2 = k.squaredNorm();

    const Mat micro = Mat::Identity(dim, dim) - basis.projector();

    // (i k c | Lambda({I-P}u)):  S += i k_i lam_i vc^T
    CMat S = CMat::Zero(dim, dim);
    for (int i = 0; i < 3; ++i) {
        const Vec lam = micro.transpose() * basis.lambda_vector(i);
        S += (kI * k[i]) * (lam * basis.moment_c().transpose()).cast<Cd>();
    }

    // sum_ij (i k_i b_j + i k_j b_i - (2/3) d_ij i k.b | Theta_ij({I-P}u))
    Vec kdotb = Vec::Zero(dim);
    for (int l = 0; l < 3; ++l) kdotb += k[l] * basis.moment_b(l);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const Vec th = micro.transpose() * basis.theta_vector(i, j);
            Vec row = k[i] * basis.moment_b(j) + k[j] * basis.moment_b(i);
            if (i == j) row -= (2.0 / 3.0) * kdotb;
            S += kI * (th * row.transpose()).cast<Cd>();
        }

    // kappa1 (i k a | b):  S += kappa1 i k_i vb_i va^T
    for (int i = 0; i < 3; ++i)
        S += (kappa1 * kI * k[i]) *
             (basis.moment_b(i) * basis.moment_a().transpose()).cast<Cd>();

    CMat M = CMat::Zero(n, n);
    M.topLeftCorner(dim, dim) = hermitian_part(S) / (1.0 + k2);
    return {std::move(M)};
}

QuadForm interaction_form_2(const Vec3& k, double kappa2,
                            const VelocityBasis& basis, const StateLayout& layout) {
    require_single_species(layout, "interaction_form_2");
    const int n = layout.total();
    if (!layout.has_fields) return {CMat::Zero(n, n)};

    const int dim = layout.kdim;
    const double k2 = k.squaredNorm();
    const Eigen::Matrix3d C = cross_matrix(k);

    Mat Rb = Mat::Zero(3, n);  // b moments of the kinetic block
    for (int i = 0; i < 3; ++i)
        Rb.row(i).segment(0, dim) = basis.moment_b(i).transpose();
    Mat RE = Mat::Zero(3, n), RB = Mat::Zero(3, n);
    RE.block<3, 3>(0, layout.E_offset()).setIdentity();
    RB.block<3, 3>(0, layout.B_offset()).setIdentity();

    // -(k x E | k x b)/(1+|k|^2)^2  evaluates to  -x* Rb^T C^T C RE x
    CMat S = -(Rb.transpose() * C.transpose() * C * RE).cast<Cd>() /
             std::pow(1.0 + k2, 2);
    // -kappa2 |k|^2 (i k x B | E)/(1+|k|^2)^3  ->  -kappa2 |k|^2 x* RE^T (iC) RB x
    S -= (kappa2 * k2 / std::pow(1.0 + k2, 3)) * kI *
         (RE.transpose() * C * RB).cast<Cd>();

    return {hermitian_part(S)};
}

QuadForm assemble_E(const Vec3& k, const FunctionalCoefficients& kap,
                    const VelocityBasis& basis, const StateLayout& layout) {
    QuadForm E = base_form(layout);
    E.M += kap.kappa4 * interaction_form_1(k, kap.kappa1, basis, layout).M;
    E.M += kap.kappa4 * kap.kappa3 *
           interaction_form_2(k, kap.kappa2, basis, layout).M;
    return E;
}

QuadForm morder_form(const QuadForm& form, const Vec3& k, int m) {
    if (m < 0) throw std::invalid_argument("morder_form: m must be >= 0");
    return {std::pow(k.squaredNorm(), m) * form.M};
}

std::pair<double, double> equivalence_bounds(const QuadForm& ME) {
    Eigen::SelfAdjointEigenSolver<CMat> es(ME.M, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

CMat constraint_tangent_basis(const Generator& gen) {
    const int n = gen.layout().total();
    const CMat G = constraint_rows(gen.model(), gen.layout(), gen.basis(), gen.k());
    if (G.rows() == 0) return CMat::Identity(n, n);
    Eigen::JacobiSVD<CMat> svd(G, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-13 * sv[0]) ++rank;
    return svd.matrixV().rightCols(n - rank);
}

double verify_lyapunov(const Generator& gen, const QuadForm& ME, const QuadForm& MD,
                       double rtol) {
    const CMat Q = constraint_tangent_basis(gen);
    const CMat H0 = Q.adjoint() * hermitian_part(2.0 * (ME.M * gen.matrix())) * Q;
    const CMat D = Q.adjoint() * MD.M * Q;

    // tolerance scaled to the problem; eigenvalues below it count as <= 0
    const double scale = std::max(1.0, H0.cwiseAbs().maxCoeff());
    const double tol = 1e-10 * scale;

    auto feasible = [&](double lam) {
        return max_eig_hermitian(H0 + lam * D) <= tol;
    };

    // Any lambda with lambda*|D| inside the tolerance band is
    // indistinguishable from zero; report such certificates as absent.
    const double dscale = std::max(D.cwiseAbs().maxCoeff(), 1e-300);
    const double noise_floor = 4.0 * tol / dscale;

    if (!feasible(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (feasible(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 120) return lo;  // dissipation form must be degenerate
    }
    while (hi - lo > rtol * hi) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return lo <= noise_floor ? 0.0 : lo;
}

double dissipation_kernel_constant(const Generator& gen, const QuadForm& MD) {
    const CMat Q = constraint_tangent_basis(gen);
    const CMat D = hermitian_part(Q.adjoint() * MD.M * Q);
    Eigen::SelfAdjointEigenSolver<CMat> es(D, Eigen::EigenvaluesOnly);
    const double k2 = gen.k().squaredNorm();
    const double phi = k2 * k2 / std::pow(1.0 + k2, 3);
    return es.eigenvalues().minCoeff() / phi;
}

double source_coupling_constant(const QuadForm& ME, const CollisionOperator& coll,
                                const StateLayout& layout) {
    // nu^{-1/2}-weighted kinetic rows of M_E; for the relaxation kinds the
    // weight is a scalar or the Gram of nu-multiplication.
    const int dim = layout.kdim;
    Eigen::SelfAdjointEigenSolver<Mat> es(coll.nu_gram());
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::runtime_error("source_coupling_constant: nu weight not positive");
    const Mat Nmhalf =
        es.eigenvectors() *
        es.eigenvalues().array().rsqrt().matrix().asDiagonal() *
        es.eigenvectors().transpose();
    const CMat rows = Nmhalf.cast<Cd>() * ME.M.topRows(dim);
    Eigen::JacobiSVD<CMat> svd(rows);
    return svd.singularValues().maxCoeff();
}

TuneResult tune_constants(const std::vector<double>& k_grid,
                          const GeneratorFactory& factory,
                          const VelocityBasis& basis, const CollisionOperator& coll,
                          const TuneTargets& targets) {
    if (k_grid.empty())
        throw std::invalid_argument("tune_constants: empty |k| grid");
    for (double r : k_grid)
        if (!(r > 0.0))
            throw std::invalid_argument("tune_constants: grid values must be > 0");

    FunctionalCoefficients kap;  // starts at (0.1, 0.1, 0.1, 0.1)
    // descent order: overall size first, then the field block, then the
    // two cross couplings
    const int order[4] = {3, 2, 0, 1};  // indices into (kappa1..4) storage below

    auto kap_ref = [&](int which) -> double& {
        switch (which) {
            case 0: return kap.kappa1;
            case 1: return kap.kappa2;
            case 2: return kap.kappa3;
            default: return kap.kappa4;
        }
    };

    TuneResult result;
    std::vector<Generator> gens;
    gens.reserve(k_grid.size());
    for (double r : k_grid) gens.push_back(factory(Vec3(r, 0.0, 0.0)));

    for (int iter = 0; iter <= targets.max_iterations; ++iter) {
        result.per_k.clear();
        result.lambda_min = std::numeric_limits<double>::infinity();
        result.equiv_lo = std::numeric_limits<double>::infinity();
        result.equiv_hi = 0.0;
        bool ok = true;
        double bad_k = 0.0;
        std::string why;

        for (std::size_t j = 0; j < gens.size(); ++j) {
            const Generator& gen = gens[j];
            const QuadForm ME = assemble_E(gen.k(), kap, basis, gen.layout());
            const QuadForm MD = dissipation_form(gen.k(), basis, coll, gen.layout());
            const auto [lo, hi] = equivalence_bounds(ME);
            const double lam = verify_lyapunov(gen, ME, MD);
            result.per_k.push_back({gen.k().norm(), lam, lo, hi});
            result.lambda_min = std::min(result.lambda_min, lam);
            result.equiv_lo = std::min(result.equiv_lo, lo);
            result.equiv_hi = std::max(result.equiv_hi, hi);
            if (lo < targets.equiv_lo_floor || hi > targets.equiv_hi_cap) {
                ok = false;
                bad_k = gen.k().norm();
                why = "equivalence bounds out of range";
                break;
            }
            if (lam < targets.lambda_floor) {
                ok = false;
                bad_k = gen.k().norm();
                why = "lambda below floor";
                break;
            }
        }

        if (ok) {
            result.coeffs = kap;
            result.iterations = iter;
            const Generator& g0 = gens.front();
            result.source_constant = source_coupling_constant(
                assemble_E(g0.k(), kap, basis, g0.layout()), coll, g0.layout());
            return result;
        }
        if (iter == targets.max_iterations) {
            std::ostringstream msg;
            msg << "tune_constants: no feasible coefficients within "
                << targets.max_iterations << " iterations; last failure at |k|="
                << bad_k << " (" << why << "), kappa=(" << kap.kappa1 << ", "
                << kap.kappa2 << ", " << kap.kappa3 << ", " << kap.kappa4 << ")";
            throw std::runtime_error(msg.str());
        }
        kap_ref(order[iter % 4]) *= 0.5;
    }
    throw std::logic_error("tune_constants: unreachable");
}

}  // namespace kinedecay
