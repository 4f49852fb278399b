#include "kinedecay/collision.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kinedecay {

Mat nu_multiplication_gram(const VelocityBasis& basis) {
    const int dim = basis.dim();
    const Vec& x = basis.quad_nodes();
    const Vec& w = basis.quad_weights();
    const int q = static_cast<int>(x.size());

    // Evaluate every basis polynomial on the tensor grid once; the Gram is
    // then Phi diag(w nu) Phi^T.
    const long nodes = long(q) * q * q;
    Mat phi(dim, nodes);
    Vec wnu(nodes);
    long col = 0;
    for (int i1 = 0; i1 < q; ++i1)
        for (int i2 = 0; i2 < q; ++i2)
            for (int i3 = 0; i3 < q; ++i3, ++col) {
                const Vec3 xi(x[i1], x[i2], x[i3]);
                for (int j = 0; j < dim; ++j) phi(j, col) = basis.poly_value(j, xi);
                wnu[col] = w[i1] * w[i2] * w[i3] * collision_frequency(xi.norm());
            }
    Mat N = phi * wnu.asDiagonal() * phi.transpose();
    return 0.5 * (N + N.transpose());
}

double micro_coercivity_constant(const VelocityBasis& basis, const Mat& L,
                                 const Mat& W) {
    const int dim = basis.dim();
    // Orthonormal basis of the microscopic subspace: the columns of I - P,
    // compressed by a rank-revealing QR.
    Mat micro = Mat::Identity(dim, dim) - basis.projector();
    Eigen::ColPivHouseholderQR<Mat> qr(micro);
    Mat Q = qr.householderQ() * Mat::Identity(dim, dim - 5);

    const Mat A = Q.transpose() * (-L) * Q;
    const Mat B = Q.transpose() * W * Q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(0.5 * (A + A.transpose()),
                                                      0.5 * (B + B.transpose()));
    if (ges.info() != Eigen::Success)
        throw std::runtime_error("micro coercivity eigensolve failed");
    return ges.eigenvalues().minCoeff();
}

CollisionOperator CollisionOperator::relaxation_const_nu(const VelocityBasis& basis,
                                                         double nu0) {
    if (nu0 <= 0.0)
        throw std::invalid_argument("relaxation_const_nu: nu0 must be > 0");
    CollisionOperator op;
    op.kind_ = CollisionKind::RelaxationConstNu;
    op.nu0_ = nu0;
    const int dim = basis.dim();
    const Mat micro = Mat::Identity(dim, dim) - basis.projector();
    op.L_ = -nu0 * micro;
    op.N_ = nu0 * Mat::Identity(dim, dim);
    op.Wmicro_ = nu0 * micro;
    op.lambda0_ = 1.0;  // exact: -L and W coincide on the micro subspace
    return op;
}

CollisionOperator CollisionOperator::relaxation_variable_nu(
    const VelocityBasis& basis) {
    CollisionOperator op;
    op.kind_ = CollisionKind::RelaxationVariableNu;
    const int dim = basis.dim();
    const Mat micro = Mat::Identity(dim, dim) - basis.projector();
    op.N_ = nu_multiplication_gram(basis);
    op.Wmicro_ = micro * op.N_ * micro;
    op.Wmicro_ = (0.5 * (op.Wmicro_ + op.Wmicro_.transpose())).eval();
    op.L_ = -op.Wmicro_;
    op.nu0_ = collision_frequency(0.0);
    op.lambda0_ = micro_coercivity_constant(basis, op.L_, op.N_);
    return op;
}

CollisionOperator CollisionOperator::from_matrix_file(const VelocityBasis& basis,
                                                      const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open collision matrix file: " + path);

    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error("collision matrix file is empty: " + path);
    std::istringstream hs(header);
    std::string tag;
    hs >> tag;
    int n = -1;
    if (tag.rfind("dim=", 0) == 0) n = std::stoi(tag.substr(4));
    if (n <= 0)
        throw std::runtime_error("collision matrix file missing 'dim=<n>' header: " +
                                 path);
    if (n != basis.dim())
        throw std::runtime_error(
            "collision matrix dimension mismatch: file has dim=" + std::to_string(n) +
            ", basis has dim=" + std::to_string(basis.dim()));

    Mat L(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!(in >> L(i, j)))
                throw std::runtime_error("collision matrix file truncated: " + path);

    CollisionOperator op;
    op.kind_ = CollisionKind::ExternalMatrix;
    const Mat micro = Mat::Identity(n, n) - basis.projector();
    L = (0.5 * (L + L.transpose())).eval();
    L = micro * L * micro;
    op.L_ = 0.5 * (L + L.transpose());
    op.N_ = nu_multiplication_gram(basis);
    op.Wmicro_ = micro * op.N_ * micro;
    op.Wmicro_ = (0.5 * (op.Wmicro_ + op.Wmicro_.transpose())).eval();
    op.nu0_ = collision_frequency(0.0);
    op.lambda0_ = micro_coercivity_constant(basis, op.L_, op.N_);
    if (op.lambda0_ <= 0.0)
        throw std::runtime_error(
            "external collision matrix is not coercive after projection "
            "(lambda0 = " +
            std::to_string(op.lambda0_) + ")");
    return op;
}

}  // namespace kinedecay
