#include "kinedecay/velocity_basis.hpp"

#include <cmath>
#include <stdexcept>

namespace kinedecay {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

VelocityBasis::VelocityBasis(int degree_cap) : cap_(degree_cap) {
    if (degree_cap < 2)
        throw std::invalid_argument(
            "VelocityBasis: degree_cap must be >= 2 so the energy direction "
            "(degree 2) is representable");

    // Graded-lexicographic enumeration: ascending total degree, then
    // descending powers of xi_1, xi_2.  Degree 0 and 1 land on the mass and
    // momentum directions in natural order.
    for (int d = 0; d <= cap_; ++d)
        for (int n1 = d; n1 >= 0; --n1)
            for (int n2 = d - n1; n2 >= 0; --n2)
                indices_.push_back({{n1, n2, d - n1 - n2}});

    const int side = cap_ + 1;
    lookup_.assign(side * side * side, -1);
    for (int j = 0; j < dim(); ++j) {
        const auto& m = indices_[j];
        lookup_[(m.n[0] * side + m.n[1]) * side + m.n[2]] = j;
    }

    // Streaming matrices from the recurrence x h_n = sqrt(n+1) h_{n+1}
    // + sqrt(n) h_{n-1} on the normalized 1-D functions.
    for (int axis = 0; axis < 3; ++axis) {
        Mat T = Mat::Zero(dim(), dim());
        for (int j = 0; j < dim(); ++j) {
            auto m = indices_[j];
            const int nj = m.n[axis];
            m.n[axis] = nj + 1;
            if (m.degree() <= cap_) {
                const int up = index_of(m.n[0], m.n[1], m.n[2]);
                T(up, j) = std::sqrt(double(nj + 1));
                T(j, up) = T(up, j);
            }
            m.n[axis] = nj;  // restore; the down-neighbor entry is the
                             // transpose of some up-neighbor already set
        }
        T_[axis] = std::move(T);
    }

    // Conserved directions.  (|xi|^2-3) M^{1/2} = sum_i He_2(xi_i) M^{1/2}
    // has coefficients sqrt(2) on each index (2 e_i) and norm sqrt(6).
    null_ = Mat::Zero(dim(), 5);
    null_(index_of(0, 0, 0), 0) = 1.0;
    null_(index_of(1, 0, 0), 1) = 1.0;
    null_(index_of(0, 1, 0), 2) = 1.0;
    null_(index_of(0, 0, 1), 3) = 1.0;
    const double r3 = 1.0 / std::sqrt(3.0);
    null_(index_of(2, 0, 0), 4) = r3;
    null_(index_of(0, 2, 0), 4) = r3;
    null_(index_of(0, 0, 2), 4) = r3;
    P_ = null_ * null_.transpose();

    va_ = null_.col(0);
    for (int i = 0; i < 3; ++i) vb_[i] = null_.col(1 + i);
    vc_ = null_.col(4) / std::sqrt(6.0);  // c = (1/6) <(|xi|^2-3) M^{1/2}, u>

    // Golub-Welsch on the Jacobi matrix of the probabilists' weight.
    const int q = cap_ + 4;
    Mat J = Mat::Zero(q, q);
    for (int j = 1; j < q; ++j) J(j, j - 1) = J(j - 1, j) = std::sqrt(double(j));
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    qx_ = es.eigenvalues();
    qw_ = es.eigenvectors().row(0).transpose().array().square();
}

int VelocityBasis::index_of(int n1, int n2, int n3) const {
    const int side = cap_ + 1;
    if (n1 < 0 || n2 < 0 || n3 < 0 || n1 > cap_ || n2 > cap_ || n3 > cap_)
        return -1;
    return lookup_[(n1 * side + n2) * side + n3];
}

void VelocityBasis::hermite_values(double x, std::vector<double>& out) const {
    out.resize(cap_ + 1);
    out[0] = 1.0;
    if (cap_ >= 1) out[1] = x;
    for (int n = 1; n < cap_; ++n)
        out[n + 1] = (x * out[n] - std::sqrt(double(n)) * out[n - 1]) /
                     std::sqrt(double(n + 1));
}

double VelocityBasis::poly_value(int j, const Vec3& xi) const {
    std::vector<double> h1, h2, h3;
    hermite_values(xi[0], h1);
    hermite_values(xi[1], h2);
    hermite_values(xi[2], h3);
    const auto& m = indices_[j];
    return h1[m.n[0]] * h2[m.n[1]] * h3[m.n[2]];
}

std::complex<double> VelocityBasis::synthesize_poly(const CVec& u,
                                                    const Vec3& xi) const {
    std::vector<double> h1, h2, h3;
    hermite_values(xi[0], h1);
    hermite_values(xi[1], h2);
    hermite_values(xi[2], h3);
    std::complex<double> acc = 0.0;
    for (int j = 0; j < dim(); ++j) {
        const auto& m = indices_[j];
        acc += u[j] * (h1[m.n[0]] * h2[m.n[1]] * h3[m.n[2]]);
    }
    return acc;
}

Vec VelocityBasis::theta_vector(int i, int j) const {
    Vec w = Vec::Zero(dim());
    if (i == j) {
        // (xi_i^2 - 1) M^{1/2} = sqrt(2) psi_{2 e_i}
        std::array<int, 3> m{0, 0, 0};
        m[i] = 2;
        w[index_of(m[0], m[1], m[2])] = std::sqrt(2.0);
    } else {
        // xi_i xi_j M^{1/2} = psi_{e_i + e_j}; the -1 hits the mass direction
        std::array<int, 3> m{0, 0, 0};
        m[i] = 1;
        m[j] = 1;
        w[index_of(m[0], m[1], m[2])] = 1.0;
        w[index_of(0, 0, 0)] = -1.0;
    }
    return w;
}

Vec VelocityBasis::lambda_vector(int i) const {
    if (cap_ < 3)
        throw std::invalid_argument(
            "VelocityBasis: Lambda moments need degree_cap >= 3");
    // (|xi|^2-5) xi_i = He_3(xi_i) + sum_{j != i} He_2(xi_j) He_1(xi_i)
    Vec w = Vec::Zero(dim());
    std::array<int, 3> m{0, 0, 0};
    m[i] = 3;
    w[index_of(m[0], m[1], m[2])] = std::sqrt(6.0) / 10.0;
    for (int j = 0; j < 3; ++j) {
        if (j == i) continue;
        m = {0, 0, 0};
        m[i] = 1;
        m[j] = 2;
        w[index_of(m[0], m[1], m[2])] = std::sqrt(2.0) / 10.0;
    }
    return w;
}

MacroMoments macro_moments(const VelocityBasis& basis, const CVec& u) {
    MacroMoments mm;
    mm.a = basis.moment_a().cast<std::complex<double>>().dot(u);
    for (int i = 0; i < 3; ++i)
        mm.b[i] = basis.moment_b(i).cast<std::complex<double>>().dot(u);
    mm.c = basis.moment_c().cast<std::complex<double>>().dot(u);
    return mm;
}

ProjectionSplit project_P(const VelocityBasis& basis, const CVec& u) {
    ProjectionSplit out;
    out.macro = macro_moments(basis, u);
    CVec pu = basis.null_vectors().col(0).cast<std::complex<double>>() * out.macro.a;
    for (int i = 0; i < 3; ++i)
        pu += basis.null_vectors().col(1 + i).cast<std::complex<double>>() *
              out.macro.b[i];
    // c multiplies (|xi|^2-3) M^{1/2}, whose normalized direction carries
    // a factor sqrt(6)
    pu += basis.null_vectors().col(4).cast<std::complex<double>>() *
          (std::sqrt(6.0) * out.macro.c);
    out.micro = u - pu;
    return out;
}

Eigen::Matrix3cd theta_moment(const VelocityBasis& basis, const CVec& u) {
    Eigen::Matrix3cd th;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            th(i, j) = basis.theta_vector(i, j).cast<std::complex<double>>().dot(u);
    return th;
}

CVec3 lambda_moment(const VelocityBasis& basis, const CVec& u) {
    CVec3 lm;
    for (int i = 0; i < 3; ++i)
        lm[i] = basis.lambda_vector(i).cast<std::complex<double>>().dot(u);
    return lm;
}

double collision_frequency(double speed) {
    if (speed < 0.0)
        throw std::domain_error("collision_frequency: speed must be >= 0");
    const double s = speed;
    const double root2opi = std::sqrt(2.0 / kPi);
    if (s < 1e-4) {
        // series of (1+s^2)/s erf(s/sqrt(2)) + sqrt(2/pi) e^{-s^2/2};
        // truncation error O(s^4)
        return 2.0 * kPi * root2opi * (2.0 + s * s / 3.0);
    }
    return 2.0 * kPi * ((1.0 + s * s) / s * std::erf(s / std::sqrt(2.0)) +
                        root2opi * std::exp(-0.5 * s * s));
}

}  // namespace kinedecay
