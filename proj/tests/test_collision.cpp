#include <doctest.h>

#include "kinedecay/collision.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <string>

using namespace kinedecay;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/kinedecay_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::string matrix_file_text(const Mat& L) {
    std::string text = "dim=" + std::to_string(L.rows()) + "\n";
    char buf[64];
    for (int i = 0; i < L.rows(); ++i) {
        for (int j = 0; j < L.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g ", L(i, j));
            text += buf;
        }
        text += "\n";
    }
    return text;
}

}  // namespace

TEST_CASE("constant-relaxation operator damps exactly the micro subspace") {
    VelocityBasis basis(3);
    const double nu0 = 1.6;
    CollisionOperator op = CollisionOperator::relaxation_const_nu(basis, nu0);

    CHECK(op.kind() == CollisionKind::RelaxationConstNu);
    CHECK(op.nu0() == nu0);
    CHECK(op.coercivity_lambda0() == 1.0);

    const Mat& L = op.matrix();
    CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);

    // eigenvalues of -L: 0 with multiplicity 5, nu0 with multiplicity dim-5
    Eigen::SelfAdjointEigenSolver<Mat> es(-L);
    const Vec ev = es.eigenvalues();
    for (int i = 0; i < 5; ++i) CHECK(std::abs(ev[i]) < 1e-13);
    for (int i = 5; i < ev.size(); ++i)
        CHECK(ev[i] == doctest::Approx(nu0).epsilon(1e-13));

    // conserved directions are annihilated exactly
    const Mat& N = basis.null_vectors();
    CHECK((L * N).cwiseAbs().maxCoeff() < 1e-14);

    CHECK((op.nu_gram() - nu0 * Mat::Identity(basis.dim(), basis.dim()))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((op.micro_weight() + L).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant relaxation rejects nonpositive frequency") {
    VelocityBasis basis(2);
    CHECK_THROWS_AS(CollisionOperator::relaxation_const_nu(basis, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(CollisionOperator::relaxation_const_nu(basis, -2.0),
                    std::invalid_argument);
}

TEST_CASE("variable-frequency operator is symmetric, null on P, and coercive") {
    VelocityBasis basis(3);
    CollisionOperator op = CollisionOperator::relaxation_variable_nu(basis);

    CHECK(op.kind() == CollisionKind::RelaxationVariableNu);

    const Mat& L = op.matrix();
    CHECK((L - L.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((L * basis.null_vectors()).cwiseAbs().maxCoeff() <
          1e-10 * L.cwiseAbs().maxCoeff());

    // -L equals the weight (I-P) N (I-P) on the micro subspace, so the
    // coercivity constant against that weight is exactly one.
    CHECK(op.coercivity_lambda0() == doctest::Approx(1.0).epsilon(1e-9));

    // The multiplication Gram inherits nu >= nu(0) > 10 as a spectral bound.
    Eigen::SelfAdjointEigenSolver<Mat> es(op.nu_gram());
    CHECK(es.eigenvalues().minCoeff() > 10.0);

    // -L is negative semidefinite overall
    Eigen::SelfAdjointEigenSolver<Mat> el(L);
    CHECK(el.eigenvalues().maxCoeff() < 1e-10);
}

TEST_CASE("external matrix round-trips through the file format") {
    VelocityBasis basis(2);
    CollisionOperator ref = CollisionOperator::relaxation_variable_nu(basis);
    TempFile file("roundtrip.txt", matrix_file_text(ref.matrix()));

    CollisionOperator op = CollisionOperator::from_matrix_file(basis, file.path);
    CHECK(op.kind() == CollisionKind::ExternalMatrix);
    CHECK((op.matrix() - ref.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(op.coercivity_lambda0() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("external loader symmetrizes and projects its input") {
    VelocityBasis basis(2);
    const int dim = basis.dim();
    // Add junk that the sanitization must remove: an antisymmetric part and
    // a macro-macro block.
    CollisionOperator ref = CollisionOperator::relaxation_variable_nu(basis);
    Mat raw = ref.matrix();
    Mat skew = Mat::Random(dim, dim);
    skew = (0.5 * (skew - skew.transpose())).eval();
    raw += skew + 3.0 * basis.projector();

    TempFile file("sanitize.txt", matrix_file_text(raw));
    CollisionOperator op = CollisionOperator::from_matrix_file(basis, file.path);
    CHECK((op.matrix() - ref.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("external loader rejects malformed files") {
    VelocityBasis basis(2);

    SUBCASE("missing file") {
        CHECK_THROWS_AS(
            CollisionOperator::from_matrix_file(basis, "/tmp/no_such_file_here"),
            std::runtime_error);
    }
    SUBCASE("empty file") {
        TempFile file("empty.txt", "");
        CHECK_THROWS_AS(CollisionOperator::from_matrix_file(basis, file.path),
                        std::runtime_error);
    }
    SUBCASE("missing header") {
        TempFile file("noheader.txt", "1 2 3\n4 5 6\n");
        CHECK_THROWS_AS(CollisionOperator::from_matrix_file(basis, file.path),
                        std::runtime_error);
    }
    SUBCASE("dimension mismatch") {
        TempFile file("badd.txt", "dim=9\n" + std::string(200, '0'));
        CHECK_THROWS_AS(CollisionOperator::from_matrix_file(basis, file.path),
                        std::runtime_error);
    }
    SUBCASE("truncated entries") {
        TempFile file("trunc.txt", "dim=10\n1 2 3 4\n");
        CHECK_THROWS_AS(CollisionOperator::from_matrix_file(basis, file.path),
                        std::runtime_error);
    }
    SUBCASE("anti-dissipative matrix") {
        TempFile file("pos.txt",
                      matrix_file_text(Mat::Identity(basis.dim(), basis.dim())));
        CHECK_THROWS_AS(CollisionOperator::from_matrix_file(basis, file.path),
                        std::runtime_error);
    }
}

TEST_CASE("micro coercivity constant recovers exact ratios") {
    VelocityBasis basis(2);
    const int dim = basis.dim();
    const Mat micro = Mat::Identity(dim, dim) - basis.projector();

    // -L = 2.5 W on the micro subspace, measured against W itself
    const Mat W = micro * nu_multiplication_gram(basis) * micro;
    CHECK(micro_coercivity_constant(basis, -2.5 * W, nu_multiplication_gram(basis)) ==
          doctest::Approx(2.5).epsilon(1e-10));

    // constant relaxation against the identity weight
    CHECK(micro_coercivity_constant(basis, -0.7 * micro, Mat::Identity(dim, dim)) ==
          doctest::Approx(0.7).epsilon(1e-10));
}
