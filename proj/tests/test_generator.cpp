#include <doctest.h>

#include "kinedecay/generator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace kinedecay;
using Cd = std::complex<double>;

namespace {

int count_near(const CVec& ev, Cd target, double tol) {
    int n = 0;
    for (int i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i] - target) < tol) ++n;
    return n;
}

ModeState random_state(const Generator& gen, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    ModeState st{gen.k(), gen.layout(), CVec(gen.layout().total())};
    for (int i = 0; i < st.x.size(); ++i) st.x[i] = Cd(g(rng), g(rng));
    return st;
}

}  // namespace

TEST_CASE("state layouts expose the right offsets") {
    VelocityBasis basis(3);
    const int d = basis.dim();

    StateLayout be = layout_for(Model::BE, basis);
    CHECK(be.total() == d);
    CHECK(!be.has_fields);

    StateLayout vpb = layout_for(Model::VPB1, basis);
    CHECK(vpb.total() == d);

    StateLayout vmb = layout_for(Model::VMB1, basis);
    CHECK(vmb.total() == d + 6);
    CHECK(vmb.E_offset() == d);
    CHECK(vmb.B_offset() == d + 3);

    StateLayout two = layout_for(Model::VMB2RateOnly, basis);
    CHECK(two.total() == 2 * d + 6);
    CHECK(two.u_offset(1) == d);
    CHECK(two.E_offset() == 2 * d);
}

TEST_CASE("model names round-trip") {
    for (Model m :
         {Model::BE, Model::VPB1, Model::VMB1, Model::VMB2RateOnly})
        CHECK(model_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(model_from_string("landau"), std::invalid_argument);
}

TEST_CASE("cross matrix reproduces the cross product") {
    const Vec3 k(0.3, -1.2, 0.7), v(2.0, 0.5, -1.0);
    CHECK((cross_matrix(k) * v - k.cross(v)).norm() < 1e-15);
}

TEST_CASE("single-species Maxwell system at k = 0 splits into known blocks") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen = assemble_generator(Vec3::Zero(), {Model::VMB1, &coll}, basis);

    const CVec ev = gen.decomposition().eigenvalues;
    // three (b_i, E_i) rotation pairs, five conserved kinetic directions
    // plus three static B components, and the relaxed micro bulk
    CHECK(count_near(ev, Cd(0.0, 1.0), 1e-9) == 3);
    CHECK(count_near(ev, Cd(0.0, -1.0), 1e-9) == 3);
    CHECK(count_near(ev, Cd(0.0, 0.0), 1e-9) == 5);
    CHECK(count_near(ev, Cd(-1.0, 0.0), 1e-9) == basis.dim() - 5);
}

TEST_CASE("two-species system at k = 0 damps the difference momentum") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen =
        assemble_generator(Vec3::Zero(), {Model::VMB2RateOnly, &coll}, basis);

    const CVec ev = gen.decomposition().eigenvalues;
    // conserved: five joint moments of the sum channel, the difference
    // charge, and three B components
    CHECK(count_near(ev, Cd(0.0, 0.0), 1e-9) == 9);
    // the difference momentum and E solve z^2 + nu0 z + 2 = 0
    const Cd root(-0.5, 0.5 * std::sqrt(7.0));
    CHECK(count_near(ev, root, 1e-9) == 3);
    CHECK(count_near(ev, std::conj(root), 1e-9) == 3);
    for (int i = 0; i < ev.size(); ++i) CHECK(ev[i].real() < 1e-12);
}

TEST_CASE("hermitian part of the generator is exactly the collision block") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.3);
    const Vec3 k(0.7, -0.3, 1.1);

    SUBCASE("single species") {
        Generator gen = assemble_generator(k, {Model::VMB1, &coll}, basis);
        CMat H = gen.matrix() + gen.matrix().adjoint();
        CMat expected = CMat::Zero(H.rows(), H.cols());
        expected.topLeftCorner(basis.dim(), basis.dim()) =
            2.0 * coll.matrix().cast<Cd>();
        CHECK((H - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("kinetic-only model") {
        Generator gen = assemble_generator(k, {Model::BE, &coll}, basis);
        CMat H = gen.matrix() + gen.matrix().adjoint();
        CHECK((H - 2.0 * coll.matrix().cast<Cd>()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("constraint rows are invariant under the flow") {
    VelocityBasis basis(4);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    for (Model m : {Model::VMB1, Model::VMB2RateOnly}) {
        for (const Vec3& k :
             {Vec3(1.0, 0.0, 0.0), Vec3(0.3, -1.2, 0.7), Vec3(0.0, 0.0, 4.0)}) {
            Generator gen = assemble_generator(k, {m, &coll}, basis);
            const CMat G = constraint_rows(m, gen.layout(), basis, k);
            CHECK((G * gen.matrix()).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("make_admissible lands on the constraint set and stays there") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen =
        assemble_generator(Vec3(0.8, -0.1, 0.4), {Model::VMB1, &coll}, basis);

    ModeState st = random_state(gen, 5);
    ModeState adm = make_admissible(st, basis);
    auto [gE, gB] = constraint_residuals(adm, basis);
    CHECK(std::abs(gE) < 1e-13 * (1.0 + adm.x.norm()));
    CHECK(std::abs(gB) < 1e-13 * (1.0 + adm.x.norm()));

    SUBCASE("idempotent") {
        ModeState twice = make_admissible(adm, basis);
        CHECK((twice.x - adm.x).norm() < 1e-14 * adm.x.norm());
    }
    SUBCASE("kinetic components are untouched") {
        CHECK((adm.u(0) - st.u(0)).norm() == 0.0);
    }
}

TEST_CASE("make_admissible at k = 0 accepts only neutral states") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen = assemble_generator(Vec3::Zero(), {Model::VMB1, &coll}, basis);

    ModeState charged = random_state(gen, 8);
    charged.u(0)[0] = 2.0;  // net charge moment
    CHECK_THROWS_AS(make_admissible(charged, basis), std::invalid_argument);

    ModeState neutral = random_state(gen, 9);
    neutral.u(0)[0] = 0.0;
    ModeState out = make_admissible(neutral, basis);
    CHECK((out.x - neutral.x).norm() == 0.0);
}

TEST_CASE("the eliminated-field model needs k away from zero") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    CHECK_THROWS_AS(assemble_generator(Vec3::Zero(), {Model::VPB1, &coll}, basis),
                    std::invalid_argument);
}

TEST_CASE("the eliminated field produces a plasma oscillation at long waves") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen =
        assemble_generator(Vec3(1e-3, 0.0, 0.0), {Model::VPB1, &coll}, basis);

    const CVec ev = gen.decomposition().eigenvalues;
    double best = 1e9;
    for (int i = 0; i < ev.size(); ++i)
        best = std::min(best, std::abs(ev[i] - Cd(0.0, 1.0)));
    CHECK(best < 1e-3);  // frequency -> 1, damping -> 0 as k -> 0
}

TEST_CASE("every model has a strictly negative physical abscissa at k = e1") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    const Vec3 k(1.0, 0.0, 0.0);
    for (Model m : {Model::BE, Model::VPB1, Model::VMB1, Model::VMB2RateOnly}) {
        Generator gen = assemble_generator(k, {m, &coll}, basis);
        CHECK(gen.spectral_abscissa() < -1e-3);
    }
}

TEST_CASE("physical abscissa of the Maxwell system is reproducible") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen =
        assemble_generator(Vec3(1.0, 0.0, 0.0), {Model::VMB1, &coll}, basis);
    // frozen reference for this discretization (degree cap 3, nu0 = 1)
    CHECK(gen.spectral_abscissa() ==
          doctest::Approx(-0.1573670568822726).epsilon(1e-10));
}

TEST_CASE("eigendecomposition reconstructs the generator") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    Generator gen =
        assemble_generator(Vec3(0.4, 0.2, -0.9), {Model::VMB1, &coll}, basis);
    const Eigendecomposition& d = gen.decomposition();
    REQUIRE(d.usable);
    CHECK((gen.matrix() * d.V - d.V * d.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((d.Vinv * d.V - CMat::Identity(d.V.rows(), d.V.cols())).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("assembly validates its inputs") {
    VelocityBasis basis(3);
    CollisionOperator coll = CollisionOperator::relaxation_const_nu(basis, 1.0);
    SUBCASE("missing collision") {
        CHECK_THROWS_AS(
            assemble_generator(Vec3(1, 0, 0), {Model::BE, nullptr}, basis),
            std::invalid_argument);
    }
    SUBCASE("dimension mismatch") {
        VelocityBasis other(4);
        CHECK_THROWS_AS(
            assemble_generator(Vec3(1, 0, 0), {Model::BE, &coll}, other),
            std::invalid_argument);
    }
}
