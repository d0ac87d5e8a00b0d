#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "gainform/gainform.hpp"

using namespace gainform;

TEST_CASE("is_metzler") {
    const Eigen::MatrixXd b = fixtures::buffer_chain().b();
    Eigen::Matrix3d expected;
    expected << -1, 1, 0, 1, -2, 1, 0, 1, -1;
    const Eigen::MatrixXd neg_bbt = -b * b.transpose();
    CHECK((neg_bbt - expected).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(is_metzler(neg_bbt).metzler);

    Eigen::Matrix2d bad;
    bad << 0, -1, 0, 0;
    const MetzlerReport report = is_metzler(bad);
    CHECK_FALSE(report.metzler);
    REQUIRE(report.witness.has_value());
    CHECK(report.witness->row == 0);
    CHECK(report.witness->col == 1);
    CHECK(report.witness->value == -1.0);

    CHECK(is_metzler(Eigen::Vector3d(-5, 2, -7).asDiagonal().toDenseMatrix()).metzler);
    CHECK_THROWS_AS(is_metzler(Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("buffer chain closed loop is internally positive") {
    const LtiSystem sys = fixtures::buffer_chain();
    const StateSpace ss = state_map_closed_loop(sys, synth_optimal(sys));
    const PositivityCertificate cert = internal_positivity(ss);
    CHECK(cert.metzler_a);
    CHECK(cert.nonneg_b);
    CHECK(cert.nonneg_c);
    CHECK(cert.nonneg_d);
    CHECK(cert.verdict);
    CHECK_FALSE(cert.witness.has_value());
}

TEST_CASE("buffer network disturbance-to-state loop certificate") {
    // The verdict follows from the computed sign pattern of A + B L.
    const LtiSystem sys = fixtures::buffer_network();
    const GainMatrix l = synth_optimal(sys);
    const StateSpace ss = state_map_closed_loop(sys, l);
    const PositivityCertificate cert = internal_positivity(ss);
    CHECK(cert.metzler_a == is_metzler(sys.a() + sys.b() * l.l).metzler);
    CHECK(cert.verdict == cert.metzler_a);
}

TEST_CASE("negative output map fails the certificate") {
    const LtiSystem sys = fixtures::buffer_chain();
    StateSpace ss = state_map_closed_loop(sys, synth_optimal(sys));
    const StateSpace flipped(ss.a, ss.b, -Eigen::MatrixXd::Identity(3, 3), ss.d);
    const PositivityCertificate cert = internal_positivity(flipped);
    CHECK(cert.metzler_a);
    CHECK_FALSE(cert.nonneg_c);
    CHECK_FALSE(cert.verdict);
    REQUIRE(cert.witness.has_value());
    CHECK(cert.witness->where == EntryWitness::Matrix::C);
}

TEST_CASE("closed_loop_positivity_condition") {
    CHECK(closed_loop_positivity_condition(fixtures::buffer_chain()));

    const LtiSystem identity_input =
        validate_system(-Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity());
    CHECK(closed_loop_positivity_condition(identity_input));

    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    a.diagonal() << -1.0, -2.0;
    Eigen::Matrix2d b;
    b << 1, 1, 1, -1;  // B B^T = 2I, so -B B^T is Metzler
    CHECK(closed_loop_positivity_condition(validate_system(a, b)));

    Eigen::Matrix2d coupled;
    coupled << -2, 1, 1, -3;
    CHECK_THROWS_AS(
        closed_loop_positivity_condition(validate_system(coupled, Eigen::Matrix2d::Identity())),
        NotDiagonalA);
}

TEST_CASE("Metzler equivalence on random diagonal plants", "[property]") {
    std::mt19937_64 rng(550);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 3);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, i) = -fixtures::uniform(rng, 0.2, 4.0);
        }
        const LtiSystem sys = validate_system(a, fixtures::random_matrix(rng, n, m));
        const bool via_bbt = is_metzler(-sys.b() * sys.b().transpose()).metzler;
        const bool via_loop =
            is_metzler(sys.a() + sys.b() * synth_optimal(sys).l).metzler;
        CHECK(via_bbt == via_loop);
        CHECK(closed_loop_positivity_condition(sys) == via_bbt);
    }
}

TEST_CASE("incidence-driven plants always pass the condition", "[property]") {
    std::mt19937_64 rng(551);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index nodes = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index links = 1 + static_cast<Eigen::Index>(rng() % 4);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nodes, nodes);
        for (Eigen::Index i = 0; i < nodes; ++i) {
            a(i, i) = -fixtures::uniform(rng, 0.2, 4.0);
        }
        const LtiSystem sys =
            validate_system(a, fixtures::random_incidence(rng, nodes, links));
        CHECK(closed_loop_positivity_condition(sys));
    }
}

TEST_CASE("diagonal state weights with a scalar input weight preserve positivity",
          "[property]") {
    // A diagonal Q only rescales columns of the loop matrix and a scalar R
    // rescales it uniformly, so neither can flip an off-diagonal sign.
    std::mt19937_64 rng(552);
    int covered = 0;
    for (int trial = 0; trial < 400 && covered < 20; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 3);
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 2);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i, i) = -fixtures::uniform(rng, 0.2, 4.0);
        }
        const LtiSystem sys = validate_system(a, fixtures::random_matrix(rng, n, m));
        if (!is_metzler(-sys.b() * sys.b().transpose()).metzler) {
            continue;
        }
        ++covered;
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            q(i, i) = fixtures::uniform(rng, 0.3, 3.0);
        }
        const Eigen::MatrixXd r =
            fixtures::uniform(rng, 0.3, 3.0) * Eigen::MatrixXd::Identity(m, m);
        const GainMatrix l = synth_weighted(sys, make_cost_weights(q, r));
        CHECK(is_metzler(sys.a() + sys.b() * l.l, 1e-10).metzler);
    }
    CHECK(covered >= 20);
}

TEST_CASE("any diagonal weights preserve positivity for incidence-structured inputs",
          "[property]") {
    // With one +1 and one -1 per column, every column contributes nonpositive
    // off-diagonal terms on its own, so arbitrary positive column weights
    // (a full diagonal R) keep the loop Metzler.
    std::mt19937_64 rng(553);
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index nodes = 2 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index links = 1 + static_cast<Eigen::Index>(rng() % 4);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nodes, nodes);
        for (Eigen::Index i = 0; i < nodes; ++i) {
            a(i, i) = -fixtures::uniform(rng, 0.2, 4.0);
        }
        const LtiSystem sys =
            validate_system(a, fixtures::random_incidence(rng, nodes, links));
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(nodes, nodes);
        for (Eigen::Index i = 0; i < nodes; ++i) {
            q(i, i) = fixtures::uniform(rng, 0.3, 3.0);
        }
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(links, links);
        for (Eigen::Index i = 0; i < links; ++i) {
            r(i, i) = fixtures::uniform(rng, 0.3, 3.0);
        }
        const GainMatrix l = synth_weighted(sys, make_cost_weights(q, r));
        CHECK(is_metzler(sys.a() + sys.b() * l.l, 1e-10).metzler);
    }
}
