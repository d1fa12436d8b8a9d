#include <catch2/catch.hpp>

#include <phodge/hodge.hpp>

#include <random>

using namespace phodge;

namespace {

Cochain random_cochain(const SimplicialMesh& mesh, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Cochain c(mesh, k);
    for (Eigen::Index i = 0; i < c.values.size(); ++i) c.values[i] = gauss(rng);
    return c;
}

}  // namespace

TEST_CASE("harmonic dimensions equal the Betti numbers", "[hodge]") {
    const auto sphere = build_icosphere(2);
    const auto torus = build_flat_torus(8);

    CHECK(harmonic_basis(sphere, 0).dimension() == 1);
    CHECK(harmonic_basis(sphere, 1).dimension() == 0);
    CHECK(harmonic_basis(sphere, 2).dimension() == 1);

    CHECK(harmonic_basis(torus, 0).dimension() == 1);
    CHECK(harmonic_basis(torus, 1).dimension() == 2);
    CHECK(harmonic_basis(torus, 2).dimension() == 1);

    // T^2 degree-0 kernel is the constant cochain
    const auto h0 = harmonic_basis(torus, 0);
    const Eigen::VectorXd v = h0.basis.col(0);
    CHECK((v - v.mean() * Eigen::VectorXd::Ones(v.size())).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("harmonic basis elements are orthonormal with tiny energy", "[hodge]") {
    const auto torus = build_flat_torus(8);
    const auto h = harmonic_basis(torus, 1);
    REQUIRE(h.dimension() == 2);

    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double ip = inner2(h.element(i), h.element(j));
            CHECK(ip == Approx(i == j ? 1.0 : 0.0).margin(1e-10));
        }
        CHECK(p_energy(h.element(i), 2.0) < 1e-18);
        CHECK(lp_norm(d(h.element(i)), 2.0) < 1e-8);
        CHECK(lp_norm(codifferential(h.element(i)), 2.0) < 1e-8);
    }
}

TEST_CASE("weighted orthogonality residual", "[hodge]") {
    const auto torus = build_flat_torus(6);
    const auto h = harmonic_basis(torus, 1);
    std::mt19937_64 rng(31);

    SECTION("harmonic input is detected as infeasible") {
        const Cochain omega = h.element(0);
        const Eigen::VectorXd r = weighted_orthogonality_residual(omega, 3.0, h);
        CHECK(r.lpNorm<Eigen::Infinity>() > 1e-6);
    }

    SECTION("empty basis gives an empty residual") {
        const auto sphere = build_icosphere(1);
        const auto none = harmonic_basis(sphere, 1);
        CHECK(none.dimension() == 0);
        const auto alpha = random_cochain(sphere, 1, rng);
        CHECK(weighted_orthogonality_residual(alpha, 2.5, none).size() == 0);
    }

    SECTION("p = 2 reduces to plain mass inner products") {
        const auto alpha = random_cochain(torus, 1, rng);
        const Eigen::VectorXd r = weighted_orthogonality_residual(alpha, 2.0, h);
        for (int i = 0; i < h.dimension(); ++i)
            CHECK(r[i] == Approx(inner2(alpha, h.element(i))).margin(1e-12));
    }
}

TEST_CASE("projection onto the constraint slice", "[hodge]") {
    const auto torus = build_flat_torus(6);
    const auto h = harmonic_basis(torus, 1);
    std::mt19937_64 rng(37);

    SECTION("p = 2 is exact linear projection") {
        const auto alpha = random_cochain(torus, 1, rng);
        const auto projected = project_to_constraint(alpha, 2.0, h);
        for (int i = 0; i < h.dimension(); ++i)
            CHECK(inner2(projected, h.element(i)) == Approx(0.0).margin(1e-12));
    }

    SECTION("feasible input is returned unchanged") {
        auto alpha = random_cochain(torus, 1, rng);
        alpha = project_to_constraint(alpha, 3.0, h);
        const auto again = project_to_constraint(alpha, 3.0, h);
        CHECK((again.values - alpha.values).lpNorm<Eigen::Infinity>() == 0.0);
    }

    SECTION("p = 3 residual driven below 1e-10") {
        for (int trial = 0; trial < 5; ++trial) {
            const auto alpha = random_cochain(torus, 1, rng);
            const auto projected = project_to_constraint(alpha, 3.0, h);
            const Eigen::VectorXd r = weighted_orthogonality_residual(projected, 3.0, h);
            CHECK(r.lpNorm<Eigen::Infinity>() < 1e-10);
            // the correction is purely harmonic: energy is untouched
            CHECK(p_energy(projected, 3.0) ==
                  Approx(p_energy(alpha, 3.0)).epsilon(1e-12));
        }
    }
}
