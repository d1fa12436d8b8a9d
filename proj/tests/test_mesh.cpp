#include <catch2/catch.hpp>

#include <phodge/mesh.hpp>

#include <cstdio>
#include <fstream>

using namespace phodge;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/phodge_test_") + name;
}

SimplicialMesh single_equilateral_triangle() {
    detail::SurfaceInput input;
    input.vertices.resize(3, 3);
    input.vertices.row(0) << 0, 0, 0;
    input.vertices.row(1) << 1, 0, 0;
    input.vertices.row(2) << 0.5, std::sqrt(3.0) / 2.0, 0;
    input.faces = {{0, 1, 2}};
    input.require_closed = false;
    return build_surface(std::move(input));
}

}  // namespace

TEST_CASE("icosphere counts and topology", "[mesh]") {
    for (int level = 0; level <= 2; ++level) {
        const auto mesh = build_icosphere(level);
        const long scale = 1L << (2 * level);  // 4^level
        CHECK(mesh.count(0) == 10 * scale + 2);
        CHECK(mesh.count(1) == 30 * scale);
        CHECK(mesh.count(2) == 20 * scale);
        CHECK(mesh.euler_characteristic() == 2);
        CHECK(mesh.well_centered);

        // dual cells partition the surface
        CHECK(mesh.dual_volume[0].sum() ==
              Approx(mesh.total_volume()).epsilon(1e-10));
    }
    CHECK_THROWS_AS(build_icosphere(8), std::invalid_argument);
}

TEST_CASE("flat torus counts, area and edge ratios", "[mesh]") {
    const auto mesh = build_flat_torus(3);
    CHECK(mesh.count(0) == 9);
    CHECK(mesh.count(1) == 27);
    CHECK(mesh.count(2) == 18);
    CHECK(mesh.euler_characteristic() == 0);
    CHECK(mesh.well_centered);

    // unit fundamental domain
    const auto m16 = build_flat_torus(16);
    CHECK(m16.total_volume() == Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(m16.dual_volume[0].sum() == Approx(m16.total_volume()).epsilon(1e-10));

    // every dual/primal edge ratio equals 1/sqrt(3) by lattice congruence
    const auto m8 = build_flat_torus(8);
    const auto [lo, hi] = m8.dual_primal_edge_ratio_range();
    CHECK(lo == Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(hi == Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));

    CHECK_THROWS_AS(build_flat_torus(2), std::invalid_argument);
}

TEST_CASE("boundary operators form a chain complex", "[mesh]") {
    for (const auto& mesh : {build_icosphere(1), build_flat_torus(4)}) {
        const auto& d1 = boundary_matrix(mesh, 1);
        const auto& d2 = boundary_matrix(mesh, 2);

        Eigen::SparseMatrix<int> b1 = d1.cast<int>(), b2 = d2.cast<int>();
        Eigen::SparseMatrix<int> zero = b1 * b2;
        zero.prune([](int, int, int v) { return v != 0; });
        CHECK(zero.nonZeros() == 0);

        // each edge has one head and one tail
        Eigen::VectorXd edge_sums = Eigen::VectorXd::Ones(mesh.count(0)).transpose() * d1;
        CHECK(edge_sums.lpNorm<Eigen::Infinity>() == 0.0);
    }
    CHECK_THROWS_AS(boundary_matrix(build_flat_torus(3), 3), std::invalid_argument);
}

TEST_CASE("single triangle boundary and volumes", "[mesh]") {
    const auto mesh = single_equilateral_triangle();
    const auto& d2 = boundary_matrix(mesh, 2);
    CHECK(d2.nonZeros() == 3);
    for (int i = 0; i < d2.outerSize(); ++i)
        for (Eigen::SparseMatrix<double>::InnerIterator it(d2, i); it; ++it)
            CHECK(std::abs(it.value()) == 1.0);

    CHECK(mesh.primal_volume[2][0] == Approx(std::sqrt(3.0) / 4.0).epsilon(1e-14));
    // circumcenter of an equilateral triangle is its centroid
    const Eigen::Vector3d center = detail::circumcenter(mesh.cell_corners[0]);
    const Eigen::Vector3d centroid =
        (mesh.cell_corners[0].col(0) + mesh.cell_corners[0].col(1) + mesh.cell_corners[0].col(2)) / 3.0;
    CHECK((center - centroid).norm() < 1e-14);
}

TEST_CASE("degenerate simplices are rejected", "[mesh]") {
    detail::SurfaceInput input;
    input.vertices.resize(3, 3);
    input.vertices.row(0) << 0, 0, 0;
    input.vertices.row(1) << 1, 0, 0;
    input.vertices.row(2) << 2, 0, 0;  // collinear
    input.faces = {{0, 1, 2}};
    input.require_closed = false;
    CHECK_THROWS_AS(build_surface(std::move(input)), std::runtime_error);
}

TEST_CASE("OFF round trip and validation", "[mesh]") {
    SECTION("tetrahedron loads") {
        const auto path = temp_path("tetra.off");
        {
            std::ofstream out(path);
            out << "OFF\n4 4 6\n"
                   "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
                   "3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
        }
        const auto mesh = load_off(path);
        CHECK(mesh.count(0) == 4);
        CHECK(mesh.count(1) == 6);
        CHECK(mesh.count(2) == 4);
        CHECK(mesh.euler_characteristic() == 2);
        std::remove(path.c_str());
    }

    SECTION("boundary edge rejected as non-closed") {
        const auto path = temp_path("open.off");
        {
            std::ofstream out(path);
            out << "OFF\n4 2 5\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n3 0 1 2\n3 1 3 2\n";
        }
        CHECK_THROWS_WITH(load_off(path), Catch::Contains("non-closed"));
        std::remove(path.c_str());
    }

    SECTION("icosphere export/reload reproduces incidence and fingerprint") {
        const auto mesh = build_icosphere(1);
        const auto path = temp_path("ico1.off");
        save_off(mesh, path);
        const auto back = load_off(path);
        CHECK(back.count(0) == mesh.count(0));
        CHECK((boundary_matrix(back, 2) - boundary_matrix(mesh, 2)).norm() == 0.0);
        CHECK((boundary_matrix(back, 1) - boundary_matrix(mesh, 1)).norm() == 0.0);
        CHECK(back.fingerprint() == mesh.fingerprint());
        std::remove(path.c_str());
    }

    SECTION("parse failures") {
        const auto path = temp_path("bad.off");
        {
            std::ofstream out(path);
            out << "PLY\n";
        }
        CHECK_THROWS_AS(load_off(path), std::runtime_error);
        std::remove(path.c_str());
        CHECK_THROWS_AS(load_off(temp_path("missing_file.off")), std::runtime_error);
    }
}

TEST_CASE("uniform scaling rescales volumes", "[mesh]") {
    const auto mesh = build_icosphere(1);
    const auto big = scaled(mesh, 2.0);
    CHECK(big.primal_volume[1][0] == Approx(2.0 * mesh.primal_volume[1][0]).epsilon(1e-14));
    CHECK(big.total_volume() == Approx(4.0 * mesh.total_volume()).epsilon(1e-14));
    CHECK(big.dual_volume[0].sum() == Approx(4.0 * mesh.dual_volume[0].sum()).epsilon(1e-12));
    CHECK(big.fingerprint() != mesh.fingerprint());
}
