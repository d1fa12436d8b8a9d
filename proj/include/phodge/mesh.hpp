#pragma once

// Embedded oriented simplicial surfaces with primal volumes and
// circumcentric dual volumes, plus builders for the shipped geometries
// (icosphere, equilateral flat torus) and OFF file I/O.
//
// Combinatorial conventions: k-simplices are stored as sorted vertex tuples
// in lexicographic order; an orientation sign relates the stored tuple to
// the geometric orientation.  Edges are oriented low->high (sign +1), top
// cells by consistent propagation from the first face.

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phodge {

struct SimplicialMesh {
    int dim = 2;  // intrinsic dimension; the metric kernel ships dim == 2
    Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;

    // simplices[k]: count(k) x (k+1) sorted vertex tuples, lexicographic order.
    std::vector<Eigen::MatrixXi> simplices;
    std::vector<Eigen::VectorXi> orientation;

    // boundary[k] maps k-chains to (k-1)-chains, entries in {-1,0,+1}; index 0 unused.
    std::vector<Eigen::SparseMatrix<double>> boundary;

    std::vector<Eigen::VectorXd> primal_volume;
    std::vector<Eigen::VectorXd> dual_volume;

    // Per top cell, columns hold the corner coordinates in sorted-tuple order.
    // These may differ from `vertices` rows on quotient geometries (flat torus),
    // where each cell carries its own unwrapped chart.
    std::vector<Eigen::Matrix3d> cell_corners;

    bool well_centered = false;
    std::optional<int> declared_euler;

    Eigen::Index count(int k) const {
        if (k < 0 || k > dim) return 0;
        return simplices[k].rows();
    }

    int euler_characteristic() const {
        int chi = 0;
        for (int k = 0; k <= dim; ++k) chi += (k % 2 == 0 ? 1 : -1) * static_cast<int>(count(k));
        return chi;
    }

    double total_volume() const { return primal_volume[dim].sum(); }

    std::pair<double, double> dual_primal_edge_ratio_range() const {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index e = 0; e < count(1); ++e) {
            const double r = dual_volume[1][e] / primal_volume[1][e];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        return {lo, hi};
    }

    std::string fingerprint() const;
};

inline const Eigen::SparseMatrix<double>& boundary_matrix(const SimplicialMesh& mesh, int k) {
    if (k < 1 || k > mesh.dim)
        throw std::invalid_argument("boundary_matrix: degree must be in [1, dim]");
    return mesh.boundary[k];
}

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

// Circumcenter of the triangle with columns p0,p1,p2, computed in the
// triangle's own plane via the 2x2 Gram system.
inline Eigen::Vector3d circumcenter(const Eigen::Matrix3d& corners) {
    const Eigen::Vector3d a = corners.col(1) - corners.col(0);
    const Eigen::Vector3d b = corners.col(2) - corners.col(0);
    Eigen::Matrix2d gram;
    gram << a.dot(a), a.dot(b), a.dot(b), b.dot(b);
    Eigen::Vector2d rhs(0.5 * a.dot(a), 0.5 * b.dot(b));
    const Eigen::Vector2d alpha = gram.inverse() * rhs;
    return corners.col(0) + alpha[0] * a + alpha[1] * b;
}

struct SurfaceInput {
    Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
    std::vector<std::array<int, 3>> faces;                 // winding as given
    std::vector<Eigen::Matrix3d> face_corners;             // optional, winding order
    bool require_closed = true;
    std::optional<int> declared_euler;
};

// Flip windings so adjacent faces induce opposite directions on shared
// edges, seeded from face 0.  Throws on non-manifold or non-orientable
// input, and on boundary edges when a closed surface is required.
inline void orient_faces(std::vector<std::array<int, 3>>& faces,
                         std::vector<Eigen::Matrix3d>* corners, bool require_closed) {
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
        const auto& t = faces[f];
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw std::runtime_error("mesh: degenerate face (repeated vertex)");
        for (int e = 0; e < 3; ++e) {
            const int u = t[e], v = t[(e + 1) % 3];
            edge_faces[{std::min(u, v), std::max(u, v)}].push_back(f);
        }
    }
    for (const auto& [edge, incident] : edge_faces) {
        if (incident.size() > 2)
            throw std::runtime_error("mesh: non-manifold edge (" + std::to_string(edge.first) +
                                     "," + std::to_string(edge.second) + ")");
        if (incident.size() < 2 && require_closed)
            throw std::runtime_error("mesh: non-closed surface, boundary edge (" +
                                     std::to_string(edge.first) + "," +
                                     std::to_string(edge.second) + ")");
    }

    const auto traverses = [&](int f, int u, int v) {
        const auto& t = faces[f];
        for (int e = 0; e < 3; ++e)
            if (t[e] == u && t[(e + 1) % 3] == v) return true;
        return false;
    };
    const auto flip = [&](int f) {
        std::swap(faces[f][1], faces[f][2]);
        if (corners) (*corners)[f].col(1).swap((*corners)[f].col(2));
    };

    std::vector<char> visited(faces.size(), 0);
    for (int seed = 0; seed < static_cast<int>(faces.size()); ++seed) {
        if (visited[seed]) continue;
        visited[seed] = 1;
        std::queue<int> frontier;
        frontier.push(seed);
        while (!frontier.empty()) {
            const int f = frontier.front();
            frontier.pop();
            const auto t = faces[f];
            for (int e = 0; e < 3; ++e) {
                const int u = t[e], v = t[(e + 1) % 3];
                for (int g : edge_faces[{std::min(u, v), std::max(u, v)}]) {
                    if (g == f) continue;
                    const bool same_direction = traverses(g, u, v);
                    if (!visited[g]) {
                        if (same_direction) flip(g);
                        visited[g] = 1;
                        frontier.push(g);
                    } else if (same_direction) {
                        throw std::runtime_error("mesh: non-orientable surface");
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Populate primal and dual volumes from the per-cell corner charts.
// Dual quantities use the circumcentric construction; non-well-centered
// meshes get signed dual entries and a cleared well_centered flag.
inline void compute_volumes(SimplicialMesh& mesh) {
    if (mesh.dim != 2)
        throw std::invalid_argument("compute_volumes: only 2-dimensional meshes are supported");
    const Eigen::Index nv = mesh.count(0), ne = mesh.count(1), nf = mesh.count(2);

    std::map<std::pair<int, int>, int> edge_index;
    for (Eigen::Index e = 0; e < ne; ++e)
        edge_index[{mesh.simplices[1](e, 0), mesh.simplices[1](e, 1)}] = static_cast<int>(e);

    mesh.primal_volume.assign(3, Eigen::VectorXd());
    mesh.dual_volume.assign(3, Eigen::VectorXd());
    mesh.primal_volume[0] = Eigen::VectorXd::Ones(nv);
    mesh.primal_volume[1] = Eigen::VectorXd::Zero(ne);
    mesh.primal_volume[2] = Eigen::VectorXd::Zero(nf);
    mesh.dual_volume[0] = Eigen::VectorXd::Zero(nv);
    mesh.dual_volume[1] = Eigen::VectorXd::Zero(ne);
    mesh.dual_volume[2] = Eigen::VectorXd::Ones(nf);

    for (Eigen::Index f = 0; f < nf; ++f) {
        const Eigen::Matrix3d& corners = mesh.cell_corners[f];
        const Eigen::Vector3d a = corners.col(1) - corners.col(0);
        const Eigen::Vector3d b = corners.col(2) - corners.col(0);
        const double area = 0.5 * a.cross(b).norm();
        const double longest =
            std::max({a.norm(), b.norm(), (corners.col(2) - corners.col(1)).norm()});
        if (!(area > 1e-14 * longest * longest))
            throw std::runtime_error("compute_volumes: degenerate simplex " + std::to_string(f));
        mesh.primal_volume[2][f] = area;

        const Eigen::Vector3d center = detail::circumcenter(corners);
        for (int local = 0; local < 3; ++local) {
            const int i = (local + 1) % 3, j = (local + 2) % 3;  // edge opposite `local`
            const int vi = mesh.simplices[2](f, std::min(i, j));
            const int vj = mesh.simplices[2](f, std::max(i, j));
            const int e = edge_index.at({vi, vj});

            const Eigen::Vector3d pi = corners.col(i), pj = corners.col(j);
            const Eigen::Vector3d q = corners.col(local);
            const double length = (pj - pi).norm();
            if (mesh.primal_volume[1][e] == 0.0) mesh.primal_volume[1][e] = length;

            const Eigen::Vector3d mid = 0.5 * (pi + pj);
            const Eigen::Vector3d tangent = (pj - pi) / length;
            Eigen::Vector3d toward = (q - mid) - (q - mid).dot(tangent) * tangent;
            toward.normalize();
            const double piece = (center - mid).dot(toward);

            mesh.dual_volume[1][e] += piece;
            mesh.dual_volume[0][mesh.simplices[2](f, i)] += 0.25 * length * piece;
            mesh.dual_volume[0][mesh.simplices[2](f, j)] += 0.25 * length * piece;
        }
    }

    mesh.well_centered = (ne == 0 || mesh.dual_volume[1].minCoeff() > 0.0) &&
                         (nv == 0 || mesh.dual_volume[0].minCoeff() > 0.0);
}

// Assemble a surface mesh from vertex coordinates and triangle windings.
// `input.face_corners`, when provided, carries per-face coordinate charts
// (used by quotient geometries); otherwise charts are taken from `vertices`.
inline SimplicialMesh build_surface(detail::SurfaceInput input) {
    if (input.faces.empty()) throw std::invalid_argument("build_surface: no faces");
    const int nv = static_cast<int>(input.vertices.rows());
    for (const auto& t : input.faces)
        for (int v : t)
            if (v < 0 || v >= nv) throw std::runtime_error("build_surface: vertex id out of range");

    if (input.face_corners.empty()) {
        input.face_corners.resize(input.faces.size());
        for (std::size_t f = 0; f < input.faces.size(); ++f)
            for (int c = 0; c < 3; ++c)
                input.face_corners[f].col(c) = input.vertices.row(input.faces[f][c]).transpose();
    }

    detail::orient_faces(input.faces, &input.face_corners, input.require_closed);

    SimplicialMesh mesh;
    mesh.dim = 2;
    mesh.vertices = std::move(input.vertices);
    mesh.simplices.assign(3, Eigen::MatrixXi());
    mesh.orientation.assign(3, Eigen::VectorXi());
    mesh.boundary.assign(3, Eigen::SparseMatrix<double>());

    mesh.simplices[0].resize(nv, 1);
    for (int v = 0; v < nv; ++v) mesh.simplices[0](v, 0) = v;
    mesh.orientation[0] = Eigen::VectorXi::Ones(nv);

    // Canonicalize faces: sorted tuple + parity sign, corners permuted to match.
    const int nf = static_cast<int>(input.faces.size());
    mesh.simplices[2].resize(nf, 3);
    mesh.orientation[2].resize(nf);
    mesh.cell_corners.resize(nf);
    std::vector<int> face_order(nf);
    for (int f = 0; f < nf; ++f) {
        std::array<int, 3> t = input.faces[f];
        Eigen::Matrix3d corners = input.face_corners[f];
        int sign = 1;
        for (int pass = 0; pass < 2; ++pass)  // bubble sort of 3 elements
            for (int i = 0; i + 1 < 3 - pass; ++i)
                if (t[i] > t[i + 1]) {
                    std::swap(t[i], t[i + 1]);
                    corners.col(i).swap(corners.col(i + 1));
                    sign = -sign;
                }
        mesh.simplices[2].row(f) << t[0], t[1], t[2];
        mesh.orientation[2][f] = sign;
        mesh.cell_corners[f] = corners;
        face_order[f] = f;
    }
    // Lexicographic order on the sorted tuples keeps builds deterministic.
    std::sort(face_order.begin(), face_order.end(), [&](int a, int b) {
        for (int c = 0; c < 3; ++c) {
            if (mesh.simplices[2](a, c) != mesh.simplices[2](b, c))
                return mesh.simplices[2](a, c) < mesh.simplices[2](b, c);
        }
        return false;
    });
    {
        Eigen::MatrixXi st(nf, 3);
        Eigen::VectorXi so(nf);
        std::vector<Eigen::Matrix3d> sc(nf);
        for (int f = 0; f < nf; ++f) {
            st.row(f) = mesh.simplices[2].row(face_order[f]);
            so[f] = mesh.orientation[2][face_order[f]];
            sc[f] = mesh.cell_corners[face_order[f]];
        }
        mesh.simplices[2] = std::move(st);
        mesh.orientation[2] = std::move(so);
        mesh.cell_corners = std::move(sc);
    }

    std::map<std::pair<int, int>, int> edge_index;
    for (int f = 0; f < nf; ++f)
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                edge_index.emplace(std::pair<int, int>{mesh.simplices[2](f, i), mesh.simplices[2](f, j)}, 0);
    const int ne = static_cast<int>(edge_index.size());
    mesh.simplices[1].resize(ne, 2);
    mesh.orientation[1] = Eigen::VectorXi::Ones(ne);
    {
        int e = 0;
        for (auto& [pair, idx] : edge_index) {
            idx = e;
            mesh.simplices[1].row(e) << pair.first, pair.second;
            ++e;
        }
    }

    // boundary of an edge (a<b) is b - a
    {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(2 * ne);
        for (int e = 0; e < ne; ++e) {
            trips.emplace_back(mesh.simplices[1](e, 0), e, -1.0);
            trips.emplace_back(mesh.simplices[1](e, 1), e, 1.0);
        }
        mesh.boundary[1].resize(nv, ne);
        mesh.boundary[1].setFromTriplets(trips.begin(), trips.end());
    }
    // boundary of a sorted triple (v0,v1,v2) is (v1,v2) - (v0,v2) + (v0,v1)
    {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(3 * nf);
        for (int f = 0; f < nf; ++f) {
            const int v0 = mesh.simplices[2](f, 0), v1 = mesh.simplices[2](f, 1),
                      v2 = mesh.simplices[2](f, 2);
            const double s = mesh.orientation[2][f];
            trips.emplace_back(edge_index.at({v1, v2}), f, s);
            trips.emplace_back(edge_index.at({v0, v2}), f, -s);
            trips.emplace_back(edge_index.at({v0, v1}), f, s);
        }
        mesh.boundary[2].resize(ne, nf);
        mesh.boundary[2].setFromTriplets(trips.begin(), trips.end());
    }

    compute_volumes(mesh);

    mesh.declared_euler = input.declared_euler;
    if (mesh.declared_euler && mesh.euler_characteristic() != *mesh.declared_euler)
        throw std::runtime_error("build_surface: Euler characteristic mismatch, got " +
                                 std::to_string(mesh.euler_characteristic()) + " expected " +
                                 std::to_string(*mesh.declared_euler));
    return mesh;
}

// Icosahedron subdivided `level` times with vertices on the unit sphere.
// Counts: V = 10*4^level + 2, E = 30*4^level, F = 20*4^level.
inline SimplicialMesh build_icosphere(int level) {
    if (level < 0 || level > 7)
        throw std::invalid_argument("build_icosphere: level must be in [0, 7]");

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},  {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},  {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},  {9, 8, 1}};

    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back((0.5 * (verts[a] + verts[b])).normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(4 * faces.size());
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    detail::SurfaceInput input;
    input.vertices.resize(verts.size(), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) input.vertices.row(i) = verts[i].transpose();
    input.faces = std::move(faces);
    input.declared_euler = 2;
    return build_surface(std::move(input));
}

// Equilateral-triangle lattice torus over the unit rhombic fundamental
// domain spanned by (1,0) and (1/2, sqrt(3)/2), subdivided N x N.
// Counts: V = N^2, E = 3N^2, F = 2N^2; all triangles congruent equilateral
// with side 1/N, hence strictly well-centered.
inline SimplicialMesh build_flat_torus(int n) {
    if (n < 3) throw std::invalid_argument("build_flat_torus: N must be >= 3");

    const Eigen::Vector3d step_a(1.0 / n, 0.0, 0.0);
    const Eigen::Vector3d step_b(0.5 / n, std::sqrt(3.0) / 2.0 / n, 0.0);
    const auto id = [n](int i, int j) { return (i % n) + n * (j % n); };
    const auto point = [&](int i, int j) -> Eigen::Vector3d { return i * step_a + j * step_b; };

    detail::SurfaceInput input;
    input.vertices.resize(n * n, 3);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) input.vertices.row(id(i, j)) = point(i, j).transpose();

    input.faces.reserve(2 * n * n);
    input.face_corners.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            input.faces.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
            Eigen::Matrix3d up;
            up.col(0) = point(i, j);
            up.col(1) = point(i + 1, j);
            up.col(2) = point(i, j + 1);
            input.face_corners.push_back(up);

            input.faces.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            Eigen::Matrix3d down;
            down.col(0) = point(i + 1, j);
            down.col(1) = point(i + 1, j + 1);
            down.col(2) = point(i, j + 1);
            input.face_corners.push_back(down);
        }
    }
    input.declared_euler = 0;
    return build_surface(std::move(input));
}

// Uniform rescaling of all coordinates (charts included); volumes recomputed.
inline SimplicialMesh scaled(const SimplicialMesh& mesh, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("scaled: factor must be positive");
    SimplicialMesh out = mesh;
    out.vertices *= s;
    for (auto& corners : out.cell_corners) corners *= s;
    compute_volumes(out);
    return out;
}

inline SimplicialMesh load_off(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_off: cannot open " + path);

    const auto next_token_line = [&in]() -> std::string {
        std::string line;
        while (std::getline(in, line)) {
            const auto pos = line.find('#');
            if (pos != std::string::npos) line.erase(pos);
            if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
        }
        return {};
    };

    std::string header = next_token_line();
    if (header.find("OFF") == std::string::npos)
        throw std::runtime_error("load_off: missing OFF header in " + path);

    std::istringstream counts(next_token_line());
    long nv = 0, nf = 0, ne = 0;
    if (!(counts >> nv >> nf >> ne) || nv <= 0 || nf <= 0)
        throw std::runtime_error("load_off: malformed count line in " + path);

    detail::SurfaceInput input;
    input.vertices.resize(nv, 3);
    for (long v = 0; v < nv; ++v) {
        std::istringstream line(next_token_line());
        double x, y, z;
        if (!(line >> x >> y >> z))
            throw std::runtime_error("load_off: malformed vertex line in " + path);
        input.vertices.row(v) << x, y, z;
    }
    input.faces.reserve(nf);
    for (long f = 0; f < nf; ++f) {
        std::istringstream line(next_token_line());
        int arity, a, b, c;
        if (!(line >> arity >> a >> b >> c) || arity != 3)
            throw std::runtime_error("load_off: only triangle faces are supported (" + path + ")");
        input.faces.push_back({a, b, c});
    }
    return build_surface(std::move(input));
}

inline void save_off(const SimplicialMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_off: cannot open " + path);
    out << "OFF\n" << mesh.count(0) << " " << mesh.count(2) << " " << mesh.count(1) << "\n";
    char buf[96];
    for (Eigen::Index v = 0; v < mesh.count(0); ++v) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", mesh.vertices(v, 0),
                      mesh.vertices(v, 1), mesh.vertices(v, 2));
        out << buf;
    }
    for (Eigen::Index f = 0; f < mesh.count(2); ++f) {
        // recover a winding realizing the stored orientation
        int a = mesh.simplices[2](f, 0), b = mesh.simplices[2](f, 1), c = mesh.simplices[2](f, 2);
        if (mesh.orientation[2][f] < 0) std::swap(b, c);
        out << "3 " << a << " " << b << " " << c << "\n";
    }
    if (!out) throw std::runtime_error("save_off: write failed for " + path);
}

inline std::string SimplicialMesh::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const auto mix = [&h](const void* data, std::size_t len) { h = detail::fnv1a(h, data, len); };
    const std::int64_t d = dim;
    mix(&d, sizeof d);
    for (Eigen::Index v = 0; v < vertices.rows(); ++v)
        for (int c = 0; c < 3; ++c) {
            const double x = vertices(v, c);
            mix(&x, sizeof x);
        }
    for (int k = 1; k <= dim; ++k) {
        for (Eigen::Index s = 0; s < count(k); ++s) {
            for (int c = 0; c <= k; ++c) {
                const std::int64_t v = simplices[k](s, c);
                mix(&v, sizeof v);
            }
            const std::int64_t o = orientation[k][s];
            mix(&o, sizeof o);
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace phodge
