#pragma once

// Discrete exterior calculus on a SimplicialMesh: coboundary, diagonal
// Hodge star, codifferential, discrete L^p norms, the p-Dirichlet energy
// with its exact gradient, and the weak p-Hodge Laplacian.
//
// The discrete L^p integrand uses per-simplex densities a_s = alpha_s/|s|
// against the measure m_s = |s|·|s*|; at p = 2 this reduces exactly to the
// diagonal-Hodge inner product sum (|s*|/|s|)·alpha_s^2.

#include <phodge/mesh.hpp>

#include <Eigen/Sparse>

#include <cmath>
#include <stdexcept>

namespace phodge {

struct Cochain {
    const SimplicialMesh* mesh = nullptr;
    int degree = 0;
    Eigen::VectorXd values;

    Cochain() = default;
    Cochain(const SimplicialMesh& m, int k)
        : mesh(&m), degree(k), values(Eigen::VectorXd::Zero(m.count(k))) {
        check();
    }
    Cochain(const SimplicialMesh& m, int k, Eigen::VectorXd v)
        : mesh(&m), degree(k), values(std::move(v)) {
        check();
        if (values.size() != m.count(k))
            throw std::invalid_argument("Cochain: value count does not match simplex count");
    }

    void check() const {
        if (degree < 0 || degree > mesh->dim)
            throw std::invalid_argument("Cochain: degree out of range");
    }

    Cochain& operator+=(const Cochain& o) {
        values += o.values;
        return *this;
    }
    Cochain& operator-=(const Cochain& o) {
        values -= o.values;
        return *this;
    }
    Cochain& operator*=(double s) {
        values *= s;
        return *this;
    }
    friend Cochain operator+(Cochain a, const Cochain& b) { return a += b; }
    friend Cochain operator-(Cochain a, const Cochain& b) { return a -= b; }
    friend Cochain operator*(Cochain a, double s) { return a *= s; }
    friend Cochain operator*(double s, Cochain a) { return a *= s; }
};

namespace detail {

inline void require_positive_stars(const SimplicialMesh& mesh) {
    if (!mesh.well_centered)
        throw std::runtime_error(
            "mesh has non-positive Hodge star weights (not well-centered)");
}

inline void require_p(double p) {
    if (!(p >= 2.0)) throw std::invalid_argument("p must be >= 2");
}

// |x|^e elementwise with the convention 0^0 = 1 (so p = 2 gives weight 1).
inline Eigen::VectorXd abs_power(const Eigen::VectorXd& x, double e) {
    if (e == 0.0) return Eigen::VectorXd::Ones(x.size());
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out[i] = x[i] == 0.0 ? 0.0 : std::pow(std::abs(x[i]), e);
    return out;
}

// |x|^(p-2)·x, continuous for p >= 2 with the convention 0 at x = 0.
inline Eigen::VectorXd power_weight(const Eigen::VectorXd& x, double p) {
    if (p == 2.0) return x;
    return abs_power(x, p - 2.0).cwiseProduct(x);
}

}  // namespace detail

// Diagonal Hodge star |s*|/|s| on k-simplices; doubles as the mass matrix
// diagonal of the ⟨·,·⟩₂ pairing.
inline Eigen::VectorXd hodge_star(const SimplicialMesh& mesh, int k) {
    if (k < 0 || k > mesh.dim) throw std::invalid_argument("hodge_star: degree out of range");
    return mesh.dual_volume[k].cwiseQuotient(mesh.primal_volume[k]);
}

inline Eigen::VectorXd mass_diagonal(const SimplicialMesh& mesh, int k) {
    return hodge_star(mesh, k);
}

// Per-simplex density alpha_s/|s|.
inline Eigen::VectorXd density(const Cochain& alpha) {
    return alpha.values.cwiseQuotient(alpha.mesh->primal_volume[alpha.degree]);
}

// Per-simplex measure |s|·|s*|.
inline Eigen::VectorXd measure(const SimplicialMesh& mesh, int k) {
    return mesh.primal_volume[k].cwiseProduct(mesh.dual_volume[k]);
}

// ⟨alpha, beta⟩₂ in the diagonal-Hodge geometry.
inline double inner2(const Cochain& alpha, const Cochain& beta) {
    if (alpha.mesh != beta.mesh || alpha.degree != beta.degree)
        throw std::invalid_argument("inner2: mismatched cochains");
    return alpha.values.dot(hodge_star(*alpha.mesh, alpha.degree).cwiseProduct(beta.values));
}

inline Cochain d(const Cochain& alpha) {
    const auto& mesh = *alpha.mesh;
    if (alpha.degree >= mesh.dim)
        throw std::invalid_argument("d: top-degree cochain has no coboundary");
    return Cochain(mesh, alpha.degree + 1,
                   boundary_matrix(mesh, alpha.degree + 1).transpose() * alpha.values);
}

// L²-adjoint of d: star_{k-1}^{-1} · dᵀ · star_k on a degree-k cochain.
inline Cochain codifferential(const Cochain& beta) {
    const auto& mesh = *beta.mesh;
    if (beta.degree < 1)
        throw std::invalid_argument("codifferential: degree-0 cochain has no codifferential");
    detail::require_positive_stars(mesh);
    const Eigen::VectorXd weighted = hodge_star(mesh, beta.degree).cwiseProduct(beta.values);
    Eigen::VectorXd out = boundary_matrix(mesh, beta.degree) * weighted;
    out = out.cwiseQuotient(hodge_star(mesh, beta.degree - 1));
    return Cochain(mesh, beta.degree - 1, std::move(out));
}

inline double lp_norm(const Cochain& alpha, double p) {
    detail::require_p(p);
    detail::require_positive_stars(*alpha.mesh);
    const Eigen::VectorXd a = density(alpha);
    const Eigen::VectorXd m = measure(*alpha.mesh, alpha.degree);
    // extended-precision accumulation keeps line searches on this quantity
    // from being limited by summation order noise
    long double sum = 0.0L;
    for (Eigen::Index i = 0; i < a.size(); ++i) sum += m[i] * std::pow(std::abs(a[i]), p);
    return std::pow(static_cast<double>(sum), 1.0 / p);
}

// Discrete L^p-Dirichlet energy ‖d alpha‖_p^p + ‖d* alpha‖_p^p, with the
// absent term dropped at the extreme degrees.
inline double p_energy(const Cochain& alpha, double p) {
    detail::require_p(p);
    double energy = 0.0;
    if (alpha.degree < alpha.mesh->dim) energy += std::pow(lp_norm(d(alpha), p), p);
    if (alpha.degree >= 1) energy += std::pow(lp_norm(codifferential(alpha), p), p);
    return energy;
}

// Exact gradient of p_energy with respect to the cochain values.
inline Cochain p_energy_gradient(const Cochain& alpha, double p) {
    detail::require_p(p);
    const auto& mesh = *alpha.mesh;
    detail::require_positive_stars(mesh);
    const int k = alpha.degree;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(alpha.values.size());
    if (k < mesh.dim) {
        const Cochain da = d(alpha);
        const Eigen::VectorXd w =
            mesh.dual_volume[k + 1].cwiseProduct(detail::power_weight(density(da), p));
        grad += boundary_matrix(mesh, k + 1) * w;
    }
    if (k >= 1) {
        const Cochain ca = codifferential(alpha);
        const Eigen::VectorXd w =
            mesh.primal_volume[k - 1].cwiseProduct(detail::power_weight(density(ca), p));
        grad += hodge_star(mesh, k).cwiseProduct(boundary_matrix(mesh, k).transpose() * w);
    }
    return Cochain(mesh, k, p * grad);
}

// Weak-form action of the p-Hodge Laplacian,
//   d*(‖d alpha‖^{p-2} d alpha) + d(‖d* alpha‖^{p-2} d* alpha),
// with the pointwise weights evaluated on densities.  Reduces to the Hodge
// Laplacian matrix action at p = 2 and equals p_energy_gradient up to the
// factor p·star_k.
inline Cochain apply_p_laplacian(const Cochain& alpha, double p) {
    detail::require_p(p);
    const auto& mesh = *alpha.mesh;
    const int k = alpha.degree;
    Cochain out(mesh, k);
    if (k < mesh.dim) {
        Cochain da = d(alpha);
        da.values = da.values.cwiseProduct(detail::abs_power(density(da), p - 2.0));
        out += codifferential(da);
    }
    if (k >= 1) {
        Cochain ca = codifferential(alpha);
        ca.values = ca.values.cwiseProduct(detail::abs_power(density(ca), p - 2.0));
        out += d(ca);
    }
    return out;
}

// Stiffness matrix of the quadratic form
//   Σ_t ⋆_{k+1} w_up,t (d h)_t^2 + Σ_r (w_down,r / ⋆_{k-1,r}) (dᵀ ⋆_k h)_r^2,
// i.e. the p = 2 Hodge Laplacian with optional pointwise reweighting of the
// two energy terms (empty weights mean ones).  Symmetric positive
// semidefinite; pairs with the diagonal mass mass_diagonal(mesh, k).
inline Eigen::SparseMatrix<double> weighted_laplacian2_matrix(
    const SimplicialMesh& mesh, int k, const Eigen::VectorXd& weight_up = {},
    const Eigen::VectorXd& weight_down = {}) {
    if (k < 0 || k > mesh.dim)
        throw std::invalid_argument("laplacian2_matrix: degree out of range");
    detail::require_positive_stars(mesh);
    const Eigen::Index n = mesh.count(k);
    Eigen::SparseMatrix<double> L(n, n);
    if (k < mesh.dim) {
        // dᵀ ⋆_{k+1} d  assembled as  ∂_{k+1} diag(⋆_{k+1} w) ∂_{k+1}ᵀ
        const auto& b = boundary_matrix(mesh, k + 1);
        Eigen::VectorXd diag = hodge_star(mesh, k + 1);
        if (weight_up.size()) diag = diag.cwiseProduct(weight_up);
        Eigen::SparseMatrix<double> weighted = b * diag.asDiagonal();
        L += weighted * Eigen::SparseMatrix<double>(b.transpose());
    }
    if (k >= 1) {
        // ⋆_k d diag(w/⋆_{k-1}) dᵀ ⋆_k  with d on (k-1)-cochains being ∂_kᵀ
        Eigen::SparseMatrix<double> bt = boundary_matrix(mesh, k).transpose();
        Eigen::SparseMatrix<double> left = hodge_star(mesh, k).asDiagonal() * bt;
        Eigen::VectorXd diag = hodge_star(mesh, k - 1).cwiseInverse();
        if (weight_down.size()) diag = diag.cwiseProduct(weight_down);
        Eigen::SparseMatrix<double> mid = left * diag.asDiagonal();
        L += mid * Eigen::SparseMatrix<double>(left.transpose());
    }
    L.makeCompressed();
    return L;
}

// Unweighted case: the p = 2 Hodge Laplacian stiffness.  Kernel dimension
// equals the Betti number b_k.
inline Eigen::SparseMatrix<double> laplacian2_matrix(const SimplicialMesh& mesh, int k) {
    return weighted_laplacian2_matrix(mesh, k);
}

}  // namespace phodge
