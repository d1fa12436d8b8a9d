#pragma once

// Harmonic space H^k and enforcement of the weighted-orthogonality
// constraint Σ m |a|^{p-2} a w = 0 against every harmonic direction.
// Corrections act only along H^k: harmonic shifts leave d and d* (hence the
// Dirichlet energy) untouched, so projection never changes the numerator of
// the Rayleigh quotient.

#include <phodge/dec.hpp>
#include <phodge/eigensolve.hpp>

#include <stdexcept>
#include <string>

namespace phodge {

struct HarmonicBasis {
    const SimplicialMesh* mesh = nullptr;
    int degree = 0;
    double tol_used = 0.0;
    Eigen::MatrixXd basis;  // count(degree) x b_k, ⟨·,·⟩₂-orthonormal columns

    int dimension() const { return static_cast<int>(basis.cols()); }

    Cochain element(int i) const {
        return Cochain(*mesh, degree, basis.col(i));
    }
};

// Kernel of the p=2 Hodge Laplacian, detected by eigenvalue threshold
// tol relative to the largest eigenvalue, with a spectral-gap check: the
// first eigenvalue above the kernel must exceed 10x the threshold.
inline HarmonicBasis harmonic_basis(const SimplicialMesh& mesh, int k, double tol = 1e-8) {
    if (!(tol > 0.0)) throw std::invalid_argument("harmonic_basis: tol must be positive");
    detail::require_positive_stars(mesh);
    const Eigen::SparseMatrix<double> L = laplacian2_matrix(mesh, k);
    const Eigen::VectorXd mass = mass_diagonal(mesh, k);
    const Eigen::Index n = L.rows();

    const double lambda_max = largest_eigenvalue_estimate(L, mass);
    const double threshold = tol * lambda_max;

    int nev = static_cast<int>(std::min<Eigen::Index>(6, n));
    EigenPairs pairs = smallest_eigenpairs(L, mass, nev);
    while (pairs.eigenvalues[nev - 1] < threshold && nev < n) {
        nev = static_cast<int>(std::min<Eigen::Index>(2 * nev, n));
        pairs = smallest_eigenpairs(L, mass, nev);
    }

    int kernel = 0;
    while (kernel < nev && pairs.eigenvalues[kernel] < threshold) ++kernel;
    if (kernel < n && pairs.eigenvalues[kernel] <= 10.0 * threshold)
        throw std::runtime_error(
            "harmonic_basis: ambiguous kernel, spectral gap below 10x threshold (lambda_" +
            std::to_string(kernel) + " = " + std::to_string(pairs.eigenvalues[kernel]) + ")");

    HarmonicBasis h;
    h.mesh = &mesh;
    h.degree = k;
    h.tol_used = tol;
    h.basis = pairs.eigenvectors.leftCols(kernel);

    // Re-orthonormalize in the mass inner product (modified Gram-Schmidt).
    for (int i = 0; i < kernel; ++i) {
        Eigen::VectorXd v = h.basis.col(i);
        for (int j = 0; j < i; ++j)
            v -= h.basis.col(j).dot(mass.cwiseProduct(v)) * h.basis.col(j);
        h.basis.col(i) = v / std::sqrt(v.dot(mass.cwiseProduct(v)));
    }
    return h;
}

// Per harmonic basis element w: Σ_s m_s |a_s|^{p-2} a_s w_s on densities.
// A zero vector certifies membership in the weighted-orthogonality slice.
inline Eigen::VectorXd weighted_orthogonality_residual(const Cochain& alpha, double p,
                                                       const HarmonicBasis& basis) {
    detail::require_p(p);
    const auto& mesh = *alpha.mesh;
    const Eigen::VectorXd a = density(alpha);
    const Eigen::VectorXd weighted =
        measure(mesh, alpha.degree).cwiseProduct(detail::power_weight(a, p));
    Eigen::VectorXd out(basis.dimension());
    for (int i = 0; i < basis.dimension(); ++i) {
        const Eigen::VectorXd w =
            basis.basis.col(i).cwiseQuotient(mesh.primal_volume[alpha.degree]);
        out[i] = weighted.dot(w);
    }
    return out;
}

// Correct alpha along harmonic directions until the weighted-orthogonality
// residual vanishes (damped Newton on the b_k coefficients; exact linear
// projection at p = 2).  Throws if Newton stalls.
inline Cochain project_to_constraint(const Cochain& alpha, double p, const HarmonicBasis& basis,
                                     int max_iterations = 50) {
    detail::require_p(p);
    if (basis.dimension() == 0) return alpha;
    const auto& mesh = *alpha.mesh;
    const int k = alpha.degree;
    const Eigen::VectorXd m = measure(mesh, k);
    const int b = basis.dimension();

    Eigen::MatrixXd w_dens(alpha.values.size(), b);
    for (int i = 0; i < b; ++i)
        w_dens.col(i) = basis.basis.col(i).cwiseQuotient(mesh.primal_volume[k]);

    Cochain current = alpha;
    const auto residual = [&](const Cochain& c) -> Eigen::VectorXd {
        return weighted_orthogonality_residual(c, p, basis);
    };
    // Residual magnitude against which convergence is judged: the
    // absolute-value counterpart of the residual sums.
    const auto residual_scale = [&](const Cochain& c) {
        const Eigen::VectorXd a = density(c).cwiseAbs();
        const Eigen::VectorXd bulk =
            m.cwiseProduct(detail::abs_power(a, p - 2.0)).cwiseProduct(a);
        double s = 0.0;
        for (int i = 0; i < b; ++i) s = std::max(s, bulk.dot(w_dens.col(i).cwiseAbs()));
        return s + 1e-300;
    };

    Eigen::VectorXd f = residual(current);
    for (int iter = 0; iter < max_iterations; ++iter) {
        if (f.lpNorm<Eigen::Infinity>() <= 1e-14 * residual_scale(current)) return current;

        const Eigen::VectorXd a = density(current);
        const Eigen::VectorXd jw = m.cwiseProduct(detail::abs_power(a, p - 2.0)) * (p - 1.0);
        Eigen::MatrixXd jac(b, b);
        for (int i = 0; i < b; ++i)
            for (int j = i; j < b; ++j)
                jac(i, j) = jac(j, i) = w_dens.col(i).dot(jw.cwiseProduct(w_dens.col(j)));

        Eigen::VectorXd step = jac.ldlt().solve(-f);
        double damping = 1.0;
        for (int halving = 0; halving < 30; ++halving) {
            Cochain trial = current;
            trial.values += basis.basis * (damping * step);
            const Eigen::VectorXd f_trial = residual(trial);
            if (f_trial.lpNorm<Eigen::Infinity>() < f.lpNorm<Eigen::Infinity>() ||
                f_trial.lpNorm<Eigen::Infinity>() <= 1e-14 * residual_scale(trial)) {
                current = std::move(trial);
                f = f_trial;
                break;
            }
            damping *= 0.5;
            if (halving == 29)
                throw std::runtime_error("project_to_constraint: damped Newton stalled");
        }
    }
    if (f.lpNorm<Eigen::Infinity>() <= 1e-12 * residual_scale(current)) return current;
    throw std::runtime_error("project_to_constraint: no convergence within iteration budget");
}

}  // namespace phodge
