#pragma once

// Smallest eigenpairs of the generalized symmetric problem L x = lambda M x
// with L sparse positive semidefinite and M diagonal positive.  Below a size
// threshold the problem is solved densely; above it by shift-invert Lanczos
// (negative shift, full reorthogonalization, locking of converged pairs,
// direct residual verification).

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <random>
#include <stdexcept>
#include <vector>

namespace phodge {

inline constexpr Eigen::Index kDenseEigensolveThreshold = 3000;

struct EigenPairs {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // columns, M-orthonormal
};

// Power-iteration estimate of the largest eigenvalue of M^{-1} L.
inline double largest_eigenvalue_estimate(const Eigen::SparseMatrix<double>& L,
                                          const Eigen::VectorXd& mass, int iterations = 60) {
    const Eigen::Index n = L.rows();
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = gauss(rng);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd y = (L * x).cwiseQuotient(mass);
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        lambda = x.dot(y);
        x = y / norm;
    }
    return std::abs(lambda);
}

namespace detail {

inline EigenPairs dense_smallest(const Eigen::SparseMatrix<double>& L,
                                 const Eigen::VectorXd& mass, int nev) {
    const Eigen::VectorXd inv_sqrt_mass = mass.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd b = Eigen::MatrixXd(L);
    b = inv_sqrt_mass.asDiagonal() * b * inv_sqrt_mass.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("eigensolve: dense solver failed");
    EigenPairs out;
    out.eigenvalues = es.eigenvalues().head(nev);
    out.eigenvectors = inv_sqrt_mass.asDiagonal() * es.eigenvectors().leftCols(nev);
    return out;
}

struct LanczosWorkspace {
    const Eigen::SparseMatrix<double>& L;
    const Eigen::VectorXd& mass;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factorization;
    double sigma = 0.0;
    double matrix_scale = 0.0;

    LanczosWorkspace(const Eigen::SparseMatrix<double>& l, const Eigen::VectorXd& m)
        : L(l), mass(m) {
        // Mean generalized eigenvalue sets the scale for a safe negative shift.
        double trace = 0.0;
        for (Eigen::Index i = 0; i < L.rows(); ++i) {
            trace += L.coeff(i, i) / mass[i];
            matrix_scale = std::max(matrix_scale, std::abs(L.coeff(i, i)));
        }
        const double scale = trace / static_cast<double>(L.rows());
        sigma = -std::max(1e-3 * scale, 1e-12);
        for (int attempt = 0; attempt < 4; ++attempt) {
            Eigen::SparseMatrix<double> shifted = L;
            shifted -= Eigen::SparseMatrix<double>(
                (sigma * mass).asDiagonal());
            factorization.compute(shifted);
            if (factorization.info() == Eigen::Success) return;
            sigma *= 8.0;
        }
        throw std::runtime_error("eigensolve: shift factorization failed");
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        return factorization.solve(mass.cwiseProduct(x));
    }
};

// One Lanczos sweep in the M-inner product, orthogonal to `locked`.
// Returns converged Ritz pairs of the original problem, smallest first.
inline EigenPairs lanczos_sweep(const LanczosWorkspace& ws, const Eigen::MatrixXd& locked,
                                int want, int max_steps, std::uint64_t seed) {
    const Eigen::Index n = ws.L.rows();
    const auto m_dot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return a.dot(ws.mass.cwiseProduct(b));
    };
    const auto project_out = [&](Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& basis) {
        for (const auto& q : basis) v -= m_dot(q, v) * q;
        for (Eigen::Index c = 0; c < locked.cols(); ++c)
            v -= m_dot(locked.col(c), v) * locked.col(c);
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = gauss(rng);
    std::vector<Eigen::VectorXd> basis;
    project_out(q, basis);
    q /= std::sqrt(m_dot(q, q));
    basis.push_back(q);

    std::vector<double> alpha, beta;
    const int m = static_cast<int>(std::min<Eigen::Index>(max_steps, n - locked.cols()));
    EigenPairs result;
    for (int j = 0; j < m; ++j) {
        Eigen::VectorXd w = ws.apply(basis[j]);
        const double a = m_dot(w, basis[j]);
        alpha.push_back(a);
        w -= a * basis[j];
        if (j > 0) w -= beta[j - 1] * basis[j - 1];
        project_out(w, basis);  // full reorthogonalization
        project_out(w, basis);
        const double b = std::sqrt(m_dot(w, w));

        const int steps = j + 1;
        const bool breakdown = b < 1e-14;
        if ((steps >= want && steps % 8 == 0) || breakdown || steps == m) {
            // Ritz extraction from the tridiagonal section.
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
            for (int i = 0; i < steps; ++i) {
                t(i, i) = alpha[i];
                if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
            // Largest theta of the inverted operator = smallest lambda.  Only
            // a converged prefix is accepted so the locked set stays a true
            // smallest-eigenvalue set.
            std::vector<std::pair<double, Eigen::VectorXd>> converged;
            for (int idx = steps - 1; idx >= 0; --idx) {
                const double theta = es.eigenvalues()[idx];
                if (theta <= 0.0) break;
                const double resid = breakdown ? 0.0 : b * std::abs(es.eigenvectors()(steps - 1, idx));
                if (resid > 1e-11 * std::abs(es.eigenvalues()[steps - 1])) break;
                Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
                for (int i = 0; i < steps; ++i) x += es.eigenvectors()(i, idx) * basis[i];
                x /= std::sqrt(m_dot(x, x));
                const double lambda = ws.sigma + 1.0 / theta;
                // Direct residual check in the original problem, scaled so
                // kernel vectors (Lx ~ 0) are judged against the matrix norm.
                const Eigen::VectorXd r = ws.L * x - lambda * ws.mass.cwiseProduct(x);
                const double denom = ws.matrix_scale * x.norm() +
                                     std::abs(lambda) * ws.mass.cwiseProduct(x).norm();
                if (r.norm() > 1e-9 * denom) break;
                converged.emplace_back(lambda, std::move(x));
                if (static_cast<int>(converged.size()) >= want) break;
            }
            if (static_cast<int>(converged.size()) >= want || breakdown || steps == m) {
                std::sort(converged.begin(), converged.end(),
                          [](const auto& l, const auto& r) { return l.first < r.first; });
                result.eigenvalues.resize(converged.size());
                result.eigenvectors.resize(n, converged.size());
                for (std::size_t i = 0; i < converged.size(); ++i) {
                    result.eigenvalues[i] = converged[i].first;
                    result.eigenvectors.col(i) = converged[i].second;
                }
                return result;
            }
        }
        if (b < 1e-14) break;
        beta.push_back(b);
        basis.push_back(w / b);
    }
    return result;
}

inline EigenPairs lanczos_smallest(const Eigen::SparseMatrix<double>& L,
                                   const Eigen::VectorXd& mass, int nev) {
    const LanczosWorkspace ws(L, mass);
    const Eigen::Index n = L.rows();
    Eigen::MatrixXd locked(n, 0);
    Eigen::VectorXd locked_values(0);
    const int max_steps = static_cast<int>(std::min<Eigen::Index>(n, 350));

    const auto kth_locked = [&] {
        std::vector<double> vals(locked_values.data(), locked_values.data() + locked_values.size());
        std::sort(vals.begin(), vals.end());
        return vals[nev - 1];
    };

    // A single Lanczos vector sees one copy per eigenspace, so degenerate
    // eigenvalues surface one sweep at a time.  Keep sweeping the complement
    // of the locked set until its smallest eigenvalue no longer undercuts
    // the nev-th locked value.
    for (int sweep = 0; sweep < 3 * nev + 8; ++sweep) {
        if (locked.cols() >= n) break;
        const bool verifying = locked.cols() >= nev;
        const int want = verifying ? 1 : nev - static_cast<int>(locked.cols());
        EigenPairs found =
            lanczos_sweep(ws, locked, want, max_steps, 0x2545f4914f6cdd1dull + sweep);
        if (found.eigenvalues.size() == 0)
            throw std::runtime_error("eigensolve: Lanczos failed to converge");
        if (verifying &&
            found.eigenvalues[0] >= kth_locked() - 1e-9 * (ws.matrix_scale + std::abs(kth_locked())))
            break;
        const Eigen::Index old = locked.cols();
        locked.conservativeResize(n, old + found.eigenvalues.size());
        locked_values.conservativeResize(old + found.eigenvalues.size());
        for (Eigen::Index i = 0; i < found.eigenvalues.size(); ++i) {
            locked.col(old + i) = found.eigenvectors.col(i);
            locked_values[old + i] = found.eigenvalues[i];
        }
    }
    if (locked.cols() < nev) throw std::runtime_error("eigensolve: Lanczos failed to converge");

    // Sort the locked set ascending.
    std::vector<int> order(locked.cols());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return locked_values[a] < locked_values[b]; });
    EigenPairs out;
    out.eigenvalues.resize(nev);
    out.eigenvectors.resize(n, nev);
    for (int i = 0; i < nev; ++i) {
        out.eigenvalues[i] = locked_values[order[i]];
        out.eigenvectors.col(i) = locked.col(order[i]);
    }
    return out;
}

}  // namespace detail

inline EigenPairs smallest_eigenpairs(const Eigen::SparseMatrix<double>& L,
                                      const Eigen::VectorXd& mass, int nev,
                                      Eigen::Index dense_threshold = kDenseEigensolveThreshold) {
    if (L.rows() != L.cols() || L.rows() != mass.size())
        throw std::invalid_argument("smallest_eigenpairs: dimension mismatch");
    if (mass.minCoeff() <= 0.0)
        throw std::invalid_argument("smallest_eigenpairs: mass diagonal must be positive");
    nev = static_cast<int>(std::min<Eigen::Index>(nev, L.rows()));
    if (nev <= 0) throw std::invalid_argument("smallest_eigenpairs: nev must be positive");
    if (L.rows() <= dense_threshold) return detail::dense_smallest(L, mass, nev);
    return detail::lanczos_smallest(L, mass, nev);
}

}  // namespace phodge
