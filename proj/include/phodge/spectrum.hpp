#pragma once

// First nonzero eigenvalue of the p-Hodge Laplacian on k-cochains.
//
// p = 2: sparse symmetric generalized eigensolve restricted above the
// harmonic kernel.  p > 2: minimization of the scale-invariant Rayleigh
// quotient R_p = p_energy / lp_norm^p over the weighted-orthogonality slice
// by projected nonlinear conjugate gradient with Armijo backtracking,
// warm-started from the p = 2 eigenform through a continuation ladder in p,
// with seeded random restarts; a bordered-Newton refinement of the weak
// eigen-equation finishes each solve.

#include <phodge/dec.hpp>
#include <phodge/eigensolve.hpp>
#include <phodge/hodge.hpp>

#include <Eigen/SparseLU>

#include <atomic>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace phodge {

struct SolverOptions {
    std::uint64_t seed = 0;
    int restarts = 4;
    int max_iterations = 5000;
    double tol_rel = 1e-9;        // relative quotient-change tolerance
    double tol_grad = 1e-7;       // projected-gradient norm tolerance
    double continuation_step = 0.25;
    std::vector<double> continuation_steps;  // explicit p ladder; empty = automatic
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    double harmonic_tol = 1e-8;
    int threads = 0;  // 0: PHODGE_THREADS env var, else hardware; clamped to restarts
};

struct SpectrumResult {
    double lambda1 = 0.0;
    Cochain eigenform;
    double p = 2.0;
    int k = 0;
    bool converged = false;
    int iterations = 0;
    int best_restart = 0;
    std::vector<double> quotient_history;
    double weak_residual = 0.0;
    double harmonic_residual = 0.0;
};

namespace detail {

inline int resolve_threads(const SolverOptions& opts) {
    int t = opts.threads;
    if (t <= 0) {
        if (const char* env = std::getenv("PHODGE_THREADS")) t = std::atoi(env);
    }
    if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, std::min(t, opts.restarts));
}

// Shared per-solve state: operators, harmonic slice, Jacobi preconditioner.
struct RayleighProblem {
    const SimplicialMesh& mesh;
    int k;
    HarmonicBasis harmonics;
    Eigen::VectorXd mass;
    Eigen::VectorXd precond;  // diagonal of the p=2 stiffness

    RayleighProblem(const SimplicialMesh& m, int degree, double harmonic_tol)
        : mesh(m), k(degree), harmonics(harmonic_basis(m, degree, harmonic_tol)),
          mass(mass_diagonal(m, degree)) {
        precond = laplacian2_matrix(m, degree).diagonal();
        const double floor = precond.maxCoeff() * 1e-12 + 1e-300;
        precond = precond.cwiseMax(floor);
    }

    Cochain feasible(Cochain x, double p) const {
        x = project_to_constraint(x, p, harmonics);
        const double norm = lp_norm(x, p);
        if (!(norm > 0.0))
            throw std::runtime_error("solve_p: iterate collapsed to the harmonic space");
        return x * (1.0 / norm);
    }

    // Weighted eigen-pairing vector: nu_s = |s*|·|a_s|^{p-2} a_s.
    Eigen::VectorXd nu(const Cochain& x, double p) const {
        return mesh.dual_volume[k].cwiseProduct(power_weight(density(x), p));
    }

    // Gradient of R_p at a feasible unit-norm iterate.
    Eigen::VectorXd gradient(const Cochain& x, double p, double quotient,
                             const Eigen::VectorXd& nu_x) const {
        return p_energy_gradient(x, p).values - quotient * p * nu_x;
    }

    // Dimensionless preconditioned gradient measure: the residual covector
    // relative to the eigen-pairing covector, both in the P^{-1} norm.
    double gradient_ratio(const Eigen::VectorXd& g, const Eigen::VectorXd& nu_x, double p,
                          double quotient) const {
        const double gn = std::sqrt(g.dot(g.cwiseQuotient(precond)));
        const double scale = p * quotient * std::sqrt(nu_x.dot(nu_x.cwiseQuotient(precond)));
        return gn / (scale + 1e-300);
    }
};

struct RungOutcome {
    Cochain iterate;
    double quotient = 0.0;
    bool converged = false;
    int iterations = 0;
    double last_rel_change = std::numeric_limits<double>::infinity();
};

// Preconditioned nonlinear CG (Polak-Ribiere+) on the constraint slice at
// fixed p.  Convergence requires both the relative quotient change below
// tol_rel and the preconditioned gradient ratio below tol_grad.
inline RungOutcome minimize_rung(const RayleighProblem& problem, Cochain start, double p,
                                 const SolverOptions& opts, std::vector<double>& history) {
    RungOutcome out;
    Cochain x = problem.feasible(std::move(start), p);
    double quotient = p_energy(x, p);
    Eigen::VectorXd nu = problem.nu(x, p);
    Eigen::VectorXd g = problem.gradient(x, p, quotient, nu);
    Eigen::VectorXd z = g.cwiseQuotient(problem.precond);
    Eigen::VectorXd dir = -z;
    double grad_ratio = problem.gradient_ratio(g, nu, p, quotient);
    double step = 1.0;
    double rel_change = std::numeric_limits<double>::infinity();
    history.push_back(quotient);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (grad_ratio <= opts.tol_grad && rel_change <= opts.tol_rel) {
            out.converged = true;
            break;
        }

        bool accepted = false;
        Cochain candidate = x;
        double candidate_quotient = quotient;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) dir = -z;  // drop momentum and retry steepest
            double slope = g.dot(dir);
            if (slope >= 0.0) {
                dir = -z;
                slope = g.dot(dir);
                if (slope >= 0.0) break;  // gradient numerically zero
            }
            double t = step / opts.backtrack;
            for (int backtracks = 0; backtracks < 50; ++backtracks) {
                Cochain trial = x;
                trial.values += t * dir;
                trial = problem.feasible(std::move(trial), p);
                const double trial_quotient = p_energy(trial, p);
                if (trial_quotient <= quotient + opts.armijo_c1 * t * slope) {
                    candidate = std::move(trial);
                    candidate_quotient = trial_quotient;
                    accepted = true;
                    step = t;
                    break;
                }
                t *= opts.backtrack;
            }
        }
        if (!accepted) {
            // stagnant at evaluation noise: the quotient is final
            out.converged = grad_ratio <= opts.tol_grad;
            break;
        }

        rel_change = std::abs(quotient - candidate_quotient) / std::max(1e-300, std::abs(quotient));
        x = std::move(candidate);
        quotient = candidate_quotient;
        nu = problem.nu(x, p);
        const Eigen::VectorXd g_new = problem.gradient(x, p, quotient, nu);
        const Eigen::VectorXd z_new = g_new.cwiseQuotient(problem.precond);
        const double beta =
            std::max(0.0, g_new.dot(z_new - z) / std::max(1e-300, g.dot(z)));
        dir = -z_new + beta * dir;
        g = g_new;
        z = z_new;
        grad_ratio = problem.gradient_ratio(g, nu, p, quotient);
        history.push_back(quotient);
        out.iterations = iter + 1;
    }

    out.iterate = std::move(x);
    out.quotient = quotient;
    out.last_rel_change = rel_change;
    return out;
}

// Newton refinement of the NCG minimizer on the weak eigen-equation
//   r(x, lambda) = grad E / p - lambda nu(x) = 0.
// The exact Jacobian in x is (p-1)(L_w - lambda M_w) with the |·|^{p-2}
// reweighted pencil, so one bordered sparse solve per step (normalization
// border nu) gives quadratic, line-search-free convergence well below the
// energy-evaluation noise floor.  The best-by-gradient iterate is kept and
// the input is never made worse.
inline RungOutcome polish_iterate(const RayleighProblem& problem, RungOutcome entry, double p,
                                  const SolverOptions& opts, std::vector<double>& history,
                                  int rounds = 25) {
    const auto& mesh = problem.mesh;
    const int k = problem.k;
    const Eigen::Index n = mesh.count(k);

    Cochain x = problem.feasible(std::move(entry.iterate), p);
    double quotient = p_energy(x, p);
    double rel_change = entry.last_rel_change;
    Eigen::VectorXd nu = problem.nu(x, p);
    Eigen::VectorXd residual = p_energy_gradient(x, p).values / p - quotient * nu;
    double ratio = problem.gradient_ratio(p * residual, nu, p, quotient);

    RungOutcome best;
    best.iterate = x;
    best.quotient = quotient;
    best.last_rel_change = rel_change;
    double best_ratio = ratio;

    for (int round = 0; round < rounds; ++round) {
        if (ratio <= 0.5 * opts.tol_grad && rel_change <= opts.tol_rel) break;

        Eigen::VectorXd w_up, w_down;
        if (k < mesh.dim) w_up = abs_power(density(d(x)), p - 2.0);
        if (k >= 1) w_down = abs_power(density(codifferential(x)), p - 2.0);
        const Eigen::SparseMatrix<double> lw =
            weighted_laplacian2_matrix(mesh, k, w_up, w_down);
        const Eigen::VectorXd mw =
            problem.mass.cwiseProduct(abs_power(density(x), p - 2.0));

        // bordered symmetric system [ (p-1)(L_w - lambda M_w), nu; nu^T, 0 ]
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(lw.nonZeros() + 3 * n + 1);
        for (int outer = 0; outer < lw.outerSize(); ++outer)
            for (Eigen::SparseMatrix<double>::InnerIterator it(lw, outer); it; ++it)
                trips.emplace_back(it.row(), it.col(), (p - 1.0) * it.value());
        for (Eigen::Index i = 0; i < n; ++i) {
            trips.emplace_back(i, i, -(p - 1.0) * quotient * mw[i]);
            trips.emplace_back(i, n, nu[i]);
            trips.emplace_back(n, i, nu[i]);
        }
        Eigen::SparseMatrix<double> bordered(n + 1, n + 1);
        bordered.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
        solver.compute(bordered);
        if (solver.info() != Eigen::Success) break;

        Eigen::VectorXd rhs(n + 1);
        rhs.head(n) = -residual;
        rhs[n] = 0.0;  // iterate is already normalized
        const Eigen::VectorXd delta = solver.solve(rhs);
        if (solver.info() != Eigen::Success) break;

        Cochain next = x;
        next.values += delta.head(n);
        next = problem.feasible(std::move(next), p);
        const double next_quotient = p_energy(next, p);
        const Eigen::VectorXd next_nu = problem.nu(next, p);
        const Eigen::VectorXd next_residual =
            p_energy_gradient(next, p).values / p - next_quotient * next_nu;
        const double next_ratio =
            problem.gradient_ratio(p * next_residual, next_nu, p, next_quotient);
        // guard against leaving the basin
        if (next_ratio > std::max(0.8 * ratio, 0.5 * opts.tol_grad) ||
            next_quotient > quotient * (1.0 + 1e-6))
            break;

        rel_change = std::abs(quotient - next_quotient) / std::max(1e-300, quotient);
        x = std::move(next);
        quotient = next_quotient;
        nu = next_nu;
        residual = next_residual;
        ratio = next_ratio;
        history.push_back(quotient);
        if (ratio < best_ratio && quotient <= best.quotient * (1.0 + 1e-6)) {
            best.iterate = x;
            best.quotient = quotient;
            best.last_rel_change = rel_change;
            best_ratio = ratio;
        }
        best.iterations = round + 1;
    }

    best.converged = best_ratio <= opts.tol_grad && best.last_rel_change <= opts.tol_rel;
    return best;
}

inline std::vector<double> continuation_ladder(double from, double to, double step,
                                               const std::vector<double>& explicit_steps) {
    if (!explicit_steps.empty()) {
        std::vector<double> ladder;
        for (double p : explicit_steps)
            if (p > from + 1e-12 && p < to - 1e-12) ladder.push_back(p);
        ladder.push_back(to);
        return ladder;
    }
    std::vector<double> ladder;
    if (!(step > 0.0)) throw std::invalid_argument("continuation_step must be positive");
    for (double p = from + step; p < to - 1e-12; p += step) ladder.push_back(p);
    ladder.push_back(to);
    return ladder;
}

}  // namespace detail

// Smallest eigenvalue above the harmonic kernel of L x = lambda M x, with an
// M-normalized eigenform.
inline SpectrumResult solve_p2(const SimplicialMesh& mesh, int k, double harmonic_tol = 1e-8) {
    detail::require_positive_stars(mesh);
    const Eigen::SparseMatrix<double> L = laplacian2_matrix(mesh, k);
    const Eigen::VectorXd mass = mass_diagonal(mesh, k);
    const Eigen::Index n = L.rows();
    const double lambda_max = largest_eigenvalue_estimate(L, mass);
    const double threshold = harmonic_tol * lambda_max;

    int nev = static_cast<int>(std::min<Eigen::Index>(8, n));
    EigenPairs pairs = smallest_eigenpairs(L, mass, nev);
    while (pairs.eigenvalues[nev - 1] < threshold && nev < n) {
        nev = static_cast<int>(std::min<Eigen::Index>(2 * nev, n));
        pairs = smallest_eigenpairs(L, mass, nev);
    }
    int kernel = 0;
    while (kernel < nev && pairs.eigenvalues[kernel] < threshold) ++kernel;
    if (kernel >= nev)
        throw std::runtime_error("solve_p2: no nonzero eigenvalue (space is all-harmonic)");

    SpectrumResult result;
    result.lambda1 = pairs.eigenvalues[kernel];
    result.eigenform = Cochain(mesh, k, pairs.eigenvectors.col(kernel));
    result.p = 2.0;
    result.k = k;
    result.converged = true;
    result.quotient_history = {result.lambda1};
    const Eigen::VectorXd r = L * result.eigenform.values -
                              result.lambda1 * mass.cwiseProduct(result.eigenform.values);
    result.weak_residual =
        std::sqrt(r.dot(r.cwiseQuotient(mass))) / result.lambda1;
    double harmonic_component = 0.0;
    for (int i = 0; i < kernel; ++i)
        harmonic_component =
            std::max(harmonic_component, std::abs(r.dot(pairs.eigenvectors.col(i))));
    result.harmonic_residual = harmonic_component / result.lambda1;
    return result;
}

// Dual-norm residual of the weak eigen-equation carried by `result`,
// normalized by lambda·‖alpha‖_p^{p-1}.
inline double weak_residual(const SpectrumResult& result, const SimplicialMesh& mesh) {
    if (!(result.lambda1 > 0.0))
        throw std::invalid_argument("weak_residual: lambda must be positive");
    if (result.eigenform.mesh != &mesh)
        throw std::invalid_argument("weak_residual: result does not belong to this mesh");
    const Cochain& alpha = result.eigenform;
    const double p = result.p;
    const Eigen::VectorXd nu =
        mesh.dual_volume[result.k].cwiseProduct(detail::power_weight(density(alpha), p));
    const Eigen::VectorXd r =
        p_energy_gradient(alpha, p).values / p - result.lambda1 * nu;
    const Eigen::VectorXd mass = mass_diagonal(mesh, result.k);
    const double denom = result.lambda1 * std::pow(lp_norm(alpha, p), p - 1.0);
    return std::sqrt(r.dot(r.cwiseQuotient(mass))) / denom;
}

// Magnitude of the residual functional along the harmonic directions; the
// Lagrange-multiplier argument makes this vanish at a constrained minimizer.
inline double harmonic_weak_residual(const SpectrumResult& result, const SimplicialMesh& mesh,
                                     const HarmonicBasis& basis) {
    if (!(result.lambda1 > 0.0))
        throw std::invalid_argument("harmonic_weak_residual: lambda must be positive");
    const Cochain& alpha = result.eigenform;
    const double p = result.p;
    const Eigen::VectorXd nu =
        mesh.dual_volume[result.k].cwiseProduct(detail::power_weight(density(alpha), p));
    const Eigen::VectorXd r =
        p_energy_gradient(alpha, p).values / p - result.lambda1 * nu;
    const double denom = result.lambda1 * std::pow(lp_norm(alpha, p), p - 1.0);
    double out = 0.0;
    for (int i = 0; i < basis.dimension(); ++i)
        out = std::max(out, std::abs(r.dot(basis.basis.col(i))));
    return out / denom;
}

namespace detail {

inline SpectrumResult solve_p_impl(const SimplicialMesh& mesh, int k, double p,
                                   const SolverOptions& opts,
                                   const Eigen::VectorXd* warm_start, double ladder_from) {
    require_p(p);
    if (opts.restarts < 1) throw std::invalid_argument("solve_p: restarts must be >= 1");
    RayleighProblem problem(mesh, k, opts.harmonic_tol);

    Eigen::VectorXd seed_iterate;
    if (warm_start) {
        seed_iterate = *warm_start;
    } else {
        seed_iterate = solve_p2(mesh, k, opts.harmonic_tol).eigenform.values;
    }
    const std::vector<double> ladder =
        continuation_ladder(ladder_from, p, opts.continuation_step, opts.continuation_steps);

    struct RestartResult {
        RungOutcome final;
        std::vector<double> history;
        int total_iterations = 0;
    };
    std::vector<RestartResult> runs(opts.restarts);

    const auto run_restart = [&](int r) {
        Cochain x(mesh, k);
        if (r == 0) {
            x.values = seed_iterate;
        } else {
            std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(r));
            std::normal_distribution<double> gauss;
            for (Eigen::Index i = 0; i < x.values.size(); ++i) x.values[i] = gauss(rng);
        }
        RestartResult& run = runs[r];
        for (double rung_p : ladder) {
            run.final = minimize_rung(problem, std::move(x), rung_p, opts, run.history);
            run.total_iterations += run.final.iterations;
            x = run.final.iterate;
        }
        RungOutcome polished =
            polish_iterate(problem, std::move(run.final), p, opts, run.history);
        run.total_iterations += polished.iterations;
        run.final = std::move(polished);
    };

    const int threads = resolve_threads(opts);
    if (threads <= 1) {
        for (int r = 0; r < opts.restarts; ++r) run_restart(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < opts.restarts; r = next.fetch_add(1))
                    run_restart(r);
            });
        for (auto& th : pool) th.join();
    }

    int best = -1;
    for (int r = 0; r < opts.restarts; ++r) {
        if (!runs[r].final.converged) continue;
        if (best < 0 || runs[r].final.quotient < runs[best].final.quotient) best = r;
    }
    bool converged = best >= 0;
    if (best < 0) {
        best = 0;
        for (int r = 1; r < opts.restarts; ++r)
            if (runs[r].final.quotient < runs[best].final.quotient) best = r;
    }

    SpectrumResult result;
    result.lambda1 = runs[best].final.quotient;
    result.eigenform = runs[best].final.iterate;
    result.p = p;
    result.k = k;
    result.converged = converged;
    result.iterations = runs[best].total_iterations;
    result.best_restart = best;
    result.quotient_history = std::move(runs[best].history);
    result.weak_residual = weak_residual(result, mesh);
    result.harmonic_residual = harmonic_weak_residual(result, mesh, problem.harmonics);
    return result;
}

}  // namespace detail

inline SpectrumResult solve_p(const SimplicialMesh& mesh, int k, double p,
                              const SolverOptions& opts = {}) {
    return detail::solve_p_impl(mesh, k, p, opts, nullptr, 2.0);
}

// Chained warm starts over an ascending list of p values starting at 2.
inline std::vector<SpectrumResult> continuation_study(const SimplicialMesh& mesh, int k,
                                                      const std::vector<double>& p_list,
                                                      const SolverOptions& opts = {}) {
    if (p_list.empty()) throw std::invalid_argument("continuation_study: empty p list");
    if (p_list.front() != 2.0)
        throw std::invalid_argument("continuation_study: p list must start at 2");
    for (std::size_t i = 1; i < p_list.size(); ++i)
        if (p_list[i] <= p_list[i - 1])
            throw std::invalid_argument("continuation_study: p list must be ascending");

    std::vector<SpectrumResult> results;
    results.reserve(p_list.size());
    results.push_back(detail::solve_p_impl(mesh, k, p_list[0], opts, nullptr, 2.0));
    for (std::size_t i = 1; i < p_list.size(); ++i) {
        const Eigen::VectorXd warm = results.back().eigenform.values;
        results.push_back(
            detail::solve_p_impl(mesh, k, p_list[i], opts, &warm, p_list[i - 1]));
    }
    return results;
}

}  // namespace phodge
