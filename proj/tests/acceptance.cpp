// Acceptance suite: end-to-end checks of the shipped functionality at the
// documented tolerances.  Prints one PASS/FAIL line per criterion and exits
// with the number of failures.

#include <phodge/bounds.hpp>
#include <phodge/dec.hpp>
#include <phodge/exterior.hpp>
#include <phodge/hodge.hpp>
#include <phodge/mesh.hpp>
#include <phodge/spectrum.hpp>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace phodge;

namespace {

struct Harness {
    int failures = 0;

    void check(int criterion, bool ok, const std::string& label, const std::string& detail) {
        std::printf("[%s] C%-2d %s: %s\n", ok ? "PASS" : "FAIL", criterion, label.c_str(),
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// Fourier oracle on the dual lattice of the unit rhombic torus.
double torus_lambda1_oracle() {
    double best = std::numeric_limits<double>::infinity();
    for (int m1 = -6; m1 <= 6; ++m1)
        for (int m2 = -6; m2 <= 6; ++m2) {
            if (m1 == 0 && m2 == 0) continue;
            best = std::min(best, 4.0 * M_PI * M_PI * (4.0 / 3.0) * (m1 * m1 + m2 * m2 - m1 * m2));
        }
    return best;
}

MultiVector random_multivector(int n, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    MultiVector m(n, k);
    for (Eigen::Index i = 0; i < m.coeffs().size(); ++i) m[i] = gauss(rng);
    return m;
}

Cochain random_cochain(const SimplicialMesh& mesh, int k, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Cochain c(mesh, k);
    for (Eigen::Index i = 0; i < c.values.size(); ++i) c.values[i] = gauss(rng);
    return c;
}

int run_cli(const std::string& args) {
    const char* cli = std::getenv("PHODGE_CLI");
    if (!cli) return -1;
    const std::string cmd = std::string(cli) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main() {
    Harness h;
    const auto suite_start = std::chrono::steady_clock::now();

    // ----- C1: flat-torus p=2 functions ------------------------------------
    {
        const auto start = std::chrono::steady_clock::now();
        const auto torus = build_flat_torus(32);
        const auto result = solve_p2(torus, 0);
        const double target = torus_lambda1_oracle();
        const double err = std::abs(result.lambda1 - target) / target;
        const double secs = seconds_since(start);
        h.check(1, err < 0.02 && secs < 60.0, "flat-torus N=32 k=0 p=2",
                fmt("lambda1=%.6f target=%.6f err=%.3f%% time=%.1fs", result.lambda1, target,
                    100 * err, secs));
    }

    // ----- C2-C4: icosphere level 4 across degrees --------------------------
    const auto sphere4 = build_icosphere(4);
    double sphere4_k0 = 0.0;
    {
        const auto start = std::chrono::steady_clock::now();
        const auto result = solve_p2(sphere4, 0);
        sphere4_k0 = result.lambda1;
        const double err = std::abs(result.lambda1 - 2.0) / 2.0;
        const double secs = seconds_since(start);
        h.check(2, err < 0.015 && secs < 120.0, "icosphere L4 k=0 p=2",
                fmt("lambda1=%.6f err=%.3f%% time=%.1fs", result.lambda1, 100 * err, secs));
    }
    {
        const auto result = solve_p2(sphere4, 1);
        const double err = std::abs(result.lambda1 - 2.0) / 2.0;
        const double floor = gallot_meyer_bound(2, 1, 1.0) * 0.97;
        h.check(3, err < 0.03 && result.lambda1 >= floor, "icosphere L4 k=1 p=2 (sharpness)",
                fmt("lambda1=%.6f err=%.3f%% bound*0.97=%.4f", result.lambda1, 100 * err, floor));
    }
    {
        const auto result = solve_p2(sphere4, 2);
        const double err = std::abs(result.lambda1 - sphere4_k0) / sphere4_k0;
        h.check(4, err < 0.03, "icosphere L4 k=2 duality",
                fmt("lambda1=%.6f vs k=0 %.6f err=%.3f%%", result.lambda1, sphere4_k0, 100 * err));
    }

    // ----- C5: bound certification for p > 2 --------------------------------
    const auto sphere3 = build_icosphere(3);
    std::vector<SpectrumResult> p_results;
    {
        const auto start = std::chrono::steady_clock::now();
        SolverOptions opts;
        opts.seed = 2024;
        bool ok = true;
        std::string detail;
        for (double p : {2.5, 3.0, 4.0}) {
            const auto result = solve_p(sphere3, 1, p, opts);
            p_results.push_back(result);
            const double bound = p_gallot_meyer_bound(2, 1, p, 1.0);
            const bool this_ok = result.converged && result.lambda1 >= bound * 0.95;
            ok = ok && this_ok;
            detail += fmt("p=%.1f: %.4f>=%.4f conv=%d  ", p, result.lambda1, bound * 0.95,
                          result.converged ? 1 : 0);
        }
        ok = ok && p_results[1].lambda1 >= std::sqrt(2.0) * 0.95;
        const double secs = seconds_since(start);
        ok = ok && secs < 600.0;
        h.check(5, ok, "icosphere L3 k=1 bound certification p in {2.5,3,4}",
                detail + fmt("time=%.1fs", secs));
    }

    // ----- C6: solver cross-validation at p = 2 -----------------------------
    {
        SolverOptions opts;
        opts.seed = 99;
        bool ok = true;
        std::string detail;
        const auto torus16 = build_flat_torus(16);
        for (const auto& [mesh, name] :
             std::vector<std::pair<const SimplicialMesh*, std::string>>{{&sphere3, "S2L3"},
                                                                        {&torus16, "T2N16"}}) {
            for (int k : {0, 1}) {
                const auto exact = solve_p2(*mesh, k);
                const auto iterative = solve_p(*mesh, k, 2.0, opts);
                const double err = std::abs(exact.lambda1 - iterative.lambda1) / exact.lambda1;
                ok = ok && iterative.converged && err < 0.005;
                detail += fmt("%s k=%d err=%.2e  ", name.c_str(), k, err);
            }
        }
        h.check(6, ok, "solve_p(p=2) vs solve_p2 within 0.5%", detail);
    }

    // ----- C7: gradient correctness against finite differences -------------
    {
        const auto mesh = build_icosphere(1);
        std::mt19937_64 rng(7777);
        double worst = 0.0;
        for (int k = 0; k <= 2; ++k) {
            for (double p : {2.0, 3.0, 4.5}) {
                for (int trial = 0; trial < 20; ++trial) {
                    const auto alpha = random_cochain(mesh, k, rng);
                    const Eigen::VectorXd grad = p_energy_gradient(alpha, p).values;
                    Eigen::VectorXd fd(grad.size());
                    Cochain probe = alpha;
                    const double step = 1e-5;
                    for (Eigen::Index i = 0; i < grad.size(); ++i) {
                        probe.values[i] = alpha.values[i] + step;
                        const double plus = p_energy(probe, p);
                        probe.values[i] = alpha.values[i] - step;
                        const double minus = p_energy(probe, p);
                        probe.values[i] = alpha.values[i];
                        fd[i] = (plus - minus) / (2.0 * step);
                    }
                    worst = std::max(worst, (grad - fd).norm() / grad.norm());
                }
            }
        }
        h.check(7, worst < 1e-6, "p_energy_gradient vs central differences",
                fmt("20 cochains per (k,p), k in {0,1,2}, p in {2,3,4.5}: worst rel err=%.2e",
                    worst));
    }

    // ----- C8: exterior-algebra identity suite ------------------------------
    {
        std::mt19937_64 rng(31337);
        std::uniform_int_distribution<int> ndist(2, 6);
        double worst = 0.0;
        const auto track = [&worst](double err) { worst = std::max(worst, err); };
        for (int trial = 0; trial < 200; ++trial) {
            const int n = ndist(rng);
            std::uniform_int_distribution<int> kdist(1, n - 1);
            const int k = kdist(rng);

            const auto a = random_multivector(n, k - 1, rng);
            const auto ii = iota_contract(iota_adjoint(a));
            track((ii.coeffs() - (n - k + 1) * a.coeffs()).lpNorm<Eigen::Infinity>());
            track(wedge_contract(iota_adjoint(a)).coeffs().lpNorm<Eigen::Infinity>());

            const auto b = random_multivector(n, k + 1, rng);
            const auto ww = wedge_contract(wedge_adjoint(b));
            track((ww.coeffs() - (k + 1) * b.coeffs()).lpNorm<Eigen::Infinity>());
            track(iota_contract(wedge_adjoint(b)).coeffs().lpNorm<Eigen::Infinity>());

            VectorFormTensor tensor(n, k);
            for (int i = 0; i < n; ++i) tensor.slot(i) = random_multivector(n, k, rng);
            const auto parts = twistor_decompose(tensor);
            const double total = inner(tensor, tensor);
            const double da = inner(wedge_contract(tensor), wedge_contract(tensor));
            const double dsa = inner(iota_contract(tensor), iota_contract(tensor));
            track(std::abs(total - (inner(parts.remainder, parts.remainder) + da / (k + 1) +
                                    dsa / (n - k + 1))) /
                  (1.0 + total));

            std::normal_distribution<double> gauss;
            Eigen::VectorXd v(n);
            for (int i = 0; i < n; ++i) v[i] = gauss(rng);
            const auto alpha = random_multivector(n, k, rng);
            const auto beta = random_multivector(n, k - 1, rng);
            const double pairing = std::abs(inner(interior(v, alpha), beta));
            track(std::max(0.0, pairing - v.norm() * norm(alpha) * norm(beta)));
        }
        h.check(8, worst < 1e-12, "exterior-algebra identities (200 cases each, n<=6)",
                fmt("worst deviation=%.2e", worst));
    }

    // ----- C9: topology, feasibility, mu = 0 --------------------------------
    {
        const auto sphere2 = build_icosphere(2);
        const auto torus8 = build_flat_torus(8);
        bool ok = true;
        std::string detail;

        int sphere_dims[3], torus_dims[3];
        for (int k = 0; k <= 2; ++k) {
            sphere_dims[k] = harmonic_basis(sphere2, k).dimension();
            torus_dims[k] = harmonic_basis(torus8, k).dimension();
        }
        ok = ok && sphere_dims[0] == 1 && sphere_dims[1] == 0 && sphere_dims[2] == 1;
        ok = ok && torus_dims[0] == 1 && torus_dims[1] == 2 && torus_dims[2] == 1;
        detail += fmt("S2 dims=(%d,%d,%d) T2 dims=(%d,%d,%d)  ", sphere_dims[0], sphere_dims[1],
                      sphere_dims[2], torus_dims[0], torus_dims[1], torus_dims[2]);

        // constraint feasibility and the harmonic component of the weak
        // residual at converged p != 2 solves
        SolverOptions opts;
        opts.seed = 5150;
        const auto torus_result = solve_p(torus8, 1, 2.5, opts);
        const auto basis = harmonic_basis(torus8, 1);
        const Eigen::VectorXd feas =
            weighted_orthogonality_residual(torus_result.eigenform, 2.5, basis);
        ok = ok && torus_result.converged && feas.lpNorm<Eigen::Infinity>() < 1e-8;
        detail += fmt("T2 p=2.5 orth=%.1e  ", feas.lpNorm<Eigen::Infinity>());

        double worst_harmonic = torus_result.harmonic_residual;
        for (const auto& result : p_results)
            worst_harmonic = std::max(worst_harmonic, result.harmonic_residual);
        ok = ok && worst_harmonic < 1e-8;
        detail += fmt("worst harmonic residual=%.1e", worst_harmonic);

        h.check(9, ok, "Betti dimensions, feasibility, harmonic residual", detail);
    }

    // ----- C10: scaling law --------------------------------------------------
    {
        const auto sphere2 = build_icosphere(2);
        const auto doubled = scaled(sphere2, 2.0);
        bool ok = true;
        std::string detail;

        SolverOptions tight;
        tight.seed = 1;
        tight.restarts = 1;
        tight.tol_rel = 1e-13;

        for (double p : {2.0, 3.0}) {
            double base, big;
            if (p == 2.0) {
                base = solve_p2(sphere2, 1).lambda1;
                big = solve_p2(doubled, 1).lambda1;
            } else {
                base = solve_p(sphere2, 1, p, tight).lambda1;
                big = solve_p(doubled, 1, p, tight).lambda1;
            }
            const double err = std::abs(big - base * std::pow(2.0, -p)) / (base * std::pow(2.0, -p));
            ok = ok && err < 1e-8;
            detail += fmt("p=%.0f err=%.2e  ", p, err);
        }
        h.check(10, ok, "coordinate scaling by 2 multiplies lambda1 by 2^-p", detail);
    }

    // ----- C11: p=2 reduction --------------------------------------------------
    {
        double worst = 0.0;
        for (int n = 2; n <= 10; ++n)
            for (int k = 1; 2 * k <= n; ++k)
                for (double curvature : {0.5, 1.0, 2.0})
                    worst = std::max(worst, std::abs(p_gallot_meyer_bound(n, k, 2.0, curvature) -
                                                     gallot_meyer_bound(n, k, curvature)));
        h.check(11, worst < 1e-12, "p-bound reduces to Gallot-Meyer at p=2",
                fmt("n<=10, k<=n/2: worst gap=%.2e", worst));
    }

    // ----- C12: CLI determinism ----------------------------------------------
    {
        bool ok = true;
        std::string detail;
        if (!std::getenv("PHODGE_CLI")) {
            ok = false;
            detail = "PHODGE_CLI not set";
        } else {
            const std::string spectrum_cmd =
                "spectrum --geometry flat-torus --n 8 --k 1 --p 2.5 --seed 17 "
                "--output /tmp/phodge_acc_spec.json --no-timing --save-eigenform";
            ok = ok && run_cli(spectrum_cmd) == 0;
            const std::string first = slurp("/tmp/phodge_acc_spec.json");
            ok = ok && run_cli(spectrum_cmd) == 0;
            const bool spectrum_same = slurp("/tmp/phodge_acc_spec.json") == first;

            const std::string study_cmd =
                "study --geometry icosphere --levels 1 2 --k 0 --p-list 2 2.5 --seed 23 "
                "--csv /tmp/phodge_acc_study.csv --no-timing";
            ok = ok && run_cli(study_cmd) == 0;
            const std::string study_first = slurp("/tmp/phodge_acc_study.csv");
            ok = ok && run_cli(study_cmd) == 0;
            const bool study_same = slurp("/tmp/phodge_acc_study.csv") == study_first;

            ok = ok && spectrum_same && study_same && !first.empty() && !study_first.empty();
            detail = fmt("spectrum byte-identical=%d study byte-identical=%d", spectrum_same,
                         study_same);
        }
        h.check(12, ok, "repeated CLI runs are byte-identical", detail);
    }

    std::printf("%d/12 criteria passed in %.1fs\n", 12 - h.failures, seconds_since(suite_start));
    return h.failures;
}
