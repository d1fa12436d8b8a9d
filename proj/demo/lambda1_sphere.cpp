// Smallest p-Hodge eigenvalue of one-forms on the unit sphere, compared
// against the closed-form lower bound.

#include <phodge/bounds.hpp>
#include <phodge/spectrum.hpp>

#include <cstdio>

int main() {
    const auto sphere = phodge::build_icosphere(3);
    std::printf("icosphere level 3: %ld vertices, %ld edges, %ld faces\n",
                (long)sphere.count(0), (long)sphere.count(1), (long)sphere.count(2));

    phodge::SolverOptions opts;
    opts.seed = 1;
    opts.restarts = 2;

    for (double p : {2.0, 3.0}) {
        const auto result = phodge::solve_p(sphere, 1, p, opts);
        const auto report = phodge::compare(result, 2, 1, p, 1.0);
        std::printf("p = %.1f: lambda1 = %.6f, bound = %.6f, margin = %.3f, %s\n", p,
                    result.lambda1, report.bound_value,
                    report.margin ? *report.margin : 0.0,
                    report.satisfied ? "satisfied" : "violated");
    }
    return 0;
}
