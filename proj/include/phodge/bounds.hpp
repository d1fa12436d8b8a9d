#pragma once

// Closed-form eigenvalue bounds for the p-Hodge Laplacian on closed
// manifolds whose curvature operator is bounded below by H, and comparison
// reports against computed spectra.

#include <phodge/records.hpp>
#include <phodge/spectrum.hpp>

#include <json.hpp>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace phodge {

namespace detail {
inline void check_degree_range(int n, int k, const char* who) {
    if (n < 2 || k < 1 || k > n - 1)
        throw std::invalid_argument(std::string(who) + ": need n >= 2 and 1 <= k <= n-1");
}
}  // namespace detail

// C = max{k/(k+1), (n-k)/(n-k+1)}
inline double constant_C(int n, int k) {
    detail::check_degree_range(n, k, "constant_C");
    const double a = static_cast<double>(k) / (k + 1);
    const double b = static_cast<double>(n - k) / (n - k + 1);
    return std::max(a, b);
}

// lambda_1 >= ( k(n-k) H / (2^{2/p-1} (C + (p-2)/2)) )^{p/2}.
// For H <= 0 the value is <= 0: a vacuous bound that any lambda_1 >= 0 meets.
inline double p_gallot_meyer_bound(int n, int k, double p, double H) {
    detail::check_degree_range(n, k, "p_gallot_meyer_bound");
    if (!(p >= 2.0)) throw std::invalid_argument("p_gallot_meyer_bound: p must be >= 2");
    const double denom = std::pow(2.0, 2.0 / p - 1.0) * (constant_C(n, k) + (p - 2.0) / 2.0);
    const double base = static_cast<double>(k) * (n - k) * H / denom;
    if (base == 0.0) return 0.0;
    const double magnitude = std::pow(std::abs(base), p / 2.0);
    return base > 0.0 ? magnitude : -magnitude;
}

// lambda_1 >= k(n-k+1) H, stated for 1 <= k <= n/2 at p = 2.
inline double gallot_meyer_bound(int n, int k, double H) {
    detail::check_degree_range(n, k, "gallot_meyer_bound");
    if (2 * k > n)
        throw std::invalid_argument("gallot_meyer_bound: stated for k <= n/2");
    return static_cast<double>(k) * (n - k + 1) * H;
}

// Lower-bound coefficient k(n+1-k) H of the Weitzenboeck curvature term.
inline double weitzenbock_constant(int n, int k, double H) {
    detail::check_degree_range(n, k, "weitzenbock_constant");
    return static_cast<double>(k) * (n + 1 - k) * H;
}

struct BoundReport {
    int n = 0;
    int k = 0;
    double p = 2.0;
    double H = 0.0;
    double bound_value = 0.0;
    std::optional<double> gallot_meyer_value;  // present at p = 2 with k <= n/2
    double weitzenbock_value = 0.0;
    std::optional<double> computed_lambda1;
    std::optional<double> margin;  // computed / bound, when the bound is positive
    double slack = 0.05;
    bool satisfied = false;
};

inline BoundReport make_bound_report(int n, int k, double p, double H,
                                     std::optional<double> lambda1, double slack = 0.05) {
    if (!(slack >= 0.0 && slack < 1.0))
        throw std::invalid_argument("make_bound_report: slack must be in [0, 1)");
    BoundReport report;
    report.n = n;
    report.k = k;
    report.p = p;
    report.H = H;
    report.slack = slack;
    report.bound_value = p_gallot_meyer_bound(n, k, p, H);
    if (p == 2.0 && 2 * k <= n) report.gallot_meyer_value = gallot_meyer_bound(n, k, H);
    report.weitzenbock_value = weitzenbock_constant(n, k, H);
    report.computed_lambda1 = lambda1;
    if (lambda1) {
        if (report.bound_value > 0.0) report.margin = *lambda1 / report.bound_value;
        report.satisfied = *lambda1 >= report.bound_value * (1.0 - slack);
    }
    return report;
}

// Certify a converged spectrum result against the closed-form bound.
inline BoundReport compare(const SpectrumResult& result, int n, int k, double p, double H,
                           double slack = 0.05) {
    if (!result.converged)
        throw std::invalid_argument("compare: refusing to certify an unconverged result");
    if (result.k != k || result.p != p)
        throw std::invalid_argument("compare: (k, p) disagree with the spectrum result");
    return make_bound_report(n, k, p, H, result.lambda1, slack);
}

inline JsonValue to_json_value(const BoundReport& report) {
    JsonValue v = JsonValue::object();
    v.set("schema", "phodge.bound_report.v1");
    v.set("n", report.n);
    v.set("k", report.k);
    v.set("p", report.p);
    v.set("H", report.H);
    v.set("bound_value", report.bound_value);
    if (report.gallot_meyer_value)
        v.set("gallot_meyer_value", *report.gallot_meyer_value);
    v.set("weitzenbock_value", report.weitzenbock_value);
    if (report.computed_lambda1) v.set("computed_lambda1", *report.computed_lambda1);
    if (report.margin) v.set("margin", *report.margin);
    v.set("slack", report.slack);
    v.set("satisfied", report.satisfied);
    return v;
}

inline std::string to_json(const BoundReport& report) { return to_json_value(report).dump(); }

inline BoundReport bound_report_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    BoundReport report;
    report.n = j.at("n").get<int>();
    report.k = j.at("k").get<int>();
    report.p = j.at("p").get<double>();
    report.H = j.at("H").get<double>();
    report.bound_value = j.at("bound_value").get<double>();
    if (j.contains("gallot_meyer_value"))
        report.gallot_meyer_value = j.at("gallot_meyer_value").get<double>();
    report.weitzenbock_value = j.at("weitzenbock_value").get<double>();
    if (j.contains("computed_lambda1"))
        report.computed_lambda1 = j.at("computed_lambda1").get<double>();
    if (j.contains("margin")) report.margin = j.at("margin").get<double>();
    report.slack = j.at("slack").get<double>();
    report.satisfied = j.at("satisfied").get<bool>();
    return report;
}

}  // namespace phodge
