// phodge command-line front end: mesh generation, spectrum solves, bound
// certification and refinement/continuation studies, with reproducible JSON
// and CSV run records.
//
// Exit codes: 0 success, 1 usage/config error, 2 solver non-convergence,
// 3 bound violation.

#include <phodge/bounds.hpp>
#include <phodge/dec.hpp>
#include <phodge/hodge.hpp>
#include <phodge/mesh.hpp>
#include <phodge/records.hpp>
#include <phodge/spectrum.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

using phodge::JsonValue;

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::string format_double(double v) {
    if (!std::isfinite(v))
        throw std::runtime_error("refusing to emit a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct MeshRequest {
    std::string geometry = "icosphere";  // icosphere | flat-torus | off-file
    int level = 2;
    int torus_n = 8;
    std::string input;
    bool allow_flagged = false;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--geometry", geometry, "Geometry family")
            ->check(CLI::IsMember({"icosphere", "flat-torus", "off-file"}));
        cmd->add_option("--level", level, "Icosphere subdivision level");
        cmd->add_option("--n", torus_n, "Flat-torus lattice subdivisions per side");
        cmd->add_option("--input", input, "OFF file path (geometry off-file)");
        cmd->add_flag("--allow-flagged", allow_flagged,
                      "Accept meshes that fail the well-centeredness check");
    }

    phodge::SimplicialMesh build() const {
        phodge::SimplicialMesh mesh;
        if (geometry == "icosphere") {
            mesh = phodge::build_icosphere(level);
        } else if (geometry == "flat-torus") {
            mesh = phodge::build_flat_torus(torus_n);
        } else {
            if (input.empty()) throw std::runtime_error("geometry off-file requires --input");
            mesh = phodge::load_off(input);
        }
        if (!mesh.well_centered && !allow_flagged)
            throw std::runtime_error(
                "mesh is not well-centered; pass --allow-flagged to proceed anyway");
        return mesh;
    }

    double curvature_operator_bound() const {
        if (geometry == "icosphere") return 1.0;  // unit sphere
        if (geometry == "flat-torus") return 0.0;
        throw std::runtime_error("no built-in curvature bound for off-file meshes; "
                                 "use the bounds subcommand with an explicit --H");
    }

    std::string describe() const {
        if (geometry == "icosphere") return "icosphere:" + std::to_string(level);
        if (geometry == "flat-torus") return "flat-torus:" + std::to_string(torus_n);
        return "off-file:" + input;
    }

    JsonValue config_json() const {
        JsonValue v = JsonValue::object();
        v.set("geometry", geometry);
        if (geometry == "icosphere") v.set("level", level);
        if (geometry == "flat-torus") v.set("n", torus_n);
        if (geometry == "off-file") v.set("input", input);
        v.set("allow_flagged", allow_flagged);
        return v;
    }
};

JsonValue mesh_stats_json(const phodge::SimplicialMesh& mesh) {
    JsonValue v = JsonValue::object();
    v.set("vertices", static_cast<long long>(mesh.count(0)));
    v.set("edges", static_cast<long long>(mesh.count(1)));
    v.set("faces", static_cast<long long>(mesh.count(2)));
    v.set("euler_characteristic", mesh.euler_characteristic());
    v.set("well_centered", mesh.well_centered);
    const auto [lo, hi] = mesh.dual_primal_edge_ratio_range();
    v.set("min_dual_primal_ratio", lo);
    v.set("max_dual_primal_ratio", hi);
    v.set("total_volume", mesh.total_volume());
    v.set("max_edge_length", mesh.primal_volume[1].maxCoeff());
    v.set("fingerprint", mesh.fingerprint());
    return v;
}

struct SolverFlags {
    phodge::SolverOptions opts;
    bool exact = false;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--seed", opts.seed, "Random seed for solver restarts");
        cmd->add_option("--restarts", opts.restarts, "Number of solver restarts");
        cmd->add_option("--max-iters", opts.max_iterations, "Iteration cap per continuation rung");
        cmd->add_option("--tol-rel", opts.tol_rel, "Relative quotient-change tolerance");
        cmd->add_option("--tol-grad", opts.tol_grad, "Projected-gradient tolerance");
        cmd->add_option("--continuation-step", opts.continuation_step,
                        "p increment for continuation warm starts");
        cmd->add_option("--harmonic-tol", opts.harmonic_tol, "Kernel detection tolerance");
        cmd->add_option("--threads", opts.threads,
                        "Parallel restarts (0: PHODGE_THREADS or hardware)");
        cmd->add_flag("--exact", exact, "Use the direct eigensolver at p = 2");
    }

    JsonValue config_json() const {
        JsonValue v = JsonValue::object();
        v.set("seed", static_cast<long long>(opts.seed));
        v.set("restarts", opts.restarts);
        v.set("max_iterations", opts.max_iterations);
        v.set("tol_rel", opts.tol_rel);
        v.set("tol_grad", opts.tol_grad);
        v.set("continuation_step", opts.continuation_step);
        v.set("armijo_c1", opts.armijo_c1);
        v.set("backtrack", opts.backtrack);
        v.set("harmonic_tol", opts.harmonic_tol);
        v.set("exact", exact);
        return v;
    }
};

JsonValue result_json(const phodge::SpectrumResult& result, bool save_eigenform) {
    JsonValue v = JsonValue::object();
    v.set("lambda1", result.lambda1);
    v.set("k", result.k);
    v.set("p", result.p);
    v.set("converged", result.converged);
    v.set("iterations", result.iterations);
    v.set("best_restart", result.best_restart);
    v.set("weak_residual", result.weak_residual);
    v.set("harmonic_residual", result.harmonic_residual);
    v.set("quotient_evaluations", static_cast<long long>(result.quotient_history.size()));
    if (save_eigenform) {
        JsonValue values = JsonValue::array();
        for (Eigen::Index i = 0; i < result.eigenform.values.size(); ++i)
            values.push(result.eigenform.values[i]);
        v.set("eigenform", std::move(values));
    }
    return v;
}

phodge::SpectrumResult run_solver(const phodge::SimplicialMesh& mesh, int k, double p,
                                  const SolverFlags& flags) {
    if (flags.exact && p == 2.0) return phodge::solve_p2(mesh, k, flags.opts.harmonic_tol);
    return phodge::solve_p(mesh, k, p, flags.opts);
}

// Flat key=value config mirroring the long option names; options given on
// the command line keep precedence.
void apply_flat_config(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    const auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (char comment : {'#', ';'}) {
            const auto pos = line.find(comment);
            if (pos != std::string::npos) line.erase(pos);
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto* option = cmd->get_option_no_throw("--" + key);
        if (!option || key == "config")
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" +
                                     key + "'");
        if (option->count() > 0) continue;  // the command line wins
        option->add_result(value);
        option->run_callback();
    }
}

std::string join_command(int argc, char** argv) {
    std::string out;
    for (int i = 1; i < argc; ++i) {
        if (i > 1) out.push_back(' ');
        out += argv[i];
    }
    return out;
}

// ---------------------------------------------------------------------------

int cmd_mesh(const MeshRequest& request, const std::string& output,
             const std::string& command_echo) {
    const auto mesh = request.build();
    phodge::save_off(mesh, output + ".tmp");
    if (std::rename((output + ".tmp").c_str(), output.c_str()) != 0)
        throw std::runtime_error("cannot rename temporary OFF to " + output);

    std::string stats_path = output;
    if (stats_path.size() > 4 && stats_path.substr(stats_path.size() - 4) == ".off")
        stats_path.resize(stats_path.size() - 4);
    stats_path += ".stats.json";

    JsonValue v = JsonValue::object();
    v.set("schema", "phodge.mesh_stats.v1");
    v.set("artifact_version", kArtifactVersion);
    v.set("command", command_echo);
    v.set("geometry", request.describe());
    v.set("stats", mesh_stats_json(mesh));
    atomic_write(stats_path, v.dump());
    std::printf("wrote %s and %s\n", output.c_str(), stats_path.c_str());
    return 0;
}

int cmd_spectrum(const MeshRequest& request, const SolverFlags& flags, int k, double p,
                 const std::string& output, const std::string& history_path, bool no_timing,
                 bool save_eigenform, const std::string& command_echo) {
    if (!(p >= 2.0)) {
        std::fprintf(stderr, "error: p must be >= 2 (got %g)\n", p);
        return 1;
    }
    const auto mesh = request.build();
    if (k < 0 || k > mesh.dim) {
        std::fprintf(stderr, "error: k must be in [0, %d]\n", mesh.dim);
        return 1;
    }

    const auto start = std::chrono::steady_clock::now();
    const auto result = run_solver(mesh, k, p, flags);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    JsonValue record = JsonValue::object();
    record.set("schema", "phodge.run_record.v1");
    record.set("artifact_version", kArtifactVersion);
    record.set("command", command_echo);
    JsonValue config = JsonValue::object();
    config.set("mesh", request.config_json());
    config.set("solver", flags.config_json());
    config.set("k", k);
    config.set("p", p);
    record.set("config", std::move(config));
    record.set("mesh", mesh_stats_json(mesh));
    record.set("results", result_json(result, save_eigenform));
    JsonValue timing = JsonValue::object();
    timing.set("seconds", no_timing ? 0.0 : seconds);
    record.set("timing", std::move(timing));

    if (!output.empty()) atomic_write(output, record.dump());

    if (!history_path.empty()) {
        std::string csv = "iteration,quotient\n";
        for (std::size_t i = 0; i < result.quotient_history.size(); ++i)
            csv += std::to_string(i) + "," + format_double(result.quotient_history[i]) + "\n";
        atomic_write(history_path, csv);
    }

    std::printf("lambda1 = %.12g  (k=%d, p=%g, converged=%s, %d iterations)\n", result.lambda1,
                k, p, result.converged ? "yes" : "no", result.iterations);
    return result.converged ? 0 : 2;
}

int cmd_bounds(const std::string& record_path, int n, int k, double p, double H,
               std::optional<double> lambda1, double slack, const std::string& output) {
    std::optional<double> computed = lambda1;
    if (!record_path.empty()) {
        std::ifstream in(record_path);
        if (!in) throw std::runtime_error("cannot open record " + record_path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        const auto j = nlohmann::json::parse(buffer.str());
        const auto& results = j.at("results");
        if (!results.at("converged").get<bool>())
            throw std::runtime_error("record holds an unconverged result; nothing to certify");
        computed = results.at("lambda1").get<double>();
        k = results.at("k").get<int>();
        p = results.at("p").get<double>();
    }
    if (!computed) throw std::runtime_error("need either --record or --lambda1");

    const auto report = phodge::make_bound_report(n, k, p, H, computed, slack);
    const std::string text = phodge::to_json(report);
    if (!output.empty()) atomic_write(output, text);
    std::printf("curvature bound = %.12g, computed = %.12g -> %s\n", report.bound_value,
                *computed, report.satisfied ? "satisfied" : "VIOLATED");
    return report.satisfied ? 0 : 3;
}

int cmd_study(const std::string& geometry, const std::vector<int>& levels, int k,
              const std::vector<double>& p_list, const SolverFlags& flags,
              const std::string& csv_path, const std::string& record_dir, bool no_timing,
              const std::string& command_echo) {
    if (geometry != "icosphere" && geometry != "flat-torus")
        throw std::runtime_error("study supports the built-in geometries only");
    if (levels.empty() || p_list.empty())
        throw std::runtime_error("study needs at least one level and one p");
    MeshRequest probe;
    probe.geometry = geometry;
    const double curvature = probe.curvature_operator_bound();
    const int n_dim = 2;

    std::string csv = "level,h_max,k,p,lambda1,bound,margin,converged,seconds\n";
    bool all_converged = true;

    struct Cell {
        int level;
        double h_max, lambda1;
        bool converged;
    };
    std::vector<std::vector<Cell>> per_p(p_list.size());

    for (int level : levels) {
        MeshRequest request;
        request.geometry = geometry;
        request.level = level;
        request.torus_n = level;
        const auto mesh = request.build();
        const double h_max = mesh.primal_volume[1].maxCoeff();

        for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
            const double p = p_list[pi];
            const auto start = std::chrono::steady_clock::now();
            const auto result = run_solver(mesh, k, p, flags);
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            all_converged = all_converged && result.converged;
            per_p[pi].push_back({level, h_max, result.lambda1, result.converged});

            std::string bound_cell, margin_cell;
            if (k >= 1 && k <= n_dim - 1) {
                const double bound = phodge::p_gallot_meyer_bound(n_dim, k, p, curvature);
                bound_cell = format_double(bound);
                if (bound > 0.0) margin_cell = format_double(result.lambda1 / bound);
            }
            csv += std::to_string(level) + "," + format_double(h_max) + "," +
                   std::to_string(k) + "," + format_double(p) + "," +
                   format_double(result.lambda1) + "," + bound_cell + "," + margin_cell + "," +
                   (result.converged ? "1" : "0") + "," +
                   format_double(no_timing ? 0.0 : seconds) + "\n";

            if (!record_dir.empty()) {
                JsonValue record = JsonValue::object();
                record.set("schema", "phodge.run_record.v1");
                record.set("artifact_version", kArtifactVersion);
                record.set("command", command_echo);
                JsonValue config = JsonValue::object();
                config.set("mesh", request.config_json());
                config.set("solver", flags.config_json());
                config.set("k", k);
                config.set("p", p);
                record.set("config", std::move(config));
                record.set("mesh", mesh_stats_json(mesh));
                record.set("results", result_json(result, false));
                JsonValue timing = JsonValue::object();
                timing.set("seconds", no_timing ? 0.0 : seconds);
                record.set("timing", std::move(timing));
                char name[128];
                std::snprintf(name, sizeof name, "%s/cell_%s_L%d_k%d_p%s.json", record_dir.c_str(),
                              geometry.c_str(), level, k, format_double(p).c_str());
                atomic_write(name, record.dump());
            }
        }
    }

    // Richardson extrapolation per p from the two finest levels; the
    // convergence order is estimated from three levels when available.
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        const auto& cells = per_p[pi];
        if (cells.size() < 2) continue;
        const auto& fine = cells[cells.size() - 1];
        const auto& coarse = cells[cells.size() - 2];
        const double ratio = coarse.h_max / fine.h_max;
        double order = 2.0;
        if (cells.size() >= 3) {
            const auto& coarser = cells[cells.size() - 3];
            const double d1 = coarse.lambda1 - coarser.lambda1;
            const double d2 = fine.lambda1 - coarse.lambda1;
            if (d1 != 0.0 && d2 != 0.0 && d1 / d2 > 0.0)
                order = std::min(4.0, std::max(0.5, std::log(std::abs(d1 / d2)) / std::log(ratio)));
        }
        const double factor = std::pow(ratio, order) - 1.0;
        if (factor <= 0.0) continue;
        const double extrapolated = fine.lambda1 + (fine.lambda1 - coarse.lambda1) / factor;

        std::string bound_cell, margin_cell;
        if (k >= 1 && k <= n_dim - 1) {
            const double bound = phodge::p_gallot_meyer_bound(n_dim, k, p_list[pi], curvature);
            bound_cell = format_double(bound);
            if (bound > 0.0) margin_cell = format_double(extrapolated / bound);
        }
        const bool conv = fine.converged && coarse.converged;
        csv += std::string("-1,0,") + std::to_string(k) + "," + format_double(p_list[pi]) + "," +
               format_double(extrapolated) + "," + bound_cell + "," + margin_cell + "," +
               (conv ? "1" : "0") + ",0\n";
    }

    atomic_write(csv_path, csv);
    std::printf("wrote %s\n", csv_path.c_str());
    return all_converged ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete p-Hodge Laplacian spectra on simplicial meshes"};
    app.require_subcommand(1);
    const std::string command_echo = join_command(argc, argv);

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "Generate or convert a mesh, with stats");
    std::string mesh_config;
    mesh_cmd->add_option("--config", mesh_config, "Flat key=value config file (flags win)");
    MeshRequest mesh_request;
    mesh_request.add_options(mesh_cmd);
    std::string mesh_output = "mesh.off";
    mesh_cmd->add_option("--output", mesh_output, "OFF output path");

    // spectrum
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Compute lambda_1 of the p-Hodge Laplacian");
    std::string spectrum_config;
    spectrum_cmd->add_option("--config", spectrum_config, "Flat key=value config file (flags win)");
    MeshRequest spectrum_mesh;
    spectrum_mesh.add_options(spectrum_cmd);
    SolverFlags spectrum_flags;
    spectrum_flags.add_options(spectrum_cmd);
    int spectrum_k = 0;
    double spectrum_p = 2.0;
    std::string spectrum_output, spectrum_history;
    bool spectrum_no_timing = false, spectrum_save_eigenform = false;
    spectrum_cmd->add_option("--k", spectrum_k, "Cochain degree");
    spectrum_cmd->add_option("--p", spectrum_p, "Exponent p >= 2");
    spectrum_cmd->add_option("--output", spectrum_output, "RunRecord JSON path");
    spectrum_cmd->add_option("--history", spectrum_history, "Quotient history CSV path");
    spectrum_cmd->add_flag("--no-timing", spectrum_no_timing,
                           "Zero the timing field for byte-reproducible records");
    spectrum_cmd->add_flag("--save-eigenform", spectrum_save_eigenform,
                           "Embed the eigenform values in the record");

    // bounds
    auto* bounds_cmd = app.add_subcommand("bounds", "Certify lambda_1 against the closed-form bound");
    std::string bounds_config;
    bounds_cmd->add_option("--config", bounds_config, "Flat key=value config file (flags win)");
    std::string bounds_record, bounds_output;
    int bounds_n = 2, bounds_k = 1;
    double bounds_p = 2.0, bounds_H = 1.0, bounds_slack = 0.05;
    double bounds_lambda = -1.0;
    bounds_cmd->add_option("--record", bounds_record, "RunRecord JSON to certify");
    bounds_cmd->add_option("--n", bounds_n, "Manifold dimension");
    bounds_cmd->add_option("--k", bounds_k, "Form degree (inline mode)");
    bounds_cmd->add_option("--p", bounds_p, "Exponent (inline mode)");
    auto* h_opt = bounds_cmd->add_option("--H", bounds_H, "Curvature-operator lower bound");
    auto* lambda_opt =
        bounds_cmd->add_option("--lambda1", bounds_lambda, "Computed lambda_1 (inline mode)");
    bounds_cmd->add_option("--slack", bounds_slack, "Certification slack (fraction of the bound)");
    bounds_cmd->add_option("--output", bounds_output, "BoundReport JSON path");

    // study
    auto* study_cmd = app.add_subcommand("study", "Refinement / continuation sweep to CSV");
    std::string study_config;
    study_cmd->add_option("--config", study_config, "Flat key=value config file (flags win)");
    std::string study_geometry = "icosphere";
    std::vector<int> study_levels;
    std::vector<double> study_p{2.0};
    int study_k = 0;
    SolverFlags study_flags;
    study_flags.add_options(study_cmd);
    std::string study_csv = "study.csv", study_records;
    bool study_no_timing = false;
    study_cmd->add_option("--geometry", study_geometry, "icosphere or flat-torus")
        ->check(CLI::IsMember({"icosphere", "flat-torus"}));
    study_cmd->add_option("--levels", study_levels,
                          "Refinement levels (icosphere) or lattice sizes (flat-torus)")
        ->required();
    study_cmd->add_option("--k", study_k, "Cochain degree");
    study_cmd->add_option("--p-list", study_p, "Exponents to sweep");
    study_cmd->add_option("--csv", study_csv, "Output CSV path");
    study_cmd->add_option("--record-dir", study_records, "Directory for per-cell RunRecords");
    study_cmd->add_flag("--no-timing", study_no_timing,
                        "Zero the seconds column for byte-reproducible tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 1;      // any usage problem maps to exit 1
    }

    try {
        if (mesh_cmd->parsed() && !mesh_config.empty()) apply_flat_config(mesh_cmd, mesh_config);
        if (spectrum_cmd->parsed() && !spectrum_config.empty())
            apply_flat_config(spectrum_cmd, spectrum_config);
        if (bounds_cmd->parsed() && !bounds_config.empty())
            apply_flat_config(bounds_cmd, bounds_config);
        if (study_cmd->parsed() && !study_config.empty())
            apply_flat_config(study_cmd, study_config);

        if (mesh_cmd->parsed()) return cmd_mesh(mesh_request, mesh_output, command_echo);
        if (spectrum_cmd->parsed())
            return cmd_spectrum(spectrum_mesh, spectrum_flags, spectrum_k, spectrum_p,
                                spectrum_output, spectrum_history, spectrum_no_timing,
                                spectrum_save_eigenform, command_echo);
        if (bounds_cmd->parsed()) {
            std::optional<double> lambda;
            if (lambda_opt->count() > 0) lambda = bounds_lambda;
            if (bounds_record.empty() && !lambda) {
                std::fprintf(stderr, "error: bounds needs --record or --lambda1\n");
                return 1;
            }
            if (h_opt->count() == 0) {
                // H is geometric knowledge a record cannot carry
                std::fprintf(stderr, "error: bounds needs an explicit --H\n");
                return 1;
            }
            return cmd_bounds(bounds_record, bounds_n, bounds_k, bounds_p, bounds_H, lambda,
                              bounds_slack, bounds_output);
        }
        if (study_cmd->parsed())
            return cmd_study(study_geometry, study_levels, study_k, study_p, study_flags,
                             study_csv, study_records, study_no_timing, command_echo);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
