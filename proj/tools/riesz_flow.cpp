#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "riesz/config.hpp"
#include "riesz/io.hpp"
#include "riesz/run.hpp"
#include "riesz/spectral.hpp"
#include "riesz/sphere.hpp"
#include "riesz/steady.hpp"

namespace fs = std::filesystem;
using namespace riesz;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

// Options shared by every subcommand that needs a geometry and a kernel. They resolve to
// the run-config key set so files, flags and --set agree.
struct Source {
    std::string config;
    std::vector<std::string> sets;
    std::string geometry_file, kernel_file;
    std::optional<double> sigma, m;
    std::optional<int> n;
    std::optional<std::size_t> count;
    std::string scheme;

    void attach(CLI::App* app)
    {
        app->add_option("--config", config, "run config file (key = value)");
        app->add_option("--set", sets, "override a config key, key=value");
        app->add_option("--geometry", geometry_file, "geometry file (default: sphere build)");
        app->add_option("--kernel", kernel_file, "kernel file (default: sphere kernel)");
        app->add_option("--sigma", sigma, "order sigma in (0, n/2)");
        app->add_option("--m", m, "exponent m > 0");
        app->add_option("--n", n, "sphere dimension for builds");
        app->add_option("--count", count, "node count for builds");
        app->add_option("--scheme", scheme, "uniform_angle | fibonacci | equal_area");
    }

    std::vector<std::pair<std::string, std::string>> overrides() const
    {
        std::vector<std::pair<std::string, std::string>> kv;
        if (!geometry_file.empty()) {
            kv.emplace_back("geometry", "file");
            kv.emplace_back("geometry.file", geometry_file);
        }
        if (!kernel_file.empty()) {
            kv.emplace_back("kernel", "file");
            kv.emplace_back("kernel.file", kernel_file);
        }
        if (n) kv.emplace_back("geometry.n", std::to_string(*n));
        if (count) kv.emplace_back("geometry.count", std::to_string(*count));
        if (!scheme.empty()) kv.emplace_back("geometry.scheme", scheme);
        if (n && *n == 2 && scheme.empty()) kv.emplace_back("geometry.scheme", "fibonacci");
        if (sigma) kv.emplace_back("sigma", io::format_double(*sigma));
        if (m) kv.emplace_back("m", io::format_double(*m));
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        return kv;
    }

    RunConfig resolve() const { return load_config(config, overrides()); }
};

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_atomic(path, text);
}

fs::path default_out(const std::string& stem)
{
    const char* root = std::getenv("RIESZ_FLOW_OUT");
    return fs::path(root && *root ? root : "runs") / stem;
}

void print_warnings(const ConfigCheck& chk)
{
    for (const auto& w : chk.warnings) std::cerr << "warning: " << w << "\n";
}

void apply_worker_env()
{
    const char* env = std::getenv("RIESZ_FLOW_WORKERS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (*end != '\0' || w < 1) throw ConfigError("RIESZ_FLOW_WORKERS must be a positive integer");
    set_worker_count(static_cast<int>(w));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical laboratory for Riesz-potential integral flows"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    // geom
    auto* geom = app.add_subcommand("geom", "build, validate or export a geometry");
    geom->require_subcommand(1);
    auto* gbuild = geom->add_subcommand("build", "build a sphere point set");
    int g_n = 1;
    std::size_t g_count = 256;
    std::string g_scheme, g_out, g_in;
    bool g_dist = false;
    gbuild->add_option("--n", g_n, "sphere dimension (1 or 2)");
    gbuild->add_option("--count", g_count, "number of nodes");
    gbuild->add_option("--scheme", g_scheme, "uniform_angle | fibonacci | equal_area");
    gbuild->add_option("--out", g_out, "output geometry file")->required();
    gbuild->add_flag("--with-distances", g_dist, "also write distance tables");
    auto* gval = geom->add_subcommand("validate", "check geometry invariants");
    gval->add_option("file", g_in, "geometry file")->required();
    auto* gexp = geom->add_subcommand("export", "write nodes and weights as CSV");
    gexp->add_option("file", g_in, "geometry file")->required();
    gexp->add_option("--out", g_out, "CSV output (default stdout)");

    // kernel
    auto* kern = app.add_subcommand("kernel", "build, validate or apply a kernel");
    kern->require_subcommand(1);
    Source k_src;
    std::string k_out, k_field, k_type = "intertwining";
    auto* kbuild = kern->add_subcommand("build", "assemble a kernel matrix");
    k_src.attach(kbuild);
    kbuild->add_option("--type", k_type, "intertwining | power");
    kbuild->add_option("--out", k_out, "output kernel file")->required();
    auto* kval = kern->add_subcommand("validate", "check the kernel axioms");
    k_src.attach(kval);
    auto* kapp = kern->add_subcommand("apply", "apply a kernel to a field");
    k_src.attach(kapp);
    kapp->add_option("--field", k_field, "input field file")->required();
    kapp->add_option("--out", k_out, "output field file")->required();

    // steady
    auto* steady = app.add_subcommand("steady", "solve K S = S^m by nonlinear power iteration");
    Source s_src;
    std::string s_out, s_init;
    bool s_rescaled = false;
    s_src.attach(steady);
    steady->add_option("--out", s_out, "output field file")->required();
    steady->add_option("--init", s_init, "initial field file");
    steady->add_flag("--rescaled", s_rescaled, "write the rescaled steady state instead");

    // run
    auto* run = app.add_subcommand("run", "evolve a flow and write run artifacts");
    Source r_src;
    std::string r_out, r_manifest;
    r_src.attach(run);
    run->add_option("--out", r_out, "run directory (default $RIESZ_FLOW_OUT/<name>)");
    run->add_option("--from-manifest", r_manifest, "re-run the config recorded in a manifest");

    // fit-bubble
    auto* fit = app.add_subcommand("fit-bubble", "fit a sphere bubble to a field");
    Source f_src;
    std::string f_field;
    f_src.attach(fit);
    fit->add_option("--field", f_field, "field file")->required();

    // check-kelvin
    auto* kel = app.add_subcommand("check-kelvin", "evaluate both Kelvin identities on S^1 bubble data");
    double kv_sigma = 0.25, kv_lambda = 1.0, kv_x0 = 0.0, kv_blambda = 2.0, kv_angle = 0.7, kv_span = 3.0;
    int kv_points = 20;
    std::uint64_t kv_seed = 1;
    kel->add_option("--sigma", kv_sigma, "order sigma in (0, 1/2)");
    kel->add_option("--lambda", kv_lambda, "Kelvin radius");
    kel->add_option("--x0", kv_x0, "Kelvin centre");
    kel->add_option("--bubble-lambda", kv_blambda, "concentration of the bubble data");
    kel->add_option("--bubble-angle", kv_angle, "angle of the bubble centre on S^1");
    kel->add_option("--points", kv_points, "number of random test points");
    kel->add_option("--span", kv_span, "test points are drawn from [x0 - span, x0 + span]");
    kel->add_option("--seed", kv_seed, "seed for the test points");

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "linearized spectrum at a steady state");
    Source p_src;
    std::string p_steady, p_out;
    std::size_t p_k = 10;
    p_src.attach(spec);
    spec->add_option("--steady", p_steady, "steady field file")->required();
    spec->add_option("--k", p_k, "number of eigenpairs");
    spec->add_option("--out", p_out, "output directory for eigenvalues.csv and eigenfields");

    // report
    auto* rep = app.add_subcommand("report", "summarize a run directory");
    std::string rp_dir, rp_csv;
    rep->add_option("dir", rp_dir, "run directory")->required();
    rep->add_option("--csv", rp_csv, "also write the tables as CSV");

    // validate
    auto* val = app.add_subcommand("validate", "check a run config and list every violation");
    Source v_src;
    v_src.attach(val);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        apply_worker_env();

        if (*gbuild) {
            SphereScheme scheme = g_n == 1 ? SphereScheme::uniform_angle : SphereScheme::fibonacci;
            if (!g_scheme.empty()) scheme = parse_sphere_scheme(g_scheme);
            const Geometry g = build_sphere(g_n, g_count, scheme);
            save_geometry(g_out, g, g_dist);
            std::cout << "wrote " << g.size() << " nodes to " << g_out << "\n";
        } else if (*gval) {
            const Geometry g = load_geometry(g_in);
            std::cout << g_in << ": valid, " << g.size() << " nodes, n = " << g.dim() << ", volume "
                      << io::format_double(g.total_volume()) << "\n";
        } else if (*gexp) {
            const Geometry g = load_geometry(g_in);
            std::ostringstream os;
            for (int k = 0; k < g.ambient_dim(); ++k) os << "x" << k << ",";
            os << "weight\n";
            for (std::size_t i = 0; i < g.size(); ++i) {
                for (double x : g.node(i)) os << io::format_double(x) << ",";
                os << io::format_double(g.weights()[i]) << "\n";
            }
            if (g_out.empty()) std::cout << os.str();
            else write_text(g_out, os.str());
        } else if (*kbuild) {
            auto kv = k_src.overrides();
            kv.emplace_back("kernel", k_type);
            RunConfig cfg = load_config(k_src.config, kv);
            const KernelOperator K = make_kernel(cfg, make_geometry(cfg));
            save_kernel(k_out, K);
            std::cout << "wrote " << K.size() << "x" << K.size() << " kernel to " << k_out << "\n";
        } else if (*kval) {
            const RunConfig cfg = k_src.resolve();
            const KernelOperator K = make_kernel(cfg, make_geometry(cfg));
            const KernelReport r = validate_kernel(K);
            std::cout << format_report(r);
            if (!r.all_pass()) return exit_config;
        } else if (*kapp) {
            const RunConfig cfg = k_src.resolve();
            const KernelOperator K = make_kernel(cfg, make_geometry(cfg));
            const auto f = io::load_field(k_field);
            if (f.values.size() != K.size()) throw ConfigError("field length does not match the kernel");
            io::save_field(k_out, K.apply(f.values), f.t);
        } else if (*steady) {
            const RunConfig cfg = s_src.resolve();
            const KernelOperator K = make_kernel(cfg, make_geometry(cfg));
            std::optional<Field> init;
            if (!s_init.empty()) init = io::load_field(s_init).values;
            const auto ext = solve_extremal(K, cfg.m, init);
            std::cout << "extremal: " << ext.status << " after " << ext.iterations << " iterations, J = "
                      << io::format_double(ext.J_bar) << ", residual " << io::format_double(ext.residual) << "\n";
            if (!ext.converged) throw NumericalError("power iteration did not converge (" + ext.status + ")");
            SteadySolution st = steady_from_extremal(K, ext);
            if (s_rescaled) st = rescaled_steady(K, st);
            io::save_field(s_out, st.S);
            std::cout << "steady residual " << io::format_double(st.residual) << ", written to " << s_out << "\n";
        } else if (*run) {
            RunConfig cfg;
            std::string name = "run";
            if (!r_manifest.empty()) {
                cfg = config_from_manifest(r_manifest);
                const auto more = apply_settings(cfg, r_src.overrides());
                if (!more.empty()) throw ValidationError("invalid overrides", more);
                name = fs::path(r_manifest).parent_path().filename().string() + "-rerun";
            } else {
                cfg = r_src.resolve();
                if (!r_src.config.empty()) name = fs::path(r_src.config).stem().string();
            }
            const auto chk = validate_config(cfg);
            if (!chk.ok()) throw ValidationError("invalid run configuration", chk.violations);
            print_warnings(chk);
            const fs::path out = !r_out.empty() ? fs::path(r_out) : !cfg.output.empty() ? cfg.output : default_out(name);
            const RunSummary s = run_experiment(cfg, out);
            std::cout << "run finished: " << s.termination << " after " << s.records << " records, artifacts in "
                      << out.string() << "\n";
            for (const auto& [k, v] : s.scalars) std::cout << "  " << k << " = " << io::format_double(v) << "\n";
        } else if (*fit) {
            const RunConfig cfg = f_src.resolve();
            const auto geom_ptr = make_geometry(cfg);
            const auto f = io::load_field(f_field);
            const BubbleFit b = fit_bubble(*geom_ptr, f.values, cfg.sigma);
            std::cout << "lambda = " << io::format_double(b.params.lambda) << "\nc = " << io::format_double(b.params.c)
                      << "\nxi0 =";
            for (double x : b.params.xi0) std::cout << " " << io::format_double(x);
            std::cout << "\nresidual = " << io::format_double(b.residual) << "\nconverged = " << (b.converged ? "yes" : "no")
                      << "\n";
        } else if (*kel) {
            const BubbleParams b{{std::cos(kv_angle), std::sin(kv_angle)}, kv_blambda, 1.0};
            const auto v = flat_bubble(b, 1, kv_sigma);
            Rng rng(kv_seed);
            std::vector<std::vector<double>> pts;
            for (int i = 0; i < kv_points; ++i) pts.push_back({rng.uniform(kv_x0 - kv_span, kv_x0 + kv_span)});
            KelvinOptions opt;
            if (b.xi0[1] < 1.0) opt.breakpoints = {stereographic(b.xi0)[0]};
            const std::vector<double> x0{kv_x0};
            const auto r = check_kelvin_identities(v, 1, kv_sigma, x0, kv_lambda, pts, opt);
            std::cout << "level  defect_exterior_to_interior  defect_interior_to_exterior\n";
            for (const auto& l : r.levels)
                std::printf("%5d  %27.3e  %27.3e\n", l.level, l.defect_inner, l.defect_outer);
            std::cout << "truncation bar " << io::format_double(r.tail_bound) << ", points used " << r.points_used
                      << ", decreasing " << (r.decreasing ? "yes" : "no") << "\n";
            for (const auto& note : r.notes) std::cout << "note: " << note << "\n";
        } else if (*spec) {
            const RunConfig cfg = p_src.resolve();
            const KernelOperator K = make_kernel(cfg, make_geometry(cfg));
            const Field S = io::load_field(p_steady).values;
            const SpectrumResult r = linearized_spectrum(K, S, cfg.m, p_k);
            std::ostringstream os;
            os << "index,eigenvalue,residual\n";
            for (std::size_t k = 0; k < r.eigenvalues.size(); ++k)
                os << k << "," << io::format_double(r.eigenvalues[k]) << "," << io::format_double(r.residuals[k]) << "\n";
            if (p_out.empty()) {
                std::cout << os.str();
            } else {
                fs::create_directories(p_out);
                write_text(fs::path(p_out) / "eigenvalues.csv", os.str());
                for (std::size_t k = 0; k < r.psi.size(); ++k) {
                    io::save_field(fs::path(p_out) / ("psi_" + std::to_string(k) + ".field"), r.psi[k]);
                    io::save_field(fs::path(p_out) / ("phi_" + std::to_string(k) + ".field"), r.phi[k]);
                }
                std::cout << "wrote " << r.eigenvalues.size() << " eigenpairs to " << p_out << "\n";
            }
            std::cout << "gap 1 - lambda_2 = " << io::format_double(r.gap()) << ", symmetry defect "
                      << io::format_double(r.symmetry_defect) << "\n";
        } else if (*rep) {
            const RunReport r = report_run(rp_dir);
            std::cout << r.text;
            if (!rp_csv.empty()) write_text(rp_csv, r.csv);
        } else if (*val) {
            RunConfig cfg;
            std::vector<std::string> errors;
            if (!v_src.config.empty()) errors = apply_settings(cfg, read_config_file(v_src.config));
            const auto more = apply_settings(cfg, v_src.overrides());
            errors.insert(errors.end(), more.begin(), more.end());
            const auto chk = validate_config(cfg);
            errors.insert(errors.end(), chk.violations.begin(), chk.violations.end());
            print_warnings(chk);
            if (!errors.empty()) throw ValidationError("invalid run configuration", errors);
            std::cout << "ok" << (chk.exploratory ? " (exploratory)" : "") << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return 0;
}
