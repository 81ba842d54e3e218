#include "riesz/run.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "riesz/io.hpp"
#include "riesz/sphere.hpp"

namespace riesz {

namespace {

using json = nlohmann::ordered_json;

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string termination_name(Termination t)
{
    switch (t) {
    case Termination::t_end: return "t_end";
    case Termination::blowup: return "blow-up";
    case Termination::stopped: return "stagnation";
    }
    return "unknown";
}

std::string q_label(double q)
{
    std::string s = io::format_double(q);
    return "M_" + s;
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Slope of log V^{1/(m+1)} against log t over the second half of the run (m > 1 growth).
double growth_exponent(const std::vector<double>& t, const std::vector<double>& V, double m)
{
    std::vector<double> lx, ly;
    const double t_half = 0.5 * t.back();
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] > 0.0 && t[i] >= t_half) {
            lx.push_back(std::log(t[i]));
            ly.push_back(std::log(V[i]) / (m + 1.0));
        }
    if (lx.size() < 3) return std::nan("");
    return slope(lx, ly);
}

void write_report(const std::filesystem::path& path, const BlowupReport& b, double m)
{
    std::ostringstream os;
    os << "riesz-flow-blowup 1\n";
    os << "m " << io::format_double(m) << "\n";
    os << "T_star " << io::format_double(b.T_star) << "\n";
    os << "exponent_sup " << io::format_double(b.exponent_sup) << "\n";
    os << "exponent_volume " << io::format_double(b.exponent_volume) << "\n";
    os << "predicted_exponent " << io::format_double(b.predicted_exponent) << "\n";
    os << "z_slope_defect " << io::format_double(b.z_slope_defect) << "\n";
    os << "concavity_defect " << io::format_double(b.concavity_defect) << "\n";
    os << "Z0 " << io::format_double(b.Z0) << "\n";
    os << "samples " << b.samples << "\n";
    io::write_atomic(path, os.str());
}

std::map<std::string, double> read_report(const std::filesystem::path& path)
{
    std::map<std::string, double> out;
    std::ifstream in(path);
    std::string key, value;
    std::getline(in, key);
    while (in >> key >> value) {
        try {
            out[key] = std::stod(value);
        } catch (const std::exception&) {
            throw ConfigError("malformed blow-up report " + path.string());
        }
    }
    return out;
}

}  // namespace

std::vector<std::string> diagnostics_columns(const std::vector<double>& q_set)
{
    std::vector<std::string> c{"t", "V", "a", "J"};
    for (double q : q_set) c.push_back(q_label(q));
    for (const char* s : {"G", "Z", "harnack", "ps_residual", "u_max", "u_min", "dt"}) c.push_back(s);
    return c;
}

std::vector<double> CsvTable::column(const std::string& name) const
{
    for (std::size_t k = 0; k < columns.size(); ++k)
        if (columns[k] == name) {
            std::vector<double> out;
            out.reserve(rows.size());
            for (const auto& r : rows) out.push_back(r[k]);
            return out;
        }
    throw ConfigError("diagnostics have no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                row.push_back(std::nan(""));
            }
        }
        if (row.size() != t.columns.size())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(t.columns.size()) + " cells");
        t.rows.push_back(std::move(row));
    }
    return t;
}

RunSummary run_experiment(const RunConfig& cfg, const std::filesystem::path& out_dir)
{
    const auto chk = validate_config(cfg);
    if (!chk.ok()) throw ValidationError("invalid run configuration", chk.violations);
    const std::string started = utc_now();
    const auto wall0 = std::chrono::steady_clock::now();

    std::filesystem::create_directories(out_dir);
    auto geom = make_geometry(cfg);
    const KernelOperator K = make_kernel(cfg, geom);
    Field u0 = make_initial_data(cfg, K);

    EvolveOptions opt;
    opt.step = cfg.step;
    opt.q_set = cfg.q_set;
    opt.renormalize = cfg.renormalize;
    opt.snapshot_count = cfg.snapshots;
    const Trajectory tr = evolve(K, FlowState::make(std::move(u0), cfg.m, cfg.regime), cfg.t_end, opt);

    {
        std::ostringstream os;
        const auto cols = diagnostics_columns(cfg.q_set);
        for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
        os << "\n";
        for (const auto& r : tr.records) {
            std::vector<double> row{r.t, r.V, r.a, r.J};
            row.insert(row.end(), r.M.begin(), r.M.end());
            for (double x : {r.G, r.Z, r.harnack, r.ps_residual, r.u_max, r.u_min, r.dt}) row.push_back(x);
            for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << io::format_double(row[k]);
            os << "\n";
        }
        io::write_atomic(out_dir / "diagnostics.csv", os.str());
    }
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "snapshot_%04zu.field", k);
        io::save_field(out_dir / name, tr.snapshots[k].u, tr.snapshots[k].t);
    }
    io::save_field(out_dir / "final.field", tr.final_state.u, tr.final_state.t);

    RunSummary sum;
    sum.termination = termination_name(tr.reason);
    sum.exploratory = chk.exploratory;
    sum.records = tr.records.size();
    sum.directory = out_dir;
    const auto& last = tr.records.back();
    auto& sc = sum.scalars;
    sc["t_final"] = last.t;
    sc["V"] = last.V;
    sc["a"] = last.a;
    sc["J"] = last.J;
    for (std::size_t k = 0; k < cfg.q_set.size(); ++k) sc[q_label(cfg.q_set[k])] = last.M[k];
    sc["G"] = last.G;
    sc["harnack"] = last.harnack;
    sc["ps_residual"] = last.ps_residual;
    sc["accepted_steps"] = static_cast<double>(tr.accepted);
    sc["rejected_steps"] = static_cast<double>(tr.rejected);
    if (cfg.regime == Regime::critical) sc["max_renorm_drift"] = tr.max_renorm_drift;

    if (tr.reason == Termination::blowup && cfg.m < 1.0 && cfg.regime == Regime::raw) {
        try {
            const BlowupReport b = detect_blowup(tr);
            write_report(out_dir / "blowup.report", b, cfg.m);
            sc["T_star"] = b.T_star;
            sc["exponent_sup"] = b.exponent_sup;
            sc["exponent_volume"] = b.exponent_volume;
            sc["predicted_exponent"] = b.predicted_exponent;
        } catch (const NumericalError&) {
            sc["T_star"] = std::nan("");
        }
    }
    if (cfg.m > 1.0 && cfg.regime == Regime::raw) {
        std::vector<double> t, V;
        for (const auto& r : tr.records) {
            t.push_back(r.t);
            V.push_back(r.V);
        }
        sc["growth_exponent"] = growth_exponent(t, V, cfg.m);
        sc["predicted_growth_exponent"] = 1.0 / (cfg.m - 1.0);
    }
    if (cfg.regime == Regime::critical && geom->nodes_on_unit_sphere() && geom->ambient_dim() == geom->dim() + 1) {
        const BubbleFit fit = fit_bubble(*geom, tr.final_state.u, cfg.sigma);
        sc["bubble_residual"] = fit.residual;
        sc["bubble_lambda"] = fit.params.lambda;
        sc["bubble_c"] = fit.params.c;
    }

    json manifest;
    manifest["tool"] = "riesz-flow";
    manifest["version"] = tool_version;
    manifest["config"] = to_map(cfg);
    manifest["started"] = started;
    manifest["finished"] = utc_now();
    manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    manifest["workers"] = worker_count();
    manifest["termination"] = sum.termination;
    manifest["exploratory"] = sum.exploratory;
    manifest["warnings"] = chk.warnings;
    manifest["records"] = sum.records;
    manifest["snapshots"] = tr.snapshots.size();
    json scalars = json::object();
    for (const auto& [k, v] : sc) scalars[k] = std::isfinite(v) ? json(v) : json(nullptr);
    manifest["summary"] = scalars;
    io::write_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return sum;
}

RunConfig config_from_manifest(const std::filesystem::path& manifest)
{
    std::ifstream in(manifest);
    if (!in) throw ConfigError("cannot open manifest " + manifest.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("malformed manifest " + manifest.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("manifest has no config section");
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& [k, v] : j["config"].items()) kv.emplace_back(k, v.get<std::string>());
    RunConfig cfg;
    const auto errors = apply_settings(cfg, kv);
    if (!errors.empty()) throw ValidationError("invalid manifest configuration", errors);
    return cfg;
}

RunReport report_run(const std::filesystem::path& dir)
{
    const auto diag = dir / "diagnostics.csv";
    const auto man = dir / "manifest.json";
    if (!std::filesystem::exists(diag) || !std::filesystem::exists(man))
        throw ConfigError("no run found in " + dir.string() + " (need diagnostics.csv and manifest.json)");
    const RunConfig cfg = config_from_manifest(man);
    const CsvTable t = read_csv(diag);
    if (t.rows.empty()) throw ConfigError(diag.string() + " has no records");

    std::ostringstream txt, csv;
    txt << "run " << dir.string() << "\n";
    txt << "regime " << to_string(cfg.regime) << ", m = " << io::format_double(cfg.m) << ", sigma = "
        << io::format_double(cfg.sigma) << ", records " << t.rows.size() << "\n\n";
    txt << "monotonicity (per recorded step)\n";
    txt << "quantity  steps  decreasing_steps  worst_relative_drop  first  last\n";
    csv << "table,quantity,value1,value2,value3,value4\n";
    for (const char* name : {"a", "J", "G"}) {
        const auto col = t.column(name);
        std::size_t drops = 0;
        double worst = 0.0;
        for (std::size_t i = 1; i < col.size(); ++i) {
            const double d = (col[i] - col[i - 1]) / std::max(std::abs(col[i - 1]), 1e-300);
            if (d < 0.0) {
                ++drops;
                worst = std::min(worst, d);
            }
        }
        char line[256];
        std::snprintf(line, sizeof line, "%-8s  %5zu  %16zu  %19.3e  %.10g  %.10g\n", name, col.size() - 1, drops, worst,
                      col.front(), col.back());
        txt << line;
        csv << "monotonicity," << name << "," << col.size() - 1 << "," << drops << "," << io::format_double(worst) << ","
            << io::format_double(col.back()) << "\n";
    }

    txt << "\nexponents\n";
    txt << "quantity                 fitted        predicted\n";
    auto row = [&](const std::string& name, double fitted, double predicted) {
        char line[256];
        std::snprintf(line, sizeof line, "%-22s  %12.6g  %12.6g\n", name.c_str(), fitted, predicted);
        txt << line;
        csv << "exponent," << name << "," << io::format_double(fitted) << "," << io::format_double(predicted) << ",,\n";
    };
    bool any = false;
    if (std::filesystem::exists(dir / "blowup.report")) {
        const auto b = read_report(dir / "blowup.report");
        const double pred = -1.0 / (1.0 - cfg.m);
        row("sup_norm_blowup", b.at("exponent_sup"), pred);
        row("volume_norm_blowup", b.at("exponent_volume"), pred);
        txt << "T* = " << io::format_double(b.at("T_star")) << "\n";
        any = true;
    }
    if (cfg.m > 1.0 && cfg.regime == Regime::raw) {
        row("volume_norm_growth", growth_exponent(t.column("t"), t.column("V"), cfg.m), 1.0 / (cfg.m - 1.0));
        any = true;
    }
    if (!any) txt << "(no exponent applies to this run)\n";
    return {txt.str(), csv.str()};
}

}  // namespace riesz
