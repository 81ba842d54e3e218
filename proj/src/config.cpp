#include "riesz/config.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "riesz/io.hpp"
#include "riesz/sphere.hpp"
#include "riesz/steady.hpp"

namespace riesz {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw ConfigError("not a number: '" + s + "'");
    return v;
}

template <class Int>
Int to_integer(const std::string& s)
{
    Int v = 0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw ConfigError("not an integer: '" + s + "'");
    return v;
}

bool to_bool(const std::string& s)
{
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError("not a boolean: '" + s + "'");
}

std::vector<double> to_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(item));
    }
    return out;
}

std::string from_list(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::format_double(v[i]);
    return s;
}

std::string short_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string one_of(const std::string& s, std::initializer_list<const char*> allowed)
{
    for (const char* a : allowed)
        if (s == a) return s;
    std::string msg = "expected one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg + ", got '" + s + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyDef {
    std::string key;
    Setter set;
    Getter get;
};

const std::vector<KeyDef>& key_table()
{
    using io::format_double;
    static const std::vector<KeyDef> table = {
        {"geometry", [](RunConfig& c, const std::string& v) { c.geometry = one_of(v, {"sphere", "file"}); },
         [](const RunConfig& c) { return c.geometry; }},
        {"geometry.n", [](RunConfig& c, const std::string& v) { c.n = to_integer<int>(v); },
         [](const RunConfig& c) { return std::to_string(c.n); }},
        {"geometry.count", [](RunConfig& c, const std::string& v) { c.count = to_integer<std::size_t>(v); },
         [](const RunConfig& c) { return std::to_string(c.count); }},
        {"geometry.scheme", [](RunConfig& c, const std::string& v) { c.scheme = parse_sphere_scheme(v); },
         [](const RunConfig& c) { return to_string(c.scheme); }},
        {"geometry.file", [](RunConfig& c, const std::string& v) { c.geometry_file = v; },
         [](const RunConfig& c) { return c.geometry_file.string(); }},
        {"kernel", [](RunConfig& c, const std::string& v) { c.kernel = one_of(v, {"intertwining", "power", "file"}); },
         [](const RunConfig& c) { return c.kernel; }},
        {"kernel.file", [](RunConfig& c, const std::string& v) { c.kernel_file = v; },
         [](const RunConfig& c) { return c.kernel_file.string(); }},
        {"kernel.diagonal", [](RunConfig& c, const std::string& v) { c.diagonal = parse_diagonal_rule(v); },
         [](const RunConfig& c) { return to_string(c.diagonal); }},
        {"kernel.distance", [](RunConfig& c, const std::string& v) { c.distance = parse_distance_kind(v); },
         [](const RunConfig& c) { return to_string(c.distance); }},
        {"kernel.amplitude", [](RunConfig& c, const std::string& v) { c.amplitude = to_double(v); },
         [](const RunConfig& c) { return format_double(c.amplitude); }},
        {"kernel.anisotropy", [](RunConfig& c, const std::string& v) { c.anisotropy = to_double(v); },
         [](const RunConfig& c) { return format_double(c.anisotropy); }},
        {"sigma", [](RunConfig& c, const std::string& v) { c.sigma = to_double(v); },
         [](const RunConfig& c) { return format_double(c.sigma); }},
        {"m", [](RunConfig& c, const std::string& v) { c.m = to_double(v); },
         [](const RunConfig& c) { return format_double(c.m); }},
        {"regime", [](RunConfig& c, const std::string& v) { c.regime = parse_regime(v); },
         [](const RunConfig& c) { return to_string(c.regime); }},
        {"t_end", [](RunConfig& c, const std::string& v) { c.t_end = to_double(v); },
         [](const RunConfig& c) { return format_double(c.t_end); }},
        {"step.adaptive", [](RunConfig& c, const std::string& v) { c.step.adaptive = to_bool(v); },
         [](const RunConfig& c) { return std::string(c.step.adaptive ? "true" : "false"); }},
        {"step.dt", [](RunConfig& c, const std::string& v) { c.step.dt_initial = to_double(v); },
         [](const RunConfig& c) { return format_double(c.step.dt_initial); }},
        {"step.rtol", [](RunConfig& c, const std::string& v) { c.step.rtol = to_double(v); },
         [](const RunConfig& c) { return format_double(c.step.rtol); }},
        {"step.eta", [](RunConfig& c, const std::string& v) { c.step.eta = to_double(v); },
         [](const RunConfig& c) { return format_double(c.step.eta); }},
        {"step.dt_min", [](RunConfig& c, const std::string& v) { c.step.dt_min = to_double(v); },
         [](const RunConfig& c) { return format_double(c.step.dt_min); }},
        {"step.dt_max", [](RunConfig& c, const std::string& v) { c.step.dt_max = to_double(v); },
         [](const RunConfig& c) { return format_double(c.step.dt_max); }},
        {"init",
         [](RunConfig& c, const std::string& v) {
             c.init = one_of(v, {"constant", "file", "random", "bubble", "separable", "cosine"});
         },
         [](const RunConfig& c) { return c.init; }},
        {"init.value", [](RunConfig& c, const std::string& v) { c.init_value = to_double(v); },
         [](const RunConfig& c) { return format_double(c.init_value); }},
        {"init.file", [](RunConfig& c, const std::string& v) { c.init_file = v; },
         [](const RunConfig& c) { return c.init_file.string(); }},
        {"init.seed", [](RunConfig& c, const std::string& v) { c.seed = to_integer<std::uint64_t>(v); },
         [](const RunConfig& c) { return std::to_string(c.seed); }},
        {"init.amplitude", [](RunConfig& c, const std::string& v) { c.init_amplitude = to_double(v); },
         [](const RunConfig& c) { return format_double(c.init_amplitude); }},
        {"init.lambda", [](RunConfig& c, const std::string& v) { c.bubble_lambda = to_double(v); },
         [](const RunConfig& c) { return format_double(c.bubble_lambda); }},
        {"init.c", [](RunConfig& c, const std::string& v) { c.bubble_c = to_double(v); },
         [](const RunConfig& c) { return format_double(c.bubble_c); }},
        {"init.xi0", [](RunConfig& c, const std::string& v) { c.bubble_xi0 = to_list(v); },
         [](const RunConfig& c) { return from_list(c.bubble_xi0); }},
        {"init.separable_c", [](RunConfig& c, const std::string& v) { c.separable_c = to_double(v); },
         [](const RunConfig& c) { return format_double(c.separable_c); }},
        {"diagnostics.q", [](RunConfig& c, const std::string& v) { c.q_set = to_list(v); },
         [](const RunConfig& c) { return from_list(c.q_set); }},
        {"renormalize", [](RunConfig& c, const std::string& v) { c.renormalize = to_bool(v); },
         [](const RunConfig& c) { return std::string(c.renormalize ? "true" : "false"); }},
        {"snapshots", [](RunConfig& c, const std::string& v) { c.snapshots = to_integer<std::size_t>(v); },
         [](const RunConfig& c) { return std::to_string(c.snapshots); }},
        {"output", [](RunConfig& c, const std::string& v) { c.output = v; },
         [](const RunConfig& c) { return c.output.string(); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& d : key_table()) k.push_back(d.key);
        return k;
    }();
    return keys;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

std::vector<std::string> apply_settings(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv)
{
    std::vector<std::string> errors;
    for (const auto& [key, value] : kv) {
        const KeyDef* def = nullptr;
        for (const auto& d : key_table())
            if (d.key == key) def = &d;
        if (!def) {
            errors.push_back("unknown key '" + key + "'");
            continue;
        }
        try {
            def->set(cfg, value);
        } catch (const std::exception& e) {
            errors.push_back(key + ": " + e.what());
        }
    }
    return errors;
}

std::string to_text(const RunConfig& cfg)
{
    std::string s;
    for (const auto& d : key_table()) s += d.key + " = " + d.get(cfg) + "\n";
    return s;
}

std::map<std::string, std::string> to_map(const RunConfig& cfg)
{
    std::map<std::string, std::string> m;
    for (const auto& d : key_table()) m[d.key] = d.get(cfg);
    return m;
}

ConfigCheck validate_config(const RunConfig& cfg)
{
    ConfigCheck chk;
    auto& v = chk.violations;
    int n = cfg.n;
    if (cfg.geometry == "sphere") {
        if (n != 1 && n != 2) v.push_back("geometry.n must be 1 or 2 for sphere builds");
        if (n == 1 && cfg.scheme != SphereScheme::uniform_angle) v.push_back("geometry.scheme must be uniform_angle for n = 1");
        if (n == 2 && cfg.scheme == SphereScheme::uniform_angle) v.push_back("geometry.scheme must be fibonacci or equal_area for n = 2");
        if (cfg.count < 8) v.push_back("geometry.count must be at least 8");
    } else if (cfg.geometry_file.empty()) {
        v.push_back("geometry.file is required when geometry = file");
    } else if (!std::filesystem::exists(cfg.geometry_file)) {
        v.push_back("geometry.file does not exist: " + cfg.geometry_file.string());
    } else {
        try {
            n = load_geometry(cfg.geometry_file).dim();
        } catch (const std::exception& e) {
            v.push_back(std::string("geometry.file: ") + e.what());
        }
    }
    if (cfg.kernel == "intertwining" && cfg.geometry != "sphere")
        v.push_back("kernel = intertwining needs geometry = sphere");
    if (cfg.kernel == "power") {
        if (!(cfg.amplitude > 0.0)) v.push_back("kernel.amplitude must be positive");
        if (!(std::abs(cfg.anisotropy) < 1.0)) v.push_back("kernel.anisotropy must lie in (-1, 1)");
    }
    if (cfg.kernel == "file") {
        if (cfg.kernel_file.empty()) v.push_back("kernel.file is required when kernel = file");
        else if (!std::filesystem::exists(cfg.kernel_file)) v.push_back("kernel.file does not exist: " + cfg.kernel_file.string());
    }
    if (!(cfg.sigma > 0.0 && cfg.sigma < 0.5 * n))
        v.push_back("sigma must lie in (0, n/2) = (0, " + short_num(0.5 * n) + ")");
    if (!(cfg.m > 0.0)) v.push_back("m must be positive");
    if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) v.push_back("t_end must be positive and finite");
    if (!(cfg.step.dt_initial > 0.0)) v.push_back("step.dt must be positive");
    if (!(cfg.step.rtol > 0.0)) v.push_back("step.rtol must be positive");
    if (!(cfg.step.eta > 0.0 && cfg.step.eta <= 1.0)) v.push_back("step.eta must lie in (0, 1]");
    if (!(cfg.step.dt_min > 0.0)) v.push_back("step.dt_min must be positive");
    if (!(cfg.step.dt_max > 0.0)) v.push_back("step.dt_max must be positive");
    if (cfg.regime == Regime::rescaled && cfg.m == 1.0) v.push_back("regime = rescaled needs m != 1");
    if (cfg.init == "constant" && !(cfg.init_value > 0.0)) v.push_back("init.value must be positive");
    if (cfg.init == "file") {
        if (cfg.init_file.empty()) v.push_back("init.file is required when init = file");
        else if (!std::filesystem::exists(cfg.init_file)) v.push_back("init.file does not exist: " + cfg.init_file.string());
    }
    if (cfg.init == "cosine" && !(std::abs(cfg.init_amplitude) < 1.0)) v.push_back("init.amplitude must lie in (-1, 1)");
    if (cfg.init == "bubble") {
        if (cfg.geometry != "sphere") v.push_back("init = bubble needs geometry = sphere");
        if (!(cfg.bubble_lambda > 0.0)) v.push_back("init.lambda must be positive");
        if (!(cfg.bubble_c > 0.0)) v.push_back("init.c must be positive");
        if (!cfg.bubble_xi0.empty()) {
            if (cfg.bubble_xi0.size() != static_cast<std::size_t>(n + 1))
                v.push_back("init.xi0 must have n + 1 coordinates");
            else if (std::abs(std::sqrt(dot(cfg.bubble_xi0, cfg.bubble_xi0)) - 1.0) > 1e-12)
                v.push_back("init.xi0 must be a unit vector");
        }
    }
    if (cfg.init == "separable") {
        if (cfg.m == 1.0) v.push_back("init = separable needs m != 1");
        if (!(cfg.separable_c > 0.0)) v.push_back("init.separable_c must be positive");
    }
    if (cfg.q_set.empty()) v.push_back("diagnostics.q must list at least one exponent");
    for (double q : cfg.q_set)
        if (!(q >= 1.0)) v.push_back("diagnostics.q entries must be >= 1");
    if (cfg.snapshots < 1) v.push_back("snapshots must be at least 1");

    if (cfg.sigma > 0.0 && cfg.sigma < 0.5 * n && cfg.m > 0.0) {
        const double mc = critical_exponent(n, cfg.sigma);
        if (cfg.m < mc - 1e-15) {
            chk.exploratory = true;
            chk.warnings.push_back("m = " + short_num(cfg.m) + " is below the critical exponent " + short_num(mc) + "; the blow-up behavior is unclear, run is exploratory");
        }
    }
    return chk;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& overrides)
{
    RunConfig cfg;
    std::vector<std::string> errors;
    if (!path.empty()) errors = apply_settings(cfg, read_config_file(path));
    const auto more = apply_settings(cfg, overrides);
    errors.insert(errors.end(), more.begin(), more.end());
    const auto chk = validate_config(cfg);
    errors.insert(errors.end(), chk.violations.begin(), chk.violations.end());
    if (!errors.empty()) throw ValidationError("invalid run configuration", errors);
    return cfg;
}

std::shared_ptr<const Geometry> make_geometry(const RunConfig& cfg)
{
    if (cfg.geometry == "file") return std::make_shared<const Geometry>(load_geometry(cfg.geometry_file));
    return std::make_shared<const Geometry>(build_sphere(cfg.n, cfg.count, cfg.scheme));
}

KernelOperator make_kernel(const RunConfig& cfg, std::shared_ptr<const Geometry> geom)
{
    if (cfg.kernel == "file") return load_kernel(cfg.kernel_file, geom);
    if (cfg.kernel == "intertwining") return build_intertwining_kernel(geom, cfg.sigma, cfg.diagonal);
    const double A = cfg.amplitude, eps = cfg.anisotropy;
    const Geometry* g = geom.get();
    return build_power_kernel(
        geom, cfg.sigma,
        [A, eps, g](std::size_t i, std::size_t j) { return A * (1.0 + 0.5 * eps * (g->node(i)[0] + g->node(j)[0])); },
        cfg.diagonal, cfg.distance);
}

Field random_initial_data(const Geometry& geom, std::uint64_t seed)
{
    Rng rng(seed);
    const auto d = static_cast<std::size_t>(geom.ambient_dim());
    if (d == 0) throw ConfigError("random initial data needs node coordinates");
    struct Mode {
        double a, phase;
        std::vector<double> dir;
    };
    std::vector<Mode> modes;
    for (int j = 1; j <= 4; ++j) {
        Mode md;
        md.a = rng.uniform(-0.2, 0.2);
        md.phase = rng.uniform(0.0, 2.0 * pi);
        md.dir.resize(d);
        double len = 0.0;
        while (len < 1e-3) {
            for (auto& x : md.dir) x = rng.uniform(-1.0, 1.0);
            len = std::sqrt(dot(md.dir, md.dir));
        }
        for (auto& x : md.dir) x /= len;
        modes.push_back(std::move(md));
    }
    Field u(geom.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double s = 1.0;
        for (std::size_t j = 0; j < modes.size(); ++j) {
            const double k = static_cast<double>(j + 1);
            s += modes[j].a / k * std::cos(k * dot(modes[j].dir, geom.node(i)) + modes[j].phase);
        }
        u[i] = s;
    }
    return u;
}

Field make_initial_data(const RunConfig& cfg, const KernelOperator& K)
{
    const Geometry& g = K.geometry();
    const std::size_t N = g.size();
    if (cfg.init == "constant") return Field(N, cfg.init_value);
    if (cfg.init == "random") return random_initial_data(g, cfg.seed);
    if (cfg.init == "cosine") {
        Field u(N);
        for (std::size_t i = 0; i < N; ++i) u[i] = 1.0 + cfg.init_amplitude * g.node(i)[0];
        return u;
    }
    if (cfg.init == "file") {
        Field u = io::load_field(cfg.init_file).values;
        if (u.size() != N) throw ConfigError("init.file has " + std::to_string(u.size()) + " values, geometry has " + std::to_string(N));
        for (double x : u)
            if (!(x > 0.0 && std::isfinite(x))) throw ConfigError("init.file must hold positive values");
        return u;
    }
    if (cfg.init == "bubble") {
        std::vector<double> xi0 = cfg.bubble_xi0;
        if (xi0.empty()) {
            xi0.assign(static_cast<std::size_t>(g.ambient_dim()), 0.0);
            xi0.back() = 1.0;
        }
        return bubble(g, {xi0, cfg.bubble_lambda, cfg.bubble_c}, K.sigma());
    }
    // separable: c^{1/(m-1)} S, the closed-form trajectory at t = 0.
    const auto ext = solve_extremal(K, cfg.m);
    if (!ext.converged) throw NumericalError("steady state did not converge: " + ext.status);
    const auto st = steady_from_extremal(K, ext);
    Field u = st.S;
    const double f = std::pow(cfg.separable_c, 1.0 / (cfg.m - 1.0));
    for (auto& x : u) x *= f;
    return u;
}

}  // namespace riesz
