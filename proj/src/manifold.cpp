#include "riesz/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riesz/io.hpp"

namespace riesz {

namespace {

constexpr std::size_t kMaxReported = 20;

// Collects violations of one kind, capping the number listed.
class ViolationList {
public:
    explicit ViolationList(std::vector<std::string>& out) : out_(out) {}
    ~ViolationList()
    {
        if (dropped_ > 0) out_.push_back("... and " + std::to_string(dropped_) + " more of the same kind");
    }
    void add(std::string msg)
    {
        if (count_++ < kMaxReported)
            out_.push_back(std::move(msg));
        else
            ++dropped_;
    }

private:
    std::vector<std::string>& out_;
    std::size_t count_ = 0;
    std::size_t dropped_ = 0;
};

double node_chordal(const Geometry::Data& d, std::size_t i, std::size_t j)
{
    const std::size_t N = d.weights.size();
    if (!d.chordal.empty()) return d.chordal[i * N + j];
    const auto a = static_cast<std::size_t>(d.ambient_dim);
    double s = 0.0;
    for (std::size_t k = 0; k < a; ++k) {
        const double diff = d.nodes[i * a + k] - d.nodes[j * a + k];
        s += diff * diff;
    }
    return std::sqrt(s);
}

double node_geodesic(const Geometry::Data& d, bool unit, std::size_t i, std::size_t j)
{
    const std::size_t N = d.weights.size();
    if (!d.geodesic.empty()) return d.geodesic[i * N + j];
    if (!d.chordal.empty()) return d.chordal[i * N + j];
    const double c = node_chordal(d, i, j);
    return unit ? 2.0 * std::asin(std::min(1.0, 0.5 * c)) : c;
}

bool all_unit(const Geometry::Data& d, double tol)
{
    if (d.ambient_dim <= 0 || d.nodes.empty()) return false;
    const auto a = static_cast<std::size_t>(d.ambient_dim);
    for (std::size_t i = 0; i < d.weights.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < a; ++k) s += d.nodes[i * a + k] * d.nodes[i * a + k];
        if (std::abs(std::sqrt(s) - 1.0) > tol) return false;
    }
    return true;
}

void check_table(const std::vector<double>& t, std::size_t N, const std::string& name, std::vector<std::string>& out)
{
    if (t.empty()) return;
    if (t.size() != N * N) {
        out.push_back(name + " table has " + std::to_string(t.size()) + " entries, expected " + std::to_string(N * N));
        return;
    }
    ViolationList v(out);
    for (std::size_t i = 0; i < N; ++i) {
        if (t[i * N + i] != 0.0) v.add(name + "(" + std::to_string(i) + "," + std::to_string(i) + ") is not zero");
        for (std::size_t j = i + 1; j < N; ++j) {
            const double a = t[i * N + j];
            const double b = t[j * N + i];
            const std::string ij = "(" + std::to_string(i) + "," + std::to_string(j) + ")";
            if (!(std::isfinite(a) && a > 0.0)) v.add(name + ij + " = " + io::format_double(a) + " is not positive");
            if (a != b) v.add(name + " is not symmetric at " + ij + ": " + io::format_double(a) + " vs " + io::format_double(b));
        }
    }
}

}  // namespace

std::string to_string(SphereScheme s)
{
    switch (s) {
    case SphereScheme::uniform_angle: return "uniform_angle";
    case SphereScheme::fibonacci: return "fibonacci";
    case SphereScheme::equal_area: return "equal_area";
    }
    return "unknown";
}

SphereScheme parse_sphere_scheme(const std::string& s)
{
    if (s == "uniform_angle") return SphereScheme::uniform_angle;
    if (s == "fibonacci") return SphereScheme::fibonacci;
    if (s == "equal_area") return SphereScheme::equal_area;
    throw ConfigError("unknown sphere scheme '" + s + "' (expected uniform_angle, fibonacci or equal_area)");
}

double sphere_volume(int n) { return 2.0 * std::pow(pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1)); }

double unit_ball_volume(int n) { return std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

std::vector<std::string> geometry_violations(const Geometry::Data& d, std::uint64_t seed)
{
    std::vector<std::string> out;
    const std::size_t N = d.weights.size();
    if (d.dim < 1) out.push_back("dim must be >= 1, got " + std::to_string(d.dim));
    if (N < 2) out.push_back("need at least 2 nodes, got " + std::to_string(N));
    if (d.ambient_dim < 0) out.push_back("ambient dimension must be >= 0");
    if (d.ambient_dim == 0 && d.chordal.empty()) out.push_back("either node coordinates or a distance table is required");
    if (d.ambient_dim > 0 && d.ambient_dim < d.dim)
        out.push_back("ambient dimension " + std::to_string(d.ambient_dim) + " is smaller than dim " + std::to_string(d.dim));
    if (d.nodes.size() != N * static_cast<std::size_t>(std::max(d.ambient_dim, 0)))
        out.push_back("node array has " + std::to_string(d.nodes.size()) + " coordinates, expected " +
                      std::to_string(N * static_cast<std::size_t>(std::max(d.ambient_dim, 0))));
    if (!d.geodesic.empty() && d.chordal.empty() && d.nodes.empty()) out.push_back("geodesic table without chordal data");
    if (!out.empty()) return out;

    {
        ViolationList v(out);
        for (std::size_t i = 0; i < N; ++i)
            if (!(std::isfinite(d.weights[i]) && d.weights[i] > 0.0))
                v.add("weight[" + std::to_string(i) + "] = " + io::format_double(d.weights[i]) + " is not positive");
    }
    {
        ViolationList v(out);
        for (std::size_t k = 0; k < d.nodes.size(); ++k)
            if (!std::isfinite(d.nodes[k])) v.add("node[" + std::to_string(k / static_cast<std::size_t>(d.ambient_dim)) + "] has a non-finite coordinate");
    }
    check_table(d.chordal, N, "distances", out);
    check_table(d.geodesic, N, "geodesic", out);
    if (!out.empty()) return out;

    if (d.chordal.empty()) {
        ViolationList v(out);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i + 1; j < N; ++j)
                if (node_chordal(d, i, j) <= 0.0) v.add("nodes " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    }

    const bool unit = all_unit(d, 1e-12);
    if (d.sphere) {
        const int n = d.sphere->n;
        if (d.dim != n || d.ambient_dim != n + 1)
            out.push_back("sphere S^" + std::to_string(n) + " needs dim " + std::to_string(n) + " and ambient " + std::to_string(n + 1));
        const auto a = static_cast<std::size_t>(std::max(d.ambient_dim, 0));
        {
            ViolationList v(out);
            for (std::size_t i = 0; i < N && a > 0; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < a; ++k) s += d.nodes[i * a + k] * d.nodes[i * a + k];
                const double dev = std::abs(std::sqrt(s) - 1.0);
                if (dev > 1e-14) v.add("sphere node " + std::to_string(i) + " has |norm - 1| = " + io::format_double(dev));
            }
        }
        const double vol = sphere_volume(n);
        const double sum = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
        if (std::abs(sum - vol) > 1e-12 * vol)
            out.push_back("sphere weights sum to " + io::format_double(sum) + ", expected " + io::format_double(vol));
        if (!d.chordal.empty() || !d.geodesic.empty()) {
            ViolationList v(out);
            for (std::size_t i = 0; i < N; ++i)
                for (std::size_t j = i + 1; j < N; ++j) {
                    const double c = node_chordal(d, i, j);
                    const double g = node_geodesic(d, unit, i, j);
                    const double tol = 1e-12 * g;
                    if (c > g + tol || g > 0.5 * pi * c + tol)
                        v.add("pair (" + std::to_string(i) + "," + std::to_string(j) + ") violates chordal <= geodesic <= (pi/2) chordal");
                }
        }
    }

    // Sampled triangle inequalities.
    if (N >= 3) {
        Rng rng(seed);
        ViolationList v(out);
        for (int s = 0; s < 10000; ++s) {
            const std::size_t i = rng.index(N), j = rng.index(N), k = rng.index(N);
            const std::string trip = "(" + std::to_string(i) + "," + std::to_string(k) + "," + std::to_string(j) + ")";
            if (node_chordal(d, i, j) > node_chordal(d, i, k) + node_chordal(d, k, j) + 1e-12)
                v.add("chordal triangle inequality fails for " + trip);
            if (node_geodesic(d, unit, i, j) > node_geodesic(d, unit, i, k) + node_geodesic(d, unit, k, j) + 1e-12)
                v.add("geodesic triangle inequality fails for " + trip);
        }
    }
    return out;
}

Geometry::Geometry(Data data) : data_(std::move(data))
{
    auto v = geometry_violations(data_);
    if (!v.empty()) throw ValidationError("invalid geometry", std::move(v));
    total_volume_ = std::accumulate(data_.weights.begin(), data_.weights.end(), 0.0);
    unit_nodes_ = all_unit(data_, 1e-12);
}

double Geometry::chordal(std::size_t i, std::size_t j) const { return node_chordal(data_, i, j); }

double Geometry::geodesic(std::size_t i, std::size_t j) const { return node_geodesic(data_, unit_nodes_, i, j); }

bool Geometry::operator==(const Geometry& o) const
{
    if (data_.dim != o.data_.dim || data_.ambient_dim != o.data_.ambient_dim || data_.nodes != o.data_.nodes ||
        data_.weights != o.data_.weights || data_.sphere != o.data_.sphere)
        return false;
    const std::size_t N = size();
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
            if (chordal(i, j) != o.chordal(i, j) || geodesic(i, j) != o.geodesic(i, j)) return false;
    return true;
}

Geometry build_sphere(int n, std::size_t count, SphereScheme scheme)
{
    if (n == 1 && scheme != SphereScheme::uniform_angle)
        throw ConfigError("S^1 supports only the uniform_angle scheme, got " + to_string(scheme));
    if (n == 2 && scheme == SphereScheme::uniform_angle)
        throw ConfigError("S^2 supports fibonacci or equal_area, got uniform_angle");
    if (n != 1 && n != 2) throw ConfigError("sphere builder supports n = 1 or 2, got " + std::to_string(n));
    if (count < 8) throw ConfigError("sphere builds need at least 8 nodes, got " + std::to_string(count));

    Geometry::Data d;
    d.dim = n;
    d.ambient_dim = n + 1;
    d.sphere = SphereInfo{n, scheme};
    d.nodes.reserve(count * static_cast<std::size_t>(n + 1));
    d.weights.reserve(count);
    const double vol = sphere_volume(n);

    if (scheme == SphereScheme::uniform_angle) {
        for (std::size_t k = 0; k < count; ++k) {
            const double th = 2.0 * pi * static_cast<double>(k) / static_cast<double>(count);
            d.nodes.push_back(std::cos(th));
            d.nodes.push_back(std::sin(th));
            d.weights.push_back(1.0);
        }
    } else if (scheme == SphereScheme::fibonacci) {
        const double golden = pi * (3.0 - std::sqrt(5.0));
        for (std::size_t k = 0; k < count; ++k) {
            const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(count);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double ph = golden * static_cast<double>(k);
            d.nodes.push_back(r * std::cos(ph));
            d.nodes.push_back(r * std::sin(ph));
            d.nodes.push_back(z);
            d.weights.push_back(1.0);
        }
    } else {
        // Bands of equal height in z (hence equal area); points per band proportional to
        // the circumference at the band's mid-height, distributed by largest remainder.
        const auto bands = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::lround(std::sqrt(2.0 * static_cast<double>(count) / pi))), 2, count / 2);
        std::vector<double> zmid(bands), circ(bands);
        for (std::size_t b = 0; b < bands; ++b) {
            zmid[b] = 1.0 - (2.0 * static_cast<double>(b) + 1.0) / static_cast<double>(bands);
            circ[b] = std::sqrt(1.0 - zmid[b] * zmid[b]);
        }
        const double total = std::accumulate(circ.begin(), circ.end(), 0.0);
        std::vector<std::size_t> per(bands, 1);
        std::size_t left = count - bands;
        std::vector<double> rem(bands);
        for (std::size_t b = 0; b < bands; ++b) {
            const double share = static_cast<double>(count - bands) * circ[b] / total;
            const auto whole = static_cast<std::size_t>(std::floor(share));
            per[b] += whole;
            left -= whole;
            rem[b] = share - static_cast<double>(whole);
        }
        std::vector<std::size_t> order(bands);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
        for (std::size_t k = 0; k < left; ++k) ++per[order[k % bands]];
        for (std::size_t b = 0; b < bands; ++b) {
            const double r = circ[b];
            const double offset = (b % 2 == 0) ? 0.0 : 0.5;
            for (std::size_t j = 0; j < per[b]; ++j) {
                const double ph = 2.0 * pi * (static_cast<double>(j) + offset) / static_cast<double>(per[b]);
                d.nodes.push_back(r * std::cos(ph));
                d.nodes.push_back(r * std::sin(ph));
                d.nodes.push_back(zmid[b]);
                d.weights.push_back(1.0 / static_cast<double>(per[b]) / static_cast<double>(bands));
            }
        }
    }

    const double sum = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
    for (auto& w : d.weights) w *= vol / sum;
    return Geometry(std::move(d));
}

Geometry load_geometry(const std::filesystem::path& path)
{
    io::TokenReader r(path);
    r.expect("riesz-flow-geometry");
    if (r.next_int() != 1) r.fail("unsupported geometry file version");
    Geometry::Data d;
    r.expect("dim");
    d.dim = static_cast<int>(r.next_int());
    r.expect("ambient");
    d.ambient_dim = static_cast<int>(r.next_int());
    r.expect("count");
    const long long count = r.next_int();
    if (count <= 0) r.fail("count must be positive");
    const auto N = static_cast<std::size_t>(count);
    if (d.ambient_dim < 0) r.fail("ambient must be >= 0");
    if (r.peek() == "sphere") {
        r.next();
        d.sphere = SphereInfo{d.dim, parse_sphere_scheme(r.next())};
    }
    bool have_nodes = false, have_weights = false;
    while (!r.at_end()) {
        const std::string section = r.next();
        std::vector<double>* target = nullptr;
        std::size_t len = 0;
        if (section == "nodes") {
            target = &d.nodes;
            len = N * static_cast<std::size_t>(d.ambient_dim);
            have_nodes = true;
        } else if (section == "weights") {
            target = &d.weights;
            len = N;
            have_weights = true;
        } else if (section == "distances") {
            target = &d.chordal;
            len = N * N;
        } else if (section == "geodesic") {
            target = &d.geodesic;
            len = N * N;
        } else {
            r.fail("unknown section '" + section + "'");
        }
        if (!target->empty()) r.fail("duplicate section '" + section + "'");
        target->resize(len);
        for (auto& x : *target) x = r.next_double();
    }
    if (!have_weights) r.fail("missing weights section");
    if (d.ambient_dim > 0 && !have_nodes) r.fail("missing nodes section");
    return Geometry(std::move(d));
}

void save_geometry(const std::filesystem::path& path, const Geometry& geom, bool with_distances)
{
    const std::size_t N = geom.size();
    const auto a = static_cast<std::size_t>(geom.ambient_dim());
    std::string s = "riesz-flow-geometry 1\ndim " + std::to_string(geom.dim()) + "\nambient " + std::to_string(a) +
                    "\ncount " + std::to_string(N) + "\n";
    if (geom.sphere()) s += "sphere " + to_string(geom.sphere()->scheme) + "\n";
    auto row = [&s](auto begin, std::size_t len, auto value) {
        for (std::size_t k = 0; k < len; ++k) {
            if (k > 0) s += ' ';
            s += io::format_double(value(begin + k));
        }
        s += '\n';
    };
    if (a > 0) {
        s += "nodes\n";
        for (std::size_t i = 0; i < N; ++i) row(i * a, a, [&](std::size_t k) { return geom.nodes()[k]; });
    }
    s += "weights\n";
    for (double w : geom.weights()) s += io::format_double(w) + "\n";
    if (with_distances || geom.has_explicit_distances()) {
        s += "distances\n";
        for (std::size_t i = 0; i < N; ++i) row(std::size_t{0}, N, [&](std::size_t j) { return geom.chordal(i, j); });
    }
    if (geom.has_explicit_geodesic() || (with_distances && geom.nodes_on_unit_sphere())) {
        s += "geodesic\n";
        for (std::size_t i = 0; i < N; ++i) row(std::size_t{0}, N, [&](std::size_t j) { return geom.geodesic(i, j); });
    }
    io::write_atomic(path, s);
}

Geometry rotate_geometry(const Geometry& geom, std::span<const double> rotation)
{
    const auto a = static_cast<std::size_t>(geom.ambient_dim());
    if (a == 0) throw ConfigError("cannot rotate a geometry without node coordinates");
    if (rotation.size() != a * a) throw ConfigError("rotation must be " + std::to_string(a) + "x" + std::to_string(a));
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < a; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a; ++k) s += rotation[k * a + i] * rotation[k * a + j];
            if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-12) throw ConfigError("rotation matrix is not orthogonal");
        }
    Geometry::Data d;
    d.dim = geom.dim();
    d.ambient_dim = geom.ambient_dim();
    d.weights = geom.weights();
    d.sphere = geom.sphere();
    const std::size_t N = geom.size();
    d.nodes.resize(N * a);
    for (std::size_t i = 0; i < N; ++i) {
        const auto x = geom.node(i);
        double norm_in = 0.0, norm_out = 0.0;
        for (std::size_t r = 0; r < a; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < a; ++k) s += rotation[r * a + k] * x[k];
            d.nodes[i * a + r] = s;
            norm_out += s * s;
            norm_in += x[r] * x[r];
        }
        // Restore the input norm so unit nodes stay unit to round-off.
        const double scale = std::sqrt(norm_in / norm_out);
        for (std::size_t r = 0; r < a; ++r) d.nodes[i * a + r] *= scale;
    }
    if (geom.has_explicit_distances()) {
        d.chordal.resize(N * N);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) d.chordal[i * N + j] = geom.chordal(i, j);
    }
    if (geom.has_explicit_geodesic()) {
        d.geodesic.resize(N * N);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) d.geodesic[i * N + j] = geom.geodesic(i, j);
    }
    return Geometry(std::move(d));
}

}  // namespace riesz
