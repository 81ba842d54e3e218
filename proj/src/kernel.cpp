#include "riesz/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "riesz/io.hpp"

namespace riesz {

namespace {

void check_sigma(int n, double sigma)
{
    if (!(sigma > 0.0 && sigma < 0.5 * n))
        throw ConfigError("sigma must lie in (0, n/2) = (0, " + io::format_double(0.5 * n) + "), got " +
                          io::format_double(sigma));
}

bool is_uniform_circle(const Geometry& g)
{
    return g.sphere() && g.sphere()->n == 1 && g.sphere()->scheme == SphereScheme::uniform_angle;
}

DiagonalRule resolve_rule(DiagonalRule rule, const Geometry& g)
{
    if (rule == DiagonalRule::automatic)
        return is_uniform_circle(g) ? DiagonalRule::lattice_zeta : DiagonalRule::equivalent_disc;
    if (rule == DiagonalRule::lattice_zeta && !is_uniform_circle(g))
        throw ConfigError("the lattice_zeta diagonal needs a uniform_angle S^1 build");
    return rule;
}

// w_i K_ii divided by the local pole amplitude.
double self_cell_mass(DiagonalRule rule, const Geometry& g, double sigma, std::size_t i)
{
    const int n = g.dim();
    switch (rule) {
    case DiagonalRule::equivalent_disc: {
        const double r = std::pow(g.weights()[i] / unit_ball_volume(n), 1.0 / n);
        return sphere_volume(n - 1) * std::pow(r, 2.0 * sigma) / (2.0 * sigma);
    }
    case DiagonalRule::lattice_zeta: {
        const double h = 2.0 * pi / static_cast<double>(g.size());
        return -2.0 * std::riemann_zeta(1.0 - 2.0 * sigma) * std::pow(h, 2.0 * sigma);
    }
    case DiagonalRule::none:
    case DiagonalRule::automatic: break;
    }
    return 0.0;
}

double gamma_ratio(double a, double b)
{
    if (a < 100.0 && b < 100.0) return std::tgamma(a) / std::tgamma(b);
    return std::exp(std::lgamma(a) - std::lgamma(b));
}

double dist_of(const Geometry& g, DistanceKind kind, std::size_t i, std::size_t j)
{
    return kind == DistanceKind::chordal ? g.chordal(i, j) : g.geodesic(i, j);
}

std::string flag(bool pass) { return pass ? "pass" : "FAIL"; }

}  // namespace

std::string to_string(DiagonalRule r)
{
    switch (r) {
    case DiagonalRule::automatic: return "automatic";
    case DiagonalRule::equivalent_disc: return "equivalent_disc";
    case DiagonalRule::lattice_zeta: return "lattice_zeta";
    case DiagonalRule::none: return "none";
    }
    return "unknown";
}

DiagonalRule parse_diagonal_rule(const std::string& s)
{
    if (s == "automatic") return DiagonalRule::automatic;
    if (s == "equivalent_disc") return DiagonalRule::equivalent_disc;
    if (s == "lattice_zeta") return DiagonalRule::lattice_zeta;
    if (s == "none") return DiagonalRule::none;
    throw ConfigError("unknown diagonal rule '" + s + "' (expected automatic, equivalent_disc, lattice_zeta or none)");
}

std::string to_string(DistanceKind k) { return k == DistanceKind::chordal ? "chordal" : "geodesic"; }

DistanceKind parse_distance_kind(const std::string& s)
{
    if (s == "chordal") return DistanceKind::chordal;
    if (s == "geodesic") return DistanceKind::geodesic;
    throw ConfigError("unknown distance kind '" + s + "' (expected chordal or geodesic)");
}

double riesz_constant(int n, double sigma)
{
    check_sigma(n, sigma);
    return std::tgamma(0.5 * (n - 2.0 * sigma)) / (std::pow(2.0, 2.0 * sigma) * std::pow(pi, 0.5 * n) * std::tgamma(sigma));
}

double intertwining_eigenvalue(int n, double sigma, int degree)
{
    check_sigma(n, sigma);
    if (degree < 0) throw ConfigError("harmonic degree must be >= 0");
    return gamma_ratio(degree + 0.5 * n - sigma, degree + 0.5 * n + sigma);
}

double critical_exponent(int n, double sigma) { return (n - 2.0 * sigma) / (n + 2.0 * sigma); }

KernelOperator::KernelOperator(std::shared_ptr<const Geometry> geom, Meta meta, std::vector<double> matrix)
    : geom_(std::move(geom)), meta_(meta), matrix_(std::move(matrix))
{
    if (!geom_) throw ConfigError("kernel needs a geometry");
    const std::size_t N = geom_->size();
    if (matrix_.size() != N * N)
        throw ConfigError("kernel matrix has " + std::to_string(matrix_.size()) + " entries, expected " + std::to_string(N * N));
    check_sigma(geom_->dim(), meta_.sigma);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            const double s = 0.5 * (matrix_[i * N + j] + matrix_[j * N + i]);
            matrix_[i * N + j] = s;
            matrix_[j * N + i] = s;
        }
}

double KernelOperator::distance(std::size_t i, std::size_t j) const { return dist_of(*geom_, meta_.distance, i, j); }

void KernelOperator::apply(std::span<const double> f, std::span<double> out) const
{
    const std::size_t N = size();
    if (f.size() != N || out.size() != N)
        throw ConfigError("field length " + std::to_string(f.size()) + " does not match kernel size " + std::to_string(N));
    std::vector<double> g(N);
    const auto& w = geom_->weights();
    for (std::size_t j = 0; j < N; ++j) g[j] = w[j] * f[j];
    const double* K = matrix_.data();
    const double* gp = g.data();
    const auto rows = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(static) if (N >= 256)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const double* row = K + static_cast<std::size_t>(i) * N;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= N; j += 4) {
            s0 += row[j] * gp[j];
            s1 += row[j + 1] * gp[j + 1];
            s2 += row[j + 2] * gp[j + 2];
            s3 += row[j + 3] * gp[j + 3];
        }
        for (; j < N; ++j) s0 += row[j] * gp[j];
        out[static_cast<std::size_t>(i)] = (s0 + s1) + (s2 + s3);
    }
}

Field KernelOperator::apply(std::span<const double> f) const
{
    Field out(size());
    apply(f, out);
    return out;
}

KernelOperator KernelOperator::scaled(double factor) const
{
    if (!(factor > 0.0 && std::isfinite(factor))) throw ConfigError("kernel scale factor must be positive");
    Meta m = meta_;
    m.pole_amplitude *= factor;
    if (factor != 1.0) m.is_intertwining = false;
    std::vector<double> k = matrix_;
    for (auto& x : k) x *= factor;
    return KernelOperator(geom_, m, std::move(k));
}

KernelOperator build_intertwining_kernel(std::shared_ptr<const Geometry> geom, double sigma, DiagonalRule rule)
{
    if (!geom) throw ConfigError("kernel needs a geometry");
    if (!geom->sphere()) throw ConfigError("the intertwining kernel needs a sphere build");
    const int n = geom->dim();
    const double c = riesz_constant(n, sigma);
    KernelOperator K = build_power_kernel(
        geom, sigma, [c](std::size_t, std::size_t) { return c; }, rule, DistanceKind::chordal);
    KernelOperator::Meta meta = K.meta();
    meta.is_intertwining = true;
    meta.lambda = 1.0;
    meta.pole_amplitude = c;
    return KernelOperator(std::move(geom), meta, K.matrix());
}

KernelOperator build_power_kernel(std::shared_ptr<const Geometry> geom, double sigma, const AmplitudeFn& amplitude,
                                  DiagonalRule rule, DistanceKind distance)
{
    if (!geom) throw ConfigError("kernel needs a geometry");
    const Geometry& g = *geom;
    const int n = g.dim();
    check_sigma(n, sigma);
    const DiagonalRule resolved = resolve_rule(rule, g);
    const std::size_t N = g.size();
    const double p = 2.0 * sigma - n;

    std::vector<std::string> violations;
    std::vector<double> K(N * N);
    double amin = std::numeric_limits<double>::infinity(), amax = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = i + 1; j < N; ++j) {
            const double aij = amplitude(i, j);
            const double aji = amplitude(j, i);
            if (!(std::isfinite(aij) && aij > 0.0)) {
                if (violations.size() < 20)
                    violations.push_back("amplitude(" + std::to_string(i) + "," + std::to_string(j) + ") = " +
                                         io::format_double(aij) + " is not positive");
                continue;
            }
            if (std::abs(aij - aji) > 1e-12 * std::max(std::abs(aij), std::abs(aji))) {
                if (violations.size() < 20)
                    violations.push_back("amplitude is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) +
                                         "): " + io::format_double(aij) + " vs " + io::format_double(aji));
                continue;
            }
            amin = std::min(amin, aij);
            amax = std::max(amax, aij);
            const double v = aij * std::pow(dist_of(g, distance, i, j), p);
            K[i * N + j] = v;
            K[j * N + i] = v;
        }
        const double aii = amplitude(i, i);
        if (!(std::isfinite(aii) && aii > 0.0) && violations.size() < 20)
            violations.push_back("amplitude(" + std::to_string(i) + "," + std::to_string(i) + ") is not positive");
        K[i * N + i] = aii * self_cell_mass(resolved, g, sigma, i) / g.weights()[i];
    }
    if (!violations.empty()) throw ValidationError("invalid kernel amplitude", std::move(violations));

    KernelOperator::Meta meta;
    meta.sigma = sigma;
    meta.lambda = std::sqrt(amax / amin);
    meta.pole_amplitude = std::sqrt(amax * amin);
    meta.is_intertwining = false;
    meta.diagonal = resolved;
    meta.distance = distance;
    return KernelOperator(std::move(geom), meta, std::move(K));
}

KernelReport validate_kernel_matrix(const Geometry& g, double sigma, std::span<const double> M, DistanceKind distance,
                                    double lambda_stated, const ValidateOptions& opt)
{
    const std::size_t N = g.size();
    if (M.size() != N * N) throw ConfigError("kernel matrix size does not match geometry");
    const int n = g.dim();
    check_sigma(n, sigma);
    const double q = n - 2.0 * sigma;

    KernelReport r;
    r.size = N;
    r.lambda_stated = lambda_stated;
    r.positive = std::all_of(M.begin(), M.end(), [](double x) { return std::isfinite(x) && x > 0.0; });

    double kmax = 0.0, defect = 0.0;
    for (double x : M) kmax = std::max(kmax, std::abs(x));
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            defect = std::max(defect, std::abs(M[i * N + j] - M[j * N + i]));
            const double dq = std::pow(dist_of(g, distance, i, j), q);
            for (double k : {M[i * N + j], M[j * N + i]}) {
                rmin = std::min(rmin, k * dq);
                rmax = std::max(rmax, k * dq);
            }
        }
    r.symmetry_defect = kmax > 0.0 ? defect / kmax : defect;
    r.k1_pass = r.symmetry_defect <= 1e-12;

    r.ratio_min = rmin;
    r.ratio_max = rmax;
    const bool ratios_ok = rmin > 0.0 && std::isfinite(rmax);
    r.amplitude_center = ratios_ok ? std::sqrt(rmin * rmax) : 0.0;
    r.lambda_fit = ratios_ok ? std::sqrt(rmax / rmin) : std::numeric_limits<double>::infinity();
    r.lambda_raw = ratios_ok ? std::max(rmax, 1.0 / rmin) : std::numeric_limits<double>::infinity();
    r.k2_pass = ratios_ok && (lambda_stated <= 0.0 || r.lambda_fit <= lambda_stated * (1.0 + 1e-9));

    // Nearest neighbours of every node.
    const std::size_t kn = std::min(opt.pole_neighbours, N - 1);
    std::vector<std::size_t> nearest(N * kn);
    {
        std::vector<std::pair<double, std::size_t>> row;
        row.reserve(N - 1);
        for (std::size_t i = 0; i < N; ++i) {
            row.clear();
            for (std::size_t j = 0; j < N; ++j)
                if (j != i) row.emplace_back(dist_of(g, distance, i, j), j);
            std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kn), row.end());
            for (std::size_t k = 0; k < kn; ++k) nearest[i * kn + k] = row[k].second;
        }
    }

    // (K-3): secant slopes of K(., j) between i and its nearest neighbour, scaled by the
    // power of the distance from j to the closer endpoint.
    double lip = 0.0;
    if (ratios_ok && kn > 0) {
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t k = nearest[i * kn];
            const double step = dist_of(g, distance, i, k);
            for (std::size_t j = 0; j < N; ++j) {
                if (j == i || j == k) continue;
                const double dmin = std::min(dist_of(g, distance, i, j), dist_of(g, distance, k, j));
                const double slope = std::abs(M[i * N + j] - M[k * N + j]) / step;
                lip = std::max(lip, slope * std::pow(dmin, q + 1.0));
            }
        }
        lip /= r.amplitude_center;
    }
    r.lipschitz_ratio = lip;
    r.lipschitz_bound = opt.lipschitz_factor * std::max(1.0, lambda_stated);
    r.k3_pass = ratios_ok && lip <= r.lipschitz_bound;

    // (K-4): pole constant from the nearest neighbours.
    if (kn > 0) {
        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < kn; ++k) {
                const std::size_t j = nearest[i * kn + k];
                s += M[i * N + j] * std::pow(dist_of(g, distance, i, j), q);
            }
            s /= static_cast<double>(kn);
            sum += s;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        r.pole_constant = sum / static_cast<double>(N);
        r.pole_spread = (hi - lo) / r.pole_constant;
        r.k4_pass = std::isfinite(r.pole_spread) && r.pole_spread <= opt.pole_spread_tol;
    }
    return r;
}

KernelReport validate_kernel(const KernelOperator& K, const ValidateOptions& opt)
{
    return validate_kernel_matrix(K.geometry(), K.sigma(), K.matrix(), K.meta().distance, K.lambda(), opt);
}

std::string format_report(const KernelReport& r)
{
    std::ostringstream os;
    os << "size " << r.size << "\n";
    os << "positive entries: " << flag(r.positive) << "\n";
    os << "(K-1) symmetry defect " << io::format_double(r.symmetry_defect) << ": " << flag(r.k1_pass) << "\n";
    os << "(K-2) ratio range [" << io::format_double(r.ratio_min) << ", " << io::format_double(r.ratio_max)
       << "], center " << io::format_double(r.amplitude_center) << ", lambda fit " << io::format_double(r.lambda_fit)
       << ", raw " << io::format_double(r.lambda_raw) << ", stated " << io::format_double(r.lambda_stated) << ": "
       << flag(r.k2_pass) << "\n";
    os << "(K-3) lipschitz ratio " << io::format_double(r.lipschitz_ratio) << " (bound "
       << io::format_double(r.lipschitz_bound) << "): " << flag(r.k3_pass) << "\n";
    os << "(K-4) pole constant " << io::format_double(r.pole_constant) << ", spread " << io::format_double(r.pole_spread)
       << ": " << flag(r.k4_pass) << "\n";
    return os.str();
}

void save_kernel(const std::filesystem::path& path, const KernelOperator& K)
{
    const auto& m = K.meta();
    const std::size_t N = K.size();
    std::string s = "riesz-flow-kernel 1\n";
    s += "n " + std::to_string(K.n()) + "\n";
    s += "sigma " + io::format_double(m.sigma) + "\n";
    s += "lambda " + io::format_double(m.lambda) + "\n";
    s += "pole_amplitude " + io::format_double(m.pole_amplitude) + "\n";
    s += std::string("intertwining ") + (m.is_intertwining ? "1" : "0") + "\n";
    s += "diagonal " + to_string(m.diagonal) + "\n";
    s += "distance " + to_string(m.distance) + "\n";
    s += "count " + std::to_string(N) + "\nmatrix\n";
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            if (j > 0) s += ' ';
            s += io::format_double(K.entry(i, j));
        }
        s += '\n';
    }
    io::write_atomic(path, s);
}

KernelOperator load_kernel(const std::filesystem::path& path, std::shared_ptr<const Geometry> geom,
                           const ValidateOptions& opt)
{
    if (!geom) throw ConfigError("kernel needs a geometry");
    io::TokenReader r(path);
    r.expect("riesz-flow-kernel");
    if (r.next_int() != 1) r.fail("unsupported kernel file version");
    KernelOperator::Meta meta;
    r.expect("n");
    const long long n = r.next_int();
    if (n != geom->dim()) r.fail("kernel dimension " + std::to_string(n) + " does not match geometry dim " + std::to_string(geom->dim()));
    r.expect("sigma");
    meta.sigma = r.next_double();
    r.expect("lambda");
    meta.lambda = r.next_double();
    if (!(meta.lambda >= 1.0)) r.fail("lambda must be >= 1");
    r.expect("pole_amplitude");
    meta.pole_amplitude = r.next_double();
    r.expect("intertwining");
    meta.is_intertwining = r.next_int() != 0;
    r.expect("diagonal");
    meta.diagonal = parse_diagonal_rule(r.next());
    r.expect("distance");
    meta.distance = parse_distance_kind(r.next());
    r.expect("count");
    const long long count = r.next_int();
    if (count < 0 || static_cast<std::size_t>(count) != geom->size())
        r.fail("kernel count " + std::to_string(count) + " does not match geometry size " + std::to_string(geom->size()));
    r.expect("matrix");
    const std::size_t N = geom->size();
    std::vector<double> M(N * N);
    for (auto& x : M) x = r.next_double();
    if (!r.at_end()) r.fail("trailing data after matrix");

    const KernelReport rep = validate_kernel_matrix(*geom, meta.sigma, M, meta.distance, meta.lambda, opt);
    std::vector<std::string> v;
    if (!rep.positive) v.push_back("kernel has non-positive or non-finite entries");
    if (!rep.k1_pass) v.push_back("(K-1) symmetry defect " + io::format_double(rep.symmetry_defect) + " exceeds 1e-12");
    if (!rep.k2_pass)
        v.push_back("(K-2) fitted lambda " + io::format_double(rep.lambda_fit) + " exceeds stated " + io::format_double(meta.lambda));
    if (!v.empty()) throw ValidationError("kernel " + path.string() + " failed validation", std::move(v));
    return KernelOperator(std::move(geom), meta, std::move(M));
}

QCurvatureField dual_Q(const KernelOperator& K, std::span<const double> u)
{
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!(u[i] > 0.0 && std::isfinite(u[i])))
            throw ConfigError("dual Q curvature needs u > 0; u[" + std::to_string(i) + "] = " + io::format_double(u[i]));
    QCurvatureField q;
    q.m = K.critical_m();
    q.u.assign(u.begin(), u.end());
    q.values = K.apply(u);
    for (std::size_t i = 0; i < u.size(); ++i) q.values[i] *= std::pow(u[i], -q.m);
    return q;
}

double total_Q_functional(const KernelOperator& K, std::span<const double> u)
{
    const double m = K.critical_m();
    const Field Ku = K.apply(u);
    const auto& w = K.geometry().weights();
    double vol = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        vol += w[i] * std::pow(std::abs(u[i]), m + 1.0);
        tot += w[i] * u[i] * Ku[i];
    }
    const double n = K.n();
    return std::pow(vol, -(n + 2.0 * K.sigma()) / n) * tot;
}

}  // namespace riesz
