#include "riesz/sphere.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riesz/io.hpp"
#include "riesz/quadrature.hpp"
#include "riesz/steady.hpp"

namespace riesz {

namespace {

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void require_unit(std::span<const double> xi0, std::size_t ambient)
{
    if (xi0.size() != ambient)
        throw ConfigError("bubble centre has " + std::to_string(xi0.size()) + " coordinates, expected " + std::to_string(ambient));
    if (std::abs(norm(xi0) - 1.0) > 1e-12) throw ConfigError("bubble centre must be a unit vector");
}

void require_sphere_nodes(const Geometry& g)
{
    if (!g.nodes_on_unit_sphere() || g.ambient_dim() != g.dim() + 1)
        throw ConfigError("sphere tools need nodes on the unit sphere S^n in R^{n+1}");
}

// Orthonormal basis of the tangent space at a unit vector.
std::vector<std::vector<double>> tangent_basis(std::span<const double> xi)
{
    const std::size_t a = xi.size();
    std::vector<std::vector<double>> basis;
    for (std::size_t k = 0; k < a && basis.size() + 1 < a; ++k) {
        std::vector<double> e(a, 0.0);
        e[k] = 1.0;
        auto project = [&](std::span<const double> d) {
            const double s = dot(e, d);
            for (std::size_t j = 0; j < a; ++j) e[j] -= s * d[j];
        };
        project(xi);
        for (const auto& b : basis) project(b);
        const double len = norm(e);
        if (len < 0.5) continue;
        for (auto& x : e) x /= len;
        basis.push_back(std::move(e));
    }
    return basis;
}

struct FitState {
    std::vector<double> xi0;
    double log_lambda = 0.0;
    double log_c = 0.0;
};

double fit_cost(const Geometry& g, std::span<const double> u, const FitState& s, double sigma, Field& B)
{
    const BubbleParams b{s.xi0, std::exp(s.log_lambda), std::exp(s.log_c)};
    B = bubble(g, b, sigma);
    double cost = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) cost += g.weights()[i] * (B[i] - u[i]) * (B[i] - u[i]);
    return cost;
}

struct LmResult {
    FitState state;
    double cost = 0.0;
    bool converged = false;
    int iterations = 0;
};

LmResult levenberg_marquardt(const Geometry& g, std::span<const double> u, double sigma, FitState s)
{
    const int n = g.dim();
    const std::size_t N = g.size();
    const auto& w = g.weights();
    const double p = 0.5 * (n + 2.0 * sigma);
    const int np = n + 2;
    Field B;
    double cost = fit_cost(g, u, s, sigma, B);
    double u2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) u2 += w[i] * u[i] * u[i];
    double mu = 1e-3;
    LmResult res;
    Eigen::MatrixXd Jt(np, static_cast<Eigen::Index>(N));
    Eigen::VectorXd r(static_cast<Eigen::Index>(N));
    int it = 0;
    for (; it < 500; ++it) {
        if (cost <= 1e-30 * u2) {
            res.converged = true;
            break;
        }
        const double lam = std::exp(s.log_lambda);
        const auto basis = tangent_basis(s.xi0);
        for (std::size_t i = 0; i < N; ++i) {
            const auto xi = g.node(i);
            const double omc = 1.0 - dot(xi, s.xi0);
            const double D = 2.0 + (lam * lam - 1.0) * omc;
            const double sw = std::sqrt(w[i]);
            const auto col = static_cast<Eigen::Index>(i);
            for (int k = 0; k < n; ++k)
                Jt(k, col) = sw * B[i] * p * (lam * lam - 1.0) * dot(xi, basis[static_cast<std::size_t>(k)]) / D;
            Jt(n, col) = sw * B[i] * p * (1.0 - 2.0 * lam * lam * omc / D);
            Jt(n + 1, col) = sw * B[i];
            r(col) = sw * (B[i] - u[i]);
        }
        const Eigen::MatrixXd A = Jt * Jt.transpose();
        const Eigen::VectorXd grad = Jt * r;
        const double dmax = A.diagonal().maxCoeff();
        bool improved = false;
        while (mu < 1e14) {
            Eigen::MatrixXd M = A;
            for (int k = 0; k < np; ++k) M(k, k) += mu * std::max(A(k, k), 1e-12 * dmax);
            const Eigen::VectorXd delta = M.ldlt().solve(-grad);
            FitState t = s;
            for (int k = 0; k < n; ++k)
                for (std::size_t j = 0; j < t.xi0.size(); ++j) t.xi0[j] += delta(k) * basis[static_cast<std::size_t>(k)][j];
            const double len = norm(t.xi0);
            for (auto& x : t.xi0) x /= len;
            t.log_lambda = std::clamp(s.log_lambda + delta(n), -std::log(1e4), std::log(1e4));
            t.log_c = s.log_c + delta(n + 1);
            Field Bt;
            const double ct = fit_cost(g, u, t, sigma, Bt);
            if (std::isfinite(ct) && ct < cost) {
                const double drop = (cost - ct) / cost;
                s = t;
                B.swap(Bt);
                cost = ct;
                mu = std::max(mu / 3.0, 1e-12);
                improved = true;
                if (drop < 1e-13 || delta.norm() < 1e-14) res.converged = true;
                break;
            }
            mu *= 4.0;
        }
        if (!improved) {
            // No descent direction left: stationary to working precision.
            res.converged = grad.norm() <= 1e-8 * std::sqrt(u2) * std::sqrt(dmax) || cost <= 1e-24 * u2;
            break;
        }
        if (res.converged) break;
    }
    res.state = s;
    res.cost = cost;
    res.iterations = it;
    return res;
}

}  // namespace

double bubble_value(std::span<const double> xi, const BubbleParams& b, int n, double sigma)
{
    const double omc = 1.0 - dot(xi, b.xi0);
    const double D = 2.0 + (b.lambda * b.lambda - 1.0) * omc;
    return b.c * std::pow(2.0 * b.lambda / D, 0.5 * (n + 2.0 * sigma));
}

Field bubble(const Geometry& geom, const BubbleParams& b, double sigma)
{
    require_sphere_nodes(geom);
    require_unit(b.xi0, static_cast<std::size_t>(geom.ambient_dim()));
    if (!(b.lambda > 0.0) || !(b.c > 0.0)) throw ConfigError("bubble needs lambda > 0 and c > 0");
    Field out(geom.size());
    for (std::size_t i = 0; i < geom.size(); ++i) out[i] = bubble_value(geom.node(i), b, geom.dim(), sigma);
    return out;
}

double bubble_residual(const KernelOperator& K, const BubbleParams& b)
{
    const Field B = bubble(K.geometry(), b, K.sigma());
    const double m = K.critical_m();
    const Field KB = K.apply(B);
    const auto& w = K.geometry().weights();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < B.size(); ++i) {
        num += w[i] * B[i] * KB[i];
        den += w[i] * std::pow(B[i], m + 1.0);
    }
    const double a = num / den;
    double top = 0.0, bot = 0.0;
    for (std::size_t i = 0; i < B.size(); ++i) {
        const double t = a * std::pow(B[i], m);
        top = std::max(top, std::abs(KB[i] - t));
        bot = std::max(bot, t);
    }
    return top / bot;
}

std::vector<double> stereographic(std::span<const double> xi)
{
    if (xi.size() < 2) throw ConfigError("stereographic projection needs a point of S^n, n >= 1");
    const std::size_t n = xi.size() - 1;
    const double denom = 1.0 - xi[n];
    if (!(denom > 0.0)) throw ConfigError("the north pole has no stereographic image");
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = xi[k] / denom;
    return x;
}

std::vector<double> inverse_stereographic(std::span<const double> x)
{
    const double r2 = dot(x, x);
    std::vector<double> xi(x.size() + 1);
    for (std::size_t k = 0; k < x.size(); ++k) xi[k] = 2.0 * x[k] / (1.0 + r2);
    xi[x.size()] = (r2 - 1.0) / (r2 + 1.0);
    return xi;
}

double stereographic_jacobian(std::span<const double> x)
{
    return std::pow(2.0 / (1.0 + dot(x, x)), static_cast<double>(x.size()));
}

FlatFunction flat_pullback(SphereFunction u, int n, double sigma)
{
    const double jac_pow = (n - 2.0 * sigma) / (2.0 * n);
    const double m = critical_exponent(n, sigma);
    return [u = std::move(u), jac_pow, m](std::span<const double> x) {
        const auto xi = inverse_stereographic(x);
        return std::pow(stereographic_jacobian(x), jac_pow) * std::pow(u(xi), m);
    };
}

FlatFunction flat_bubble(const BubbleParams& b, int n, double sigma)
{
    require_unit(b.xi0, static_cast<std::size_t>(n + 1));
    return flat_pullback([b, n, sigma](std::span<const double> xi) { return bubble_value(xi, b, n, sigma); }, n, sigma);
}

double kelvin(const FlatFunction& v, std::span<const double> x0, double lambda, std::span<const double> x, int n,
              double sigma)
{
    if (x.size() != x0.size()) throw ConfigError("Kelvin transform: dimension mismatch");
    std::vector<double> d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) d[k] = x[k] - x0[k];
    const double r2 = dot(d, d);
    if (!(r2 > 0.0)) throw ConfigError("Kelvin transform is undefined at the centre");
    std::vector<double> y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = x0[k] + lambda * lambda * d[k] / r2;
    return std::pow(lambda / std::sqrt(r2), n - 2.0 * sigma) * v(y);
}

KelvinCheckReport check_kelvin_identities(const FlatFunction& v, int n, double sigma, std::span<const double> x0v,
                                          double lambda, const std::vector<std::vector<double>>& points,
                                          const KelvinOptions& opt)
{
    if (n != 1) throw ConfigError("the Kelvin identity check supports n = 1");
    if (!(sigma > 0.0 && sigma < 0.5 * n)) throw ConfigError("sigma must lie in (0, n/2)");
    if (x0v.size() != 1) throw ConfigError("x0 must have one coordinate for n = 1");
    if (!(lambda > 0.0)) throw ConfigError("Kelvin radius must be positive");
    if (opt.levels.empty()) throw ConfigError("at least one refinement level is required");
    const double x0 = x0v[0];
    const double kexp = n - 2.0 * sigma;
    const double pexp = (n + 2.0 * sigma) / (n - 2.0 * sigma);
    const double R = opt.radius + std::abs(x0);

    auto v1 = [&](double z) { return v(std::span<const double>(&z, 1)); };
    // Nodes within 1e-10 λ of x0 are pushed out; vk has a finite limit there.
    auto vk = [&](double z) {
        double d = z - x0;
        if (std::abs(d) < 1e-10 * lambda) d = std::copysign(1e-10 * lambda, d);
        const double y = x0 + lambda * lambda / d;
        return std::pow(lambda / std::abs(d), kexp) * v1(y);
    };
    std::vector<double> cuts_v = opt.breakpoints, cuts_k;
    for (double c : opt.breakpoints)
        if (c != x0) cuts_k.push_back(x0 + lambda * lambda / (c - x0));
    cuts_v.push_back(0.0);
    cuts_k.push_back(0.0);

    // ∫ over [a, b] of f(z)^p |s - z|^{-k}, split at s and at the cut points.
    auto region = [&](const std::function<double(double)>& f, double a, double b, double s,
                      const std::vector<double>& cuts, const quad::Grading& gr) {
        std::vector<double> pts{a, b};
        for (double c : cuts)
            if (c > a && c < b) pts.push_back(c);
        if (x0 > a && x0 < b) pts.push_back(x0);
        if (s > a && s < b) pts.push_back(s);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        auto g = [&](double z) { return std::pow(f(z), pexp) * std::pow(std::abs(s - z), -kexp); };
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < pts.size(); ++k)
            total += quad::integrate(g, pts[k], pts[k + 1], gr, pts[k] == s, pts[k + 1] == s, -kexp);
        return total;
    };
    auto tail = [&](const std::function<double(double)>& f, double s) {
        double bar = 0.0;
        for (double z : {-R, R}) bar += std::pow(f(z), pexp) * std::pow(std::abs(s - z), -kexp) * R;
        return bar;
    };

    // Running maximum that keeps a NaN once seen.
    auto worst = [](double& acc, double d) {
        if (!std::isnan(acc) && !(d <= acc)) acc = d;
    };

    KelvinCheckReport rep;
    std::vector<double> xs;
    for (const auto& p : points) {
        if (p.size() != 1) throw ConfigError("test points must have one coordinate for n = 1");
        if (std::abs(p[0] - x0) < opt.shell * lambda) {
            rep.notes.push_back("skipped x = " + io::format_double(p[0]) + " inside the singular shell");
            continue;
        }
        xs.push_back(p[0]);
    }
    rep.points_used = xs.size();

    const double in_lo = x0 - lambda, in_hi = x0 + lambda;
    for (int level : opt.levels) {
        quad::Grading gr;
        gr.order = 4 * level;
        gr.panels_per_octave = level;
        gr.min_fraction = 1e-14;
        KelvinLevel lv;
        lv.level = level;
        for (double x : xs) {
            const double d = x - x0;
            const double xr = x0 + lambda * lambda / d;
            const double pref = std::pow(lambda / std::abs(d), kexp);
            const double lhs1 = pref * (region(v1, -R, in_lo, xr, cuts_v, gr) + region(v1, in_hi, R, xr, cuts_v, gr));
            const double rhs1 = region(vk, in_lo, in_hi, x, cuts_k, gr);
            const double lhs2 = pref * region(v1, in_lo, in_hi, xr, cuts_v, gr);
            const double rhs2 = region(vk, -R, in_lo, x, cuts_k, gr) + region(vk, in_hi, R, x, cuts_k, gr);
            worst(lv.defect_inner, std::abs(lhs1 - rhs1) / std::max(std::abs(lhs1), std::abs(rhs1)));
            worst(lv.defect_outer, std::abs(lhs2 - rhs2) / std::max(std::abs(lhs2), std::abs(rhs2)));
            if (level == opt.levels.back()) {
                rep.tail_bound = std::max(rep.tail_bound, pref * tail(v1, xr) / std::abs(lhs1));
                rep.tail_bound = std::max(rep.tail_bound, tail(vk, x) / std::abs(rhs2));
            }
        }
        rep.levels.push_back(lv);
    }
    rep.max_defect_inner = rep.levels.back().defect_inner;
    rep.max_defect_outer = rep.levels.back().defect_outer;
    rep.decreasing = true;
    // Below the truncation bar the defect no longer reflects the quadrature.
    const double floor = std::max(1e-13, 2.0 * rep.tail_bound);
    for (std::size_t k = 1; k < rep.levels.size(); ++k) {
        const auto& a = rep.levels[k - 1];
        const auto& b = rep.levels[k];
        if (b.defect_inner > std::max(a.defect_inner, floor) || b.defect_outer > std::max(a.defect_outer, floor))
            rep.decreasing = false;
    }
    return rep;
}

BubbleFit fit_bubble(const Geometry& g, std::span<const double> u, double sigma)
{
    require_sphere_nodes(g);
    const std::size_t N = g.size();
    if (u.size() != N) throw ConfigError("field length does not match the geometry");
    for (double x : u)
        if (!(x > 0.0 && std::isfinite(x))) throw ConfigError("bubble fitting needs a positive field");
    const int n = g.dim();
    const double m = critical_exponent(n, sigma);
    const double p = 0.5 * (n + 2.0 * sigma);
    const auto& w = g.weights();

    double mass = 0.0, u2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        mass += w[i] * std::pow(u[i], m + 1.0);
        u2 += w[i] * u[i] * u[i];
    }
    const double c0 = std::pow(mass / g.total_volume(), 1.0 / (m + 1.0));
    const double umax = max_value(u);

    // Local maxima above 0.9 max over the 2n nearest neighbours.
    const std::size_t kn = std::min<std::size_t>(static_cast<std::size_t>(2 * n), N - 1);
    std::vector<std::size_t> peaks;
    std::vector<std::pair<double, std::size_t>> row;
    for (std::size_t i = 0; i < N; ++i) {
        if (u[i] < 0.9 * umax) continue;
        row.clear();
        for (std::size_t j = 0; j < N; ++j)
            if (j != i) row.emplace_back(g.chordal(i, j), j);
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(kn), row.end());
        bool peak = true;
        for (std::size_t k = 0; k < kn; ++k) peak = peak && u[i] >= u[row[k].second];
        if (peak) peaks.push_back(i);
    }
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });
    if (peaks.size() > 8) peaks.resize(8);
    const auto argmax = static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());

    std::vector<FitState> starts;
    auto node_vec = [&](std::size_t i) {
        const auto x = g.node(i);
        return std::vector<double>(x.begin(), x.end());
    };
    starts.push_back({node_vec(argmax), std::log(std::max(1.0, std::pow(umax / c0, 1.0 / p))), std::log(c0)});
    for (std::size_t i : peaks) {
        if (i == argmax) continue;
        starts.push_back({node_vec(i), std::log(std::max(1.0, std::pow(u[i] / c0, 1.0 / p))), std::log(c0)});
    }

    BubbleFit best;
    best.residual = std::numeric_limits<double>::infinity();
    best.starts = static_cast<int>(starts.size());
    std::vector<LmResult> results(starts.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(starts.size()); ++k)
        results[static_cast<std::size_t>(k)] = levenberg_marquardt(g, u, sigma, starts[static_cast<std::size_t>(k)]);
    for (const auto& r : results) {
        const double res = std::sqrt(r.cost / u2);
        if (res < best.residual) {
            best.residual = res;
            best.converged = r.converged;
            best.iterations = r.iterations;
            best.params = {r.state.xi0, std::exp(r.state.log_lambda), std::exp(r.state.log_c)};
        }
    }

    auto& bp = best.params;
    if (bp.lambda < 1.0) {
        bp.lambda = 1.0 / bp.lambda;
        for (auto& x : bp.xi0) x = -x;
    }
    if (bp.lambda - 1.0 <= 1e-6) {
        bp.lambda = 1.0;
        bp.xi0 = node_vec(0);
        const double len = norm(bp.xi0);
        for (auto& x : bp.xi0) x /= len;
    }
    return best;
}

double conformal_invariance_check(const KernelOperator& K, const std::vector<double>& lambdas, std::span<const double> xi0)
{
    if (lambdas.empty()) throw ConfigError("need at least one bubble scale");
    const Geometry& g = K.geometry();
    std::vector<double> centre(xi0.begin(), xi0.end());
    if (centre.empty()) {
        const auto x = g.node(0);
        centre.assign(x.begin(), x.end());
    }
    const double m = K.critical_m();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double lam : lambdas) {
        const double J = J_m(K, bubble(g, {centre, lam, 1.0}, K.sigma()), m);
        lo = std::min(lo, J);
        hi = std::max(hi, J);
    }
    return (hi - lo) / hi;
}

}  // namespace riesz
