#include "riesz/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "riesz/common.hpp"

namespace riesz::quad {

namespace {

Rule make_rule(int order)
{
    Rule r;
    r.nodes.resize(static_cast<std::size_t>(order));
    r.weights.resize(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
        double x = std::cos(pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        r.nodes[static_cast<std::size_t>(i)] = x;
        r.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

double panel(const std::function<double(double)>& f, double lo, double hi, const Rule& rule)
{
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * f(mid + half * rule.nodes[k]);
    return s * half;
}

// ∫_0^1 h(t) dt with panels graded toward t = 0.
double graded_unit(const std::function<double(double)>& h, const Grading& g, const Rule& rule)
{
    const int per = std::max(1, g.panels_per_octave);
    const int count = static_cast<int>(std::ceil(per * std::log2(1.0 / g.min_fraction)));
    double s = 0.0;
    double lo = std::pow(2.0, -static_cast<double>(count) / per);
    s += panel(h, 0.0, lo, rule);
    for (int k = count - 1; k >= 0; --k) {
        const double hi = std::pow(2.0, -static_cast<double>(k) / per);
        s += panel(h, lo, hi, rule);
        lo = hi;
    }
    return s;
}

// ∫ over the half of length H starting at endpoint e and heading in direction d.
double half_interval(const std::function<double(double)>& f, double e, double d, double H, bool singular, double p,
                     const Grading& g, const Rule& rule)
{
    if (singular) {
        const double kappa = 1.0 / (1.0 + p);
        return graded_unit(
            [&](double t) {
                const double z = e + d * H * std::pow(t, kappa);
                if (t <= 0.0 || z == e) return 0.0;
                return f(z) * H * kappa * std::pow(t, kappa - 1.0);
            },
            g, rule);
    }
    return graded_unit([&](double t) { return f(e + d * H * t) * H; }, g, rule);
}

}  // namespace

const Rule& gauss_legendre(int order)
{
    if (order < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, make_rule(order)).first;
    return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, const Grading& g, bool singular_a,
                 bool singular_b, double singular_power)
{
    if (!(b > a)) return 0.0;
    if ((singular_a || singular_b) && !(singular_power > -1.0 && singular_power < 0.0))
        throw std::invalid_argument("singular power must lie in (-1, 0)");
    const Rule& rule = gauss_legendre(g.order);
    const double H = 0.5 * (b - a);
    return half_interval(f, a, 1.0, H, singular_a, singular_power, g, rule) +
           half_interval(f, b, -1.0, H, singular_b, singular_power, g, rule);
}

}  // namespace riesz::quad
