#include <doctest.h>

#include <cmath>

#include "riesz/sphere.hpp"
#include "riesz/steady.hpp"

using namespace riesz;

namespace {

std::shared_ptr<const Geometry> circle(std::size_t N)
{
    return std::make_shared<const Geometry>(build_sphere(1, N, SphereScheme::uniform_angle));
}

BubbleParams at_angle(double angle, double lambda, double c = 1.0)
{
    return {{std::cos(angle), std::sin(angle)}, lambda, c};
}

}  // namespace

TEST_CASE("stereographic projection round trip")
{
    for (double x : {-3.0, -0.4, 0.0, 0.7, 12.0}) {
        const std::vector<double> p{x};
        const auto xi = inverse_stereographic(p);
        CHECK(xi[0] * xi[0] + xi[1] * xi[1] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(stereographic(xi)[0] == doctest::Approx(x).epsilon(1e-13));
    }
    const std::vector<double> origin{0.0};
    const auto south = inverse_stereographic(origin);
    CHECK(south[0] == 0.0);
    CHECK(south[1] == -1.0);
    const std::vector<double> one{1.0};
    CHECK(stereographic_jacobian(one) == doctest::Approx(1.0));
    CHECK(stereographic_jacobian(origin) == doctest::Approx(2.0));
}

TEST_CASE("bubble values")
{
    const auto b = at_angle(0.0, 1.0, 2.5);
    const std::vector<double> xi{0.6, 0.8};
    CHECK(bubble_value(xi, b, 1, 0.25) == doctest::Approx(2.5).epsilon(1e-15));
    const auto c = at_angle(0.0, 3.0);
    const std::vector<double> centre{1.0, 0.0}, antipode{-1.0, 0.0};
    CHECK(bubble_value(centre, c, 1, 0.25) == doctest::Approx(std::pow(3.0, 0.75)).epsilon(1e-14));
    CHECK(bubble_value(antipode, c, 1, 0.25) == doctest::Approx(std::pow(3.0, -0.75)).epsilon(1e-14));
}

TEST_CASE("bubbles share the critical Lebesgue norm")
{
    const auto g = circle(1024);
    const double p = 1.0 + critical_exponent(1, 0.25);
    auto norm = [&](double lambda) {
        Field u = bubble(*g, at_angle(0.3, lambda), 0.25);
        for (auto& x : u) x = std::pow(x, p);
        return integrate(g->weights(), u);
    };
    const double ref = norm(1.0);
    CHECK(norm(2.0) == doctest::Approx(ref).epsilon(1e-8));
    CHECK(norm(0.5) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("bubbles solve the critical equation")
{
    const auto K = build_intertwining_kernel(circle(512), 0.25);
    CHECK(bubble_residual(K, at_angle(1.0, 1.0)) <= 1e-12);
    CHECK(bubble_residual(K, at_angle(1.0, 2.0)) <= 1e-4);
    CHECK(conformal_invariance_check(K, {0.5, 1.0, 2.0}) <= 1e-3);
}

TEST_CASE("Kelvin transform is an involution")
{
    const FlatFunction v = [](std::span<const double> x) { return 1.0 / (1.0 + x[0] * x[0]) + 0.1 * x[0]; };
    const std::vector<double> x0{0.3};
    const FlatFunction kv = [&](std::span<const double> x) { return kelvin(v, x0, 1.5, x, 1, 0.25); };
    for (double x : {-2.0, 0.1, 0.9, 4.0}) {
        const std::vector<double> p{x};
        CHECK(kelvin(kv, x0, 1.5, p, 1, 0.25) == doctest::Approx(v(p)).epsilon(1e-13));
    }
}

TEST_CASE("Kelvin identities hold for a flat bubble")
{
    const auto v = flat_bubble(at_angle(0.7, 2.0), 1, 0.25);
    const std::vector<double> x0{0.3};
    std::vector<std::vector<double>> pts{{-2.0}, {0.05}, {1.1}, {2.7}};
    KelvinOptions opt;
    opt.levels = {1, 2};
    const auto r = check_kelvin_identities(v, 1, 0.25, x0, 1.0, pts, opt);
    CHECK(r.points_used == 4);
    CHECK(r.max_defect_inner <= 1e-5);
    CHECK(r.max_defect_outer <= 1e-5);
    CHECK(r.levels.size() == 2);
}

TEST_CASE("bubble fit recovers parameters")
{
    const auto g = circle(256);
    const auto target = at_angle(0.7, 1.8, 1.3);
    const auto f = fit_bubble(*g, bubble(*g, target, 0.25), 0.25);
    CHECK(f.converged);
    CHECK(f.residual <= 1e-8);
    CHECK(f.params.lambda == doctest::Approx(1.8).epsilon(1e-7));
    CHECK(f.params.c == doctest::Approx(1.3).epsilon(1e-7));
    CHECK(std::atan2(f.params.xi0[1], f.params.xi0[0]) == doctest::Approx(0.7).epsilon(1e-7));
}

TEST_CASE("bubble fit is canonical")
{
    const auto g = circle(256);
    const auto flipped = at_angle(0.7, 1.0 / 1.8);
    const auto f = fit_bubble(*g, bubble(*g, flipped, 0.25), 0.25);
    CHECK(f.params.lambda == doctest::Approx(1.8).epsilon(1e-7));
    CHECK(std::atan2(f.params.xi0[1], f.params.xi0[0]) == doctest::Approx(0.7 - pi).epsilon(1e-7));

    const auto c = fit_bubble(*g, Field(256, 2.0), 0.25);
    CHECK(c.params.lambda == 1.0);
    CHECK(c.params.c == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c.params.xi0[0] == g->node(0)[0]);
    CHECK(c.params.xi0[1] == g->node(0)[1]);
}

TEST_CASE("flat pullback of a bubble equals the flat bubble")
{
    const auto b = at_angle(0.4, 1.6, 0.8);
    const auto direct = flat_bubble(b, 1, 0.25);
    const auto pulled = flat_pullback([&](std::span<const double> xi) { return bubble_value(xi, b, 1, 0.25); }, 1, 0.25);
    for (double x : {-5.0, -0.3, 0.0, 0.8, 3.0}) {
        const std::vector<double> p{x};
        CHECK(pulled(p) == doctest::Approx(direct(p)).epsilon(1e-14));
    }
}
