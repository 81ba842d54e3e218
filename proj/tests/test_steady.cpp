#include <doctest.h>

#include <cmath>

#include "riesz/steady.hpp"

using namespace riesz;

namespace {

std::shared_ptr<const Geometry> circle(std::size_t N)
{
    return std::make_shared<const Geometry>(build_sphere(1, N, SphereScheme::uniform_angle));
}

Field random_positive(std::size_t N, std::uint64_t seed)
{
    Rng rng(seed);
    Field f(N);
    for (auto& x : f) x = rng.uniform(0.5, 2.0);
    return f;
}

}  // namespace

TEST_CASE("J is invariant under positive scaling")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const Field f = random_positive(128, 3);
    Field g = f;
    for (auto& x : g) x *= 3.7;
    for (double m : {1.0 / 3.0, 0.6, 2.0})
        CHECK(std::abs(J_m(K, g, m) - J_m(K, f, m)) <= 1e-12 * J_m(K, f, m));
    const Field zero(128, 0.0);
    CHECK_THROWS_AS(J_m(K, zero, 2.0), ConfigError);
}

TEST_CASE("J of constants at the critical exponent matches the gamma ratio")
{
    const auto g = circle(1024);
    const auto K = build_intertwining_kernel(g, 0.25);
    const Field one(1024, 1.0);
    const double expected = std::pow(2 * pi, -1.5) * 2 * pi * std::tgamma(0.25) / std::tgamma(0.75);
    CHECK(J_m(K, one, 1.0 / 3.0) == doctest::Approx(expected).epsilon(1e-5));
    CHECK(hls_constant(K) == doctest::Approx(J_m(K, one, 1.0 / 3.0)).epsilon(1e-14));
    CHECK(hls_constant_exact(1, 0.25) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("hls constant stabilizes under refinement")
{
    const double exact = hls_constant_exact(1, 0.25);
    double prev = 1e300;
    for (std::size_t N : {128, 256, 512, 1024}) {
        const double err = std::abs(hls_constant(circle(N), 0.25) - exact);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("constants are a fixed point of the extremal iteration")
{
    const auto K = build_intertwining_kernel(circle(64), 0.25);
    for (double m : {0.6, 2.0}) {
        const auto sol = solve_extremal(K, m);
        CHECK(sol.converged);
        CHECK(sol.iterations <= 2);
        CHECK(max_value(sol.S) - min_value(sol.S) <= 1e-13 * max_value(sol.S));
    }
}

TEST_CASE("m = 2 extremal is unique across random starts")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const auto a = solve_extremal(K, 2.0, random_positive(128, 11));
    const auto b = solve_extremal(K, 2.0, random_positive(128, 12));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    double d = 0;
    for (std::size_t i = 0; i < 128; ++i) d = std::max(d, std::abs(a.S[i] / b.S[i] - 1.0));
    CHECK(d <= 1e-8);
}

TEST_CASE("J increases along the plain iteration for m above one")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const auto sol = solve_extremal(K, 2.0, random_positive(128, 5));
    REQUIRE(sol.J_history.size() > 2);
    for (std::size_t k = 2; k < sol.J_history.size(); ++k)
        CHECK(sol.J_history[k] >= sol.J_history[k - 1] - 1e-12 * std::abs(sol.J_history[k - 1]));
}

TEST_CASE("sublinear extremal satisfies its equation")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const auto sol = solve_extremal(K, 0.6, random_positive(128, 9));
    CHECK(sol.converged);
    CHECK(sol.residual <= 1e-8);
    CHECK(steady_residual(K, sol.S, 0.6, sol.J_bar) <= 1e-8);
    CHECK(min_value(sol.S) > 0.0);
}

TEST_CASE("steady state from an extremal")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const auto ext = solve_extremal(K, 2.0, random_positive(128, 2));
    const auto st = steady_from_extremal(K, ext);
    for (std::size_t i = 0; i < 128; ++i) CHECK(st.S[i] == doctest::Approx(ext.J_bar * ext.S[i]).epsilon(1e-14));
    CHECK(st.coefficient == 1.0);
    CHECK(st.residual <= 1e-9);
    CHECK(J_m(K, st.S, 2.0) == doctest::Approx(ext.J_bar).epsilon(1e-12));
    auto one = ext;
    one.m = 1.0;
    CHECK_THROWS_AS(steady_from_extremal(K, one), ConfigError);
}

TEST_CASE("rescaled steady state scales by the inverse power of beta")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const auto s2 = steady_from_extremal(K, solve_extremal(K, 2.0));
    const auto p2 = rescaled_steady(K, s2);
    for (std::size_t i = 0; i < 128; ++i) CHECK(p2.S[i] == doctest::Approx(0.5 * s2.S[i]).epsilon(1e-14));
    CHECK(p2.coefficient == doctest::Approx(2.0));
    CHECK(steady_residual(K, p2.S, 2.0, 2.0) <= 1e-10);

    const auto s12 = steady_from_extremal(K, solve_extremal(K, 0.5));
    const auto p12 = rescaled_steady(K, s12);
    for (std::size_t i = 0; i < 128; ++i) CHECK(p12.S[i] == doctest::Approx(s12.S[i]).epsilon(1e-14));
    CHECK(steady_residual(K, p12.S, 0.5, 1.0) <= 1e-10);
}

TEST_CASE("solving with a scaled kernel scales J and the steady state")
{
    const auto K = build_intertwining_kernel(circle(96), 0.25);
    const double c = 1.7, m = 2.0;
    const auto L = K.scaled(c);
    const auto a = solve_extremal(K, m, random_positive(96, 4));
    const auto b = solve_extremal(L, m, random_positive(96, 4));
    CHECK(b.J_bar == doctest::Approx(c * a.J_bar).epsilon(1e-10));
    const auto sa = steady_from_extremal(K, a), sb = steady_from_extremal(L, b);
    const double factor = std::pow(c, 1.0 / (m - 1.0));
    for (std::size_t i = 0; i < 96; ++i) CHECK(sb.S[i] == doctest::Approx(factor * sa.S[i]).epsilon(1e-9));
}

TEST_CASE("Aubin comparison on the round sphere and on an amplified kernel")
{
    const auto K = build_intertwining_kernel(circle(128), 0.25);
    const auto round = aubin_check(K);
    CHECK(round.gap_sign == 0);
    CHECK(std::abs(round.gap) <= round.J_bar_error + round.hls_error + 1e-12);
    const auto amplified = aubin_check(K.scaled(1.5));
    CHECK(amplified.gap > 0.0);
    CHECK(amplified.gap_sign == 1);
    CHECK(amplified.J_bar == doctest::Approx(1.5 * round.J_bar).epsilon(1e-8));
}

TEST_CASE("Aubin comparison always produces a report")
{
    const auto g = circle(64);
    const double c = riesz_constant(1, 0.25);
    const auto P = build_power_kernel(g, 0.25, [&](std::size_t i, std::size_t j) {
        return c * (1.0 + 0.3 * (g->node(i)[0] + g->node(j)[0]) / 2);
    });
    ExtremalOptions opt;
    opt.max_iter = 200;
    const auto r = aubin_check(P, opt);
    CHECK(std::isfinite(r.hls));
    CHECK(!r.solver_status.empty());
}
