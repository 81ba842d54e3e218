#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "riesz/manifold.hpp"

using namespace riesz;

namespace {

std::filesystem::path temp_path(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "riesz-unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("circle build has equal weights and unit nodes")
{
    const auto g = build_sphere(1, 8, SphereScheme::uniform_angle);
    CHECK(g.size() == 8);
    CHECK(g.dim() == 1);
    CHECK(g.ambient_dim() == 2);
    for (std::size_t i = 0; i < 8; ++i) CHECK(g.weights()[i] == doctest::Approx(2 * pi / 8).epsilon(1e-15));
    CHECK(g.total_volume() == doctest::Approx(2 * pi).epsilon(1e-15));
    CHECK(g.nodes_on_unit_sphere());
}

TEST_CASE("antipodal circle nodes are at chordal distance 2 and geodesic distance pi")
{
    const auto g = build_sphere(1, 8, SphereScheme::uniform_angle);
    CHECK(g.chordal(0, 4) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g.geodesic(0, 4) == doctest::Approx(pi).epsilon(1e-15));
    CHECK(g.chordal(0, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(g.geodesic(0, 2) == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(g.chordal(3, 3) == 0.0);
}

TEST_CASE("fibonacci sphere weights sum to 4 pi")
{
    const auto g = build_sphere(2, 1000, SphereScheme::fibonacci);
    double s = 0;
    for (double w : g.weights()) s += w;
    CHECK(s == doctest::Approx(4 * pi).epsilon(1e-12));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.node(i);
        CHECK(std::abs(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 1.0) < 1e-14);
    }
}

TEST_CASE("equal area sphere weights sum to 4 pi")
{
    const auto g = build_sphere(2, 400, SphereScheme::equal_area);
    CHECK(g.total_volume() == doctest::Approx(4 * pi).epsilon(1e-12));
    CHECK(g.nodes_on_unit_sphere());
}

TEST_CASE("sphere volumes")
{
    CHECK(sphere_volume(1) == doctest::Approx(2 * pi));
    CHECK(sphere_volume(2) == doctest::Approx(4 * pi));
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(pi));
}

TEST_CASE("sphere builder rejects bad requests")
{
    CHECK_THROWS_AS(build_sphere(1, 4, SphereScheme::uniform_angle), ConfigError);
    CHECK_THROWS_AS(build_sphere(1, 64, SphereScheme::fibonacci), ConfigError);
    CHECK_THROWS_AS(build_sphere(2, 64, SphereScheme::uniform_angle), ConfigError);
    CHECK_THROWS_AS(build_sphere(3, 64, SphereScheme::fibonacci), ConfigError);
    CHECK_THROWS_AS(parse_sphere_scheme("hexagonal"), ConfigError);
}

TEST_CASE("geometry save and load round trip")
{
    const auto g = build_sphere(1, 64, SphereScheme::uniform_angle);
    const auto p = temp_path("circle64.geom");
    save_geometry(p, g);
    const auto h = load_geometry(p);
    CHECK(h == g);
    save_geometry(p, g, true);
    const auto k = load_geometry(p);
    CHECK(k.has_explicit_distances());
    for (std::size_t i = 0; i < 64; i += 7)
        for (std::size_t j = 0; j < 64; j += 5) CHECK(k.chordal(i, j) == g.chordal(i, j));
}

TEST_CASE("negative weight is reported with its index")
{
    auto data = Geometry::Data{};
    data.dim = 1;
    data.ambient_dim = 2;
    for (int i = 0; i < 8; ++i) {
        const double th = 2 * pi * i / 8;
        data.nodes.push_back(std::cos(th));
        data.nodes.push_back(std::sin(th));
        data.weights.push_back(2 * pi / 8);
    }
    data.weights[5] = -0.1;
    try {
        Geometry g(data);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        bool named = false;
        for (const auto& v : e.violations()) named = named || v.find("weight[5]") != std::string::npos;
        CHECK(named);
    }
}

TEST_CASE("every violation is listed")
{
    auto data = Geometry::Data{};
    data.dim = 1;
    data.ambient_dim = 2;
    data.nodes = {1, 0, 0, 1, -1, 0, 0, -1};
    data.weights = {-1, 1, 0, 1};
    const auto v = geometry_violations(data);
    int weight_msgs = 0;
    for (const auto& s : v) weight_msgs += s.find("weight[") != std::string::npos;
    CHECK(weight_msgs == 2);
}

TEST_CASE("point cloud without unit norm falls back to chordal geodesic")
{
    auto data = Geometry::Data{};
    data.dim = 1;
    data.ambient_dim = 2;
    data.nodes = {0, 0, 1, 0, 1, 1, 0, 1};
    data.weights = {1, 1, 1, 1};
    const Geometry g(data);
    CHECK_FALSE(g.nodes_on_unit_sphere());
    CHECK(g.geodesic(0, 2) == doctest::Approx(std::sqrt(2.0)));
    CHECK(g.geodesic(0, 2) == g.chordal(0, 2));
}

TEST_CASE("rotation preserves distances and weights")
{
    const auto g = build_sphere(2, 200, SphereScheme::fibonacci);
    const double c = std::cos(0.4), s = std::sin(0.4);
    const std::vector<double> R{c, -s, 0, s, c, 0, 0, 0, 1};
    const auto h = rotate_geometry(g, R);
    CHECK(h.weights() == g.weights());
    for (std::size_t i = 0; i < 200; i += 13)
        for (std::size_t j = 0; j < 200; j += 17) CHECK(h.chordal(i, j) == doctest::Approx(g.chordal(i, j)).epsilon(1e-13));
    const std::vector<double> bad{1, 1, 0, 0, 1, 0, 0, 0, 1};
    CHECK_THROWS_AS(rotate_geometry(g, bad), ConfigError);
}

TEST_CASE("quadrature integrates low degree harmonics on the circle exactly")
{
    const auto g = build_sphere(1, 32, SphereScheme::uniform_angle);
    double c1 = 0, c2 = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.node(i);
        c1 += g.weights()[i] * x[0];
        c2 += g.weights()[i] * x[0] * x[0];
    }
    CHECK(std::abs(c1) < 1e-14);
    CHECK(c2 == doctest::Approx(pi).epsilon(1e-14));
}

TEST_CASE("malformed geometry file reports its line")
{
    const auto p = temp_path("bad.geom");
    {
        std::ofstream f(p);
        f << "riesz-flow-geometry 1\ndim 1\nambient 2\ncount 3\nnodes\n1 0\n0 x\n";
    }
    CHECK_THROWS_AS(load_geometry(p), ConfigError);
}
