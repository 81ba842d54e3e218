#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "riesz/config.hpp"
#include "riesz/run.hpp"

using namespace riesz;

namespace {

std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "riesz-unit" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

RunConfig small_run()
{
    RunConfig cfg;
    cfg.count = 64;
    cfg.m = 2.0;
    cfg.t_end = 0.5;
    cfg.init = "random";
    cfg.seed = 42;
    cfg.snapshots = 2;
    return cfg;
}

}  // namespace

TEST_CASE("default configuration is valid")
{
    const auto chk = validate_config(RunConfig{});
    CHECK(chk.ok());
    CHECK_FALSE(chk.exploratory);
}

TEST_CASE("every violation is reported together")
{
    RunConfig cfg;
    cfg.sigma = 0.5;
    cfg.m = 0.0;
    cfg.t_end = -1.0;
    const auto chk = validate_config(cfg);
    CHECK(chk.violations.size() == 3);
    try {
        (void)load_config({}, {{"sigma", "0.5"}, {"m", "-1"}, {"bogus", "1"}});
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.violations().size() == 3);
    }
}

TEST_CASE("exponent below the critical value is exploratory")
{
    RunConfig cfg;
    cfg.m = 0.2;
    const auto chk = validate_config(cfg);
    CHECK(chk.ok());
    CHECK(chk.exploratory);
    REQUIRE(chk.warnings.size() == 1);
    CHECK(chk.warnings[0].find("exploratory") != std::string::npos);
    cfg.m = 1.0 / 3.0;
    CHECK_FALSE(validate_config(cfg).exploratory);
}

TEST_CASE("configuration text round trip")
{
    RunConfig cfg = small_run();
    cfg.regime = Regime::critical;
    cfg.q_set = {1.0, 2.0, 4.0};
    cfg.step.adaptive = false;
    cfg.bubble_xi0 = {0.0, 1.0};
    const auto dir = temp_dir("cfg");
    {
        std::ofstream f(dir / "run.cfg");
        f << to_text(cfg);
    }
    RunConfig back;
    CHECK(apply_settings(back, read_config_file(dir / "run.cfg")).empty());
    CHECK(to_map(back) == to_map(cfg));
    CHECK(to_map(cfg).size() == config_keys().size());
}

TEST_CASE("unknown keys and bad values are reported")
{
    RunConfig cfg;
    const auto errs = apply_settings(cfg, {{"colour", "red"}, {"m", "abc"}, {"regime", "fast"}});
    CHECK(errs.size() == 3);
}

TEST_CASE("random initial data is positive and seeded")
{
    const auto g = build_sphere(1, 256, SphereScheme::uniform_angle);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) CHECK(min_value(random_initial_data(g, seed)) > 0.0);
    CHECK(random_initial_data(g, 5) == random_initial_data(g, 5));
    CHECK(random_initial_data(g, 5) != random_initial_data(g, 6));
}

TEST_CASE("runs are bitwise reproducible")
{
    const auto cfg = small_run();
    const auto a = temp_dir("run-a"), b = temp_dir("run-b");
    const auto ra = run_experiment(cfg, a);
    const auto rb = run_experiment(cfg, b);
    CHECK(ra.termination == "t_end");
    CHECK(slurp(a / "diagnostics.csv") == slurp(b / "diagnostics.csv"));
    CHECK(slurp(a / "final.field") == slurp(b / "final.field"));
    CHECK(std::filesystem::exists(a / "manifest.json"));
    CHECK(to_map(config_from_manifest(a / "manifest.json")) == to_map(cfg));
    const auto t = read_csv(a / "diagnostics.csv");
    CHECK(t.columns == diagnostics_columns(cfg.q_set));
    CHECK(t.rows.size() == ra.records);
}

TEST_CASE("report of a run and of an empty directory")
{
    const auto dir = temp_dir("run-report");
    (void)run_experiment(small_run(), dir);
    const auto rep = report_run(dir);
    CHECK(rep.text.find("J") != std::string::npos);
    CHECK_FALSE(rep.csv.empty());
    CHECK_THROWS_AS(report_run(temp_dir("empty")), ConfigError);
}

TEST_CASE("power kernel from configuration")
{
    RunConfig cfg;
    cfg.count = 32;
    cfg.kernel = "power";
    cfg.amplitude = 0.5;
    cfg.anisotropy = 0.2;
    const auto g = make_geometry(cfg);
    const auto K = make_kernel(cfg, g);
    CHECK(K.entry(1, 5) == doctest::Approx(K.entry(5, 1)));
    CHECK(K.entry(1, 5) * std::sqrt(g->chordal(1, 5)) ==
          doctest::Approx(0.5 * (1.0 + 0.2 * (g->node(1)[0] + g->node(5)[0]) / 2)).epsilon(1e-13));
}
