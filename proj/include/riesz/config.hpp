#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "riesz/flow.hpp"
#include "riesz/kernel.hpp"
#include "riesz/manifold.hpp"

namespace riesz {

/// Flat key set of a run. Every key has a default; `to_text` writes all of them so a
/// manifest alone reproduces the run.
struct RunConfig {
    std::string geometry = "sphere";  // sphere | file
    int n = 1;
    std::size_t count = 256;
    SphereScheme scheme = SphereScheme::uniform_angle;
    std::filesystem::path geometry_file;

    std::string kernel = "intertwining";  // intertwining | power | file
    std::filesystem::path kernel_file;
    DiagonalRule diagonal = DiagonalRule::automatic;
    DistanceKind distance = DistanceKind::chordal;
    double amplitude = 1.0;   // power kernel: A (1 + ε (x_i + x_j) / 2), x the first coordinate
    double anisotropy = 0.0;  // ε, |ε| < 1

    double sigma = 0.25;
    double m = 2.0;
    Regime regime = Regime::raw;
    double t_end = 1.0;
    StepPolicy step;

    std::string init = "constant";  // constant | file | random | bubble | separable | cosine
    double init_value = 1.0;
    std::filesystem::path init_file;
    std::uint64_t seed = 1;
    double init_amplitude = 0.3;    // cosine: 1 + A x_0
    double bubble_lambda = 2.0;
    double bubble_c = 1.0;
    std::vector<double> bubble_xi0; // empty: last coordinate axis
    double separable_c = 1.0;

    std::vector<double> q_set{1.0, 2.0};
    bool renormalize = true;
    std::size_t snapshots = 16;
    std::filesystem::path output;
};

/// Every key accepted by `apply_setting`, in the order `to_text` writes them.
const std::vector<std::string>& config_keys();

/// key = value lines; '#' starts a comment. Throws ConfigError on malformed lines.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// Applies settings in order; returns one message per unknown key or unparsable value.
std::vector<std::string> apply_settings(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv);

std::string to_text(const RunConfig& cfg);
std::map<std::string, std::string> to_map(const RunConfig& cfg);

struct ConfigCheck {
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
    bool exploratory = false;  // 0 < m < critical exponent
    bool ok() const { return violations.empty(); }
};

ConfigCheck validate_config(const RunConfig& cfg);

/// Reads the file (if any), applies overrides, validates; throws ValidationError listing
/// every violation.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& overrides);

std::shared_ptr<const Geometry> make_geometry(const RunConfig& cfg);
KernelOperator make_kernel(const RunConfig& cfg, std::shared_ptr<const Geometry> geom);

/// 1 + Σ_{j=1}^{4} (a_j / j) cos(j d_j·x + φ_j), a_j ~ U(-0.2, 0.2), d_j a random unit
/// direction, φ_j ~ U(0, 2π).
Field random_initial_data(const Geometry& geom, std::uint64_t seed);
Field make_initial_data(const RunConfig& cfg, const KernelOperator& K);

}  // namespace riesz
