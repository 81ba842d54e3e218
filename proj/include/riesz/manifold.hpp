#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riesz/common.hpp"

namespace riesz {

enum class SphereScheme { uniform_angle, fibonacci, equal_area };

std::string to_string(SphereScheme s);
SphereScheme parse_sphere_scheme(const std::string& s);

/// Builder provenance of a sphere discretization. Only geometries carrying this tag
/// are accepted by the intertwining-kernel builder.
struct SphereInfo {
    int n = 0;
    SphereScheme scheme = SphereScheme::uniform_angle;

    bool operator==(const SphereInfo&) const = default;
};

/// Volume of the unit n-sphere S^n ⊂ R^{n+1}.
double sphere_volume(int n);
/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// A discretized compact manifold: nodes in ambient coordinates, positive quadrature
/// weights and symmetric distance tables.
///
/// Distances are either computed on demand from the nodes (sphere builds and point
/// clouds without a table) or stored explicitly (files that provide a table). Immutable
/// after construction and safe to share between threads.
class Geometry {
public:
    struct Data {
        int dim = 0;
        int ambient_dim = 0;
        std::vector<double> nodes;     // row-major, size() x ambient_dim
        Field weights;
        std::vector<double> chordal;   // optional explicit N x N table
        std::vector<double> geodesic;  // optional explicit N x N table
        std::optional<SphereInfo> sphere;
    };

    /// Validates every invariant; throws ValidationError listing all violations.
    explicit Geometry(Data data);

    int dim() const noexcept { return data_.dim; }
    int ambient_dim() const noexcept { return data_.ambient_dim; }
    std::size_t size() const noexcept { return data_.weights.size(); }

    std::span<const double> node(std::size_t i) const
    {
        return {data_.nodes.data() + i * static_cast<std::size_t>(data_.ambient_dim),
                static_cast<std::size_t>(data_.ambient_dim)};
    }
    const std::vector<double>& nodes() const noexcept { return data_.nodes; }
    const Field& weights() const noexcept { return data_.weights; }
    double total_volume() const noexcept { return total_volume_; }
    const std::optional<SphereInfo>& sphere() const noexcept { return data_.sphere; }

    bool has_explicit_distances() const noexcept { return !data_.chordal.empty(); }
    bool has_explicit_geodesic() const noexcept { return !data_.geodesic.empty(); }
    /// True when every node is a unit vector in the ambient space.
    bool nodes_on_unit_sphere() const noexcept { return unit_nodes_; }

    /// Ambient Euclidean distance (or the provided table).
    double chordal(std::size_t i, std::size_t j) const;
    /// Intrinsic distance: great-circle for unit-norm nodes, the provided table, or chordal.
    double geodesic(std::size_t i, std::size_t j) const;

    bool operator==(const Geometry& other) const;

private:
    Data data_;
    double total_volume_ = 0.0;
    bool unit_nodes_ = false;
};

/// Every invariant violation of the given data (empty when valid). Triangle inequalities
/// are sampled with a fixed seed.
std::vector<std::string> geometry_violations(const Geometry::Data& data, std::uint64_t seed = 0x5eed);

/// Quadrature discretization of the unit sphere S^n.
///
/// n = 1 accepts uniform_angle only; n = 2 accepts fibonacci (equal weights 4π/N) or
/// equal_area (latitude bands of equal area with points spread proportionally to the
/// band circumference). Weights are rescaled to sum to vol(S^n).
Geometry build_sphere(int n, std::size_t count, SphereScheme scheme);

/// Geometry text file:
///
///     riesz-flow-geometry 1
///     dim <n>
///     ambient <d>
///     count <N>
///     sphere <scheme>          (optional; marks a sphere build)
///     nodes                    (N rows of d floats)
///     weights                  (N floats)
///     distances                (optional, N rows of N floats)
///     geodesic                 (optional, N rows of N floats)
///
/// Missing distances are recomputed from the nodes.
Geometry load_geometry(const std::filesystem::path& path);
void save_geometry(const std::filesystem::path& path, const Geometry& geom, bool with_distances = false);

/// Rotate node coordinates by an orthogonal matrix (row-major, ambient x ambient). Used to
/// test rotation invariance of sphere quantities.
Geometry rotate_geometry(const Geometry& geom, std::span<const double> rotation);

}  // namespace riesz
