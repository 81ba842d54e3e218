#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "riesz/common.hpp"
#include "riesz/manifold.hpp"

namespace riesz {

/// How the diagonal entry K_ii (the self-cell integral) is modeled.
///
/// equivalent_disc: the cell is a flat n-ball of volume w_i, so
///     w_i K_ii = c σ_{n-1} r_i^{2σ} / (2σ),  r_i = (w_i / |B_1^n|)^{1/n}.
/// lattice_zeta: for equispaced S^1 nodes with spacing h, the punctured lattice sum of
///     c|x|^{2σ-1} misses -2 ζ(1-2σ) c h^{2σ}, which is added back as w_i K_ii.
/// none: K_ii = 0 (ablation only).
/// automatic: lattice_zeta on uniform_angle S^1 builds, equivalent_disc elsewhere.
enum class DiagonalRule { automatic, equivalent_disc, lattice_zeta, none };
enum class DistanceKind { chordal, geodesic };

std::string to_string(DiagonalRule r);
DiagonalRule parse_diagonal_rule(const std::string& s);
std::string to_string(DistanceKind k);
DistanceKind parse_distance_kind(const std::string& s);

/// c_{n,σ} = Γ((n-2σ)/2) / (2^{2σ} π^{n/2} Γ(σ)).
double riesz_constant(int n, double sigma);
/// Eigenvalue of the sphere kernel on degree-l harmonics: Γ(l + n/2 - σ) / Γ(l + n/2 + σ).
double intertwining_eigenvalue(int n, double sigma, int degree = 0);
/// (n - 2σ) / (n + 2σ).
double critical_exponent(int n, double sigma);

/// Dense symmetric kernel matrix on a geometry. Immutable; apply() may be called
/// concurrently.
class KernelOperator {
public:
    struct Meta {
        double sigma = 0.0;
        double lambda = 1.0;          // two-sided bound constant about pole_amplitude
        double pole_amplitude = 1.0;  // c in K ~ c d^{2σ-n} near the diagonal
        bool is_intertwining = false;
        DiagonalRule diagonal = DiagonalRule::equivalent_disc;
        DistanceKind distance = DistanceKind::chordal;
    };

    /// Takes a row-major N x N matrix. The matrix is symmetrized as (K + K^T)/2; callers
    /// are responsible for validating it first.
    KernelOperator(std::shared_ptr<const Geometry> geom, Meta meta, std::vector<double> matrix);

    const Geometry& geometry() const noexcept { return *geom_; }
    std::shared_ptr<const Geometry> geometry_ptr() const noexcept { return geom_; }
    const Meta& meta() const noexcept { return meta_; }
    int n() const noexcept { return geom_->dim(); }
    double sigma() const noexcept { return meta_.sigma; }
    double lambda() const noexcept { return meta_.lambda; }
    bool is_intertwining() const noexcept { return meta_.is_intertwining; }
    double critical_m() const { return critical_exponent(n(), meta_.sigma); }
    std::size_t size() const noexcept { return geom_->size(); }

    double entry(std::size_t i, std::size_t j) const { return matrix_[i * size() + j]; }
    const std::vector<double>& matrix() const noexcept { return matrix_; }
    /// Distance used for the singular profile (chordal or geodesic per meta).
    double distance(std::size_t i, std::size_t j) const;

    /// (Kf)_i = Σ_j K_ij w_j f_j. Each row is summed in a fixed order, so the result does
    /// not depend on the number of worker threads.
    Field apply(std::span<const double> f) const;
    void apply(std::span<const double> f, std::span<double> out) const;

    /// Same kernel multiplied by a positive constant; a factor other than 1 drops the
    /// intertwining tag.
    KernelOperator scaled(double factor) const;

private:
    std::shared_ptr<const Geometry> geom_;
    Meta meta_;
    std::vector<double> matrix_;
};

/// Sphere kernel c_{n,σ} |ξ_i - ξ_j|^{2σ-n}. Requires a sphere build and 0 < σ < n/2.
KernelOperator build_intertwining_kernel(std::shared_ptr<const Geometry> geom, double sigma,
                                         DiagonalRule rule = DiagonalRule::automatic);

/// amplitude(i, j) d_ij^{2σ-n}; amplitude must be positive and symmetric to 1e-12.
using AmplitudeFn = std::function<double(std::size_t, std::size_t)>;
KernelOperator build_power_kernel(std::shared_ptr<const Geometry> geom, double sigma, const AmplitudeFn& amplitude,
                                  DiagonalRule rule = DiagonalRule::automatic,
                                  DistanceKind distance = DistanceKind::chordal);

struct KernelReport {
    std::size_t size = 0;
    bool positive = false;            // every entry finite and > 0
    double symmetry_defect = 0.0;     // max |K_ij - K_ji| / max |K_ij|
    bool k1_pass = false;
    double ratio_min = 0.0;           // min over i != j of K_ij d_ij^{n-2σ}
    double ratio_max = 0.0;
    double amplitude_center = 0.0;    // sqrt(ratio_min ratio_max)
    double lambda_fit = 0.0;          // sqrt(ratio_max / ratio_min)
    double lambda_raw = 0.0;          // max(ratio_max, 1 / ratio_min), bound about amplitude 1
    double lambda_stated = 0.0;
    bool k2_pass = false;
    double lipschitz_ratio = 0.0;     // max |ΔK| / |Δx| · dist^{n+1-2σ} / amplitude_center
    double lipschitz_bound = 0.0;
    bool k3_pass = false;
    double pole_constant = 0.0;       // mean of K_ij d_ij^{n-2σ} over 5 nearest neighbours
    double pole_spread = 0.0;         // (max - min) / mean of the per-node averages
    bool k4_pass = false;

    bool all_pass() const { return positive && k1_pass && k2_pass && k3_pass && k4_pass; }
};

struct ValidateOptions {
    double lipschitz_factor = 10.0;   // (K-3) passes when the ratio is at most factor · Λ
    double pole_spread_tol = 0.05;
    std::size_t pole_neighbours = 5;
};

/// Checks the kernel axioms on a raw (possibly non-symmetric) row-major matrix.
KernelReport validate_kernel_matrix(const Geometry& geom, double sigma, std::span<const double> matrix,
                                    DistanceKind distance, double lambda_stated, const ValidateOptions& opt = {});
KernelReport validate_kernel(const KernelOperator& K, const ValidateOptions& opt = {});
std::string format_report(const KernelReport& r);

/// Kernel file: header lines (n, sigma, lambda, pole_amplitude, intertwining, diagonal,
/// distance, count) then "matrix" and N rows of N floats.
void save_kernel(const std::filesystem::path& path, const KernelOperator& K);
/// Loads and validates against geom; throws ValidationError on failed axioms.
KernelOperator load_kernel(const std::filesystem::path& path, std::shared_ptr<const Geometry> geom,
                           const ValidateOptions& opt = {});

struct QCurvatureField {
    Field values;
    Field u;
    double m = 0.0;
};

/// Q_i = u_i^{-m} (Ku)_i at the critical exponent of K.
QCurvatureField dual_Q(const KernelOperator& K, std::span<const double> u);
/// Vol_g^{-(n+2σ)/n} ∫ Q dvol_g = (Σ w u^{m+1})^{-(n+2σ)/n} Σ w u (Ku).
double total_Q_functional(const KernelOperator& K, std::span<const double> u);

}  // namespace riesz
