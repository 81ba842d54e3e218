#pragma once

#include <functional>
#include <string>
#include <vector>

#include "riesz/common.hpp"
#include "riesz/kernel.hpp"
#include "riesz/manifold.hpp"

namespace riesz {

struct BubbleParams {
    std::vector<double> xi0;  // unit vector in R^{n+1}
    double lambda = 1.0;
    double c = 1.0;
};

/// c (2λ / (2 + (λ² - 1)(1 - ξ·ξ0)))^{(n+2σ)/2}.
double bubble_value(std::span<const double> xi, const BubbleParams& b, int n, double sigma);
Field bubble(const Geometry& geom, const BubbleParams& b, double sigma);

/// ‖K B - a B^m‖_∞ / ‖a B^m‖_∞ with a = ∫ B K B / ∫ B^{m+1} at the critical exponent.
double bubble_residual(const KernelOperator& K, const BubbleParams& b);

/// Projection from the north pole: ξ = (ξ', ξ_{n+1}) ↦ ξ' / (1 - ξ_{n+1}).
std::vector<double> stereographic(std::span<const double> xi);
/// Inverse map F(x) = (2x / (1 + |x|²), (|x|² - 1) / (|x|² + 1)); F(0) is the south pole.
std::vector<double> inverse_stereographic(std::span<const double> x);
/// |J_F|(x) = (2 / (1 + |x|²))^n.
double stereographic_jacobian(std::span<const double> x);

using FlatFunction = std::function<double(std::span<const double>)>;
using SphereFunction = std::function<double(std::span<const double>)>;

/// v(x) = |J_F|^{(n-2σ)/(2n)} u(F(x))^{(n-2σ)/(n+2σ)}.
FlatFunction flat_pullback(SphereFunction u, int n, double sigma);
FlatFunction flat_bubble(const BubbleParams& b, int n, double sigma);

/// (λ / |x - x0|)^{n-2σ} v(x0 + λ² (x - x0) / |x - x0|²). Requires x != x0.
double kelvin(const FlatFunction& v, std::span<const double> x0, double lambda, std::span<const double> x, int n,
              double sigma);

struct KelvinLevel {
    int level = 0;
    double defect_inner = 0.0;  // identity pairing the exterior of the ball with the interior
    double defect_outer = 0.0;  // identity pairing the interior with the exterior
};

struct KelvinCheckReport {
    double max_defect_inner = 0.0;  // at the finest level
    double max_defect_outer = 0.0;
    double tail_bound = 0.0;        // relative truncation bar, not added to the integrals
    std::vector<KelvinLevel> levels;
    std::size_t points_used = 0;
    std::vector<std::string> notes;
    bool decreasing = false;        // defects non-increasing over levels (within round-off)
};

struct KelvinOptions {
    std::vector<int> levels{1, 2, 3};
    double radius = 1e8;       // truncation of the unbounded regions
    double shell = 1e-3;       // points with |x - x0| < shell · λ are skipped
    std::vector<double> breakpoints;  // extra points where v varies quickly
};

/// Evaluates both Kelvin identities at each test point by flat-space quadrature (n = 1).
KelvinCheckReport check_kelvin_identities(const FlatFunction& v, int n, double sigma, std::span<const double> x0,
                                          double lambda, const std::vector<std::vector<double>>& points,
                                          const KelvinOptions& opt = {});

struct BubbleFit {
    BubbleParams params;
    double residual = 0.0;  // ‖u - B‖_{L²} / ‖u‖_{L²}
    bool converged = false;
    int iterations = 0;
    int starts = 0;
};

/// Weighted least-squares fit of a bubble by Levenberg–Marquardt from several starts.
/// The result is canonical: λ >= 1, and λ = 1 with ξ0 at the first node for constants.
BubbleFit fit_bubble(const Geometry& geom, std::span<const double> u, double sigma);

/// (max - min) / max of the critical J over bubbles with the given λ values.
double conformal_invariance_check(const KernelOperator& K, const std::vector<double>& lambdas,
                                  std::span<const double> xi0 = {});

}  // namespace riesz
