#pragma once

#include <optional>
#include <string>
#include <vector>

#include "riesz/common.hpp"
#include "riesz/kernel.hpp"

namespace riesz {

/// Positive field f with K f = coefficient · f^m.
///
/// An extremal of J_m is normalized in L^{m+1} with coefficient J_bar; a steady state has
/// coefficient 1; a rescaled steady state has coefficient m / |1 - m|.
struct SteadySolution {
    Field S;
    double m = 0.0;
    double coefficient = 1.0;
    double J_bar = 0.0;
    double residual = 0.0;  // ‖K S - coefficient S^m‖_∞ / ‖coefficient S^m‖_∞
    int iterations = 0;
    bool converged = false;
    std::string status;     // converged | max_iter | concentration
    std::vector<double> J_history;
};

/// Σ w f Kf / (Σ w |f|^{m+1})^{2/(m+1)}.
double J_m(const KernelOperator& K, std::span<const double> f, double m);

/// ‖K f - coefficient f^m‖_∞ / ‖coefficient f^m‖_∞.
double steady_residual(const KernelOperator& K, std::span<const double> f, double m, double coefficient);

struct ExtremalOptions {
    double tol = 1e-10;
    int max_iter = 20000;
    double damping = 0.0;          // θ in (0, 1]; 0 selects 1 for m >= 1 and 0.5 for m < 1
    double concentration = 1e6;    // stop when max f / min f exceeds this
};

/// Damped nonlinear power iteration f ← normalize(f^{1-θ} (K f)^{θ/m}) in L^{m+1}.
/// Stops when both the relative sup-change and the equation residual are at most tol.
SteadySolution solve_extremal(const KernelOperator& K, double m, const std::optional<Field>& init = std::nullopt,
                              const ExtremalOptions& opt = {});

/// S = J_bar^{1/(m-1)} f, solving K S = S^m. Requires m != 1.
SteadySolution steady_from_extremal(const KernelOperator& K, const SteadySolution& extremal);

/// φ = β^{1/(1-m)} S with β = m / |1 - m|, solving K φ = β φ^m.
SteadySolution rescaled_steady(const KernelOperator& K, const SteadySolution& steady);

/// J at the critical exponent on the constant function, for the sphere kernel on this
/// kernel's geometry (or on a fresh intertwining kernel built from geom and σ).
double hls_constant(const KernelOperator& K);
double hls_constant(std::shared_ptr<const Geometry> geom, double sigma);
/// Continuum value λ_0 vol(S^n)^{-2σ/n}.
double hls_constant_exact(int n, double sigma);

struct AubinReport {
    double J_bar = 0.0;
    double J_bar_error = 0.0;
    double hls = 0.0;
    double hls_error = 0.0;
    double hls_exact = 0.0;
    double gap = 0.0;          // J_bar - hls
    int gap_sign = 0;          // 0 when |gap| is within the combined error bars
    bool solver_converged = false;
    std::string solver_status;
    double solver_residual = 0.0;
};

/// Compares the critical-exponent extremal value of K with the sphere constant.
AubinReport aubin_check(const KernelOperator& K, const ExtremalOptions& opt = {});

}  // namespace riesz
