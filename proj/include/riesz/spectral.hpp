#pragma once

#include <cstdint>
#include <vector>

#include "riesz/common.hpp"
#include "riesz/kernel.hpp"

namespace riesz {

/// Top eigenpairs of K^μ f = ∫ K f dμ with dμ = S^{1-m} dvol at a steady state K S = S^m.
struct SpectrumResult {
    std::vector<double> eigenvalues;  // descending
    std::vector<Field> psi;           // K^μ ψ = λ ψ, orthonormal in L²(dμ)
    std::vector<Field> phi;           // φ = S^{1-m} ψ, K φ = λ S^{m-1} φ
    Field mu;                         // μ_i = S_i^{1-m} w_i
    std::vector<double> residuals;    // ‖K^μ ψ - λ ψ‖_μ / |λ|
    double orthonormality_defect = 0.0;
    double phi_defect = 0.0;          // max over pairs of ‖K φ - λ S^{m-1} φ‖_∞ / ‖λ S^{m-1} φ‖_∞
    double symmetry_defect = 0.0;     // max |A_ij - A_ji| / max |A| of the assembled matrix
    double steady_residual = 0.0;

    /// 1 - λ_2 when λ_1 is the structural eigenvalue 1, otherwise NaN.
    double gap() const;
};

/// Dense self-adjoint eigensolve of A = √μ K √μ. Throws ConfigError when k is out of range
/// or when S fails the steady residual precondition (‖K S - S^m‖_∞ / ‖S^m‖_∞ ≤ tol).
SpectrumResult linearized_spectrum(const KernelOperator& K, std::span<const double> S, double m, std::size_t k,
                                   double residual_tol = 1e-8);

struct GrowthMode {
    double eigenvalue = 0.0;
    Field eigenfield;  // unit in L²(dvol), largest-magnitude entry positive
};

/// Top eigenpair of the plain weighted operator f ↦ K f (μ = w).
GrowthMode predict_linear_growth(const KernelOperator& K);

/// max over random pairs of |⟨K^μ f, h⟩_μ - ⟨f, K^μ h⟩_μ| / (‖K^μ‖ ‖f‖_μ ‖h‖_μ), with ‖K^μ‖
/// estimated by the largest row sum.
double weighted_symmetry_defect(const KernelOperator& K, std::span<const double> mu, int trials = 8,
                                std::uint64_t seed = 1);

/// Cosine of the angle between f and g in L²(dμ).
double weighted_cosine(std::span<const double> f, std::span<const double> g, std::span<const double> mu);

}  // namespace riesz
