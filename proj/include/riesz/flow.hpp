#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "riesz/common.hpp"
#include "riesz/kernel.hpp"

namespace riesz {

/// raw:       ∂_t u^m = K u
/// rescaled:  ∂_t u^m = K u - β u^m,  β = m / |1 - m|
/// critical:  ∂_t u^m = K u - a(t) u^m,  a = ∫ u K u / ∫ u^{m+1}
enum class Regime { raw, rescaled, critical };

std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

/// m / |1 - m|.
double rescale_beta(double m);

struct FlowState {
    Field u;
    Field w;  // u^m
    double t = 0.0;
    double m = 1.0;
    Regime regime = Regime::raw;

    static FlowState make(Field u, double m, Regime regime, double t = 0.0);
};

struct DiagnosticsRecord {
    double t = 0.0;
    double V = 0.0;        // ∫ u^{m+1}
    double uKu = 0.0;      // ∫ u K u
    double a = 0.0;        // uKu / V
    double J = 0.0;        // J_m(u)
    std::vector<double> M; // M_q for the configured q set
    double G = 0.0;        // ∫ (u K u / 2 - β u^{m+1} / (m+1))
    double Z = 0.0;        // V^{(m-1)/(m+1)}
    double harnack = 0.0;  // max u / min u
    double ps_residual = 0.0;
    double u_max = 0.0;
    double u_min = 0.0;
    double dt = 0.0;       // step that produced this record (0 for the first)
};

/// All diagnostics of a state; Ku must equal K.apply(u).
DiagnosticsRecord diagnostics(const KernelOperator& K, const FlowState& s, std::span<const double> q_set,
                              std::span<const double> Ku);
DiagnosticsRecord diagnostics(const KernelOperator& K, const FlowState& s, std::span<const double> q_set);

/// dw/dt for the state's regime.
Field rhs(const KernelOperator& K, const FlowState& s);

struct StepPolicy {
    bool adaptive = true;
    double dt_initial = 1e-3;
    double rtol = 1e-8;
    double eta = 0.05;
    double dt_min = 1e-12;
    double dt_max = std::numeric_limits<double>::infinity();
};

enum class Termination { t_end, blowup, stopped };
std::string to_string(Termination t);

struct EvolveOptions {
    StepPolicy step;
    std::vector<double> q_set{1.0, 2.0};
    bool renormalize = true;         // critical regime only
    std::size_t snapshot_count = 64; // evenly spaced in [t0, t_end], hit exactly
    std::vector<double> snapshot_times; // replaces the even spacing when non-empty
    /// Called after every record; returning false stops the run.
    std::function<bool(const FlowState&, const DiagnosticsRecord&)> observer;
};

struct Trajectory {
    Regime regime = Regime::raw;
    double m = 1.0;
    int n = 1;
    double sigma = 0.0;
    std::vector<double> q_set;
    std::vector<DiagnosticsRecord> records;
    std::vector<FlowState> snapshots;
    FlowState final_state;
    Termination reason = Termination::t_end;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double max_renorm_drift = 0.0;   // largest |V - 1| removed by renormalization
};

/// Explicit RK4 in w = u^m with step-doubling error control. Critical runs start from u
/// normalized to V = 1.
Trajectory evolve(const KernelOperator& K, FlowState state, double t_end, const EvolveOptions& opt = {});

/// (c + (m-1) t / m)^{1/(m-1)} S.
Field separable_solution(std::span<const double> S, double m, double c, double t);

struct BlowupOptions {
    double tail_fraction = 0.25;
};

struct BlowupReport {
    double T_star = 0.0;
    double exponent_sup = 0.0;       // slope of log ‖u‖_∞ against log(T* - t)
    double exponent_volume = 0.0;    // slope of log V^{1/(m+1)} against log(T* - t)
    double predicted_exponent = 0.0; // -1 / (1 - m)
    double z_slope_defect = 0.0;     // max relative |ΔZ - ∫ (m-1) J / m dt|
    double concavity_defect = 0.0;   // max positive excess of chords over Z
    double Z0 = 0.0;
    std::size_t samples = 0;
};

BlowupReport detect_blowup(const Trajectory& tr, const BlowupOptions& opt = {});

/// Change of variables to the rescaled flow: for m < 1, ũ = (T* - t)^{1/(1-m)} u and
/// τ = -ln((T* - t)/T*); for m > 1, ũ = (1 + t)^{-1/(m-1)} u and τ = ln(1 + t). Records
/// past T* are dropped.
Trajectory rescale_to_tau(const Trajectory& raw, double T_star = 0.0);

struct GrowthSample {
    double t = 0.0;
    double product = 0.0;  // t ‖u / U_0 - 1‖_∞
};

/// U_0(t) = ((m-1) t / m)^{1/(m-1)} S over snapshots with t >= t_from.
std::vector<GrowthSample> growth_check(const Trajectory& tr, std::span<const double> S, double t_from);

struct ComparisonResult {
    bool ordered = true;
    std::size_t checks = 0;
    double t_reached = 0.0;
    Termination reason = Termination::t_end;
    double first_violation_t = 0.0;
    std::size_t first_violation_node = 0;
    double min_gap = std::numeric_limits<double>::infinity();  // min (u_high - u_low) / u_high at t > 0
};

/// Co-evolves both data on shared steps and checks u_low < u_high at every node and
/// accepted step with t > 0.
ComparisonResult comparison_run(const KernelOperator& K, double m, Regime regime, std::span<const double> u_low,
                                std::span<const double> u_high, double t_end, const StepPolicy& step = {});

struct LimitIdentityReport {
    double tau = 0.0;
    double V = 0.0;
    double G = 0.0;
    double relative_defect = 0.0;  // |V + 2(m+1) G / m| / V
    bool G_monotone = true;
    double worst_G_drop = 0.0;     // most negative relative step in G
};

LimitIdentityReport limit_identity_check(const Trajectory& rescaled, double G_tol = 1e-10);

}  // namespace riesz
