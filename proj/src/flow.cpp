#include "riesz/flow.hpp"

#include <algorithm>
#include <cmath>

#include "riesz/io.hpp"

namespace riesz {

namespace {

using RhsFn = std::function<bool(std::span<const double>, std::span<double>)>;
using AcceptFn = std::function<bool(double, std::vector<double>&, double)>;

struct IntegrationResult {
    double t = 0.0;
    Termination reason = Termination::t_end;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

bool admissible(std::span<const double> w)
{
    for (double x : w)
        if (!(x > 0.0 && std::isfinite(x))) return false;
    return true;
}

// One classical RK4 step from w with k1 = f(w) supplied.
bool rk4_step(const RhsFn& f, std::span<const double> w, std::span<const double> k1, double h, std::span<double> out,
              std::vector<double>& y, std::vector<double>& k2, std::vector<double>& k3, std::vector<double>& k4)
{
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n; ++i) y[i] = w[i] + 0.5 * h * k1[i];
    if (!admissible(y) || !f(y, k2)) return false;
    for (std::size_t i = 0; i < n; ++i) y[i] = w[i] + 0.5 * h * k2[i];
    if (!admissible(y) || !f(y, k3)) return false;
    for (std::size_t i = 0; i < n; ++i) y[i] = w[i] + h * k3[i];
    if (!admissible(y) || !f(y, k4)) return false;
    for (std::size_t i = 0; i < n; ++i) out[i] = w[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return admissible(out);
}

// Integrates dw/dt = f(w) from t0 to t_end, landing exactly on each of `landings`.
IntegrationResult integrate(const RhsFn& f, std::vector<double>& w, double t0, double t_end, const StepPolicy& policy,
                            const std::vector<double>& landings, const AcceptFn& accepted)
{
    const std::size_t n = w.size();
    std::vector<double> k1(n), full(n), half(n), k1h(n), two(n), y(n), k2(n), k3(n), k4(n);
    IntegrationResult res;
    double t = t0;
    double h = policy.dt_initial;
    if (!(h > 0.0)) throw ConfigError("initial time step must be positive");
    std::size_t next_landing = 0;
    while (next_landing < landings.size() && landings[next_landing] <= t0) ++next_landing;
    const double t_eps = 1e-13 * std::max(1.0, std::abs(t_end));

    while (t < t_end - t_eps) {
        if (!f(w, k1)) throw NumericalError("right-hand side is not finite at t = " + io::format_double(t));
        const double target = next_landing < landings.size() ? std::min(landings[next_landing], t_end) : t_end;
        double h_try = std::min(h, policy.dt_max);
        bool truncated = false;
        if (target - t <= h_try * (1.0 + 1e-9)) {
            truncated = target - t < h_try;
            h_try = target - t;
        }
        if (policy.adaptive && policy.eta > 0.0) {
            double guard = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                if (k1[i] != 0.0) guard = std::min(guard, w[i] / std::abs(k1[i]));
            h_try = std::min(h_try, policy.eta * guard);
        }
        double h_next = h;
        for (;;) {
            if (h_try < policy.dt_min) {
                res.t = t;
                res.reason = Termination::blowup;
                return res;
            }
            if (!policy.adaptive) {
                if (!rk4_step(f, w, k1, h_try, full, y, k2, k3, k4)) {
                    h_try *= 0.5;
                    ++res.rejected;
                    continue;
                }
                w.swap(full);
                break;
            }
            const bool ok = rk4_step(f, w, k1, h_try, full, y, k2, k3, k4) &&
                            rk4_step(f, w, k1, 0.5 * h_try, half, y, k2, k3, k4) && f(half, k1h) &&
                            rk4_step(f, half, k1h, 0.5 * h_try, two, y, k2, k3, k4);
            if (!ok) {
                h_try *= 0.5;
                truncated = false;
                ++res.rejected;
                continue;
            }
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(full[i] - two[i]));
            const double scale = policy.rtol * max_abs(two);
            const double factor = err > 0.0 ? 0.9 * std::pow(scale / err, 0.2) : 2.0;
            if (err <= scale) {
                w.swap(two);
                h_next = h_try * std::min(2.0, std::max(0.2, factor));
                if (truncated) h_next = std::max(h_next, h);
                break;
            }
            h_try *= std::max(0.2, std::min(0.9, factor));
            truncated = false;
            ++res.rejected;
        }
        const double dt = h_try;
        if (next_landing < landings.size() && h_try == landings[next_landing] - t) {
            t = landings[next_landing];
            ++next_landing;
        } else if (h_try == t_end - t) {
            t = t_end;
        } else {
            t += h_try;
        }
        while (next_landing < landings.size() && landings[next_landing] <= t + t_eps) ++next_landing;
        if (policy.adaptive) h = h_next;
        ++res.accepted;
        if (!accepted(t, w, dt)) {
            res.t = t;
            res.reason = Termination::stopped;
            return res;
        }
    }
    res.t = t;
    res.reason = Termination::t_end;
    return res;
}

// dw/dt for one block of the state vector.
bool flow_rhs(const KernelOperator& K, double m, Regime regime, std::span<const double> w, std::span<double> dw,
              Field& u, Field& Ku)
{
    const std::size_t N = w.size();
    for (std::size_t i = 0; i < N; ++i) u[i] = std::pow(w[i], 1.0 / m);
    K.apply(u, Ku);
    switch (regime) {
    case Regime::raw:
        std::copy(Ku.begin(), Ku.end(), dw.begin());
        break;
    case Regime::rescaled: {
        const double beta = rescale_beta(m);
        for (std::size_t i = 0; i < N; ++i) dw[i] = Ku[i] - beta * w[i];
        break;
    }
    case Regime::critical: {
        const auto& q = K.geometry().weights();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            num += q[i] * u[i] * Ku[i];
            den += q[i] * u[i] * w[i];
        }
        const double a = num / den;
        for (std::size_t i = 0; i < N; ++i) dw[i] = Ku[i] - a * w[i];
        break;
    }
    }
    for (std::size_t i = 0; i < N; ++i)
        if (!std::isfinite(dw[i])) return false;
    return true;
}

void check_field(std::span<const double> u, std::size_t N, const char* what)
{
    if (u.size() != N)
        throw ConfigError(std::string(what) + " has length " + std::to_string(u.size()) + ", expected " + std::to_string(N));
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!(u[i] > 0.0 && std::isfinite(u[i])))
            throw ConfigError(std::string(what) + " must be positive; entry " + std::to_string(i) + " = " +
                              io::format_double(u[i]));
}

double volume(std::span<const double> q, std::span<const double> u, double m)
{
    double V = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) V += q[i] * std::pow(u[i], m + 1.0);
    return V;
}

// Least-squares line y = a + b x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double b = sxy / sxx;
    return {my - b * mx, b};
}

}  // namespace

std::string to_string(Regime r)
{
    switch (r) {
    case Regime::raw: return "raw";
    case Regime::rescaled: return "rescaled";
    case Regime::critical: return "critical";
    }
    return "unknown";
}

Regime parse_regime(const std::string& s)
{
    if (s == "raw") return Regime::raw;
    if (s == "rescaled") return Regime::rescaled;
    if (s == "critical") return Regime::critical;
    throw ConfigError("unknown regime '" + s + "' (expected raw, rescaled or critical)");
}

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::t_end: return "t_end";
    case Termination::blowup: return "blow-up";
    case Termination::stopped: return "stopped";
    }
    return "unknown";
}

double rescale_beta(double m) { return m / std::abs(1.0 - m); }

FlowState FlowState::make(Field u, double m, Regime regime, double t)
{
    if (!(m > 0.0 && std::isfinite(m))) throw ConfigError("m must be positive");
    check_field(u, u.size(), "u");
    FlowState s;
    s.w.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) s.w[i] = std::pow(u[i], m);
    s.u = std::move(u);
    s.t = t;
    s.m = m;
    s.regime = regime;
    return s;
}

DiagnosticsRecord diagnostics(const KernelOperator& K, const FlowState& s, std::span<const double> q_set,
                              std::span<const double> Ku)
{
    const auto& q = K.geometry().weights();
    const std::size_t N = s.u.size();
    const double m = s.m;
    const double mc = K.critical_m();
    DiagnosticsRecord r;
    r.t = s.t;
    for (std::size_t i = 0; i < N; ++i) {
        r.V += q[i] * s.u[i] * s.w[i];
        r.uKu += q[i] * s.u[i] * Ku[i];
    }
    r.a = r.uKu / r.V;
    r.J = r.uKu / std::pow(r.V, 2.0 / (m + 1.0));
    r.G = 0.5 * r.uKu - rescale_beta(m) * r.V / (m + 1.0);
    r.Z = std::pow(r.V, (m - 1.0) / (m + 1.0));
    r.u_max = max_value(s.u);
    r.u_min = min_value(s.u);
    r.harnack = r.u_max / r.u_min;

    const double p = (mc + 1.0) / mc;
    r.M.assign(q_set.size(), 0.0);
    double Mp = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double dev = std::abs(std::pow(s.u[i], -mc) * Ku[i] - r.a);
        const double mass = q[i] * std::pow(s.u[i], mc + 1.0);
        for (std::size_t k = 0; k < q_set.size(); ++k) r.M[k] += mass * std::pow(dev, q_set[k]);
        Mp += mass * std::pow(dev, p);
    }
    r.ps_residual = std::pow(Mp, 1.0 / p);
    return r;
}

DiagnosticsRecord diagnostics(const KernelOperator& K, const FlowState& s, std::span<const double> q_set)
{
    return diagnostics(K, s, q_set, K.apply(s.u));
}

Field rhs(const KernelOperator& K, const FlowState& s)
{
    const std::size_t N = K.size();
    check_field(s.u, N, "u");
    Field u(N), Ku(N), dw(N);
    if (!flow_rhs(K, s.m, s.regime, s.w, dw, u, Ku)) throw NumericalError("right-hand side is not finite");
    return dw;
}

Trajectory evolve(const KernelOperator& K, FlowState state, double t_end, const EvolveOptions& opt)
{
    const std::size_t N = K.size();
    check_field(state.u, N, "initial u");
    if (state.w.size() != N) state = FlowState::make(state.u, state.m, state.regime, state.t);
    if (!(t_end >= state.t)) throw ConfigError("t_end must not precede the initial time");
    const double m = state.m;
    const auto& q = K.geometry().weights();

    Trajectory tr;
    tr.regime = state.regime;
    tr.m = m;
    tr.n = K.n();
    tr.sigma = K.sigma();
    tr.q_set = opt.q_set;

    if (state.regime == Regime::critical) {
        const double scale = std::pow(volume(q, state.u, m), -1.0 / (m + 1.0));
        for (auto& x : state.u) x *= scale;
        state = FlowState::make(state.u, m, state.regime, state.t);
    }

    std::vector<double> snaps = opt.snapshot_times;
    if (snaps.empty() && opt.snapshot_count > 0) {
        if (opt.snapshot_count == 1)
            snaps.push_back(t_end);
        else
            for (std::size_t k = 0; k < opt.snapshot_count; ++k)
                snaps.push_back(state.t + (t_end - state.t) * static_cast<double>(k) /
                                              static_cast<double>(opt.snapshot_count - 1));
    }
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
    std::size_t next_snap = 0;

    Field Ku(N), u_stage(N), Ku_stage(N);
    auto record = [&](double dt) {
        K.apply(state.u, Ku);
        DiagnosticsRecord r = diagnostics(K, state, opt.q_set, Ku);
        r.dt = dt;
        tr.records.push_back(r);
        while (next_snap < snaps.size() && snaps[next_snap] <= state.t) {
            if (snaps[next_snap] == state.t) tr.snapshots.push_back(state);
            ++next_snap;
        }
        return !opt.observer || opt.observer(state, tr.records.back());
    };

    bool go_on = record(0.0);
    if (!go_on) {
        tr.final_state = state;
        tr.reason = Termination::stopped;
        return tr;
    }

    const Regime regime = state.regime;
    RhsFn f = [&](std::span<const double> w, std::span<double> dw) {
        return flow_rhs(K, m, regime, w, dw, u_stage, Ku_stage);
    };
    AcceptFn on_accept = [&](double t, std::vector<double>& w, double dt) {
        state.t = t;
        for (std::size_t i = 0; i < N; ++i) state.u[i] = std::pow(w[i], 1.0 / m);
        if (regime == Regime::critical && opt.renormalize) {
            const double V = volume(q, state.u, m);
            tr.max_renorm_drift = std::max(tr.max_renorm_drift, std::abs(V - 1.0));
            const double scale = std::pow(V, -1.0 / (m + 1.0));
            for (std::size_t i = 0; i < N; ++i) {
                state.u[i] *= scale;
                w[i] = std::pow(state.u[i], m);
            }
        }
        state.w = w;
        return record(dt);
    };

    std::vector<double> w = state.w;
    const IntegrationResult res = integrate(f, w, state.t, t_end, opt.step, snaps, on_accept);
    tr.accepted = res.accepted;
    tr.rejected = res.rejected;
    tr.reason = res.reason;
    tr.final_state = state;
    return tr;
}

Field separable_solution(std::span<const double> S, double m, double c, double t)
{
    if (m == 1.0) throw ConfigError("separable solutions need m != 1");
    const double base = c + (m - 1.0) * t / m;
    if (!(base > 0.0)) throw NumericalError("separable solution does not exist at t = " + io::format_double(t));
    const double h = std::pow(base, 1.0 / (m - 1.0));
    Field out(S.begin(), S.end());
    for (auto& x : out) x *= h;
    return out;
}

BlowupReport detect_blowup(const Trajectory& tr, const BlowupOptions& opt)
{
    if (tr.regime != Regime::raw || !(tr.m < 1.0)) throw ConfigError("blow-up analysis needs a raw run with m < 1");
    const auto& rec = tr.records;
    if (rec.size() < 10) throw NumericalError("blow-up analysis needs at least 10 records, got " + std::to_string(rec.size()));
    const double m = tr.m;
    BlowupReport r;
    r.Z0 = rec.front().Z;
    r.predicted_exponent = -1.0 / (1.0 - m);

    const std::size_t tail = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::ceil(opt.tail_fraction * static_cast<double>(rec.size()))));
    const std::size_t first = rec.size() - std::min(tail, rec.size());
    std::vector<double> ts, zs;
    for (std::size_t i = first; i < rec.size(); ++i) {
        ts.push_back(rec[i].t);
        zs.push_back(rec[i].Z);
    }
    const auto [z0, zslope] = fit_line(ts, zs);
    if (!(zslope < 0.0)) throw NumericalError("Z is not decreasing over the fit window; no blow-up detected");
    r.T_star = -z0 / zslope;

    double ss = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) ss += std::pow(zs[k] - (z0 + zslope * ts[k]), 2);
    const double t_uncertainty = std::sqrt(ss / static_cast<double>(ts.size())) / std::abs(zslope);

    std::vector<double> lx, ls, lv;
    for (std::size_t i = first; i < rec.size(); ++i) {
        const double gap = r.T_star - rec[i].t;
        if (gap <= 100.0 * t_uncertainty || gap <= 0.0) continue;
        lx.push_back(std::log(gap));
        ls.push_back(std::log(rec[i].u_max));
        lv.push_back(std::log(rec[i].V) / (m + 1.0));
    }
    r.samples = lx.size();
    if (lx.size() < 3) throw NumericalError("too few samples resolved away from T* for the exponent fit");
    r.exponent_sup = fit_line(lx, ls).second;
    r.exponent_volume = fit_line(lx, lv).second;

    for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
        const double h = rec[i + 1].t - rec[i].t;
        const double predicted = h * (m - 1.0) / m * 0.5 * (rec[i].J + rec[i + 1].J);
        r.z_slope_defect = std::max(r.z_slope_defect, std::abs((rec[i + 1].Z - rec[i].Z) - predicted) / std::abs(predicted));
    }
    for (std::size_t i = 1; i + 1 < rec.size(); ++i) {
        const double h0 = rec[i].t - rec[i - 1].t, h1 = rec[i + 1].t - rec[i].t;
        const double chord = (h1 * rec[i - 1].Z + h0 * rec[i + 1].Z) / (h0 + h1);
        r.concavity_defect = std::max(r.concavity_defect, chord - rec[i].Z);
    }
    return r;
}

Trajectory rescale_to_tau(const Trajectory& raw, double T_star)
{
    const double m = raw.m;
    if (m == 1.0) throw ConfigError("the rescaled flow needs m != 1");
    if (m < 1.0 && !(T_star > 0.0)) throw ConfigError("rescaling with m < 1 needs a positive blow-up time");
    const double mc = critical_exponent(raw.n, raw.sigma);
    const bool critical = std::abs(m - mc) <= 1e-14;
    const double beta = rescale_beta(m);
    const double p = (mc + 1.0) / mc;

    auto factor = [&](double t) {
        return m < 1.0 ? std::pow(T_star - t, 1.0 / (1.0 - m)) : std::pow(1.0 + t, -1.0 / (m - 1.0));
    };
    auto tau_of = [&](double t) { return m < 1.0 ? -std::log((T_star - t) / T_star) : std::log1p(t); };
    auto valid = [&](double t) { return m > 1.0 || t < T_star; };

    Trajectory out;
    out.regime = Regime::rescaled;
    out.m = m;
    out.n = raw.n;
    out.sigma = raw.sigma;
    out.q_set = raw.q_set;
    out.reason = raw.reason;
    out.accepted = raw.accepted;
    out.rejected = raw.rejected;
    double prev_tau = 0.0;
    for (const auto& r : raw.records) {
        if (!valid(r.t)) break;
        const double s = factor(r.t);
        DiagnosticsRecord x = r;
        x.t = tau_of(r.t);
        x.dt = out.records.empty() ? 0.0 : x.t - prev_tau;
        prev_tau = x.t;
        x.V = r.V * std::pow(s, m + 1.0);
        x.uKu = r.uKu * s * s;
        x.a = x.uKu / x.V;
        x.G = 0.5 * x.uKu - beta * x.V / (m + 1.0);
        x.Z = std::pow(x.V, (m - 1.0) / (m + 1.0));
        x.u_max = r.u_max * s;
        x.u_min = r.u_min * s;
        for (std::size_t k = 0; k < x.M.size(); ++k) {
            const double qk = out.q_set[k];
            x.M[k] = critical ? r.M[k] * std::pow(s, qk * (1.0 - m) + m + 1.0) : std::nan("");
        }
        x.ps_residual = critical ? r.ps_residual * std::pow(s, (p * (1.0 - m) + m + 1.0) / p) : std::nan("");
        out.records.push_back(x);
    }
    auto map_state = [&](const FlowState& st) {
        const double s = factor(st.t);
        Field u = st.u;
        for (auto& v : u) v *= s;
        return FlowState::make(std::move(u), m, Regime::rescaled, tau_of(st.t));
    };
    for (const auto& st : raw.snapshots)
        if (valid(st.t)) out.snapshots.push_back(map_state(st));
    if (valid(raw.final_state.t) && !raw.final_state.u.empty()) out.final_state = map_state(raw.final_state);
    return out;
}

std::vector<GrowthSample> growth_check(const Trajectory& tr, std::span<const double> S, double t_from)
{
    const double m = tr.m;
    if (!(m > 1.0)) throw ConfigError("the growth law applies to m > 1");
    std::vector<GrowthSample> out;
    for (const auto& st : tr.snapshots) {
        if (st.t < t_from || st.t <= 0.0) continue;
        if (st.u.size() != S.size()) throw ConfigError("steady field length does not match the trajectory");
        const double h = std::pow((m - 1.0) * st.t / m, 1.0 / (m - 1.0));
        double dev = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) dev = std::max(dev, std::abs(st.u[i] / (h * S[i]) - 1.0));
        out.push_back({st.t, st.t * dev});
    }
    return out;
}

ComparisonResult comparison_run(const KernelOperator& K, double m, Regime regime, std::span<const double> u_low,
                                std::span<const double> u_high, double t_end, const StepPolicy& step)
{
    const std::size_t N = K.size();
    check_field(u_low, N, "lower data");
    check_field(u_high, N, "upper data");
    if (regime == Regime::critical) throw ConfigError("the comparison run supports the raw and rescaled regimes");
    bool strict = false;
    for (std::size_t i = 0; i < N; ++i) {
        if (u_low[i] > u_high[i])
            throw ConfigError("data are not ordered at node " + std::to_string(i));
        strict = strict || u_low[i] < u_high[i];
    }
    if (!strict) throw ConfigError("comparison data must differ somewhere");

    std::vector<double> w(2 * N);
    for (std::size_t i = 0; i < N; ++i) {
        w[i] = std::pow(u_low[i], m);
        w[N + i] = std::pow(u_high[i], m);
    }
    Field u(N), Ku(N);
    RhsFn f = [&](std::span<const double> x, std::span<double> dx) {
        return flow_rhs(K, m, regime, x.subspan(0, N), dx.subspan(0, N), u, Ku) &&
               flow_rhs(K, m, regime, x.subspan(N, N), dx.subspan(N, N), u, Ku);
    };
    ComparisonResult res;
    AcceptFn on_accept = [&](double t, std::vector<double>& x, double) {
        ++res.checks;
        res.t_reached = t;
        for (std::size_t i = 0; i < N; ++i) {
            // u = w^{1/m} is increasing in w, so ordering of w is ordering of u.
            const double gap = (x[N + i] - x[i]) / x[N + i];
            res.min_gap = std::min(res.min_gap, gap);
            if (!(x[i] < x[N + i]) && res.ordered) {
                res.ordered = false;
                res.first_violation_t = t;
                res.first_violation_node = i;
            }
        }
        return true;
    };
    const IntegrationResult r = integrate(f, w, 0.0, t_end, step, {}, on_accept);
    res.reason = r.reason;
    res.t_reached = r.t;
    return res;
}

LimitIdentityReport limit_identity_check(const Trajectory& tr, double G_tol)
{
    if (tr.records.empty()) throw ConfigError("empty trajectory");
    const double m = tr.m;
    LimitIdentityReport r;
    const auto& last = tr.records.back();
    r.tau = last.t;
    r.V = last.V;
    r.G = last.G;
    r.relative_defect = std::abs(last.V + 2.0 * (m + 1.0) * last.G / m) / last.V;
    for (std::size_t i = 1; i < tr.records.size(); ++i) {
        const double g0 = tr.records[i - 1].G, g1 = tr.records[i].G;
        const double rel = (g1 - g0) / std::max(1.0, std::abs(g0));
        r.worst_G_drop = std::min(r.worst_G_drop, rel);
        if (rel < -G_tol) r.G_monotone = false;
    }
    return r;
}

}  // namespace riesz
