#include "riesz/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "riesz/steady.hpp"

namespace riesz {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A_ij = (√μ_i √μ_j) K_ij; the product of roots is formed first so A is exactly symmetric.
RowMatrix assemble(const KernelOperator& K, const Field& root_mu)
{
    const auto N = static_cast<Eigen::Index>(K.size());
    RowMatrix A(N, N);
#pragma omp parallel for if (N >= 256)
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j) {
            const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(j);
            A(i, j) = (root_mu[a] * root_mu[b]) * K.entry(a, b);
        }
    return A;
}

void fix_sign(Field& f)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (std::abs(f[i]) > std::abs(f[best])) best = i;
    if (f[best] < 0.0)
        for (auto& x : f) x = -x;
}

// (K^μ f)_i = Σ_j K_ij μ_j f_j.
Field apply_mu(const KernelOperator& K, std::span<const double> mu, std::span<const double> f)
{
    const auto& w = K.geometry().weights();
    Field g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = mu[i] * f[i] / w[i];
    return K.apply(g);
}

double mu_dot(std::span<const double> f, std::span<const double> g, std::span<const double> mu)
{
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += mu[i] * f[i] * g[i];
    return s;
}

}  // namespace

double SpectrumResult::gap() const
{
    if (eigenvalues.size() < 2 || std::abs(eigenvalues[0] - 1.0) > 1e-6) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - eigenvalues[1];
}

SpectrumResult linearized_spectrum(const KernelOperator& K, std::span<const double> S, double m, std::size_t k,
                                   double residual_tol)
{
    const std::size_t N = K.size();
    if (S.size() != N) throw ConfigError("steady field length does not match the kernel");
    if (k < 1 || k > N) throw ConfigError("requested " + std::to_string(k) + " eigenpairs, need 1 <= k <= " + std::to_string(N));
    if (!(m > 0.0)) throw ConfigError("m must be positive");
    for (double x : S)
        if (!(x > 0.0 && std::isfinite(x))) throw ConfigError("steady field must be positive");

    SpectrumResult out;
    out.steady_residual = steady_residual(K, S, m, 1.0);
    if (!(out.steady_residual <= residual_tol))
        throw ConfigError("steady residual " + std::to_string(out.steady_residual) + " exceeds " +
                          std::to_string(residual_tol) + "; S does not solve K S = S^m");

    const auto& w = K.geometry().weights();
    out.mu.resize(N);
    Field root(N);
    for (std::size_t i = 0; i < N; ++i) {
        out.mu[i] = std::pow(S[i], 1.0 - m) * w[i];
        root[i] = std::sqrt(out.mu[i]);
    }
    const RowMatrix A = assemble(K, root);
    const double amax = A.cwiseAbs().maxCoeff();
    out.symmetry_defect = (A - A.transpose()).cwiseAbs().maxCoeff() / amax;

    Eigen::SelfAdjointEigenSolver<RowMatrix> solver(A);
    if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
    const auto& vals = solver.eigenvalues();
    const auto& vecs = solver.eigenvectors();

    for (std::size_t r = 0; r < k; ++r) {
        const auto col = static_cast<Eigen::Index>(N - 1 - r);
        const double lam = vals(col);
        Field psi(N), phi(N);
        for (std::size_t i = 0; i < N; ++i) psi[i] = vecs(static_cast<Eigen::Index>(i), col) / root[i];
        fix_sign(psi);
        for (std::size_t i = 0; i < N; ++i) phi[i] = std::pow(S[i], 1.0 - m) * psi[i];

        const Field Kpsi = apply_mu(K, out.mu, psi);
        Field diff(N);
        for (std::size_t i = 0; i < N; ++i) diff[i] = Kpsi[i] - lam * psi[i];
        out.residuals.push_back(std::sqrt(mu_dot(diff, diff, out.mu)) / std::abs(lam));

        const Field Kphi = K.apply(phi);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double rhs = lam * std::pow(S[i], m - 1.0) * phi[i];
            num = std::max(num, std::abs(Kphi[i] - rhs));
            den = std::max(den, std::abs(rhs));
        }
        out.phi_defect = std::max(out.phi_defect, num / den);

        out.eigenvalues.push_back(lam);
        out.psi.push_back(std::move(psi));
        out.phi.push_back(std::move(phi));
    }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            const double target = a == b ? 1.0 : 0.0;
            out.orthonormality_defect =
                std::max(out.orthonormality_defect, std::abs(mu_dot(out.psi[a], out.psi[b], out.mu) - target));
        }
    return out;
}

GrowthMode predict_linear_growth(const KernelOperator& K)
{
    const std::size_t N = K.size();
    const auto& w = K.geometry().weights();
    Field root(N);
    for (std::size_t i = 0; i < N; ++i) root[i] = std::sqrt(w[i]);
    const RowMatrix A = assemble(K, root);
    Eigen::SelfAdjointEigenSolver<RowMatrix> solver(A);
    if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolve failed");
    const auto top = static_cast<Eigen::Index>(N - 1);
    GrowthMode g;
    g.eigenvalue = solver.eigenvalues()(top);
    g.eigenfield.resize(N);
    for (std::size_t i = 0; i < N; ++i) g.eigenfield[i] = solver.eigenvectors()(static_cast<Eigen::Index>(i), top) / root[i];
    fix_sign(g.eigenfield);
    return g;
}

double weighted_symmetry_defect(const KernelOperator& K, std::span<const double> mu, int trials, std::uint64_t seed)
{
    const std::size_t N = K.size();
    if (mu.size() != N) throw ConfigError("measure length does not match the kernel");
    double norm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < N; ++j) row += std::abs(K.entry(i, j)) * mu[j];
        norm = std::max(norm, row);
    }
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Field f(N), h(N);
        for (auto& x : f) x = rng.uniform(-1.0, 1.0);
        for (auto& x : h) x = rng.uniform(-1.0, 1.0);
        const double lhs = mu_dot(apply_mu(K, mu, f), h, mu);
        const double rhs = mu_dot(f, apply_mu(K, mu, h), mu);
        const double scale = norm * std::sqrt(mu_dot(f, f, mu) * mu_dot(h, h, mu));
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

double weighted_cosine(std::span<const double> f, std::span<const double> g, std::span<const double> mu)
{
    return mu_dot(f, g, mu) / std::sqrt(mu_dot(f, f, mu) * mu_dot(g, g, mu));
}

}  // namespace riesz
