#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace riesz {

/// Values sampled at the nodes of a Geometry.
using Field = std::vector<double>;

/// Invalid user input: bad parameters, inconsistent files, violated preconditions.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that parsed but failed an invariant check. The message lists every violation.
class ValidationError : public ConfigError {
public:
    ValidationError(const std::string& what, std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// A computation that could not produce a meaningful result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double pi = std::numbers::pi;

/// Deterministic, platform-stable uniform generator (splitmix64 seeding of xoshiro256**).
/// std::uniform_real_distribution is not bit-stable across standard libraries, so draws
/// are converted to doubles by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform index in [0, n).
    std::size_t index(std::size_t n);

private:
    std::uint64_t s_[4];
};

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);
double min_value(std::span<const double> a);
double max_value(std::span<const double> a);

/// Number of threads used by parallel loops (1 without OpenMP).
int worker_count();
void set_worker_count(int workers);

/// Weighted sum Σ wᵢ fᵢ, summed in index order.
double integrate(std::span<const double> weights, std::span<const double> f);

}  // namespace riesz
