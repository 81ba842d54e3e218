#include "riesz/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace riesz {

namespace {

std::string join_violations(const std::string& what, const std::vector<std::string>& v)
{
    std::string msg = what;
    for (const auto& s : v) {
        msg += "\n  - ";
        msg += s;
    }
    return msg;
}

std::uint64_t splitmix64(std::uint64_t& x)
{
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

ValidationError::ValidationError(const std::string& what, std::vector<std::string> violations)
    : ConfigError(join_violations(what, violations)), violations_(std::move(violations))
{
}

Rng::Rng(std::uint64_t seed)
{
    for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next_u64()
{
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t Rng::index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(std::span<const double> a)
{
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double min_value(std::span<const double> a)
{
    double m = std::numeric_limits<double>::infinity();
    for (double v : a) m = std::min(m, v);
    return m;
}

double max_value(std::span<const double> a)
{
    double m = -std::numeric_limits<double>::infinity();
    for (double v : a) m = std::max(m, v);
    return m;
}

int worker_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_worker_count(int workers)
{
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

double integrate(std::span<const double> weights, std::span<const double> f) { return dot(weights, f); }

}  // namespace riesz
