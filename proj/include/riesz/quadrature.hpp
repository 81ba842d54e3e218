#pragma once

#include <functional>
#include <vector>

namespace riesz::quad {

struct Rule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// Gauss–Legendre rule of the given order (Newton iteration on P_order).
const Rule& gauss_legendre(int order);

struct Grading {
    int order = 12;                // Gauss points per panel
    int panels_per_octave = 1;     // geometric panels per factor of two
    double min_fraction = 1e-12;   // smallest graded panel as a fraction of the interval
};

/// ∫_a^b f over [a, b] with panels graded geometrically toward both endpoints. When
/// `singular_power` p is in (-1, 0), an endpoint flagged singular is treated as a
/// |z - endpoint|^p singularity through the substitution z - endpoint ∝ t^{1/(1+p)}.
double integrate(const std::function<double(double)>& f, double a, double b, const Grading& g,
                 bool singular_a = false, bool singular_b = false, double singular_power = 0.0);

}  // namespace riesz::quad
