#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mhp/errors.hpp"

namespace mhp {

struct QuadratureSpec {
    int nodes = 16;
};

/// Gauss-Legendre nodes and weights on [-1, 1]. Newton iteration on P_n with
/// the Chebyshev-angle initial guess; exact for polynomials of degree 2n-1.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        if (n < 1) throw UsageError("GaussLegendre: need at least one node");
        nodes.resize(n);
        weights.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                // Legendre recurrence: (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
                double p0 = 1.0, p1 = x;
                for (int k = 1; k < n; ++k) {
                    double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            double w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
    }

    /// Integral of fn over [a, b].
    double integrate(const std::function<double(double)>& fn, double a, double b) const {
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q) s += weights[q] * fn(mid + half * nodes[q]);
        return s * half;
    }
};

/// Integral of fn over [knots.front(), knots.back()], one Gauss-Legendre rule
/// per sub-interval. The knots are the points where fn may lose smoothness
/// (for point processes: the event times).
inline double integrate_piecewise(const std::function<double(double)>& fn,
                                  const std::vector<double>& knots, int nodes_per_interval) {
    if (knots.size() < 2) return 0.0;
    GaussLegendre gl(nodes_per_interval);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < knots.size(); ++j)
        total += gl.integrate(fn, knots[j], knots[j + 1]);
    return total;
}

}  // namespace mhp
