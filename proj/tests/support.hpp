#pragma once
// Shared fixtures for the unit tests.

#include <algorithm>
#include <cmath>
#include <random>

#include "ldl/minimize.hpp"

namespace ldl::fixture {

inline ModelParams prototype(double r = 0.0) { return ModelParams{1.0, 2.0 * pi, 0.5, r}; }

inline double max_diff(const Rows& a, const Rows& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].size(); ++i) m = std::max(m, std::abs(a[k][i] - b[k][i]));
    return m;
}

inline double max_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(const Rows& a) {
    double m = 0.0;
    for (auto& v : a)
        for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Band-limited random state: moduli near 1, random phases, winding offset and stream rows.
inline Configuration random_configuration(const Grid& G, std::mt19937_64& rng, double amp = 0.1) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Configuration c = Configuration::zeros(G.geom, Discretization{G.Mx, G.Mz});
    for (auto& a : c.f) {
        for (double& v : a) v = 1.0 + amp * nd(rng);
        a = G.X.drop_nyquist(a);
    }
    for (auto& a : c.chi) {
        for (double& v : a) v = 3.0 * amp * nd(rng);
        a = G.X.drop_nyquist(a);
    }
    for (double& v : c.alpha) v = nd(rng);
    c.omega = amp * nd(rng);
    c.d = nd(rng);
    for (auto& a : c.xi)
        for (double& v : a) v = 0.1 * amp * nd(rng);
    c.xi = drop_nyquist(c.xi, G);
    return c;
}

}  // namespace ldl::fixture
