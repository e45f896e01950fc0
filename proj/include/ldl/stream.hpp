#pragma once
// Stream-function operators on the cell-centred stack grid.
//
// Rows of xi live at cell centres z_c = (c + 1/2) dz; planes sit on the cell faces
// z_n = n p. The z-derivative is a centred difference across faces, x-derivatives are
// spectral. With this placement the field h is a cell quantity and a jump across a
// plane is representable exactly. The Nyquist x-mode of xi is projected out.
//
// Wrap-around rows: biperiodic uses xi(x, z + Np) = xi(x - s, z); finite layers use
// odd reflection so xi vanishes on z = 0 and z = Np.

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace ldl {

using Rows = std::vector<Vec>;

inline Rows zero_rows(int n, int M) { return Rows(n, Vec(M, 0.0)); }

/// Cell-centred stream quantities: h per row, A_x perturbation per stored plane slot,
/// and the gap integrals of d(xi)/dx per gap (index n-1 for gap n).
struct StreamFields {
    Rows h;
    Rows axp;
    Rows gap;
};

namespace detail {

inline Vec row_above(const Rows& xi, const Grid& G) {
    if (G.biperiodic()) return G.X.shift(xi[0], -G.geom.s);
    Vec v = xi[G.NZ - 1];
    for (double& a : v) a = -a;
    return v;
}

inline Vec row_below(const Rows& xi, const Grid& G) {
    if (G.biperiodic()) return G.X.shift(xi[G.NZ - 1], G.geom.s);
    Vec v = xi[0];
    for (double& a : v) a = -a;
    return v;
}

inline void add_above_adjoint(Rows& g, const Vec& a, const Grid& G) {
    if (G.biperiodic()) {
        Vec t = G.X.shift(a, G.geom.s);
        for (int i = 0; i < G.Mx; ++i) g[0][i] += t[i];
    } else {
        for (int i = 0; i < G.Mx; ++i) g[G.NZ - 1][i] -= a[i];
    }
}

inline void add_below_adjoint(Rows& g, const Vec& a, const Grid& G) {
    if (G.biperiodic()) {
        Vec t = G.X.shift(a, -G.geom.s);
        for (int i = 0; i < G.Mx; ++i) g[G.NZ - 1][i] += t[i];
    } else {
        for (int i = 0; i < G.Mx; ++i) g[0][i] -= a[i];
    }
}

}  // namespace detail

inline Rows drop_nyquist(const Rows& xi, const Grid& G) {
    Rows out(xi.size());
    for (std::size_t c = 0; c < xi.size(); ++c) out[c] = G.X.drop_nyquist(xi[c]);
    return out;
}

inline StreamFields stream_forward(const Rows& xi_in, const Grid& G) {
    const int NZ = G.NZ, M = G.Mx;
    Rows xi = drop_nyquist(xi_in, G);
    Vec above = detail::row_above(xi, G);
    Vec below = detail::row_below(xi, G);
    auto row = [&](int c) -> const Vec& { return c < 0 ? below : (c >= NZ ? above : xi[c]); };
    const double idz2 = 1.0 / (G.dz * G.dz);

    StreamFields out;
    out.h.resize(NZ);
    for (int c = 0; c < NZ; ++c) {
        Vec xx = G.X.deriv2(xi[c]);
        const Vec &u = row(c + 1), &v = xi[c], &l = row(c - 1);
        Vec h(M);
        for (int i = 0; i < M; ++i) h[i] = G.B + (u[i] - 2.0 * v[i] + l[i]) * idz2 + xx[i];
        out.h[c] = std::move(h);
    }
    int P = G.geom.planes();
    out.axp.resize(P);
    for (int j = 0; j < P; ++j) {
        int node = G.geom.plane(j) * G.Mz;
        const Vec &u = row(node), &l = row(node - 1);
        Vec a(M);
        for (int i = 0; i < M; ++i) a[i] = (u[i] - l[i]) / G.dz;
        out.axp[j] = std::move(a);
    }
    out.gap.resize(G.geom.N);
    for (int n = 1; n <= G.geom.N; ++n) {
        Vec acc(M, 0.0);
        for (int c = (n - 1) * G.Mz; c < n * G.Mz; ++c)
            for (int i = 0; i < M; ++i) acc[i] += xi[c][i];
        Vec d = G.X.deriv(acc);
        for (double& a : d) a *= G.dz;
        out.gap[n - 1] = std::move(d);
    }
    return out;
}

/// Transpose of stream_forward (without the constant background) applied to cotangents.
inline Rows stream_adjoint(const Rows& gh, const Rows& gaxp, const Rows& ggap, const Grid& G) {
    const int NZ = G.NZ, M = G.Mx;
    const double idz2 = 1.0 / (G.dz * G.dz);
    Rows g = zero_rows(NZ, M);
    Vec gabove(M, 0.0), gbelow(M, 0.0);
    auto add = [&](int c, const Vec& a, double fac) {
        Vec& dst = c < 0 ? gbelow : (c >= NZ ? gabove : g[c]);
        for (int i = 0; i < M; ++i) dst[i] += fac * a[i];
    };
    for (int c = 0; c < NZ; ++c) {
        add(c + 1, gh[c], idz2);
        add(c, gh[c], -2.0 * idz2);
        add(c - 1, gh[c], idz2);
        Vec xx = G.X.deriv2(gh[c]);
        add(c, xx, 1.0);
    }
    int P = G.geom.planes();
    for (int j = 0; j < P; ++j) {
        int node = G.geom.plane(j) * G.Mz;
        add(node, gaxp[j], 1.0 / G.dz);
        add(node - 1, gaxp[j], -1.0 / G.dz);
    }
    for (int n = 1; n <= G.geom.N; ++n) {
        Vec d = G.X.deriv(ggap[n - 1]);
        for (int c = (n - 1) * G.Mz; c < n * G.Mz; ++c) add(c, d, -G.dz);
    }
    detail::add_above_adjoint(g, gabove, G);
    detail::add_below_adjoint(g, gbelow, G);
    return drop_nyquist(g, G);
}

// ------------------------------------------------------------ mode-wise solvers

namespace detail {

inline std::vector<CVec> rows_to_modes(const Rows& rows, int M) {
    std::vector<CVec> modes(M, CVec(rows.size()));
    for (std::size_t c = 0; c < rows.size(); ++c) {
        CVec s = spectral::forward(rows[c]);
        for (int i = 0; i < M; ++i) modes[i][c] = s[i];
    }
    return modes;
}

inline Rows modes_to_rows(const std::vector<CVec>& modes, int M) {
    int NZ = modes.empty() ? 0 : static_cast<int>(modes[0].size());
    Rows rows(NZ);
    for (int c = 0; c < NZ; ++c) {
        CVec s(M);
        for (int i = 0; i < M; ++i) s[i] = modes[i][c];
        rows[c] = spectral::inverse(s);
    }
    return rows;
}

/// Thomas algorithm for a constant-coefficient tridiagonal system with modified corners.
inline CVec thomas(double off, const Vec& diag, CVec rhs) {
    int n = static_cast<int>(diag.size());
    Vec cp(n);
    double b = diag[0];
    cp[0] = off / b;
    rhs[0] /= b;
    for (int i = 1; i < n; ++i) {
        double den = diag[i] - off * cp[i - 1];
        cp[i] = off / den;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / den;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
    return rhs;
}

}  // namespace detail

/// Eigenvalue of the discrete Laplacian for x-mode i and z-index b.
struct LaplaceSpectrum {
    const Grid& G;

    double biperiodic(int i, int b) const {
        double k = G.X.k(i);
        double beta = k * G.geom.s / G.NZ;
        double th = 2.0 * pi * b / G.NZ - beta;
        double sn = std::sin(0.5 * th);
        return -k * k - 4.0 * sn * sn / (G.dz * G.dz);
    }

    double finite(int i, int b) const {  // b = 1..NZ
        double k = G.X.k(i);
        double sn = std::sin(0.5 * pi * b / G.NZ);
        return -k * k - 4.0 * sn * sn / (G.dz * G.dz);
    }
};

/// Applies a function of the discrete Laplacian, symbol(lambda), to stream rows.
/// Null modes (lambda == 0) and the Nyquist x-mode are mapped to zero.
template <class Fn>
Rows apply_laplace_function(const Rows& rows, const Grid& G, Fn&& symbol) {
    const int M = G.Mx, NZ = G.NZ;
    auto modes = detail::rows_to_modes(rows, M);
    LaplaceSpectrum L{G};
    if (G.biperiodic()) {
        for (int i = 0; i < M; ++i) {
            CVec& u = modes[i];
            if (i == G.X.nyquist()) {
                std::fill(u.begin(), u.end(), cplx(0.0));
                continue;
            }
            double beta = G.X.k(i) * G.geom.s / NZ;
            for (int c = 0; c < NZ; ++c) u[c] *= std::polar(1.0, beta * c);
            CVec V = spectral::forward_c(u);
            for (int b = 0; b < NZ; ++b) {
                double lam = L.biperiodic(i, b);
                V[b] = lam == 0.0 ? cplx(0.0) : V[b] * symbol(lam);
            }
            u = spectral::inverse_c(V);
            for (int c = 0; c < NZ; ++c) u[c] *= std::polar(1.0, -beta * c);
        }
    } else {
        // orthonormal cell-centred sine basis
        std::vector<Vec> S(NZ, Vec(NZ));
        for (int b = 1; b <= NZ; ++b) {
            double nrm = 0.0;
            for (int c = 0; c < NZ; ++c) {
                S[b - 1][c] = std::sin(pi * b * (c + 0.5) / NZ);
                nrm += S[b - 1][c] * S[b - 1][c];
            }
            for (int c = 0; c < NZ; ++c) S[b - 1][c] /= std::sqrt(nrm);
        }
        for (int i = 0; i < M; ++i) {
            CVec& u = modes[i];
            if (i == G.X.nyquist()) {
                std::fill(u.begin(), u.end(), cplx(0.0));
                continue;
            }
            CVec coef(NZ, cplx(0.0));
            for (int b = 0; b < NZ; ++b) {
                cplx acc = 0.0;
                for (int c = 0; c < NZ; ++c) acc += S[b][c] * u[c];
                coef[b] = acc * symbol(L.finite(i, b + 1));
            }
            for (int c = 0; c < NZ; ++c) {
                cplx acc = 0.0;
                for (int b = 0; b < NZ; ++b) acc += S[b][c] * coef[b];
                u[c] = acc;
            }
        }
    }
    return detail::modes_to_rows(modes, M);
}

struct PoissonResult {
    Rows xi;
    double mean = 0.0;         // removed mean of the right-hand side (biperiodic)
    bool nonzero_mean = false;  // |mean| > 1e-8: the caller's flux is off
};

/// Solves L xi = rhs for the cell-centred Laplacian L = D_zz + D_xx.
/// Biperiodic: diagonalized by a twisted DFT in z. Finite layer: Thomas sweep per x-mode.
inline PoissonResult solve_periodic_poisson(const Rows& rhs, const Grid& G) {
    PoissonResult res;
    const int M = G.Mx, NZ = G.NZ;
    double tot = 0.0;
    for (auto& r : rhs)
        for (double v : r) tot += v;
    if (G.biperiodic()) {
        res.mean = tot / (double(M) * NZ);
        res.nonzero_mean = std::abs(res.mean) > 1e-8;
        res.xi = apply_laplace_function(rhs, G, [](double lam) { return 1.0 / lam; });
        return res;
    }
    auto modes = detail::rows_to_modes(rhs, M);
    const double idz2 = 1.0 / (G.dz * G.dz);
    for (int i = 0; i < M; ++i) {
        if (i == G.X.nyquist()) {
            std::fill(modes[i].begin(), modes[i].end(), cplx(0.0));
            continue;
        }
        double k = G.X.k(i);
        Vec diag(NZ, -2.0 * idz2 - k * k);
        diag[0] -= idz2;
        diag[NZ - 1] -= idz2;
        if (NZ == 1) diag[0] = -4.0 * idz2 - k * k;
        modes[i] = detail::thomas(idz2, diag, modes[i]);
    }
    res.xi = detail::modes_to_rows(modes, M);
    return res;
}

/// Discrete Laplacian of stream rows (the fluctuating part of h).
inline Rows laplacian(const Rows& xi, const Grid& G) {
    StreamFields f = stream_forward(xi, G);
    for (auto& r : f.h)
        for (double& v : r) v -= G.B;
    return f.h;
}

}  // namespace ldl
