#pragma once
// Gauge-invariant observables, the Stokes phase formula, gauge transforms and gauge fixing.

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "core.hpp"
#include "io.hpp"
#include "stream.hpp"

namespace ldl {

struct FluxMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Observables. Plane arrays (f, V, jx) follow the stored slot order; gap arrays
/// (Phi, jz) are indexed n-1 for gap n between planes n-1 and n. h has one row per cell.
struct FieldSet {
    Kind kind = Kind::biperiodic;
    int N = 1;
    Vec x;
    Vec z;  // cell-centre heights of the rows of h
    Rows h;
    Rows f;
    Rows V;
    Rows Phi;
    Rows jx;
    Rows jz;
};

/// Arbitrary-gauge state: phase samples with winding constant omega, background B,
/// periodic A_x perturbation on cell faces (node rows) and A_z on cell centres.
/// Biperiodic keeps NZ node rows (node NZ wraps with a shift by s); finite keeps NZ + 1.
struct RawConfiguration {
    Kind kind = Kind::biperiodic;
    int N = 1;
    int Mx = 0;
    int Mz = 0;
    Rows f;
    Rows phi;
    double omega = 0.0;
    double d = 0.0;
    double B = 0.0;
    Rows ax;
    Rows az;
};

namespace detail {

inline Vec node_row(const Rows& nodes, int j, const Grid& G) {
    if (G.biperiodic() && j == G.NZ) return G.X.shift(nodes[0], -G.geom.s);
    return nodes[j];
}

inline Vec phase_derivative(const Vec& phi, double slope, const Grid& G) {
    Vec per(phi.size());
    for (int i = 0; i < G.Mx; ++i) per[i] = phi[i] - slope * G.x[i];
    Vec d = G.X.deriv(per);
    for (double& v : d) v += slope;
    return d;
}

inline double slot_slope(double omega, int j, const Grid& G) {
    return (omega + 2.0 * pi * G.winding(j)) / (2.0 * G.geom.q);
}

/// phi_N(x + s) - (K pi / q) x - d for raw phase samples of the top plane.
inline Vec raw_phase_zero(const RawConfiguration& R, const Grid& G) {
    const auto& g = G.geom;
    int top = g.N - 1;
    double slope = slot_slope(R.omega, top, G);
    Vec per(G.Mx);
    for (int i = 0; i < G.Mx; ++i) per[i] = R.phi[top][i] - slope * G.x[i];
    per = G.X.shift(per, g.s);
    Vec out(G.Mx);
    for (int i = 0; i < G.Mx; ++i) out[i] = slope * (G.x[i] + g.s) + per[i] - pi * g.K * G.x[i] / g.q - R.d;
    return out;
}

}  // namespace detail

inline RawConfiguration to_raw(const Configuration& c, const Grid& G) {
    RawConfiguration R;
    R.kind = c.kind;
    R.N = c.N;
    R.Mx = c.Mx;
    R.Mz = c.Mz;
    R.f = c.f;
    for (int j = 0; j < c.planes(); ++j) R.phi.push_back(phase(c, G, j));
    R.omega = c.omega;
    R.d = c.d;
    R.B = G.B;
    Rows xi = drop_nyquist(c.xi, G);
    Vec above = detail::row_above(xi, G);
    Vec below = detail::row_below(xi, G);
    auto row = [&](int k) -> const Vec& { return k < 0 ? below : (k >= G.NZ ? above : xi[k]); };
    int nodes = G.biperiodic() ? G.NZ : G.NZ + 1;
    for (int j = 0; j < nodes; ++j) {
        Vec a(G.Mx);
        for (int i = 0; i < G.Mx; ++i) a[i] = (row(j)[i] - row(j - 1)[i]) / G.dz;
        R.ax.push_back(std::move(a));
    }
    for (int k = 0; k < G.NZ; ++k) {
        Vec a = G.X.deriv(xi[k]);
        for (double& v : a) v = -v;
        R.az.push_back(std::move(a));
    }
    return R;
}

/// Cell fields h = B + d_z A_x - d_x A_z of a raw state.
inline Rows raw_curl(const RawConfiguration& R, const Grid& G) {
    Rows h(G.NZ);
    for (int k = 0; k < G.NZ; ++k) {
        Vec up = detail::node_row(R.ax, k + 1, G);
        Vec dx = G.X.deriv(R.az[k]);
        Vec row(G.Mx);
        for (int i = 0; i < G.Mx; ++i) row[i] = R.B + (up[i] - R.ax[k][i]) / G.dz - dx[i];
        h[k] = std::move(row);
    }
    return h;
}

inline FieldSet observables(const RawConfiguration& R, const Grid& G) {
    const auto& g = G.geom;
    const auto& P = G.par;
    FieldSet F;
    F.kind = g.kind;
    F.N = g.N;
    F.x = G.x;
    for (int k = 0; k < G.NZ; ++k) F.z.push_back((k + 0.5) * G.dz);
    F.h = raw_curl(R, G);
    F.f = R.f;
    int np = g.planes();
    for (int j = 0; j < np; ++j) {
        int n = g.plane(j);
        Vec dphi = detail::phase_derivative(R.phi[j], detail::slot_slope(R.omega, j, G), G);
        Vec ax = detail::node_row(R.ax, n * G.Mz, G);
        Vec V(G.Mx), jx(G.Mx);
        for (int i = 0; i < G.Mx; ++i) {
            V[i] = dphi[i] - R.B * G.z_plane(n) - ax[i];
            jx[i] = R.f[j][i] * R.f[j][i] * V[i];
        }
        F.V.push_back(std::move(V));
        F.jx.push_back(std::move(jx));
    }
    Vec f0, phi0;
    if (G.biperiodic()) {
        f0 = G.X.shift(R.f[g.N - 1], g.s);
        phi0 = detail::raw_phase_zero(R, G);
    }
    for (int n = 1; n <= g.N; ++n) {
        const Vec& fl = G.biperiodic() ? (n == 1 ? f0 : R.f[n - 2]) : R.f[n - 1];
        const Vec& pl = G.biperiodic() ? (n == 1 ? phi0 : R.phi[n - 2]) : R.phi[n - 1];
        const Vec& fu = G.biperiodic() ? R.f[n - 1] : R.f[n];
        const Vec& pu = G.biperiodic() ? R.phi[n - 1] : R.phi[n];
        Vec az(G.Mx, 0.0);
        for (int k = (n - 1) * G.Mz; k < n * G.Mz; ++k)
            for (int i = 0; i < G.Mx; ++i) az[i] += R.az[k][i] * G.dz;
        Vec Phi(G.Mx), jz(G.Mx);
        for (int i = 0; i < G.Mx; ++i) {
            Phi[i] = pu[i] - pl[i] - az[i];
            jz[i] = 0.5 * P.r * P.kappa * P.kappa * P.p * fu[i] * fl[i] * std::sin(Phi[i]);
        }
        F.Phi.push_back(std::move(Phi));
        F.jz.push_back(std::move(jz));
    }
    return F;
}

inline FieldSet observables(const Configuration& c, const Grid& G) { return observables(to_raw(c, G), G); }

/// z-average of h over gap n (1-based).
inline Vec gap_average(const FieldSet& F, int n, const Grid& G) {
    Vec a(G.Mx, 0.0);
    for (int k = (n - 1) * G.Mz; k < n * G.Mz; ++k)
        for (int i = 0; i < G.Mx; ++i) a[i] += F.h[k][i] / G.Mz;
    return a;
}

/// Phase difference across gap n rebuilt from velocities and the gap-averaged field:
/// Phi(x) = Phi(0) + int_0^x (V_n - V_{n-1} + p h^(n)).
inline Vec stokes_phase(const FieldSet& F, int n, const Grid& G) {
    const auto& g = G.geom;
    Vec Vu, Vl;
    if (G.biperiodic()) {
        Vu = F.V[n - 1];
        Vl = n == 1 ? G.X.shift(F.V[g.N - 1], g.s) : F.V[n - 2];
    } else {
        Vu = F.V[n];
        Vl = F.V[n - 1];
    }
    Vec hn = gap_average(F, n, G);
    Vec integrand(G.Mx);
    for (int i = 0; i < G.Mx; ++i) integrand[i] = Vu[i] - Vl[i] + G.par.p * hn[i];
    double mean = spectral::Periodic::mean(integrand);
    Vec prim = G.X.antideriv(integrand);
    Vec out(G.Mx);
    for (int i = 0; i < G.Mx; ++i) out[i] = F.Phi[n - 1][0] + mean * G.x[i] + prim[i] - prim[0];
    return out;
}

inline Vec stokes_phase(const Configuration& c, const Grid& G, int n) { return stokes_phase(observables(c, G), n, G); }

/// (phi_n, A) -> (phi_n - lambda(., z_n), A - grad lambda) for a gauge function on the
/// cell faces, periodic in x (biperiodic: lambda(x, z + Np) = lambda(x - s, z)).
inline RawConfiguration apply_gauge(const RawConfiguration& R, const Rows& lambda, const Grid& G) {
    RawConfiguration out = R;
    int np = G.geom.planes();
    for (int j = 0; j < np; ++j) {
        Vec lam = detail::node_row(lambda, G.geom.plane(j) * G.Mz, G);
        for (int i = 0; i < G.Mx; ++i) out.phi[j][i] -= lam[i];
    }
    for (std::size_t j = 0; j < R.ax.size(); ++j) {
        Vec d = G.X.deriv(lambda[j]);
        for (int i = 0; i < G.Mx; ++i) out.ax[j][i] -= d[i];
    }
    for (int k = 0; k < G.NZ; ++k) {
        Vec up = detail::node_row(lambda, k + 1, G);
        for (int i = 0; i < G.Mx; ++i) out.az[k][i] -= (up[i] - lambda[k][i]) / G.dz;
    }
    return out;
}

/// Returns the stream-function gauge representative of a raw state. The gauge function
/// is rebuilt by integrating A_raw - A_fixed along x on the bottom face, then up in z.
inline Configuration gauge_fix(const RawConfiguration& R, const Grid& G) {
    const auto& g = G.geom;
    Rows h = raw_curl(R, G);
    if (G.biperiodic()) {
        double flux = 0.0;
        for (auto& row : h)
            for (double v : row) flux += v * G.w * G.dz;
        double want = 2.0 * pi * g.K;
        if (std::abs(flux - want) > 1e-6 * std::abs(want))
            throw FluxMismatch("flux " + io::num(flux) + " differs from 2 pi K = " + io::num(want));
    }
    Rows rhs = h;
    for (auto& row : rhs)
        for (double& v : row) v -= G.B;
    PoissonResult sol = solve_periodic_poisson(rhs, G);

    Configuration c;
    c.kind = g.kind;
    c.N = g.N;
    c.Mx = G.Mx;
    c.Mz = G.Mz;
    c.f = R.f;
    c.xi = sol.xi;
    c.chi.assign(g.planes(), Vec(G.Mx, 0.0));
    c.alpha.assign(g.planes(), 0.0);

    RawConfiguration fixed = to_raw(c, G);
    Vec gx0(G.Mx);
    for (int i = 0; i < G.Mx; ++i) gx0[i] = R.ax[0][i] - fixed.ax[0][i];
    double cx = spectral::Periodic::mean(gx0);
    // periodic part of lambda on faces 0..NZ
    Rows mu(G.NZ + 1);
    mu[0] = G.X.antideriv(gx0);
    for (int k = 0; k < G.NZ; ++k) {
        mu[k + 1] = mu[k];
        for (int i = 0; i < G.Mx; ++i) mu[k + 1][i] += G.dz * (R.az[k][i] - fixed.az[k][i]);
    }

    c.omega = R.omega - 2.0 * g.q * cx;
    for (int j = 0; j < g.planes(); ++j) {
        const Vec& m = mu[g.plane(j) * G.Mz];
        Vec phi(G.Mx);
        for (int i = 0; i < G.Mx; ++i) phi[i] = R.phi[j][i] - cx * G.x[i] - m[i];
        PhaseParts pp = decompose_phase(phi, c.omega, G.winding(j), G);
        c.alpha[j] = pp.alpha;
        c.chi[j] = pp.chi;
    }
    if (G.biperiodic())
        c.d = R.d - (cx * g.s + spectral::Periodic::mean(mu[G.NZ]) - spectral::Periodic::mean(mu[0]));
    return c;
}

// ---------------------------------------------------------------- export

inline void export_fields(const FieldSet& F, const Grid& G, const std::filesystem::path& dir, const json& header) {
    auto stamp = [&](io::Csv& csv) {
        for (auto it = header.begin(); it != header.end(); ++it) csv.comment(it.key() + "=" + it.value().dump());
    };
    auto plane_table = [&](const Rows& data, const std::string& name, bool gaps) {
        std::vector<std::string> head{"x"};
        for (std::size_t j = 0; j < data.size(); ++j) {
            int label = gaps ? static_cast<int>(j) + 1 : G.geom.plane(static_cast<int>(j));
            head.push_back(name + "_" + std::to_string(label));
        }
        io::Csv csv(head);
        stamp(csv);
        for (int i = 0; i < G.Mx; ++i) {
            Vec row{F.x[i]};
            for (auto& a : data) row.push_back(a[i]);
            csv.row(row);
        }
        csv.save(dir / (name + ".csv"));
    };
    plane_table(F.f, "f", false);
    plane_table(F.V, "V", false);
    plane_table(F.jx, "jx", false);
    plane_table(F.Phi, "Phi", true);
    plane_table(F.jz, "jz", true);
    io::Csv hc({"x", "z", "h"});
    stamp(hc);
    for (std::size_t k = 0; k < F.h.size(); ++k)
        for (int i = 0; i < G.Mx; ++i) hc.row({F.x[i], F.z[k], F.h[k][i]});
    hc.save(dir / "h.csv");
}

}  // namespace ldl
