#pragma once
// Discrete free energy, its analytic gradient and Euler-Lagrange residuals.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fields.hpp"

namespace ldl {

struct EnergyBreakdown {
    double condensation = 0.0;
    double josephson = 0.0;
    double magnetic = 0.0;
    double total = 0.0;
};

inline void to_json(json& j, const EnergyBreakdown& e) {
    j = json{{"condensation", e.condensation}, {"josephson", e.josephson}, {"magnetic", e.magnetic}, {"total", e.total}};
}

namespace detail {

inline double sum(const Vec& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s;
}

inline double condensation_plane(const Vec& f, const Vec& V, const Grid& G) {
    const double k2 = G.par.kappa * G.par.kappa;
    Vec df = G.X.deriv(f);
    double acc = 0.0;
    for (int i = 0; i < G.Mx; ++i) {
        double t = f[i] * f[i] - 1.0;
        acc += 0.5 * t * t + (df[i] * df[i] + V[i] * V[i] * f[i] * f[i]) / k2;
    }
    return G.par.p * G.w * acc;
}

inline double coupling_gap(const Vec& fu, const Vec& fl, const Vec& Phi, const Grid& G) {
    double acc = 0.0;
    for (int i = 0; i < G.Mx; ++i) acc += fu[i] * fu[i] + fl[i] * fl[i] - 2.0 * fu[i] * fl[i] * std::cos(Phi[i]);
    return 0.5 * G.par.r * G.par.p * G.w * acc;
}

inline double magnetic_rows(const Rows& h, const Grid& G) {
    double acc = 0.0;
    for (auto& row : h)
        for (double v : row) acc += (v - G.par.H) * (v - G.par.H);
    return acc * G.w * G.dz / (G.par.kappa * G.par.kappa);
}

}  // namespace detail

/// Energy and (optionally) its gradient with respect to every stored degree of freedom.
inline EnergyBreakdown energy_and_gradient(const Configuration& c, const Grid& G, Configuration* grad) {
    const auto& g = G.geom;
    const auto& P = G.par;
    const double k2 = P.kappa * P.kappa;
    const double pw = P.p * G.w;
    const int M = G.Mx, np = g.planes();

    StreamFields sf = stream_forward(c.xi, G);
    Rows phi(np), V(np);
    EnergyBreakdown E;
    for (int j = 0; j < np; ++j) {
        phi[j] = phase(c, G, j);
        Vec dchi = G.X.deriv(c.chi[j]);
        double slope = detail::slot_slope(c.omega, j, G) - G.B * G.z_plane(g.plane(j));
        V[j].resize(M);
        for (int i = 0; i < M; ++i) V[j][i] = slope + dchi[i] - sf.axp[j][i];
        E.condensation += detail::condensation_plane(c.f[j], V[j], G);
    }
    PlaneZero z0;
    if (G.biperiodic()) z0 = synthesize_plane_zero(c, G);
    auto lower_f = [&](int n) -> const Vec& { return G.biperiodic() ? (n == 1 ? z0.f : c.f[n - 2]) : c.f[n - 1]; };
    auto lower_phi = [&](int n) -> const Vec& { return G.biperiodic() ? (n == 1 ? z0.phi : phi[n - 2]) : phi[n - 1]; };
    auto upper = [&](int n) { return G.biperiodic() ? n - 1 : n; };
    Rows Phi(g.N);
    for (int n = 1; n <= g.N; ++n) {
        int ju = upper(n);
        Phi[n - 1].resize(M);
        for (int i = 0; i < M; ++i) Phi[n - 1][i] = phi[ju][i] - lower_phi(n)[i] + sf.gap[n - 1][i];
        E.josephson += detail::coupling_gap(c.f[ju], lower_f(n), Phi[n - 1], G);
    }
    E.magnetic = detail::magnetic_rows(sf.h, G);
    E.total = E.condensation + E.josephson + E.magnetic;
    if (!grad) return E;

    Configuration& gr = *grad;
    gr = c;
    for (auto& a : gr.f) std::fill(a.begin(), a.end(), 0.0);
    for (auto& a : gr.chi) std::fill(a.begin(), a.end(), 0.0);
    std::fill(gr.alpha.begin(), gr.alpha.end(), 0.0);
    gr.omega = 0.0;
    gr.d = 0.0;

    Rows gphi = zero_rows(np, M), gaxp = zero_rows(np, M), ggap = zero_rows(g.N, M);
    Vec gf0(M, 0.0), gphi0(M, 0.0);
    for (int j = 0; j < np; ++j) {
        const Vec& f = c.f[j];
        Vec df = G.X.deriv(f);
        for (double& a : df) a *= 2.0 * pw / k2;
        Vec ddf = G.X.deriv(df);
        Vec gV(M);
        for (int i = 0; i < M; ++i) {
            gr.f[j][i] += pw * (2.0 * f[i] * (f[i] * f[i] - 1.0) + 2.0 * V[j][i] * V[j][i] * f[i] / k2) - ddf[i];
            gV[i] = pw * 2.0 * V[j][i] * f[i] * f[i] / k2;
            gaxp[j][i] = -gV[i];
        }
        Vec dgV = G.X.deriv(gV);
        for (int i = 0; i < M; ++i) gr.chi[j][i] -= dgV[i];
        gr.omega += detail::sum(gV) / (2.0 * g.q);
    }
    const double rpw = P.r * pw;
    for (int n = 1; n <= g.N; ++n) {
        int ju = upper(n);
        const Vec& fu = c.f[ju];
        const Vec& fl = lower_f(n);
        bool synth = G.biperiodic() && n == 1;
        for (int i = 0; i < M; ++i) {
            double cs = std::cos(Phi[n - 1][i]), sn = std::sin(Phi[n - 1][i]);
            double gP = rpw * fu[i] * fl[i] * sn;
            gr.f[ju][i] += rpw * (fu[i] - fl[i] * cs);
            double gfl = rpw * (fl[i] - fu[i] * cs);
            gphi[ju][i] += gP;
            ggap[n - 1][i] = gP;
            if (synth) {
                gf0[i] += gfl;
                gphi0[i] -= gP;
            } else {
                gr.f[ju - 1][i] += gfl;
                gphi[ju - 1][i] -= gP;
            }
        }
    }
    for (int j = 0; j < np; ++j) {
        gr.alpha[j] += detail::sum(gphi[j]);
        for (int i = 0; i < M; ++i) {
            gr.omega += gphi[j][i] * G.x[i] / (2.0 * g.q);
            gr.chi[j][i] += gphi[j][i];
        }
    }
    if (G.biperiodic()) {
        int top = g.N - 1;
        Vec t = G.X.shift(gf0, -g.s);
        Vec u = G.X.shift(gphi0, -g.s);
        for (int i = 0; i < M; ++i) {
            gr.f[top][i] += t[i];
            gr.chi[top][i] += u[i];
            gr.omega += gphi0[i] * (G.x[i] + g.s) / (2.0 * g.q);
        }
        gr.alpha[top] += detail::sum(gphi0);
        gr.d -= detail::sum(gphi0);
    }
    Rows gh(G.NZ);
    for (int k = 0; k < G.NZ; ++k) {
        gh[k].resize(M);
        for (int i = 0; i < M; ++i) gh[k][i] = 2.0 * G.w * G.dz * (sf.h[k][i] - P.H) / k2;
    }
    gr.xi = stream_adjoint(gh, gaxp, ggap, G);
    return E;
}

inline EnergyBreakdown energy(const Configuration& c, const Grid& G) { return energy_and_gradient(c, G, nullptr); }

inline Configuration gradient(const Configuration& c, const Grid& G) {
    Configuration g;
    energy_and_gradient(c, G, &g);
    return g;
}

namespace detail {
inline Vec lower_plane_f(const FieldSet& F, int n, const Grid& G) {
    if (G.biperiodic()) return n == 1 ? G.X.shift(F.f[G.geom.N - 1], G.geom.s) : F.f[n - 2];
    return F.f[n - 1];
}
inline const Vec& upper_plane_f(const FieldSet& F, int n, const Grid& G) {
    return G.biperiodic() ? F.f[n - 1] : F.f[n];
}
}  // namespace detail

/// Energy evaluated from gauge-invariant observables only.
inline EnergyBreakdown energy_of_fields(const FieldSet& F, const Grid& G) {
    EnergyBreakdown E;
    for (std::size_t j = 0; j < F.f.size(); ++j) E.condensation += detail::condensation_plane(F.f[j], F.V[j], G);
    for (int n = 1; n <= G.geom.N; ++n)
        E.josephson += detail::coupling_gap(detail::upper_plane_f(F, n, G), detail::lower_plane_f(F, n, G), F.Phi[n - 1], G);
    E.magnetic = detail::magnetic_rows(F.h, G);
    E.total = E.condensation + E.josephson + E.magnetic;
    return E;
}

struct Residuals {
    double modulus = 0.0;  // modulus equation
    double jump = 0.0;  // field jump across planes
    double field_slope = 0.0;    // d_x h against Josephson current
    double current = 0.0;     // current conservation
    double field_z = 0.0;    // z-variation of h inside gaps
};

inline void to_json(json& j, const Residuals& r) {
    j = json{{"modulus", r.modulus}, {"jump", r.jump}, {"field_slope", r.field_slope}, {"current", r.current}, {"field_z", r.field_z}};
}

/// Sup-norms of the strong-form stationarity equations evaluated on the grid.
inline Residuals el_residuals(const FieldSet& F, const Grid& G) {
    const auto& g = G.geom;
    const auto& P = G.par;
    const double k2 = P.kappa * P.kappa;
    const int M = G.Mx;
    Residuals R;
    auto sup = [](double& acc, double v) { acc = std::max(acc, std::abs(v)); };

    // per gap n: f_n f_{n-1} cos Phi, f_n f_{n-1} sin Phi, plus the f of the other side
    for (int j = 0; j < g.planes(); ++j) {
        int n = g.plane(j);
        const Vec& f = F.f[j];
        Vec d2f = G.X.deriv2(f);
        Vec flux(M);
        for (int i = 0; i < M; ++i) flux[i] = f[i] * f[i] * F.V[j][i];
        Vec dflux = G.X.deriv(flux);
        Vec coup(M, 0.0), curr(M, 0.0);
        // lower gap n
        if (n >= 1) {
            Vec fl = detail::lower_plane_f(F, n, G);
            for (int i = 0; i < M; ++i) {
                coup[i] += f[i] - fl[i] * std::cos(F.Phi[n - 1][i]);
                curr[i] += f[i] * fl[i] * std::sin(F.Phi[n - 1][i]);
            }
        }
        // upper gap n+1
        if (G.biperiodic() && n == g.N) {
            Vec fc(M), fs(M);
            for (int i = 0; i < M; ++i) {
                fc[i] = F.f[0][i] * std::cos(F.Phi[0][i]);
                fs[i] = F.f[0][i] * std::sin(F.Phi[0][i]);
            }
            fc = G.X.shift(fc, -g.s);
            fs = G.X.shift(fs, -g.s);
            for (int i = 0; i < M; ++i) {
                coup[i] += f[i] - fc[i];
                curr[i] -= fs[i] * f[i];
            }
        } else if (n < g.N) {
            const Vec& fu = detail::upper_plane_f(F, n + 1, G);
            for (int i = 0; i < M; ++i) {
                coup[i] += f[i] - fu[i] * std::cos(F.Phi[n][i]);
                curr[i] -= fu[i] * f[i] * std::sin(F.Phi[n][i]);
            }
        }
        for (int i = 0; i < M; ++i) {
            double V = F.V[j][i];
            sup(R.modulus, -d2f[i] / k2 + (f[i] * f[i] - 1.0) * f[i] + V * V * f[i] / k2 + 0.5 * P.r * coup[i]);
            sup(R.current, dflux[i] / k2 - 0.5 * P.r * curr[i]);
        }
        // jump of h across the plane
        Vec above, below;
        int node = n * G.Mz;
        if (G.biperiodic()) {
            above = n == g.N ? G.X.shift(F.h[0], -g.s) : F.h[node];
            below = F.h[node - 1];
        } else {
            above = n == g.N ? Vec(M, P.H) : F.h[node];
            below = n == 0 ? Vec(M, P.H) : F.h[node - 1];
        }
        for (int i = 0; i < M; ++i) sup(R.jump, above[i] - below[i] + P.p * f[i] * f[i] * F.V[j][i]);
    }
    for (int n = 1; n <= g.N; ++n) {
        Vec lo(M, 1e300), hi(M, -1e300);
        for (int k = (n - 1) * G.Mz; k < n * G.Mz; ++k) {
            Vec dh = G.X.deriv(F.h[k]);
            for (int i = 0; i < M; ++i) {
                sup(R.field_slope, dh[i] - F.jz[n - 1][i]);
                lo[i] = std::min(lo[i], F.h[k][i]);
                hi[i] = std::max(hi[i], F.h[k][i]);
            }
        }
        for (int i = 0; i < M; ++i) sup(R.field_z, hi[i] - lo[i]);
    }
    return R;
}

inline Residuals el_residuals(const Configuration& c, const Grid& G) { return el_residuals(observables(c, G), G); }

}  // namespace ldl
