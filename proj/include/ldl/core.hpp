#pragma once
// Parameters, period geometry, grids and the gauge-fixed configuration.

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectral.hpp"

namespace ldl {

using json = nlohmann::json;
constexpr double pi = std::numbers::pi;

struct InadmissibleGeometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelParams {
    double kappa = 1.0;
    double H = 2.0 * pi;
    double p = 0.5;
    double r = 0.0;

    void validate() const {
        if (!(kappa > 0) || !(H > 0) || !(p > 0) || !(r >= 0))
            throw ConfigError("model parameters need kappa, H, p > 0 and r >= 0");
    }
};

enum class Kind { biperiodic, finite_layer };

inline std::string to_string(Kind k) { return k == Kind::biperiodic ? "biperiodic" : "finite_layer"; }
inline Kind kind_from_string(const std::string& s) {
    if (s == "biperiodic") return Kind::biperiodic;
    if (s == "finite_layer") return Kind::finite_layer;
    throw ConfigError("unknown kind '" + s + "'");
}

struct LatticeGeometry {
    int N = 1;
    double s = 0.0;
    double q = 1.0;
    int m = 1;           // slope when k_n = m n, 0 for an explicit list
    std::vector<int> k;  // k_0..k_N
    int K = 1;
    Kind kind = Kind::biperiodic;

    int planes() const { return kind == Kind::biperiodic ? N : N + 1; }
    // plane number of stored slot j
    int plane(int j) const { return kind == Kind::biperiodic ? j + 1 : j; }
    double area(const ModelParams& P) const { return 2.0 * q * N * P.p; }
};

struct Discretization {
    int Mx = 64;
    int Mz = 8;

    void validate() const {
        if (Mx < 4 || Mz < 1 || Mx % 2 != 0) throw ConfigError("discretization needs even Mx >= 4 and Mz >= 1");
    }
};

/// Half-period of the fundamental admissible cell, pi/(Hp).
inline double q1(const ModelParams& P) { return pi / (P.H * P.p); }

inline LatticeGeometry build_geometry(int N, double s, int m, const ModelParams& P, Kind kind) {
    if (N < 1 || m < 1) throw ConfigError("build_geometry needs N >= 1 and m >= 1");
    LatticeGeometry g;
    g.N = N;
    g.s = s;
    g.m = m;
    g.q = m * pi / (P.H * P.p);
    g.k.resize(N + 1);
    for (int n = 0; n <= N; ++n) g.k[n] = m * n;
    g.K = m * N;
    g.kind = kind;
    return g;
}

/// Geometry with an arbitrary half-period and winding list (k_0 = 0).
inline LatticeGeometry custom_geometry(int N, double s, double q, std::vector<int> k, Kind kind) {
    if (N < 1 || !(q > 0)) throw ConfigError("custom geometry needs N >= 1 and q > 0");
    if (static_cast<int>(k.size()) != N + 1 || k[0] != 0) throw ConfigError("winding list must hold k_0 = 0 .. k_N");
    LatticeGeometry g;
    g.N = N;
    g.s = s;
    g.q = q;
    g.k = std::move(k);
    g.K = g.k[N];
    g.kind = kind;
    g.m = 0;
    bool linear = true;
    for (int n = 0; n <= N; ++n) linear = linear && g.k[n] == g.k[1] * n;
    if (linear && g.k[1] > 0) g.m = g.k[1];
    return g;
}

/// Mean field fixed by flux quantization (the background used by the stream-function gauge).
inline double mean_field(const LatticeGeometry& g, const ModelParams& P) {
    if (g.kind == Kind::finite_layer) return P.H;
    return pi * g.K / (P.p * g.q * g.N);
}

struct Admissibility {
    bool admissible = false;
    int m = 0;
};

inline Admissibility classify_geometry(const LatticeGeometry& g, const ModelParams& P) {
    double ratio = P.H * P.p * g.q / pi;
    double m = std::round(ratio);
    if (m < 1 || std::abs(ratio - m) > 1e-9 * std::max(1.0, std::abs(ratio))) return {};
    int mi = static_cast<int>(m);
    if (static_cast<int>(g.k.size()) != g.N + 1) return {};
    for (int n = 0; n <= g.N; ++n)
        if (g.k[n] != mi * n) return {};
    return {true, mi};
}

inline void require_admissible(const LatticeGeometry& g, const ModelParams& P) {
    if (!classify_geometry(g, P).admissible) throw InadmissibleGeometry("geometry is not admissible (Hpq/pi must be an integer m with k_n = m n)");
}

/// Gauge-fixed state. Plane slots follow LatticeGeometry::plane: biperiodic stores
/// planes 1..N (plane 0 is synthesized), finite_layer stores planes 0..N.
/// xi holds N*Mz rows of Mx samples; row c sits at height (c + 1/2) dz with dz = p/Mz.
struct Configuration {
    Kind kind = Kind::biperiodic;
    int N = 1;
    int Mx = 0;
    int Mz = 0;
    std::vector<Vec> f;
    std::vector<Vec> chi;
    Vec alpha;
    double omega = 0.0;
    double d = 0.0;
    std::vector<Vec> xi;

    int planes() const { return static_cast<int>(f.size()); }
    int rows() const { return N * Mz; }

    static Configuration zeros(const LatticeGeometry& g, const Discretization& D) {
        Configuration c;
        c.kind = g.kind;
        c.N = g.N;
        c.Mx = D.Mx;
        c.Mz = D.Mz;
        int P = g.planes();
        c.f.assign(P, Vec(D.Mx, 1.0));
        c.chi.assign(P, Vec(D.Mx, 0.0));
        c.alpha.assign(P, 0.0);
        c.xi.assign(g.N * D.Mz, Vec(D.Mx, 0.0));
        return c;
    }

    std::size_t dof() const { return 2 * f.size() * Mx + alpha.size() + 2 + xi.size() * Mx; }

    /// Flat layout: f, chi, alpha, omega, d, xi.
    Vec pack() const {
        Vec v;
        v.reserve(dof());
        for (auto& a : f) v.insert(v.end(), a.begin(), a.end());
        for (auto& a : chi) v.insert(v.end(), a.begin(), a.end());
        v.insert(v.end(), alpha.begin(), alpha.end());
        v.push_back(omega);
        v.push_back(d);
        for (auto& a : xi) v.insert(v.end(), a.begin(), a.end());
        return v;
    }

    void unpack(const Vec& v) {
        std::size_t o = 0;
        auto take = [&](Vec& a) {
            std::copy(v.begin() + o, v.begin() + o + a.size(), a.begin());
            o += a.size();
        };
        for (auto& a : f) take(a);
        for (auto& a : chi) take(a);
        take(alpha);
        omega = v[o++];
        d = v[o++];
        for (auto& a : xi) take(a);
    }
};

/// Discretization context shared by the field and energy evaluators.
struct Grid {
    LatticeGeometry geom;
    ModelParams par;
    int Mx = 0;
    int Mz = 0;
    int NZ = 0;
    double dz = 0.0;
    double w = 0.0;  // x quadrature weight
    double B = 0.0;  // background field of the gauge
    spectral::Periodic X;
    Vec x;

    Grid(const LatticeGeometry& g, const ModelParams& P, const Discretization& D)
        : geom(g), par(P), Mx(D.Mx), Mz(D.Mz), NZ(g.N * D.Mz), dz(P.p / D.Mz), w(2.0 * g.q / D.Mx),
          B(mean_field(g, P)), X(D.Mx, 2.0 * g.q), x(X.grid()) {
        D.validate();
    }

    Grid(const LatticeGeometry& g, const ModelParams& P, const Configuration& c)
        : Grid(g, P, Discretization{c.Mx, c.Mz}) {}

    bool biperiodic() const { return geom.kind == Kind::biperiodic; }
    double z_plane(int n) const { return n * par.p; }
    int winding(int j) const { return geom.k[geom.plane(j)]; }
};

/// Phase samples of stored slot j.
inline Vec phase(const Configuration& c, const Grid& G, int j) {
    Vec out(G.Mx);
    double slope = (c.omega + 2.0 * pi * G.winding(j)) / (2.0 * G.geom.q);
    for (int i = 0; i < G.Mx; ++i) out[i] = c.alpha[j] + slope * G.x[i] + c.chi[j][i];
    return out;
}

struct PhaseParts {
    double alpha;
    Vec chi;
};

/// Split phase samples with known total winding into offset and mean-free periodic part.
inline PhaseParts decompose_phase(const Vec& phi, double omega, int k, const Grid& G) {
    double slope = (omega + 2.0 * pi * k) / (2.0 * G.geom.q);
    Vec rest(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) rest[i] = phi[i] - slope * G.x[i];
    double a = spectral::Periodic::mean(rest);
    for (double& v : rest) v -= a;
    return {a, rest};
}

/// Move the means of chi into alpha.
inline void normalize_phases(Configuration& c) {
    for (std::size_t j = 0; j < c.chi.size(); ++j) {
        double m = spectral::Periodic::mean(c.chi[j]);
        for (double& v : c.chi[j]) v -= m;
        c.alpha[j] += m;
    }
}

struct PlaneZero {
    Vec f;
    Vec phi;
};

/// Plane 0 of a biperiodic configuration, f_0(x) = f_N(x+s), phi_0(x) = phi_N(x+s) - (K pi/q) x - d.
inline PlaneZero synthesize_plane_zero(const Configuration& c, const Grid& G) {
    if (!G.biperiodic()) throw std::logic_error("plane 0 is stored explicitly for finite layers");
    const auto& g = G.geom;
    int top = g.N - 1;
    PlaneZero z;
    z.f = G.X.shift(c.f[top], g.s);
    Vec chis = G.X.shift(c.chi[top], g.s);
    z.phi.resize(G.Mx);
    for (int i = 0; i < G.Mx; ++i)
        z.phi[i] = c.alpha[top] + c.omega * (G.x[i] + g.s) / (2.0 * g.q) + pi * g.K * g.s / g.q + chis[i] - c.d;
    return z;
}

// ---------------------------------------------------------------- JSON

inline void to_json(json& j, const ModelParams& P) {
    j = json{{"kappa", P.kappa}, {"H", P.H}, {"p", P.p}, {"r", P.r}};
}

inline void from_json(const json& j, ModelParams& P) {
    ModelParams d;
    P.kappa = j.value("kappa", d.kappa);
    P.H = j.value("H", d.H);
    P.p = j.value("p", d.p);
    P.r = j.value("r", d.r);
    P.validate();
}

inline json geometry_json(const LatticeGeometry& g, const ModelParams& P, const Discretization& D) {
    json j = P;
    j["N"] = g.N;
    j["s"] = g.s;
    j["m"] = g.m;
    j["q"] = g.q;
    j["k"] = g.k;
    j["K"] = g.K;
    j["kind"] = to_string(g.kind);
    j["Mx"] = D.Mx;
    j["Mz"] = D.Mz;
    return j;
}

struct Setup {
    ModelParams params;
    LatticeGeometry geom;
    Discretization disc;
};

/// Reads params, geometry and grid from keys kappa, H, p, r, N, s, m, kind, Mx, Mz.
/// Optional: q and k (explicit half-period and winding list), s_q1 and q_q1 (in units of q1).
inline Setup setup_from_json(const json& j) {
    Setup S;
    S.params = j.get<ModelParams>();
    int N = j.value("N", 1);
    int m = j.value("m", 1);
    Kind kind = kind_from_string(j.value("kind", std::string("biperiodic")));
    double s = j.value("s", 0.0);
    if (j.contains("s_q1")) s = j.at("s_q1").get<double>() * q1(S.params);
    if (j.contains("q") || j.contains("q_q1") || j.contains("k")) {
        double q = j.contains("q") ? j.at("q").get<double>() : m * q1(S.params);
        if (j.contains("q_q1")) q = j.at("q_q1").get<double>() * q1(S.params);
        std::vector<int> k;
        if (j.contains("k")) {
            k = j.at("k").get<std::vector<int>>();
        } else {
            for (int n = 0; n <= N; ++n) k.push_back(m * n);
        }
        S.geom = custom_geometry(N, s, q, k, kind);
    } else {
        S.geom = build_geometry(N, s, m, S.params, kind);
    }
    S.disc.Mx = j.value("Mx", 64);
    S.disc.Mz = j.value("Mz", 8);
    S.disc.validate();
    return S;
}

}  // namespace ldl
