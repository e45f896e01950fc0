// Command-line front end for the layered-superconductor lattice library.
//
//   ldlattice <command> [--config run.json] [--out dir] [--set key=value]... [--N 2 --r 1e-3 ...]
//
// Exit codes: 0 success, 1 configuration error, 2 non-convergence.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ldl/minimize.hpp"

namespace fs = std::filesystem;
using namespace ldl;

namespace {

const std::set<std::string> kCommon = {"command", "kappa", "H", "p", "r", "N", "s", "s_q1", "m", "q", "q_q1", "k",
                                       "kind", "Mx", "Mz", "max_iters", "grad_tol", "memory", "seed"};

const std::map<std::string, std::set<std::string>> kExtra = {
    {"geometry", {}},
    {"minimize", {"init", "delta", "amplitude"}},
    {"asymptotic", {"delta"}},
    {"frustration", {"N_values", "s_count", "starts", "grid_points"}},
    {"sweep", {"r_values", "delta"}},
    {"export", {"checkpoint", "delta"}},
};

json parse_scalar(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return json(text);
    }
}

void check_keys(const json& cfg, const std::string& cmd) {
    const auto& extra = kExtra.at(cmd);
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (!kCommon.count(it.key()) && !extra.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' for command " + cmd);
    }
    if (cfg.contains("command") && cfg["command"] != cmd)
        throw ConfigError("config is for command " + cfg["command"].dump() + ", not " + cmd);
}

SolverOptions solver_from(const json& cfg) {
    SolverOptions o;
    o.max_iters = cfg.value("max_iters", o.max_iters);
    o.grad_tol = cfg.value("grad_tol", o.grad_tol);
    o.memory = cfg.value("memory", o.memory);
    o.seed = cfg.value("seed", o.seed);
    o.validate();
    return o;
}

json run_header(const Setup& S, const std::string& cmd) {
    json h = geometry_json(S.geom, S.params, S.disc);
    h["command"] = cmd;
    return h;
}

// Phases for the expansion: explicit interior list or the reduced-problem minimizer.
PhaseVector phases_for(const json& cfg, const Setup& S) {
    if (cfg.contains("delta")) return phase_vector(cfg["delta"].get<Vec>(), S.geom, S.params);
    if (S.geom.kind == Kind::finite_layer) return staggered_phases(S.geom, S.params);
    return minimize_F(S.geom.N, S.geom.s, S.params).delta;
}

void save_json(const fs::path& p, const json& j) { io::write_atomic(p, j.dump(2) + "\n"); }

int cmd_geometry(const json& cfg, const Setup& S, const fs::path& out) {
    const auto& g = S.geom;
    const auto& P = S.params;
    Admissibility a = classify_geometry(g, P);
    json rep = run_header(S, "geometry");
    rep["admissible"] = a.admissible;
    rep["mean_field"] = mean_field(g, P);
    rep["flux_per_cell"] = 2.0 * pi * g.K;
    std::printf("N=%d kind=%s q=%.10g K=%d <h>=%.10g\n", g.N, to_string(g.kind).c_str(), g.q, g.K, mean_field(g, P));
    if (!a.admissible) {
        std::printf("inadmissible: Hpq/pi = %.10g is not an integer with k_n = m n\n", P.H * P.p * g.q / pi);
    } else {
        std::printf("admissible, m=%d, flux 2pi*%d\n", a.m, g.K);
        if (g.kind == Kind::biperiodic) {
            Optimality o = classify_optimality(g.N, g.s, P);
            rep["optimality"] = to_string(o);
            if (o == Optimality::optimal_even) std::printf("commensurate-optimal (even case)\n");
            else if (o == Optimality::optimal_odd) std::printf("commensurate-optimal (odd case)\n");
            else std::printf("frustrated\n");
        }
    }
    save_json(out / "geometry.json", rep);
    (void)cfg;
    return 0;
}

int cmd_minimize(const json& cfg, const Setup& S, const fs::path& out) {
    SolverOptions opts = solver_from(cfg);
    Grid G(S.geom, S.params, S.disc);
    bool admissible = classify_geometry(S.geom, S.params).admissible;
    std::string init = cfg.value("init", std::string(admissible ? "asymptotic" : "random"));
    Configuration start;
    if (init == "asymptotic") {
        start = first_order_configuration(phases_for(cfg, S), S.params.r, G);
    } else if (init == "manifold") {
        start = manifold_point(phases_for(cfg, S), G);
    } else if (init == "random") {
        start = random_init(G, opts.seed, cfg.value("amplitude", 0.1));
    } else {
        throw ConfigError("init must be asymptotic, manifold or random");
    }
    MinimizeResult res = minimize_energy(start, G, opts);
    json h = run_header(S, "minimize");
    save_checkpoint(out, res.state, G, opts, res.iterations, res.energy);
    FieldSet F = observables(res.state, G);
    export_fields(F, G, out, h);
    const double area = S.geom.area(S.params);
    json sum = h;
    sum["energy"] = res.energy;
    sum["energy_per_area"] = res.energy.total / area;
    sum["grad_norm"] = res.grad_norm;
    sum["iterations"] = res.iterations;
    sum["converged"] = res.converged;
    sum["status"] = res.message;
    if (admissible && S.geom.kind == Kind::biperiodic) sum["delta_extracted"] = relative_phases(extract_phases(F, G)).delta;
    save_json(out / "summary.json", sum);
    std::printf("e(r)=%.12g E=%.12g grad=%.3e iterations=%d %s\n", res.energy.total / area, res.energy.total,
                res.grad_norm, res.iterations, res.message.c_str());
    return res.converged ? 0 : 2;
}

int cmd_asymptotic(const json& cfg, const Setup& S, const fs::path& out) {
    Grid G(S.geom, S.params, S.disc);
    PhaseVector dv = phases_for(cfg, S);
    double F = reduced_objective(dv, S.geom.kind);
    json rep = run_header(S, "asymptotic");
    rep["delta"] = dv.delta;
    rep["F"] = F;
    double c2;
    if (S.geom.kind == Kind::biperiodic) {
        ExpansionReport e = expansion_constants(S.geom, S.params, F);
        rep["expansion"] = e;
        c2 = e.C0 + e.C1 * F;
    } else {
        c2 = omega2_quadrature(dv, G) / S.geom.area(S.params);
    }
    rep["r2_constant"] = c2;
    rep["quadrature_r2_constant"] = omega2_quadrature(dv, G) / S.geom.area(S.params);
    double r = S.params.r;
    rep["predicted_energy_per_area"] = r + r * r * c2;
    save_json(out / "asymptotic.json", rep);
    export_fields(predicted_fields(dv, r, G), G, out / "predicted", run_header(S, "asymptotic"));
    std::printf("F=%.12g C0+C1F=%.12g predicted e(r)=%.12g\n", F, c2, r + r * r * c2);
    return 0;
}

int cmd_frustration(const json& cfg, const Setup& S, const fs::path& out) {
    std::vector<int> Ns = cfg.value("N_values", std::vector<int>{1, 2, 3, 4});
    int count = cfg.value("s_count", 12);
    if (count < 1) throw ConfigError("s_count must be positive");
    Vec svals;
    for (int i = 0; i < count; ++i) svals.push_back(2.0 * q1(S.params) * i / count);
    int starts = cfg.value("starts", 32);
    auto rows = phase_scan(Ns, svals, S.params, starts, cfg.value("seed", 12345ULL));
    io::Csv csv = phase_scan_csv(rows);
    csv.save(out / "phase_diagram.csv");
    if (cfg.contains("grid_points")) {
        int gp = cfg["grid_points"].get<int>();
        io::Csv bf({"N", "s", "F", "brute_force", "tolerance"});
        for (const auto& r : rows) {
            if (r.N > 4) continue;
            bf.row({double(r.N), r.s, r.F, brute_force_F(r.N, r.s, S.params, gp), brute_force_tolerance(r.N, gp)});
        }
        bf.save(out / "brute_force.csv");
    }
    std::cout << csv.str();
    return 0;
}

int cmd_sweep(const json& cfg, const Setup& S, const fs::path& out) {
    SolverOptions opts = solver_from(cfg);
    Vec rs = cfg.value("r_values", Vec{1e-3, 2e-3, 4e-3});
    PhaseVector dv = phases_for(cfg, S);
    std::vector<MinimizeResult> runs;
    try {
        runs = continuation_in_r(dv, rs, S.geom, S.params, S.disc, opts);
    } catch (const NoConvergence& e) {
        std::fprintf(stderr, "no convergence at r=%g: %s\n", e.r, e.what());
        return 2;
    }
    std::vector<Configuration> states;
    for (auto& r : runs) states.push_back(r.state);
    ComparisonReport rep = compare_with_asymptotics(states, rs, S.geom, S.params);
    json j = run_header(S, "sweep");
    j["report"] = rep;
    save_json(out / "comparison.json", j);
    io::Csv csv({"r", "e", "r2_term", "h_sup_error", "min_f"});
    for (std::size_t i = 0; i < rs.size(); ++i)
        csv.row({rs[i], rep.measured_energy_per_area[i], rep.normalized_r2_term[i], rep.field_sup_errors[i],
                 rep.min_modulus[i]});
    csv.save(out / "sweep.csv");
    ModelParams Q = S.params;
    Q.r = rs.front();
    Grid G(S.geom, Q, S.disc);
    export_fields(predicted_fields(dv, Q.r, G), G, out / "predicted", run_header(S, "sweep"));
    std::printf("fitted C0+C1F=%.10g predicted=%.10g relative error=%.3e\n", rep.fitted_C0_plus_C1F,
                rep.predicted_C0_plus_C1F, rep.relative_error);
    return 0;
}

int cmd_export(const json& cfg, const Setup& S, const fs::path& out) {
    fs::path cp = cfg.contains("checkpoint") ? fs::path(cfg["checkpoint"].get<std::string>()) : out;
    if (fs::exists(cp / "checkpoint.json")) {
        Checkpoint c = load_checkpoint(cp);
        Grid G(c.setup.geom, c.setup.params, c.setup.disc);
        export_fields(observables(c.state, G), G, out / "fields", run_header(c.setup, "export"));
        std::printf("exported checkpoint fields to %s\n", (out / "fields").string().c_str());
        return 0;
    }
    if (cfg.contains("checkpoint")) throw ConfigError("no checkpoint.json in " + cp.string());
    Grid G(S.geom, S.params, S.disc);
    export_fields(predicted_fields(phases_for(cfg, S), S.params.r, G), G, out / "predicted", run_header(S, "export"));
    std::printf("exported predicted fields to %s\n", (out / "predicted").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Layered superconductor lattice minimizer"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    const std::vector<std::string> scalar_flags = {"kappa", "H", "p", "r", "N", "s", "s_q1", "m", "q", "q_q1", "kind",
                                                   "Mx", "Mz", "max_iters", "grad_tol", "memory", "seed"};
    const std::pair<const char*, const char*> commands[] = {
        {"geometry", "admissibility and flux of a lattice geometry"},
        {"minimize", "minimize the free energy from a chosen start"},
        {"asymptotic", "expansion constants and predicted fields"},
        {"frustration", "reduced phase problem over a grid of N and s"},
        {"sweep", "continuation in r compared with the expansion"},
        {"export", "write field CSVs from a checkpoint or the prediction"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--set", sets, "override key=value (value parsed as JSON when possible)");
        for (const auto& f : scalar_flags) sub->add_option("--" + f, flags[f]);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    std::string cmd = app.get_subcommands().front()->get_name();
    try {
        json cfg = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            cfg = json::parse(in);
            if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
        }
        for (const auto& [k, v] : flags)
            if (!v.empty()) cfg[k] = parse_scalar(v);
        for (const auto& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value");
            cfg[kv.substr(0, eq)] = parse_scalar(kv.substr(eq + 1));
        }
        check_keys(cfg, cmd);
        Setup S = setup_from_json(cfg);
        fs::path out(out_dir);
        fs::create_directories(out);
        if (cmd == "geometry") return cmd_geometry(cfg, S, out);
        if (cmd == "minimize") return cmd_minimize(cfg, S, out);
        if (cmd == "asymptotic") return cmd_asymptotic(cfg, S, out);
        if (cmd == "frustration") return cmd_frustration(cfg, S, out);
        if (cmd == "sweep") return cmd_sweep(cfg, S, out);
        return cmd_export(cfg, S, out);
    } catch (const NoConvergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
