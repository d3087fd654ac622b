#pragma once

// Batch front door.  A JSON config describes the singularities, the smooth
// factor K, the parameter rho (or a sweep), the grid and solver options; the
// verbs dispatch to the analysis/solve/probe pipelines and write plot-ready
// reports.
//
// Output contract: report.json carries every result plus the fully resolved
// config and the tool version, with sorted keys so reruns with the same seed
// are byte-identical; wall-clock metadata lives in a sidecar meta.json; bulk
// fields and profiles go to CSV.
//
// Exit codes: 0 ok (BlowupSuspected is a finding, not a failure), 2 config
// error, 3 degenerate Morse data, 4 solver stopped at max_iter without
// reaching the residual tolerance.

#include "singmt/blowup_analysis.hpp"
#include "singmt/radial_solver.hpp"
#include "singmt/series_degree.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace singmt::cli {

using nlohmann::json;

inline constexpr const char* VERSION = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

struct GridSpec {
    int n_theta = 64, n_phi = 128, l_max = 63;
};

struct SweepSpec {
    double start = 0, stop = 0;
    int count = 0;
};

struct RunConfig {
    PotentialSpec spec;
    std::optional<double> rho;
    std::optional<SweepSpec> sweep;
    GridSpec grid;
    SolverOptions solver;
    std::string out_dir = "out";
    unsigned seed = 0;
    int threads = 1;
    json raw;       // command-specific sections kept verbatim
    json resolved;  // echoed into every report
};

inline KSpec parse_K(const json& j) {
    if (j.is_null()) return KSpec::one();
    std::string type = j.value("type", "constant");
    if (type == "constant") return KSpec::constant_of(j.value("value", 1.0));
    if (type == "harmonic") {
        std::vector<KSpec::HarmTerm> terms;
        for (const json& t : j.value("terms", json::array()))
            terms.push_back({t.at("l").get<int>(), t.at("m").get<int>(),
                             t.at("coeff").get<double>()});
        return KSpec::harmonic(j.value("offset", 0.0), std::move(terms));
    }
    if (type == "exponential") return KSpec::exponential(parse_K(j.at("arg")));
    if (type == "affine") {
        std::vector<std::pair<double, KSpec>> parts;
        for (const json& t : j.value("terms", json::array()))
            parts.emplace_back(t.value("coeff", 1.0), parse_K(t.at("arg")));
        return KSpec::affine(j.value("offset", 0.0), std::move(parts));
    }
    throw ConfigError("unknown K type: " + type);
}

inline json dump_K(const KSpec& k) {
    json j;
    switch (k.kind) {
        case KSpec::Kind::Constant:
            j["type"] = "constant";
            j["value"] = k.constant;
            break;
        case KSpec::Kind::HarmonicSum: {
            j["type"] = "harmonic";
            j["offset"] = k.constant;
            json terms = json::array();
            for (const auto& t : k.harmonics)
                terms.push_back({{"l", t.l}, {"m", t.m}, {"coeff", t.coeff}});
            j["terms"] = terms;
            break;
        }
        case KSpec::Kind::Exponential:
            j["type"] = "exponential";
            j["arg"] = dump_K(*k.inner);
            break;
        case KSpec::Kind::Affine: {
            j["type"] = "affine";
            j["offset"] = k.constant;
            json terms = json::array();
            for (const auto& [c, sub] : k.parts)
                terms.push_back({{"coeff", c}, {"arg", dump_K(*sub)}});
            j["terms"] = terms;
            break;
        }
    }
    return j;
}

inline RunConfig parse_config(const json& j) {
    RunConfig cfg;
    try {
        std::vector<Singularity> sings;
        for (const json& s : j.value("singularities", json::array())) {
            Vec3 p;
            if (s.contains("point")) {
                auto v = s.at("point");
                p = Vec3{v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
                double n = p.norm();
                if (std::abs(n - 1.0) > 1e-6)
                    std::fprintf(stderr, "singmt: normalizing singular point off by %.2e\n",
                                 std::abs(n - 1.0));
            } else {
                double th = s.at("theta").get<double>(), ph = s.at("phi").get<double>();
                p = Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                         std::cos(th)};
            }
            sings.push_back({p, s.at("alpha").get<double>()});
        }
        cfg.spec.singularities = SingularityConfig(std::move(sings));
        cfg.spec.K = parse_K(j.contains("K") ? j.at("K") : json());

        if (j.contains("rho")) cfg.rho = j.at("rho").get<double>();
        if (j.contains("rho_sweep")) {
            SweepSpec sw;
            sw.start = j.at("rho_sweep").at("start").get<double>();
            sw.stop = j.at("rho_sweep").at("stop").get<double>();
            sw.count = j.at("rho_sweep").at("count").get<int>();
            if (sw.count < 1) throw ConfigError("rho_sweep.count must be >= 1");
            cfg.sweep = sw;
        }

        if (j.contains("grid")) {
            cfg.grid.n_theta = j.at("grid").value("n_theta", 64);
            cfg.grid.n_phi = j.at("grid").value("n_phi", 128);
            cfg.grid.l_max = j.at("grid").value("l_max", 63);
        }
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            cfg.solver.step = s.value("step", cfg.solver.step);
            cfg.solver.backtrack = s.value("backtrack", cfg.solver.backtrack);
            cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
            cfg.solver.tol_res = s.value("tol_res", cfg.solver.tol_res);
            cfg.solver.project_mean_zero =
                s.value("project_mean_zero", cfg.solver.project_mean_zero);
            cfg.solver.blowup_ceiling = s.value("blowup_ceiling", cfg.solver.blowup_ceiling);
            cfg.solver.init_noise = s.value("init_noise", cfg.solver.init_noise);
            cfg.solver.symmetry_lock = s.value("symmetry_lock", cfg.solver.symmetry_lock);
            if (!(cfg.solver.tol_res > 0) || !(cfg.solver.step > 0))
                throw ConfigError("solver: tol_res and step must be positive");
        }
        cfg.out_dir = j.value("out", "out");
        cfg.seed = j.value("seed", 0u);
        cfg.raw = j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    json r;
    r["singularities"] = json::array();
    for (const Singularity& s : cfg.spec.singularities.items)
        r["singularities"].push_back(
            {{"point", {s.point.x, s.point.y, s.point.z}}, {"alpha", s.alpha}});
    r["K"] = dump_K(cfg.spec.K);
    if (cfg.rho) r["rho"] = *cfg.rho;
    if (cfg.sweep)
        r["rho_sweep"] = {{"start", cfg.sweep->start}, {"stop", cfg.sweep->stop},
                          {"count", cfg.sweep->count}};
    r["grid"] = {{"n_theta", cfg.grid.n_theta}, {"n_phi", cfg.grid.n_phi},
                 {"l_max", cfg.grid.l_max}};
    r["solver"] = {{"step", cfg.solver.step},
                   {"backtrack", cfg.solver.backtrack},
                   {"max_iter", cfg.solver.max_iter},
                   {"tol_res", cfg.solver.tol_res},
                   {"project_mean_zero", cfg.solver.project_mean_zero},
                   {"blowup_ceiling", cfg.solver.blowup_ceiling},
                   {"init_noise", cfg.solver.init_noise},
                   {"symmetry_lock", cfg.solver.symmetry_lock}};
    r["seed"] = cfg.seed;
    cfg.resolved = std::move(r);
    return cfg;
}

// ---------------------------------------------------------------------------
// report plumbing
// ---------------------------------------------------------------------------

namespace detail_cli {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

inline void emit(const RunConfig& cfg, const std::string& verb, json report) {
    std::filesystem::create_directories(cfg.out_dir);
    report["version"] = VERSION;
    report["command"] = verb;
    report["config"] = cfg.resolved;
    write_text(std::filesystem::path(cfg.out_dir) / "report.json", report.dump(2) + "\n");
    json meta;
    meta["written_at"] = (long long)std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
    write_text(std::filesystem::path(cfg.out_dir) / "meta.json", meta.dump(2) + "\n");
}

inline json solve_result_json(const SolveResult& r, double tol_res) {
    return {{"rho", r.rho},
            {"J", r.J},
            {"residual_sup", r.residual_sup},
            {"tol_res", tol_res},
            {"iterations", r.iterations},
            {"status", to_string(r.status)},
            {"max_u", r.max_u},
            {"argmax_u", {r.argmax_u.x, r.argmax_u.y, r.argmax_u.z}}};
}

}  // namespace detail_cli

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

inline int cmd_analyze(const RunConfig& cfg) {
    const OrderVector orders = cfg.spec.singularities.orders();
    json rep;

    double cutoff = 5.0;  // in units of 8 pi
    json acfg = cfg.raw.value("analyze", json::object());
    cutoff = acfg.value("gamma_cutoff", cutoff);

    json gamma = json::array();
    for (const Exponent& e : gamma_set(orders, cutoff)) gamma.push_back(e.value);
    rep["gamma_over_8pi"] = gamma;
    GeneralizedSeries gs = expand_g(orders, cutoff);
    json terms = json::array();
    for (const SeriesTerm& t : gs.terms)
        terms.push_back({{"exponent", t.exponent.value}, {"coefficient", t.coeff}});
    rep["g_series"] = terms;
    rep["series_tolerance"] = EXPONENT_MERGE_TOL;

    json degrees = json::array();
    auto degree_row = [&](double rho) {
        json row;
        row["rho"] = rho;
        try {
            DegreeReport d = degree(rho, orders);
            row["degree"] = d.degree;
            row["bar_d_table"] = d.paper_bar_d;
            row["bar_d_expansion"] = d.expansion_bar_d;
        } catch (const CriticalRhoError&) {
            row["degree"] = nullptr;
            row["note"] = "rho lies in the critical set";
        }
        ExistenceReport ex = existence_verdict(rho, orders);
        row["verdict"] = to_string(ex.verdict);
        return row;
    };
    if (cfg.sweep) {
        for (int i = 0; i < cfg.sweep->count; ++i) {
            double rho = cfg.sweep->count == 1
                             ? cfg.sweep->start
                             : cfg.sweep->start + (cfg.sweep->stop - cfg.sweep->start) * i /
                                                      (cfg.sweep->count - 1);
            degrees.push_back(degree_row(rho));
        }
    }
    if (cfg.rho) degrees.push_back(degree_row(*cfg.rho));
    rep["degree_table"] = degrees;

    if (acfg.value("laplacian_conditions", false)) {
        SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
        CondReport c3 = check_cond_teo3(cfg.spec, g);
        rep["cond_8pi"] = {{"holds", c3.holds},
                          {"worst_lhs", c3.worst_lhs},
                          {"bound", c3.bound}};
        double k = acfg.value("k", 1.0);
        CondReport c31 = check_cond_teo31(cfg.spec, k, g);
        rep["cond_8kpi"] = {{"k", k},
                           {"holds", c31.holds},
                           {"worst_lhs", c31.worst_lhs},
                           {"bound", c31.bound}};
    }

    if (acfg.value("morse", false)) {
        SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
        MorseData md = morse_scan(cfg.spec, g, 1e-7);
        rep["morse"] = {{"r", md.r},
                        {"s", md.s},
                        {"r_prime", md.r_prime},
                        {"s_prime", md.s_prime},
                        {"degenerate", md.degenerate_flag},
                        {"tol_grad", 1e-7}};
        if (md.degenerate_flag) {
            detail_cli::emit(cfg, "analyze", rep);
            std::fprintf(stderr, "singmt: degenerate Morse data\n");
            return 3;
        }
        MorseCounts counts;
        counts.r = md.r;
        counts.s = md.s;
        counts.r_prime = md.r_prime;
        counts.s_prime = md.s_prime;
        MorseExistenceReport mx = morse_existence_check(counts, orders.m());
        json m;
        if (mx.d_8pi) m["d_8pi"] = *mx.d_8pi;
        if (mx.d_8pi_alt) m["d_8pi_alt"] = *mx.d_8pi_alt;
        m["bar_d"] = mx.bar_d;
        m["exists"] = mx.exists;
        m["inconsistent"] = mx.inconsistent;
        rep["morse_existence"] = m;
    }

    detail_cli::emit(cfg, "analyze", rep);
    return 0;
}

inline int cmd_solve(const RunConfig& cfg) {
    SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
    ScalarField h = build_h(cfg.spec, g);
    std::vector<double> rhos;
    if (cfg.sweep)
        for (int i = 0; i < cfg.sweep->count; ++i)
            rhos.push_back(cfg.sweep->count == 1
                               ? cfg.sweep->start
                               : cfg.sweep->start + (cfg.sweep->stop - cfg.sweep->start) * i /
                                                        (cfg.sweep->count - 1));
    if (cfg.rho) rhos.push_back(*cfg.rho);
    if (rhos.empty()) throw ConfigError("solve: needs rho or rho_sweep");

    SolverOptions so = cfg.solver;
    so.seed = cfg.seed;
    json rep;
    json runs = json::array();
    bool failed = false;
    std::filesystem::create_directories(cfg.out_dir);
    for (size_t i = 0; i < rhos.size(); ++i) {
        ScalarField init = so.init_noise > 0 ? noise_field(g, so.seed, so.init_noise)
                                             : ScalarField(g, 0.0);
        SolveResult r = minimize(rhos[i], h, init, so);
        json row = detail_cli::solve_result_json(r, so.tol_res);
        std::string fname = rhos.size() == 1 ? "u.csv" : "u_" + std::to_string(i) + ".csv";
        dump_field_csv(r.u, (std::filesystem::path(cfg.out_dir) / fname).string());
        row["field_csv"] = fname;
        runs.push_back(row);
        if (r.status == SolveStatus::MaxIter) failed = true;
    }
    rep["solves"] = runs;
    detail_cli::emit(cfg, "solve", rep);
    return failed ? 4 : 0;
}

inline int cmd_radial(const RunConfig& cfg) {
    if (!cfg.rho) throw ConfigError("radial: needs rho");
    SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
    RadialSolverOptions ro;
    ro.polish = cfg.solver;
    ro.polish.seed = cfg.seed;
    RadialSolveResult r = minimize_radial(*cfg.rho, cfg.spec, g, ro);
    std::filesystem::create_directories(cfg.out_dir);
    dump_profile_csv(r.profile, (std::filesystem::path(cfg.out_dir) / "profile.csv").string());
    dump_field_csv(r.result.u, (std::filesystem::path(cfg.out_dir) / "u.csv").string());
    json rep;
    rep["radial"] = {{"J_radial_1d", r.J_radial_1d},
                     {"iterations_1d", r.iterations_1d},
                     {"profile_csv", "profile.csv"},
                     {"n_nodes", ro.n_nodes},
                     {"t_range", {ro.t_min, ro.t_max}}};
    rep["lifted"] = detail_cli::solve_result_json(r.result, ro.polish.tol_res);
    rep["lifted"]["field_csv"] = "u.csv";
    detail_cli::emit(cfg, "radial", rep);
    return r.result.status == SolveStatus::MaxIter ? 4 : 0;
}

inline int cmd_onofri(const RunConfig& cfg) {
    SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
    ScalarField h = build_h(cfg.spec, g);
    json ocfg = cfg.raw.value("onofri", json::object());
    std::vector<double> ts = ocfg.value("t_values", std::vector<double>{1.0, 2.0, 4.0});
    Vec3 point{0, 0, -1};
    if (ocfg.contains("point")) {
        auto v = ocfg.at("point");
        point = sphere_point(v.at(0).get<double>(), v.at(1).get<double>(),
                             v.at(2).get<double>());
    }
    double max_h = sup_norm(h);
    ScalarField ones(g, 1.0);
    json rows = json::array();
    for (double t : ts) {
        ScalarField ut = dilation_family(t, point, g);
        double j_onofri = evaluate_J(ut, 8.0 * PI, ones);
        double j_h = evaluate_J(ut, 8.0 * PI, h);
        ScalarField e(g);
        for (int i = 0; i < g.size(); ++i) e.v[i] = std::exp(ut.v[i]);
        rows.push_back({{"t", t},
                        {"J_onofri", j_onofri},
                        {"J_h", j_h},
                        {"gap_sharp", j_h + 8.0 * PI * std::log(max_h)},
                        {"exp_mass", integrate(e)},
                        {"l_max", g.l_max}});
    }
    json rep;
    rep["max_h"] = max_h;
    rep["target_sharp_infimum"] = -8.0 * PI * std::log(max_h);
    rep["dilation_rows"] = rows;
    detail_cli::emit(cfg, "onofri", rep);
    return 0;
}

inline int cmd_blowup(const RunConfig& cfg) {
    SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
    json bcfg = cfg.raw.value("blowup", json::object());
    int k = bcfg.value("k", 1);
    int n_starts = bcfg.value("n_starts", 40);
    BlowupSearchOptions bo;
    bo.seed = cfg.seed;
    bo.n_threads = cfg.threads;
    auto cfgs = find_critical_configurations(k, cfg.spec, g, n_starts, bo);
    json rows = json::array();
    for (const BlowupConfiguration& c : cfgs) {
        json pts = json::array();
        for (const Vec3& p : c.points) pts.push_back({p.x, p.y, p.z});
        rows.push_back({{"points", pts},
                        {"f_value", c.f_value},
                        {"grad_norm", c.grad_norm},
                        {"tol_grad", bo.tol_grad},
                        {"index_estimate", c.index_estimate},
                        {"min_separation", c.min_separation},
                        {"start_index", c.start_index},
                        {"iterations", c.iterations},
                        {"n_hits", c.n_hits}});
    }
    json rep;
    rep["k"] = k;
    rep["n_starts"] = n_starts;
    rep["configurations"] = rows;
    detail_cli::emit(cfg, "blowup", rep);
    return 0;
}

inline int cmd_morse(const RunConfig& cfg) {
    SphereGrid g = build_grid(cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.l_max);
    MorseData md = morse_scan(cfg.spec, g, 1e-7);
    json pts = json::array();
    for (const CriticalPoint& cp : md.points)
        pts.push_back({{"location", {cp.location.x, cp.location.y, cp.location.z}},
                       {"morse_index", cp.morse_index},
                       {"grad_norm", cp.grad_norm},
                       {"tol_grad", 1e-7},
                       {"laplacian_h", cp.laplacian_h},
                       {"degenerate", cp.degenerate}});
    json rep;
    rep["critical_points"] = pts;
    rep["counts"] = {{"r", md.r}, {"s", md.s}, {"r_prime", md.r_prime},
                     {"s_prime", md.s_prime}};
    rep["degenerate"] = md.degenerate_flag;
    detail_cli::emit(cfg, "morse", rep);
    if (md.degenerate_flag) {
        std::fprintf(stderr, "singmt: degenerate Morse data\n");
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// entry
// ---------------------------------------------------------------------------

inline int run(const std::string& verb, const std::string& config_path,
               const std::string& out_override, unsigned seed_override, bool seed_given,
               int threads) {
    RunConfig cfg;
    try {
        std::ifstream f(config_path);
        if (!f) throw ConfigError("cannot open config " + config_path);
        json j = json::parse(f);
        cfg = parse_config(j);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "singmt: config error: %s\n", e.what());
        return 2;
    }
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_given) {
        cfg.seed = seed_override;
        cfg.resolved["seed"] = cfg.seed;
    }
    if (const char* env = std::getenv("SINGMT_THREADS"))
        threads = std::max(1, std::atoi(env));
    cfg.threads = std::max(1, threads);

    try {
        if (verb == "analyze") return cmd_analyze(cfg);
        if (verb == "solve") return cmd_solve(cfg);
        if (verb == "radial") return cmd_radial(cfg);
        if (verb == "onofri") return cmd_onofri(cfg);
        if (verb == "blowup") return cmd_blowup(cfg);
        if (verb == "morse") return cmd_morse(cfg);
        std::fprintf(stderr, "singmt: unknown command %s\n", verb.c_str());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "singmt: config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "singmt: config error: %s\n", e.what());
        return 2;
    } catch (const DegenerateMorseError& e) {
        std::fprintf(stderr, "singmt: %s\n", e.what());
        return 3;
    } catch (const MaxIterError& e) {
        std::fprintf(stderr, "singmt: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "singmt: error: %s\n", e.what());
        return 1;
    }
}

}  // namespace singmt::cli
