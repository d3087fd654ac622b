#pragma once

// Axially symmetric reduction.  A profile v(t) on a log-spaced grid in the
// stereographic radius t (measured from the singular point p2, so t = 0 at
// p1) carries the restriction of the functional to fields depending only on
// x.p1:
//   J(v) = pi int (dv/dsigma)^2 dsigma + 2 rho int v a(t) dsigma
//          - rho log( 2 int h e^v a(t) dsigma ),     a = t^2/(1+t^2)^2,
// with sigma = log t.  On this subspace the functional stays coercive up to
// 8pi(1+alpha_1), which is what makes the supercritical solves reachable.
// The 1-D minimizer is lifted to the sphere grid and polished by the full
// 2-D descent, so the returned residual is the genuine 2-D one.
//
// Also here: the alpha-stretch map v(t) -> v(t^{1/(1+alpha)}), the explicit
// one-parameter solution family for equal-order antipodal pairs, and the
// multiplicity probe comparing the full-space and radial minima.

#include "singmt/variational_solver.hpp"

namespace singmt {

// ---------------------------------------------------------------------------
// RadialProfile
// ---------------------------------------------------------------------------

struct RadialProfile {
    std::vector<double> t;  // log-spaced, uniform in sigma = log t
    std::vector<double> v;
    double sigma0 = 0, dsigma = 0;

    int size() const { return (int)t.size(); }

    // degree-7 local Lagrange interpolation in log t; constant tails
    double eval(double tq) const {
        int n = size();
        double sq = std::log(tq);
        if (sq <= sigma0) return v.front();
        double send = sigma0 + dsigma * (n - 1);
        if (sq >= send) return v.back();
        double x = (sq - sigma0) / dsigma;  // node units
        int i0 = (int)std::floor(x) - 3;
        i0 = std::max(0, std::min(i0, n - 8));
        double xi = x - i0;
        double out = 0;
        for (int j = 0; j < 8; ++j) {
            double lj = 1;
            for (int k = 0; k < 8; ++k)
                if (k != j) lj *= (xi - k) / double(j - k);
            out += lj * v[i0 + j];
        }
        return out;
    }
};

inline RadialProfile make_radial_grid(double t_min = 1e-4, double t_max = 1e4, int n = 2048) {
    if (!(t_min > 0 && t_max > t_min && n >= 16))
        throw std::invalid_argument("make_radial_grid: bad grid parameters");
    RadialProfile p;
    p.sigma0 = std::log(t_min);
    p.dsigma = (std::log(t_max) - p.sigma0) / (n - 1);
    p.t.resize(n);
    p.v.assign(n, 0.0);
    for (int i = 0; i < n; ++i) p.t[i] = std::exp(p.sigma0 + i * p.dsigma);
    return p;
}

template <class F>
inline RadialProfile profile_from_function(F&& f, double t_min = 1e-4, double t_max = 1e4,
                                           int n = 2048) {
    RadialProfile p = make_radial_grid(t_min, t_max, n);
    for (int i = 0; i < n; ++i) p.v[i] = f(p.t[i]);
    return p;
}

// v_alpha(s) = v(s^{1/(1+alpha)}): a pure dilation sigma -> sigma/(1+alpha)
// of the log grid, realized by interpolation on the same nodes.
inline RadialProfile alpha_stretch(const RadialProfile& p, double alpha) {
    if (!(alpha > -1.0)) throw std::invalid_argument("alpha_stretch: alpha must exceed -1");
    RadialProfile out = p;
    for (int i = 0; i < p.size(); ++i)
        out.v[i] = p.eval(std::pow(p.t[i], 1.0 / (1.0 + alpha)));
    return out;
}

// point on the meridian through p1 at stereographic radius t from -p1
inline Vec3 meridian_point(const Vec3& p1, double t) {
    double c = (1.0 - t * t) / (1.0 + t * t);
    double s = 2.0 * t / (1.0 + t * t);
    Vec3 e1, e2;
    tangent_frame(p1, e1, e2);
    return sphere_point(c * p1.x + s * e1.x, c * p1.y + s * e1.y, c * p1.z + s * e1.z);
}

// lift: u(x) = v(t(x)), t^2 = (1 + x.p2)/(1 - x.p2) with p2 = -p1
inline ScalarField lift_profile(const RadialProfile& p, const Vec3& p1, const SphereGrid& g) {
    ScalarField u(g);
    for (int i = 0; i < g.size(); ++i) {
        double t2 = stereo_r2(g.points[i], Vec3{-p1.x, -p1.y, -p1.z});
        u.v[i] = p.eval(std::sqrt(t2));
    }
    return u;
}

// 4th-order centered derivative in sigma (one-sided at the ends)
inline std::vector<double> dv_dsigma(const RadialProfile& p) {
    int n = p.size();
    std::vector<double> d(n);
    double h = p.dsigma;
    for (int i = 0; i < n; ++i) {
        if (i >= 2 && i < n - 2)
            d[i] = (-p.v[i + 2] + 8 * p.v[i + 1] - 8 * p.v[i - 1] + p.v[i - 2]) / (12 * h);
        else if (i == 0)
            d[i] = (-25 * p.v[0] + 48 * p.v[1] - 36 * p.v[2] + 16 * p.v[3] - 3 * p.v[4]) / (12 * h);
        else if (i == 1)
            d[i] = (-3 * p.v[0] - 10 * p.v[1] + 18 * p.v[2] - 6 * p.v[3] + p.v[4]) / (12 * h);
        else if (i == n - 1)
            d[i] = (25 * p.v[n - 1] - 48 * p.v[n - 2] + 36 * p.v[n - 3] - 16 * p.v[n - 4] +
                    3 * p.v[n - 5]) /
                   (12 * h);
        else
            d[i] = (3 * p.v[n - 1] + 10 * p.v[n - 2] - 18 * p.v[n - 3] + 6 * p.v[n - 4] -
                    p.v[n - 5]) /
                   (12 * h);
    }
    return d;
}

// 2 pi int t |v'(t)|^2 dt = 2 pi int (dv/dsigma)^2 dsigma, trapezoid in sigma
inline double dirichlet_radial(const RadialProfile& p) {
    std::vector<double> d = dv_dsigma(p);
    int n = p.size();
    double s = 0;
    for (int i = 0; i < n; ++i) {
        double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        s += w * d[i] * d[i];
    }
    return 2.0 * PI * s * p.dsigma;
}

// (1/4pi) int u dv for the lifted field: 2 int v a dsigma
inline double mean_radial(const RadialProfile& p) {
    int n = p.size();
    double s = 0;
    for (int i = 0; i < n; ++i) {
        double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        double t2 = p.t[i] * p.t[i];
        s += w * p.v[i] * t2 / ((1 + t2) * (1 + t2));
    }
    return 2.0 * s * p.dsigma;
}

// ---------------------------------------------------------------------------
// RadialFunctional
// ---------------------------------------------------------------------------

struct RadialFunctional {
    double rho = 0;
    std::vector<double> t;  // shares the profile grid
    std::vector<double> a;  // quadrature weight w_i t^2/(1+t^2)^2
    std::vector<double> h;  // radial h values along the meridian
    double dsigma = 0;

    // high-order value used for reporting and the cross-module consistency
    // check against evaluate_J of the lifted field
    double value(const RadialProfile& p) const {
        double dir = dirichlet_radial(p);
        double lin = 0, M = -std::numeric_limits<double>::infinity();
        int n = (int)t.size();
        for (int i = 0; i < n; ++i) {
            lin += a[i] * p.v[i];
            M = std::max(M, p.v[i]);
        }
        double Z = 0;
        for (int i = 0; i < n; ++i) Z += a[i] * h[i] * std::exp(p.v[i] - M);
        if (!(Z > 0)) throw NonIntegrableError("RadialFunctional: h e^v quadrature not positive");
        return 0.5 * dir + 2.0 * rho * lin - rho * (M + std::log(2.0 * Z));
    }

    // second-order discrete form whose exact gradient drives the descent
    double value_discrete(const std::vector<double>& v) const {
        int n = (int)t.size();
        double dir = 0;
        for (int i = 0; i + 1 < n; ++i) {
            double dv = v[i + 1] - v[i];
            dir += dv * dv;
        }
        dir *= PI / dsigma;
        double lin = 0, M = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            lin += a[i] * v[i];
            M = std::max(M, v[i]);
        }
        double Z = 0;
        for (int i = 0; i < n; ++i) Z += a[i] * h[i] * std::exp(v[i] - M);
        if (!(Z > 0)) throw NonIntegrableError("RadialFunctional: h e^v quadrature not positive");
        return dir + 2.0 * rho * lin - rho * (M + std::log(2.0 * Z));
    }

    void gradient(const std::vector<double>& v, std::vector<double>& g) const {
        int n = (int)t.size();
        g.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double lap = 0;
            if (i > 0) lap += v[i] - v[i - 1];
            if (i + 1 < n) lap += v[i] - v[i + 1];
            g[i] = 2.0 * PI / dsigma * lap + 2.0 * rho * a[i];
        }
        double M = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) M = std::max(M, v[i]);
        double Z = 0;
        std::vector<double> he(n);
        for (int i = 0; i < n; ++i) {
            he[i] = a[i] * h[i] * std::exp(v[i] - M);
            Z += he[i];
        }
        for (int i = 0; i < n; ++i) g[i] -= rho * he[i] / Z;
    }
};

inline RadialFunctional build_radial_functional(double rho, const PotentialSpec& spec,
                                                const Vec3& axis_p1, const RadialProfile& grid) {
    RadialFunctional F;
    F.rho = rho;
    F.t = grid.t;
    F.dsigma = grid.dsigma;
    int n = grid.size();
    F.a.resize(n);
    F.h.resize(n);
    for (int i = 0; i < n; ++i) {
        double t2 = grid.t[i] * grid.t[i];
        double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        F.a[i] = w * grid.dsigma * t2 / ((1 + t2) * (1 + t2));
        F.h[i] = h_value(spec, meridian_point(axis_p1, grid.t[i]));
    }
    return F;
}

// ---------------------------------------------------------------------------
// minimize_radial
// ---------------------------------------------------------------------------

struct RadialSolverOptions {
    int max_iter_1d = 30000;
    double tol_grad_1d = 1e-11;  // sup-norm of the discrete 1-D gradient
    double t_min = 1e-4, t_max = 1e4;
    int n_nodes = 2048;
    SolverOptions polish;  // options for the 2-D polish (tol_res is the contract)
    const RadialProfile* init = nullptr;  // optional warm start
};

struct RadialSolveResult {
    SolveResult result;     // lifted and polished 2-D solve
    RadialProfile profile;  // 1-D minimizer before polishing
    double J_radial_1d = 0;
    int iterations_1d = 0;
};

namespace detail {

// Thomas solve of the tridiagonal preconditioner (2 pi S + I) d = r, where S
// is the discrete stiffness of the 1-D Dirichlet form
inline void precondition_solve(int n, double dsigma, std::vector<double>& r) {
    double k = 2.0 * PI / dsigma;
    std::vector<double> diag(n), upper(n - 1, -k);
    for (int i = 0; i < n; ++i) {
        double deg = (i == 0 || i == n - 1) ? 1.0 : 2.0;
        diag[i] = 1.0 + k * deg;
    }
    // forward sweep (symmetric: lower = upper)
    for (int i = 1; i < n; ++i) {
        double m = -k / diag[i - 1];
        diag[i] -= m * -k;
        r[i] -= m * r[i - 1];
    }
    r[n - 1] /= diag[n - 1];
    for (int i = n - 2; i >= 0; --i) r[i] = (r[i] - upper[i] * r[i + 1]) / diag[i];
}

}  // namespace detail

inline RadialSolveResult minimize_radial(double rho, const PotentialSpec& spec,
                                         const SphereGrid& grid,
                                         const RadialSolverOptions& opts = {}) {
    const SingularityConfig& sc = spec.singularities;
    if (sc.m() != 2 || !sc.antipodal_pair())
        throw std::invalid_argument("minimize_radial: needs an antipodal singular pair");
    if (!sc.all_pos())
        throw std::invalid_argument("minimize_radial: needs positive orders");
    int i1 = sc.items[0].alpha <= sc.items[1].alpha ? 0 : 1;
    const Vec3 p1 = sc.items[i1].point;
    double alpha1 = sc.items[i1].alpha;
    if (!(rho > 0 && rho < 8.0 * PI * (1.0 + alpha1)))
        throw std::invalid_argument("minimize_radial: rho outside the radial coercivity range");
    if (!spec.K.is_axisymmetric(p1))
        throw std::invalid_argument("minimize_radial: K must be axisymmetric about the pair axis");

    RadialProfile p = make_radial_grid(opts.t_min, opts.t_max, opts.n_nodes);
    if (opts.init) {
        for (int i = 0; i < p.size(); ++i) p.v[i] = opts.init->eval(p.t[i]);
    }
    RadialFunctional F = build_radial_functional(rho, spec, p1, p);
    double a_sum = 0;
    for (double x : F.a) a_sum += x;

    std::vector<double> g, d;
    double J = F.value_discrete(p.v);
    double step = 1.0;
    int it = 0;
    for (; it < opts.max_iter_1d; ++it) {
        F.gradient(p.v, g);
        double gsup = 0;
        for (double x : g) gsup = std::max(gsup, std::abs(x));
        if (gsup <= opts.tol_grad_1d) break;
        d = g;
        detail::precondition_solve(p.size(), p.dsigma, d);
        double slope = 0;
        for (int i = 0; i < p.size(); ++i) {
            d[i] = -d[i];
            slope += g[i] * d[i];
        }
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            std::vector<double> trial = p.v;
            for (int i = 0; i < p.size(); ++i) trial[i] += step * d[i];
            double Jt;
            try {
                Jt = F.value_discrete(trial);
            } catch (const NonIntegrableError&) {
                step *= 0.5;
                continue;
            }
            if (Jt <= J + 1e-4 * step * slope) {
                p.v = std::move(trial);
                J = Jt;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        step = std::min(step * 2.0, 1e3);
        // gauge: the functional is invariant under constants up to quadrature
        // error, so pin the weighted mean
        double mean = 0;
        for (int i = 0; i < p.size(); ++i) mean += F.a[i] * p.v[i];
        mean /= a_sum;
        for (double& x : p.v) x -= mean;
    }

    RadialSolveResult out;
    out.profile = p;
    out.J_radial_1d = F.value(p);
    out.iterations_1d = it;

    ScalarField lifted = lift_profile(p, p1, grid);
    ScalarField h = build_h(spec, grid);
    out.result = minimize(rho, h, lifted, opts.polish);
    return out;
}

// ---------------------------------------------------------------------------
// explicit solution family for the equal-order antipodal pair:
//   u(pi^{-1}(y)) = 2 log( (1+|y|^2)^{1+alpha} / (1 + e^lambda |y|^{2(1+alpha)}) ) + c
// ---------------------------------------------------------------------------

inline double explicit_family_value(double lambda, double c, double alpha, double t2) {
    double A = (1.0 + alpha) * std::log1p(t2);
    double B;
    if (t2 <= 1.0)
        B = std::log1p(std::exp(lambda) * std::pow(t2, 1.0 + alpha));
    else
        B = lambda + (1.0 + alpha) * std::log(t2) +
            std::log1p(std::exp(-lambda) * std::pow(t2, -(1.0 + alpha)));
    return 2.0 * (A - B) + c;
}

inline ScalarField explicit_family(double lambda, double c, double alpha, const Vec3& p1,
                                   const SphereGrid& grid) {
    if (!(alpha > -1.0)) throw std::invalid_argument("explicit_family: alpha must exceed -1");
    ScalarField u(grid);
    for (int i = 0; i < grid.size(); ++i) {
        double t2 = stereo_r2(grid.points[i], Vec3{-p1.x, -p1.y, -p1.z});
        u.v[i] = explicit_family_value(lambda, c, alpha, t2);
    }
    return u;
}

inline RadialProfile explicit_profile(double lambda, double c, double alpha, double t_min = 1e-4,
                                      double t_max = 1e4, int n = 2048) {
    return profile_from_function(
        [&](double t) { return explicit_family_value(lambda, c, alpha, t * t); }, t_min, t_max,
        n);
}

// ---------------------------------------------------------------------------
// multiplicity probe: full-space multi-start minimum vs the radial minimum
// ---------------------------------------------------------------------------

struct MultiplicityReport {
    SolveResult full;
    RadialSolveResult radial;
    double J_full = 0;
    double J_radial = 0;
    double asymmetry = 0;  // l2 norm of the non-axisymmetric spectral part
    bool two_solutions = false;
};

struct MultiplicityOptions {
    int n_starts = 4;
    double asymmetry_threshold = 0.05;
    double J_margin = 1e-8;
    SolverOptions full_opts;
    RadialSolverOptions radial_opts;
};

inline double asymmetry_norm(const ScalarField& u) {
    SpectralCoeffs c = analysis(u);
    double rest = 0;
    for (int l = 1; l <= c.l_max; ++l)
        for (int m = -l; m <= l; ++m)
            if (m != 0) rest += c.at(l, m) * c.at(l, m);
    return std::sqrt(rest);
}

inline MultiplicityReport multiplicity_probe(double rho, const PotentialSpec& spec,
                                             const SphereGrid& grid,
                                             const MultiplicityOptions& opts = {}) {
    MultiplicityReport rep;
    ScalarField h = build_h(spec, grid);
    SolverOptions fo = opts.full_opts;
    if (fo.init_noise == 0.0) fo.init_noise = 0.5;
    rep.full = minimize_multistart(rho, h, opts.n_starts, fo);
    rep.radial = minimize_radial(rho, spec, grid, opts.radial_opts);
    rep.J_full = rep.full.J;
    rep.J_radial = rep.radial.result.J;
    rep.asymmetry = asymmetry_norm(rep.full.u);
    rep.two_solutions = rep.J_full < rep.J_radial - opts.J_margin &&
                        rep.asymmetry > opts.asymmetry_threshold;
    return rep;
}

// ---------------------------------------------------------------------------
// profile CSV
// ---------------------------------------------------------------------------

inline void dump_profile_csv(const RadialProfile& p, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("dump_profile_csv: cannot open " + path);
    std::fprintf(f, "t,value\n");
    for (int i = 0; i < p.size(); ++i) std::fprintf(f, "%.17g,%.17g\n", p.t[i], p.v[i]);
    std::fclose(f);
}

inline RadialProfile load_profile_csv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "r");
    if (!f) throw std::runtime_error("load_profile_csv: cannot open " + path);
    char line[256];
    if (!std::fgets(line, sizeof line, f) || std::string(line).rfind("t,value", 0) != 0) {
        std::fclose(f);
        throw std::runtime_error("load_profile_csv: bad header in " + path);
    }
    RadialProfile p;
    while (std::fgets(line, sizeof line, f)) {
        char* end = nullptr;
        double tv = std::strtod(line, &end);
        if (end == line || *end != ',') break;
        double vv = std::strtod(end + 1, nullptr);
        p.t.push_back(tv);
        p.v.push_back(vv);
    }
    std::fclose(f);
    if (p.size() < 2) throw std::runtime_error("load_profile_csv: too few rows in " + path);
    p.sigma0 = std::log(p.t.front());
    p.dsigma = (std::log(p.t.back()) - p.sigma0) / (p.size() - 1);
    return p;
}

}  // namespace singmt
