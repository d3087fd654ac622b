#pragma once

// The Moser-Trudinger functional
//   J_rho(u) = 1/2 int |grad u|^2 + (rho/4pi) int u - rho log( (1/4pi) int h e^u )
// with its Euler-Lagrange residual
//   R(u) = -Lap u - rho ( h e^u / int h e^u - 1/4pi ),
// the compact fixed-point map rho * InvLap(source), a preconditioned
// descent minimizer on the mean-zero space, the dilation test family and
// the Onofri/Troyanov gap probes.
//
// All exponentials go through a max-shifted log-sum-exp so fields up to
// the blow-up ceiling stay inside double range.

#include "singmt/potential.hpp"
#include "singmt/sphere_geometry.hpp"

#include <random>

namespace singmt {

struct NonIntegrableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MaxIterError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// log( (1/4pi) int h e^u ), max-shifted
inline double log_mean_h_exp(const ScalarField& u, const ScalarField& h) {
    double M = -std::numeric_limits<double>::infinity();
    for (double x : u.v) M = std::max(M, x);
    double s = 0;
    for (int i = 0; i < u.size(); ++i)
        s += u.grid->weight[i] * h.v[i] * std::exp(u.v[i] - M);
    if (!(s > 0)) throw NonIntegrableError("log_mean_h_exp: quadrature of h e^u is not positive");
    return M + std::log(s / FOUR_PI);
}

inline double evaluate_J(const ScalarField& u, double rho, const ScalarField& h) {
    SpectralCoeffs c = analysis(u);
    double dirichlet = gradient_energy(c);
    double mean_term = c.at(0, 0) * std::sqrt(FOUR_PI);  // int u = c00 * sqrt(4pi)
    return 0.5 * dirichlet + rho / FOUR_PI * mean_term - rho * log_mean_h_exp(u, h);
}

// normalized nonlinear source h e^u / int h e^u - 1/(4pi), max-shifted
inline ScalarField nonlinear_source(const ScalarField& u, const ScalarField& h) {
    double M = -std::numeric_limits<double>::infinity();
    for (double x : u.v) M = std::max(M, x);
    ScalarField src(*u.grid);
    double Z = 0;
    for (int i = 0; i < u.size(); ++i) {
        src.v[i] = h.v[i] * std::exp(u.v[i] - M);
        Z += u.grid->weight[i] * src.v[i];
    }
    if (!(Z > 0)) throw NonIntegrableError("nonlinear_source: quadrature of h e^u is not positive");
    for (int i = 0; i < u.size(); ++i) src.v[i] = src.v[i] / Z - 1.0 / FOUR_PI;
    return src;
}

inline ScalarField el_residual(const ScalarField& u, double rho, const ScalarField& h) {
    ScalarField lap = laplacian(u);
    ScalarField src = nonlinear_source(u, h);
    ScalarField r(*u.grid);
    for (int i = 0; i < u.size(); ++i) r.v[i] = -lap.v[i] - rho * src.v[i];
    return r;
}

// T(u) = rho * InvLap(source); fixed points of T(u) + u = 0 are exactly the
// zeros of el_residual
inline ScalarField fixed_point_map(const ScalarField& u, double rho, const ScalarField& h) {
    ScalarField src = nonlinear_source(u, h);
    ScalarField t = inverse_laplacian(src);
    for (double& x : t.v) x *= rho;
    return t;
}

// ---------------------------------------------------------------------------
// minimize
// ---------------------------------------------------------------------------

enum class SolveStatus { Converged, MaxIter, BlowupSuspected };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::MaxIter: return "MaxIter";
        case SolveStatus::BlowupSuspected: return "BlowupSuspected";
    }
    return "?";
}

struct SolverOptions {
    double step = 1.0;            // initial step for the preconditioned direction
    double backtrack = 0.5;       // Armijo backtracking factor
    double armijo_c1 = 1e-4;
    int max_iter = 20000;
    double tol_res = 1e-6;        // sup-norm of the EL residual
    bool project_mean_zero = true;
    double blowup_ceiling = 30.0; // max u beyond which blow-up is declared
    unsigned seed = 0;            // for noisy initialization
    double init_noise = 0.0;      // amplitude of seeded band-limited (l<=4) noise
    bool throw_on_max_iter = false;
    // When h and the initial guess are both axisymmetric about the grid
    // axis, the exact gradient flow stays axisymmetric; locking the descent
    // direction onto the m = 0 modes only removes floating-point noise that
    // would otherwise be amplified in the non-coercive regimes rho > 8pi.
    bool symmetry_lock = true;
};

struct SolveResult {
    ScalarField u;
    double rho = 0;
    double J = 0;
    double residual_sup = 0;
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
    double max_u = 0;
    Vec3 argmax_u;
};

inline void project_mean_zero(ScalarField& u) {
    double m = field_mean(u);
    for (double& x : u.v) x -= m;
}

// relative spectral mass in the m != 0 modes; ~1e-16 for axisymmetric fields
inline double nonaxial_fraction(const ScalarField& f) {
    SpectralCoeffs c = analysis(f);
    double axial = 0, rest = 0;
    for (int l = 0; l <= c.l_max; ++l)
        for (int m = -l; m <= l; ++m) {
            double v = c.at(l, m) * c.at(l, m);
            (m == 0 ? axial : rest) += v;
        }
    double tot = axial + rest;
    return tot > 0 ? rest / tot : 0.0;
}

// seeded band-limited (l <= 4) random field, deterministic for a fixed seed
inline ScalarField noise_field(const SphereGrid& g, unsigned seed, double amplitude) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SpectralCoeffs c(std::min(4, g.l_max));
    for (int l = 1; l <= c.l_max; ++l)
        for (int m = -l; m <= l; ++m) c.at(l, m) = amplitude * gauss(rng);
    return synthesis(c, g);
}

// Preconditioned projected gradient descent: the H^1 gradient is the
// solution g of -Lap g = R(u), so the descent direction is -InvLap-free:
// d = -g, realized spectrally.  Armijo line search keeps J monotone.
inline SolveResult minimize(double rho, const ScalarField& h, const ScalarField& init,
                            const SolverOptions& opts = {}) {
    if (!(rho > 0)) throw std::invalid_argument("minimize: rho must be positive");
    const SphereGrid& g = *h.grid;
    SolveResult res;
    res.rho = rho;
    res.u = init;
    if (opts.project_mean_zero) project_mean_zero(res.u);

    bool locked = opts.symmetry_lock && nonaxial_fraction(h) < 1e-22 &&
                  nonaxial_fraction(res.u) < 1e-22;

    double J = evaluate_J(res.u, rho, h);
    double step = opts.step;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        ScalarField r = el_residual(res.u, rho, h);
        res.residual_sup = sup_norm(r);
        if (res.residual_sup <= opts.tol_res) {
            res.status = SolveStatus::Converged;
            break;
        }
        // H^1 gradient and the corresponding slope <r, d>
        SpectralCoeffs rc = analysis(r);
        rc.at(0, 0) = 0;
        double slope = 0;
        SpectralCoeffs dc(rc.l_max);
        for (int l = 1; l <= rc.l_max; ++l)
            for (int m = -l; m <= l; ++m) {
                if (locked && m != 0) continue;
                double v = rc.at(l, m);
                dc.at(l, m) = -v / (double(l) * (l + 1));
                slope -= v * v / (double(l) * (l + 1));
            }
        ScalarField d = synthesis(dc, g);

        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            ScalarField trial = res.u;
            for (int i = 0; i < trial.size(); ++i) trial.v[i] += step * d.v[i];
            if (opts.project_mean_zero) project_mean_zero(trial);
            double Jt;
            try {
                Jt = evaluate_J(trial, rho, h);
            } catch (const NonIntegrableError&) {
                step *= opts.backtrack;
                continue;
            }
            if (Jt <= J + opts.armijo_c1 * step * slope) {
                res.u = std::move(trial);
                J = Jt;
                accepted = true;
                break;
            }
            step *= opts.backtrack;
        }
        if (!accepted) {
            // line search exhausted at machine precision
            res.status = SolveStatus::MaxIter;
            ++it;
            break;
        }
        step = std::min(step / opts.backtrack, 1e3);

        double mx = -std::numeric_limits<double>::infinity();
        for (double x : res.u.v) mx = std::max(mx, x);
        if (mx > opts.blowup_ceiling) {
            res.status = SolveStatus::BlowupSuspected;
            ScalarField r2 = el_residual(res.u, rho, h);
            res.residual_sup = sup_norm(r2);
            ++it;
            break;
        }
    }
    res.iterations = it;
    res.J = J;
    int amax = 0;
    for (int i = 1; i < res.u.size(); ++i)
        if (res.u.v[i] > res.u.v[amax]) amax = i;
    res.max_u = res.u.v[amax];
    res.argmax_u = g.points[amax];
    if (res.status == SolveStatus::MaxIter && opts.throw_on_max_iter)
        throw MaxIterError("minimize: no convergence within max_iter");
    return res;
}

// minimize with a default start plus seeded noisy restarts; best J wins
inline SolveResult minimize_multistart(double rho, const ScalarField& h, int n_starts,
                                       const SolverOptions& opts = {}) {
    SolveResult best;
    bool have = false;
    for (int k = 0; k < std::max(1, n_starts); ++k) {
        ScalarField init = k == 0 && opts.init_noise == 0.0
                               ? ScalarField(*h.grid, 0.0)
                               : noise_field(*h.grid, opts.seed + 1000003u * k,
                                             opts.init_noise == 0.0 ? 0.5 : opts.init_noise);
        SolveResult r = minimize(rho, h, init, opts);
        if (!have || r.J < best.J) {
            best = std::move(r);
            have = true;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// dilation family: u_t concentrating at the given point as t -> infinity,
//   u_t = 2 log( t (1+r^2) / (1 + t^2 r^2) ),   r = stereographic radius
// measured so that r = 0 at the concentration point; int e^{u_t} dv = 4pi
// for every t.
// ---------------------------------------------------------------------------

inline double dilation_value(double t, double r2) {
    return 2.0 * (std::log(t) + std::log1p(r2) - std::log1p(t * t * r2));
}

inline ScalarField dilation_family(double t, const Vec3& concentration_point,
                                   const SphereGrid& grid) {
    if (!(t > 0)) throw std::invalid_argument("dilation_family: t must be positive");
    ScalarField u(grid);
    for (int i = 0; i < grid.size(); ++i) {
        // r = 0 at the concentration point: chart with pole at the antipode
        double r2 = stereo_r2(grid.points[i], -concentration_point);
        u.v[i] = dilation_value(t, r2);
    }
    return u;
}

// ---------------------------------------------------------------------------
// Troyanov / Onofri gap probe:
//   gap = int |grad u|^2 / (16 pi (1+abar)) + C - log( (1/4pi) int h e^{u-ubar} )
// with abar = min{0, min_i alpha_i}; nonnegative for admissible C.
// ---------------------------------------------------------------------------

inline double troyanov_gap(const ScalarField& u, const ScalarField& h, const OrderVector& orders,
                           double C) {
    double abar = 0.0;
    for (double a : orders.alphas) abar = std::min(abar, a);
    SpectralCoeffs c = analysis(u);
    double dirichlet = gradient_energy(c);
    double ubar = c.at(0, 0) * std::sqrt(FOUR_PI) / FOUR_PI;
    return dirichlet / (16.0 * PI * (1.0 + abar)) + C - (log_mean_h_exp(u, h) - ubar);
}

}  // namespace singmt
