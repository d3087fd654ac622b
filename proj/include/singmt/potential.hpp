#pragma once

// Assembly of the singular potential
//   h(x) = K(x) * exp(-4 pi * sum_i alpha_i G(x, p_i))
//        = K(x) * prod_i [ (1 - x.p_i) e^(1 - log 2) ]^alpha_i
// together with the differential data extracted from it: critical points,
// Morse indices, Laplacian signs and the Laplacian conditions appearing in
// the existence checks at rho = 8 k pi.
//
// K is restricted to a small analytic whitelist (constants, finite real
// spherical-harmonic sums, exponentials and affine combinations thereof),
// so h is evaluable in closed form at arbitrary points and all derivative
// data comes from central finite differences in gnomonic tangent charts.

#include "singmt/series_degree.hpp"
#include "singmt/sphere_geometry.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace singmt {

// ---------------------------------------------------------------------------
// SingularityConfig
// ---------------------------------------------------------------------------

struct Singularity {
    Vec3 point;
    double alpha;  // > -1
};

struct SingularityConfig {
    std::vector<Singularity> items;

    SingularityConfig() = default;
    explicit SingularityConfig(std::vector<Singularity> s) : items(std::move(s)) {
        for (auto& it : items) {
            it.point = sphere_point(it.point.x, it.point.y, it.point.z);
            if (!(it.alpha > -1.0))
                throw std::invalid_argument("SingularityConfig: alpha must exceed -1");
        }
        for (size_t i = 0; i < items.size(); ++i)
            for (size_t j = i + 1; j < items.size(); ++j)
                if (geodesic_distance(items[i].point, items[j].point) < 1e-10)
                    throw std::invalid_argument("SingularityConfig: coincident singular points");
    }

    int m() const { return (int)items.size(); }
    bool all_nonneg() const {
        for (auto& it : items)
            if (it.alpha < 0) return false;
        return true;
    }
    bool all_pos() const {
        for (auto& it : items)
            if (!(it.alpha > 0)) return false;
        return true;
    }
    bool antipodal_pair() const {
        return m() == 2 && (items[0].point + items[1].point).norm() < 1e-10;
    }
    double alpha_sum() const {
        double s = 0;
        for (auto& it : items) s += it.alpha;
        return s;
    }
    double alpha_min() const {
        double s = std::numeric_limits<double>::infinity();
        for (auto& it : items) s = std::min(s, it.alpha);
        return items.empty() ? 0.0 : s;
    }
    OrderVector orders() const {
        std::vector<double> a;
        for (auto& it : items) a.push_back(it.alpha);
        return OrderVector(a);
    }
};

// ---------------------------------------------------------------------------
// KSpec: whitelisted analytic expressions for the smooth factor
// ---------------------------------------------------------------------------

struct KSpec {
    enum class Kind { Constant, HarmonicSum, Exponential, Affine };

    struct HarmTerm {
        int l;
        int m;  // real basis, m>0 cosine, m<0 sine
        double coeff;
    };

    Kind kind = Kind::Constant;
    double constant = 1.0;                       // Constant; also offset of HarmonicSum/Affine
    std::vector<HarmTerm> harmonics;             // HarmonicSum
    std::shared_ptr<const KSpec> inner;          // Exponential: exp(inner)
    std::vector<std::pair<double, std::shared_ptr<const KSpec>>> parts;  // Affine

    static KSpec one() { return constant_of(1.0); }

    static KSpec constant_of(double c) {
        KSpec k;
        k.kind = Kind::Constant;
        k.constant = c;
        return k;
    }

    static KSpec harmonic(double offset, std::vector<HarmTerm> terms) {
        KSpec k;
        k.kind = Kind::HarmonicSum;
        k.constant = offset;
        k.harmonics = std::move(terms);
        return k;
    }

    static KSpec exponential(KSpec arg) {
        KSpec k;
        k.kind = Kind::Exponential;
        k.inner = std::make_shared<KSpec>(std::move(arg));
        return k;
    }

    static KSpec affine(double offset, std::vector<std::pair<double, KSpec>> terms) {
        KSpec k;
        k.kind = Kind::Affine;
        k.constant = offset;
        for (auto& [c, sub] : terms) k.parts.emplace_back(c, std::make_shared<KSpec>(sub));
        return k;
    }

    double eval(const Vec3& x) const {
        switch (kind) {
            case Kind::Constant:
                return constant;
            case Kind::HarmonicSum: {
                double s = constant;
                for (auto& t : harmonics) s += t.coeff * real_sph_harm(t.l, t.m, x);
                return s;
            }
            case Kind::Exponential:
                return std::exp(inner->eval(x));
            case Kind::Affine: {
                double s = constant;
                for (auto& [c, sub] : parts) s += c * sub->eval(x);
                return s;
            }
        }
        return 0;
    }

    bool is_constant() const {
        switch (kind) {
            case Kind::Constant: return true;
            case Kind::HarmonicSum: return harmonics.empty();
            case Kind::Exponential: return inner->is_constant();
            case Kind::Affine:
                for (auto& [c, sub] : parts)
                    if (c != 0 && !sub->is_constant()) return false;
                return true;
        }
        return false;
    }

    // numeric axisymmetry test w.r.t. the given axis
    bool is_axisymmetric(const Vec3& axis, double tol = 1e-10) const {
        Vec3 e1, e2;
        tangent_frame(axis, e1, e2);
        for (double mu : {-0.83, -0.31, 0.17, 0.62, 0.94}) {
            double st = std::sqrt(1.0 - mu * mu);
            double ref = eval(axis * mu + e1 * st);
            for (double ph : {0.7, 1.9, 3.4, 5.1}) {
                Vec3 x = axis * mu + e1 * (st * std::cos(ph)) + e2 * (st * std::sin(ph));
                if (std::abs(eval(x) - ref) > tol * (1.0 + std::abs(ref))) return false;
            }
        }
        return true;
    }
};

struct PotentialSpec {
    KSpec K;
    SingularityConfig singularities;
};

struct NonPositiveKError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// log h in closed form; log-singular (-> -inf) at the p_i when alpha_i > 0
inline double log_h(const PotentialSpec& spec, const Vec3& x) {
    double K = spec.K.eval(x);
    if (!(K > 0)) throw NonPositiveKError("potential: K <= 0 at evaluation point");
    double s = std::log(K);
    const double c = 1.0 - std::log(2.0);
    for (auto& sing : spec.singularities.items) {
        double t = 1.0 - x.dot(sing.point);
        if (t < 1e-300) t = 1e-300;
        s += sing.alpha * (std::log(t) + c);
    }
    return s;
}

inline double h_value(const PotentialSpec& spec, const Vec3& x) {
    return std::exp(log_h(spec, x));
}

inline ScalarField build_h(const PotentialSpec& spec, const SphereGrid& grid) {
    ScalarField h(grid);
    for (int i = 0; i < grid.size(); ++i) {
        double K = spec.K.eval(grid.points[i]);
        if (!(K > 0)) throw NonPositiveKError("build_h: K <= 0 at a grid node");
        h[i] = std::exp(log_h(spec, grid.points[i]));
    }
    return h;
}

// ---------------------------------------------------------------------------
// finite-difference derivative data in the gnomonic tangent chart at x
// ---------------------------------------------------------------------------

namespace detail {

inline Vec3 chart_point(const Vec3& x, const Vec3& e1, const Vec3& e2, double a, double b) {
    return (x + e1 * a + e2 * b).normalized();
}

struct Derivatives2 {
    double f = 0;
    double g1 = 0, g2 = 0;        // gradient
    double h11 = 0, h12 = 0, h22 = 0;  // Hessian
};

inline Derivatives2 fd_derivatives(const std::function<double(const Vec3&)>& f, const Vec3& x,
                                   double scale) {
    Vec3 e1, e2;
    tangent_frame(x, e1, e2);
    Derivatives2 d;
    double fpp = f(chart_point(x, e1, e2, scale, scale));
    double fpm = f(chart_point(x, e1, e2, scale, -scale));
    double fmp = f(chart_point(x, e1, e2, -scale, scale));
    double fmm = f(chart_point(x, e1, e2, -scale, -scale));
    double fp0 = f(chart_point(x, e1, e2, scale, 0));
    double fm0 = f(chart_point(x, e1, e2, -scale, 0));
    double f0p = f(chart_point(x, e1, e2, 0, scale));
    double f0m = f(chart_point(x, e1, e2, 0, -scale));
    d.f = f(x);
    d.g1 = (fp0 - fm0) / (2 * scale);
    d.g2 = (f0p - f0m) / (2 * scale);
    d.h11 = (fp0 - 2 * d.f + fm0) / (scale * scale);
    d.h22 = (f0p - 2 * d.f + f0m) / (scale * scale);
    d.h12 = (fpp - fpm - fmp + fmm) / (4 * scale * scale);
    return d;
}

// Laplace-Beltrami value at x by the same stencil (gnomonic chart is normal
// to second order, so trace of the chart Hessian suffices at FD accuracy)
inline double fd_laplacian(const std::function<double(const Vec3&)>& f, const Vec3& x,
                           double scale = 1e-4) {
    auto d = fd_derivatives(f, x, scale);
    return d.h11 + d.h22;
}

inline void eigs_sym2(double a, double b, double c, double& lo, double& hi) {
    // eigenvalues of [[a,b],[b,c]]
    double tr = a + c, disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4 * b * b));
    lo = (tr - disc) / 2;
    hi = (tr + disc) / 2;
}

}  // namespace detail

inline double laplacian_log_h_at(const PotentialSpec& spec, const Vec3& x, double scale = 1e-4) {
    return detail::fd_laplacian([&](const Vec3& y) { return log_h(spec, y); }, x, scale);
}

inline double laplacian_log_K_at(const PotentialSpec& spec, const Vec3& x, double scale = 1e-4) {
    return detail::fd_laplacian([&](const Vec3& y) { return std::log(spec.K.eval(y)); }, x, scale);
}

// ---------------------------------------------------------------------------
// morse_scan
// ---------------------------------------------------------------------------

struct CriticalPoint {
    Vec3 location;
    int morse_index = 0;     // negative Hessian eigenvalues of log h: 0 min, 1 saddle, 2 max
    double grad_norm = 0;
    double hess_eig_lo = 0, hess_eig_hi = 0;
    double laplacian_h = 0;  // Delta_{g0} h at the point
    bool degenerate = false;
};

struct MorseData {
    std::vector<CriticalPoint> points;
    long long r = 0;        // local maxima
    long long s = 0;        // saddles with Delta h < 0
    long long r_prime = 0;  // local minima
    long long s_prime = 0;  // saddles with Delta h > 0
    bool degenerate_flag = false;
};

struct MorseOptions {
    double tol_grad = 1e-7;
    double exclusion_radius = 0.05;  // around each singular point
    double fd_scale = 1e-4;
    double eig_tol = 1e-6;
    double lap_tol = 1e-8;
    double cluster_radius = 1e-4;
    int max_newton_iter = 200;
};

struct DegenerateMorseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Multi-start damped-Newton search for critical points of log h from every
// grid node, clustered and classified by the FD Hessian.  Results are
// merged in sorted location order, so the scan is deterministic.
inline MorseData morse_scan(const PotentialSpec& spec, const SphereGrid& grid,
                            double tol_grad = 1e-7, MorseOptions opts = {}) {
    if (!spec.singularities.all_pos() && spec.singularities.m() > 0)
        throw std::invalid_argument("morse_scan: requires all alpha_i > 0");
    opts.tol_grad = tol_grad;
    auto f = [&](const Vec3& y) { return log_h(spec, y); };

    auto too_close = [&](const Vec3& x) {
        for (auto& s : spec.singularities.items)
            if (geodesic_distance(x, s.point) < opts.exclusion_radius) return true;
        return false;
    };

    std::vector<CriticalPoint> found;
    for (const Vec3& start : grid.points) {
        if (too_close(start)) continue;
        Vec3 x = start;
        bool converged = false;
        detail::Derivatives2 d;
        for (int it = 0; it < opts.max_newton_iter; ++it) {
            d = detail::fd_derivatives(f, x, opts.fd_scale);
            double gn = std::hypot(d.g1, d.g2);
            if (gn < opts.tol_grad) {
                converged = true;
                break;
            }
            // Levenberg-damped Newton step on the 2x2 chart system
            double mu = 0.0;
            Vec3 e1, e2;
            tangent_frame(x, e1, e2);
            Vec3 next = x;
            for (int tries = 0; tries < 12; ++tries) {
                double a = d.h11 + mu, b = d.h12, c = d.h22 + mu;
                double det = a * c - b * b;
                double s1, s2;
                if (std::abs(det) > 1e-14 * (std::abs(a * c) + b * b + 1e-30)) {
                    s1 = -(c * d.g1 - b * d.g2) / det;
                    s2 = -(a * d.g2 - b * d.g1) / det;
                } else {
                    s1 = -d.g1;
                    s2 = -d.g2;
                }
                double sn = std::hypot(s1, s2);
                if (sn > 0.2) {
                    s1 *= 0.2 / sn;
                    s2 *= 0.2 / sn;
                }
                Vec3 cand = detail::chart_point(x, e1, e2, s1, s2);
                if (too_close(cand)) {
                    mu = mu == 0 ? 1.0 : mu * 10;
                    continue;
                }
                auto dc = detail::fd_derivatives(f, cand, opts.fd_scale);
                if (std::hypot(dc.g1, dc.g2) < gn) {
                    next = cand;
                    break;
                }
                mu = mu == 0 ? std::max(1e-3, std::abs(d.h11) + std::abs(d.h22)) : mu * 10;
            }
            if ((next - x).norm() < 1e-15) break;  // stalled
            x = next;
        }
        if (!converged || too_close(x)) continue;

        CriticalPoint cp;
        cp.location = x;
        cp.grad_norm = std::hypot(d.g1, d.g2);
        detail::eigs_sym2(d.h11, d.h12, d.h22, cp.hess_eig_lo, cp.hess_eig_hi);
        cp.morse_index = (cp.hess_eig_lo < 0) + (cp.hess_eig_hi < 0);
        cp.laplacian_h = detail::fd_laplacian([&](const Vec3& y) { return h_value(spec, y); }, x,
                                              opts.fd_scale);
        cp.degenerate = std::min(std::abs(cp.hess_eig_lo), std::abs(cp.hess_eig_hi)) < opts.eig_tol ||
                        std::abs(cp.laplacian_h) < opts.lap_tol;
        found.push_back(cp);
    }

    // cluster by location, keep the representative with the smallest gradient
    std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.location.z != b.location.z) return a.location.z < b.location.z;
        if (a.location.y != b.location.y) return a.location.y < b.location.y;
        return a.location.x < b.location.x;
    });
    MorseData md;
    for (const CriticalPoint& cp : found) {
        bool merged = false;
        for (CriticalPoint& rep : md.points)
            if (geodesic_distance(rep.location, cp.location) < opts.cluster_radius) {
                if (cp.grad_norm < rep.grad_norm) rep = cp;
                merged = true;
                break;
            }
        if (!merged) md.points.push_back(cp);
    }

    for (const CriticalPoint& cp : md.points) {
        if (cp.degenerate) md.degenerate_flag = true;
        if (cp.morse_index == 2)
            md.r++;
        else if (cp.morse_index == 0)
            md.r_prime++;
        else if (cp.laplacian_h < 0)
            md.s++;
        else
            md.s_prime++;
    }
    // a flat potential converges everywhere without isolated critical points
    if (md.points.empty() && !found.empty()) md.degenerate_flag = true;
    if (md.points.size() > 64) md.degenerate_flag = true;  // continuum of critical points
    return md;
}

// ---------------------------------------------------------------------------
// Laplacian conditions for solutions at rho = 8 pi and rho = 8 k pi
// ---------------------------------------------------------------------------

enum class CondStatus { SolutionAt8Pi, SolutionAt8kPi, ConditionFails };

struct CondReport {
    CondStatus status;
    bool holds = false;
    double worst_lhs = 0;  // largest Delta log K encountered
    double bound = 0;      // right-hand side
    std::optional<Vec3> witness;  // point violating the condition
};

// Delta log K < sum alpha_i at every critical point of h
inline CondReport check_cond_teo3(const PotentialSpec& spec, const SphereGrid& grid,
                                  const MorseOptions& opts = {}) {
    if (spec.singularities.m() < 2 || !spec.singularities.all_pos())
        throw std::invalid_argument("check_cond_teo3: requires m >= 2 and all alpha_i > 0");
    MorseData md = morse_scan(spec, grid, opts.tol_grad, opts);
    if (md.degenerate_flag)
        throw DegenerateMorseError("check_cond_teo3: degenerate critical-point data");
    CondReport rep;
    rep.bound = spec.singularities.alpha_sum();
    rep.holds = true;
    rep.worst_lhs = -std::numeric_limits<double>::infinity();
    for (const CriticalPoint& cp : md.points) {
        double lhs = laplacian_log_K_at(spec, cp.location, opts.fd_scale);
        if (lhs > rep.worst_lhs) rep.worst_lhs = lhs;
        if (!(lhs < rep.bound)) {
            rep.holds = false;
            rep.witness = cp.location;
        }
    }
    rep.status = rep.holds ? CondStatus::SolutionAt8Pi : CondStatus::ConditionFails;
    return rep;
}

// Delta log K < sum alpha_i + 2(1-k) at every grid node
inline CondReport check_cond_teo31(const PotentialSpec& spec, double k, const SphereGrid& grid,
                                   const MorseOptions& opts = {}) {
    if (spec.singularities.m() < 2 || !spec.singularities.all_pos())
        throw std::invalid_argument("check_cond_teo31: requires m >= 2 and all alpha_i > 0");
    if (!(k < 1.0 + spec.singularities.alpha_min()))
        throw std::invalid_argument("check_cond_teo31: requires k < 1 + alpha_1");
    CondReport rep;
    rep.bound = spec.singularities.alpha_sum() + 2.0 * (1.0 - k);
    rep.holds = true;
    rep.worst_lhs = -std::numeric_limits<double>::infinity();
    for (const Vec3& x : grid.points) {
        double lhs = laplacian_log_K_at(spec, x, opts.fd_scale);
        if (lhs > rep.worst_lhs) rep.worst_lhs = lhs;
        if (!(lhs < rep.bound)) {
            rep.holds = false;
            rep.witness = x;
            break;
        }
    }
    rep.status = rep.holds ? CondStatus::SolutionAt8kPi : CondStatus::ConditionFails;
    return rep;
}

}  // namespace singmt
