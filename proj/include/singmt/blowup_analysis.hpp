#pragma once

// Concentration-side machinery: the location functional
//   f_h(x_1,...,x_k) = sum_j ( log h(x_j) + sum_{l != j} G(x_l, x_j) ),
// whose critical points are the admissible blow-up configurations, the
// leading term of the rate rho_n - 8 k pi, and the bounded-vs-blowup
// classification of solver output sequences with the quantized cluster
// masses 8 pi (regular points) and 8 pi (1 + alpha_j) (singular points).

#include "singmt/variational_solver.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace singmt {

struct CollisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// location functional
// ---------------------------------------------------------------------------

inline constexpr double BLOWUP_MIN_SEPARATION = 1e-3;

inline double location_functional(const std::vector<Vec3>& points, const PotentialSpec& spec) {
    int k = (int)points.size();
    if (k < 1) throw std::invalid_argument("location_functional: needs at least one point");
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (geodesic_distance(points[i], points[j]) < BLOWUP_MIN_SEPARATION)
                throw CollisionError("location_functional: points merge within tolerance");
    double f = 0;
    for (int j = 0; j < k; ++j) {
        f += log_h(spec, points[j]);
        for (int l = 0; l < k; ++l)
            if (l != j) f += green(points[l], points[j]);
    }
    return f;
}

// ---------------------------------------------------------------------------
// critical configurations
// ---------------------------------------------------------------------------

struct BlowupConfiguration {
    int k = 0;
    std::vector<Vec3> points;
    std::vector<double> lambdas;  // heights; set by the caller, default 0
    double min_separation = 0;
    double f_value = 0;
    double grad_norm = 0;
    int index_estimate = 0;  // negative eigenvalues of the product-chart Hessian
    int start_index = 0;     // provenance: first start that found it
    int iterations = 0;
    int n_hits = 1;          // how many starts converged here
};

struct BlowupSearchOptions {
    double tol_grad = 1e-7;
    double fd_scale = 1e-4;
    double exclusion_radius = 0.05;  // keep-out around the singular points
    double cluster_radius = 1e-3;
    int max_newton_iter = 300;
    unsigned seed = 0;
    int n_threads = 1;
};

namespace detail {

// dense symmetric solve of (A + mu I) x = b by Gaussian elimination
inline bool solve_dense(std::vector<double> A, std::vector<double> b, int n,
                        std::vector<double>& x) {
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(A[r * n + c]) > std::abs(A[piv * n + c])) piv = r;
        if (std::abs(A[piv * n + c]) < 1e-300) return false;
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(A[c * n + j], A[piv * n + j]);
            std::swap(b[c], b[piv]);
        }
        for (int r = c + 1; r < n; ++r) {
            double f = A[r * n + c] / A[c * n + c];
            for (int j = c; j < n; ++j) A[r * n + j] -= f * A[c * n + j];
            b[r] -= f * b[c];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < n; ++j) s -= A[r * n + j] * x[j];
        x[r] = s / A[r * n + r];
    }
    return true;
}

// eigenvalues of a small symmetric matrix by cyclic Jacobi rotations
inline std::vector<double> jacobi_eigs(std::vector<double> A, int n) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A[i * n + j] * A[i * n + j];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = A[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double theta = (A[q * n + q] - A[p * n + p]) / (2 * apq);
                double sgn = theta >= 0 ? 1.0 : -1.0;
                double tt = sgn / (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1.0 / std::sqrt(tt * tt + 1), s = tt * c;
                for (int i = 0; i < n; ++i) {
                    double aip = A[i * n + p], aiq = A[i * n + q];
                    A[i * n + p] = c * aip - s * aiq;
                    A[i * n + q] = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    double api = A[p * n + i], aqi = A[q * n + i];
                    A[p * n + i] = c * api - s * aqi;
                    A[q * n + i] = s * api + c * aqi;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = A[i * n + i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace detail

inline std::vector<BlowupConfiguration> find_critical_configurations(
    int k, const PotentialSpec& spec, const SphereGrid& grid, int n_starts,
    const BlowupSearchOptions& opts = {}) {
    if (k < 1) throw std::invalid_argument("find_critical_configurations: k must be >= 1");
    (void)grid;
    const int dim = 2 * k;
    const double fd = opts.fd_scale;

    auto too_close = [&](const std::vector<Vec3>& pts) {
        for (int i = 0; i < (int)pts.size(); ++i) {
            for (int j = i + 1; j < (int)pts.size(); ++j)
                if (geodesic_distance(pts[i], pts[j]) < BLOWUP_MIN_SEPARATION) return true;
            for (const Singularity& s : spec.singularities.items)
                if (geodesic_distance(pts[i], s.point) < opts.exclusion_radius) return true;
        }
        return false;
    };

    struct Hit {
        std::vector<Vec3> pts;
        double f = 0, gnorm = 0;
        int index = 0, start = 0, iters = 0;
        bool ok = false;
    };

    auto run_start = [&](int si) {
        Hit hit;
        hit.start = si;
        std::mt19937 rng(opts.seed + 7919u * (unsigned)si);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<Vec3> pts(k);
        for (int tries = 0; tries < 200; ++tries) {
            for (int j = 0; j < k; ++j)
                pts[j] = sphere_point(gauss(rng), gauss(rng), gauss(rng));
            if (!too_close(pts)) break;
        }
        if (too_close(pts)) return hit;

        int it = 0;
        double mu = 1e-3;
        for (; it < opts.max_newton_iter; ++it) {
            std::vector<Vec3> e1(k), e2(k);
            for (int j = 0; j < k; ++j) tangent_frame(pts[j], e1[j], e2[j]);
            std::vector<double> y0(dim, 0.0), g(dim), H(dim * dim);
            auto F = [&](const std::vector<double>& y) {
                std::vector<Vec3> q(k);
                for (int j = 0; j < k; ++j)
                    q[j] = detail::chart_point(pts[j], e1[j], e2[j], y[2 * j], y[2 * j + 1]);
                double f = 0;
                for (int j = 0; j < k; ++j) {
                    f += log_h(spec, q[j]);
                    for (int l = 0; l < k; ++l)
                        if (l != j) f += green(q[l], q[j]);
                }
                return f;
            };
            double f0 = F(y0);
            for (int a = 0; a < dim; ++a) {
                std::vector<double> yp = y0, ym = y0;
                yp[a] += fd;
                ym[a] -= fd;
                double fp = F(yp), fm = F(ym);
                g[a] = (fp - fm) / (2 * fd);
                H[a * dim + a] = (fp - 2 * f0 + fm) / (fd * fd);
                for (int b = a + 1; b < dim; ++b) {
                    std::vector<double> ypp = y0, ypm = y0, ymp = y0, ymm = y0;
                    ypp[a] += fd; ypp[b] += fd;
                    ypm[a] += fd; ypm[b] -= fd;
                    ymp[a] -= fd; ymp[b] += fd;
                    ymm[a] -= fd; ymm[b] -= fd;
                    double v = (F(ypp) - F(ypm) - F(ymp) + F(ymm)) / (4 * fd * fd);
                    H[a * dim + b] = H[b * dim + a] = v;
                }
            }
            double gn = 0;
            for (double x : g) gn = std::max(gn, std::abs(x));
            if (gn < opts.tol_grad) {
                hit.ok = true;
                hit.gnorm = gn;
                hit.f = f0;
                std::vector<double> ev = detail::jacobi_eigs(H, dim);
                hit.index = 0;
                for (double e : ev)
                    if (e < 0) hit.index++;
                break;
            }
            // Levenberg-damped Newton step toward grad = 0
            std::vector<double> step;
            std::vector<double> Hd = H;
            for (int a = 0; a < dim; ++a) Hd[a * dim + a] += (Hd[a * dim + a] >= 0 ? mu : -mu);
            if (!detail::solve_dense(Hd, g, dim, step)) break;
            double slen = 0;
            for (double x : step) slen = std::max(slen, std::abs(x));
            if (slen > 0.2)
                for (double& x : step) x *= 0.2 / slen;
            std::vector<Vec3> next(k);
            for (int j = 0; j < k; ++j)
                next[j] = detail::chart_point(pts[j], e1[j], e2[j], -step[2 * j],
                                              -step[2 * j + 1]);
            if (too_close(next)) break;
            pts = next;
            mu = std::max(mu * 0.7, 1e-12);
        }
        hit.iters = it;
        if (hit.ok) {
            // canonical order inside a configuration
            std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) {
                if (a.x != b.x) return a.x < b.x;
                if (a.y != b.y) return a.y < b.y;
                return a.z < b.z;
            });
            hit.pts = pts;
        }
        return hit;
    };

    std::vector<Hit> hits(std::max(0, n_starts));
    int nt = std::max(1, opts.n_threads);
    if (nt == 1) {
        for (int si = 0; si < n_starts; ++si) hits[si] = run_start(si);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < nt; ++w)
            pool.emplace_back([&]() {
                for (int si = next++; si < n_starts; si = next++) hits[si] = run_start(si);
            });
        for (auto& th : pool) th.join();
    }

    // deterministic merge: starts in order, cluster by max pointwise distance
    std::vector<BlowupConfiguration> out;
    for (const Hit& h : hits) {
        if (!h.ok) continue;
        bool merged = false;
        for (BlowupConfiguration& c : out) {
            // configurations are unordered: match up to permutation
            std::vector<int> perm(k);
            for (int j = 0; j < k; ++j) perm[j] = j;
            double worst = std::numeric_limits<double>::infinity();
            do {
                double w = 0;
                for (int j = 0; j < k; ++j)
                    w = std::max(w, geodesic_distance(c.points[j], h.pts[perm[j]]));
                worst = std::min(worst, w);
            } while (std::next_permutation(perm.begin(), perm.end()));
            if (worst < opts.cluster_radius) {
                c.n_hits++;
                if (h.gnorm < c.grad_norm) {
                    c.points = h.pts;
                    c.grad_norm = h.gnorm;
                    c.f_value = h.f;
                    c.index_estimate = h.index;
                    c.iterations = h.iters;
                }
                merged = true;
                break;
            }
        }
        if (merged) continue;
        BlowupConfiguration c;
        c.k = k;
        c.points = h.pts;
        c.lambdas.assign(k, 0.0);
        c.f_value = h.f;
        c.grad_norm = h.gnorm;
        c.index_estimate = h.index;
        c.start_index = h.start;
        c.iterations = h.iters;
        double sep = std::numeric_limits<double>::infinity();
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                sep = std::min(sep, geodesic_distance(c.points[i], c.points[j]));
        c.min_separation = k > 1 ? sep : 0.0;
        out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const BlowupConfiguration& a, const BlowupConfiguration& b) {
        if (a.f_value != b.f_value) return a.f_value > b.f_value;
        for (size_t j = 0; j < a.points.size(); ++j) {
            if (a.points[j].x != b.points[j].x) return a.points[j].x < b.points[j].x;
            if (a.points[j].y != b.points[j].y) return a.points[j].y < b.points[j].y;
            if (a.points[j].z != b.points[j].z) return a.points[j].z < b.points[j].z;
        }
        return false;
    });
    return out;
}

// ---------------------------------------------------------------------------
// blow-up rate: leading term of rho_n - 8 k pi
// ---------------------------------------------------------------------------

inline double blowup_rate(const BlowupConfiguration& config, const PotentialSpec& spec) {
    if (config.k < 1 || (int)config.points.size() != config.k ||
        (int)config.lambdas.size() != config.k)
        throw std::invalid_argument("blowup_rate: inconsistent configuration");
    double s = 0;
    for (int j = 0; j < config.k; ++j) {
        double hq = h_value(spec, config.points[j]);
        double lap = laplacian_log_h_at(spec, config.points[j]);
        double lam = config.lambdas[j];
        s += (lap + 2.0 * (config.k - 1)) / hq * lam * std::exp(-lam);
    }
    return s;
}

// ---------------------------------------------------------------------------
// sequence classification
// ---------------------------------------------------------------------------

enum class BlowupAlternative { Bounded, Blowup };

inline const char* to_string(BlowupAlternative a) {
    return a == BlowupAlternative::Bounded ? "BOUNDED" : "BLOWUP";
}

struct MassCluster {
    Vec3 center;
    double mass = 0;           // rho_n * (fraction of h e^u measure in the ball)
    double expected_mass = 0;  // 8 pi, or 8 pi (1 + alpha_j) near a singular point
    int singular_index = -1;   // which p_j the center sits on, if any
    bool within_tolerance = false;
};

struct ClassifyOptions {
    double sup_ceiling = 5.0;    // below this the sequence counts as bounded
    double mass_radius = 0.3;    // geodesic integration radius per cluster
    double mass_tol = 0.10;      // relative tolerance on the quantized mass
    double singular_radius = 0.1;  // centers this close to p_j use 8 pi (1+alpha_j)
};

struct ClassifyReport {
    BlowupAlternative alternative = BlowupAlternative::Bounded;
    std::vector<MassCluster> clusters;
    std::vector<double> sup_norms;
    double rho_last = 0;
};

inline ClassifyReport classify_sequence(const std::vector<SolveResult>& results,
                                        const PotentialSpec& spec,
                                        const ClassifyOptions& opts = {}) {
    if (results.size() < 3)
        throw InsufficientDataError("classify_sequence: needs at least 3 results");
    for (size_t i = 0; i + 1 < results.size(); ++i) {
        if (!(results[i].rho < results[i + 1].rho))
            throw InsufficientDataError("classify_sequence: rho_n must be increasing");
        if (results[i].u.grid != results[i + 1].u.grid ||
            results[i].u.size() != results[i + 1].u.size())
            throw InsufficientDataError("classify_sequence: results must share one grid");
    }

    ClassifyReport rep;
    rep.rho_last = results.back().rho;
    double worst = 0;
    for (const SolveResult& r : results) {
        double s = sup_norm(r.u);
        rep.sup_norms.push_back(s);
        worst = std::max(worst, s);
    }
    if (worst < opts.sup_ceiling) {
        rep.alternative = BlowupAlternative::Bounded;
        return rep;
    }

    rep.alternative = BlowupAlternative::Blowup;
    const SolveResult& last = results.back();
    const SphereGrid& g = *last.u.grid;

    // normalized measure h e^u / int h e^u at the last iterate
    double M = sup_norm(last.u);
    ScalarField h = build_h(spec, g);
    std::vector<double> dens(g.size());
    double Z = 0;
    for (int i = 0; i < g.size(); ++i) {
        dens[i] = h.v[i] * std::exp(last.u.v[i] - M);
        Z += g.weight[i] * dens[i];
    }

    // greedy cluster centers: peaks of u with enforced separation
    std::vector<int> order(g.size());
    for (int i = 0; i < g.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return last.u.v[a] > last.u.v[b]; });
    std::vector<Vec3> centers;
    for (int idx : order) {
        if (last.u.v[idx] < opts.sup_ceiling) break;
        bool close = false;
        for (const Vec3& c : centers)
            if (geodesic_distance(c, g.points[idx]) < 2.0 * opts.mass_radius) close = true;
        if (!close) centers.push_back(g.points[idx]);
    }

    for (const Vec3& c : centers) {
        MassCluster mc;
        mc.center = c;
        double frac = 0;
        for (int i = 0; i < g.size(); ++i)
            if (geodesic_distance(c, g.points[i]) < opts.mass_radius)
                frac += g.weight[i] * dens[i];
        mc.mass = rep.rho_last * frac / Z;
        mc.expected_mass = 8.0 * PI;
        for (int j = 0; j < spec.singularities.m(); ++j)
            if (geodesic_distance(c, spec.singularities.items[j].point) < opts.singular_radius) {
                mc.singular_index = j;
                mc.expected_mass = 8.0 * PI * (1.0 + spec.singularities.items[j].alpha);
            }
        mc.within_tolerance = std::abs(mc.mass - mc.expected_mass) <= opts.mass_tol * mc.expected_mass;
        rep.clusters.push_back(mc);
    }
    return rep;
}

}  // namespace singmt
