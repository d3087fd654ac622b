#pragma once

// Round-sphere primitives: Gauss-Legendre x uniform-longitude grids with
// exact quadrature, real spherical-harmonic transforms, the diagonal
// Laplace-Beltrami operator and its inverse on mean-zero fields, the
// closed-form Green's function of the round metric, stereographic charts
// and geodesic distances.
//
// Fields are stored at interior Gauss nodes only, so there are never nodes
// at theta = 0 or pi and no coordinate singularities to special-case.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace singmt {

inline constexpr double PI = 3.14159265358979323846;
inline constexpr double FOUR_PI = 4.0 * PI;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0) throw std::invalid_argument("cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }
};

struct Vec2 {
    double x = 0, y = 0;
    double norm2() const { return x * x + y * y; }
};

// unit vector with |x| = 1 enforced at construction
inline Vec3 sphere_point(double x, double y, double z) {
    Vec3 v{x, y, z};
    double n2 = v.dot(v);
    if (std::abs(n2 - 1.0) > 1e-12) {
        if (n2 <= 0) throw std::invalid_argument("sphere_point: zero vector");
        v = v.normalized();
    }
    return v;
}

inline double geodesic_distance(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

// deterministic orthonormal frame (e1, e2, p)
inline void tangent_frame(const Vec3& p, Vec3& e1, Vec3& e2) {
    Vec3 a = std::abs(p.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    e1 = p.cross(a).normalized();
    e2 = p.cross(e1);
}

// ---------------------------------------------------------------------------
// Green's function of the round sphere:
//   G(x,y) = -(1/4pi) log(1 - x.y) - (1 - log 2)/(4pi)
// The additive constant makes the spherical mean vanish.
// ---------------------------------------------------------------------------

inline constexpr double GREEN_CONSTANT = -0.024418571507784770;  // -(1-log2)/(4pi)

struct SingularGreenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double green(const Vec3& x, const Vec3& y) {
    double t = x.dot(y);
    if (t > 1.0 - 1e-14)
        throw SingularGreenError("green: evaluation at coincident points");
    return -std::log1p(-t) / FOUR_PI - (1.0 - std::log(2.0)) / FOUR_PI;
}

// ---------------------------------------------------------------------------
// Stereographic projection from pole p.  Maps -p to the origin and p to
// infinity; the conformal factor of the inverse map is 4/(1+|y|^2)^2.
// ---------------------------------------------------------------------------

struct SingularProjectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Vec2 stereographic(const Vec3& x, const Vec3& p) {
    Vec3 e1, e2;
    tangent_frame(p, e1, e2);
    double x3 = x.dot(p);
    if (x3 > 1.0 - 1e-14)
        throw SingularProjectionError("stereographic: point at the pole");
    return {x.dot(e1) / (1.0 - x3), x.dot(e2) / (1.0 - x3)};
}

inline Vec3 inverse_stereographic(const Vec2& y, const Vec3& p) {
    Vec3 e1, e2;
    tangent_frame(p, e1, e2);
    double r2 = y.norm2();
    double d = 1.0 + r2;
    return e1 * (2.0 * y.x / d) + e2 * (2.0 * y.y / d) + p * ((r2 - 1.0) / d);
}

// squared stereographic radius of x in the chart with pole p
inline double stereo_r2(const Vec3& x, const Vec3& p) {
    double t = x.dot(p);
    if (t > 1.0 - 1e-15) t = 1.0 - 1e-15;
    return (1.0 + t) / (1.0 - t);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes/weights on [-1,1]
// ---------------------------------------------------------------------------

inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi-type initial guess, then Newton on P_n
        double x = std::cos(PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int l = 2; l <= n; ++l) {
                double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        // recompute pp at the converged node
        {
            double p0 = 1.0, p1 = x;
            for (int l = 2; l <= n; ++l) {
                double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
}

// ---------------------------------------------------------------------------
// SphereGrid: quadrature nodes, weights and the spherical-harmonic
// transform plan.  Immutable after construction.
// ---------------------------------------------------------------------------

// real orthonormal basis indexing: (l,m) -> l*l + l + m, m in [-l,l];
// m > 0 are cosine harmonics, m < 0 sine harmonics.
inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int l_max) { return (l_max + 1) * (l_max + 1); }

class SphereGrid {
public:
    int n_theta, n_phi, l_max;
    std::vector<double> mu;      // Gauss nodes, ascending in cos(theta)
    std::vector<double> wmu;     // Gauss weights
    std::vector<double> theta;   // acos(mu)
    std::vector<double> phi;     // uniform longitudes
    std::vector<Vec3> points;    // node positions, row-major (a,b)
    std::vector<double> weight;  // quadrature weights in steradians

    SphereGrid(int nt, int np, int lm) : n_theta(nt), n_phi(np), l_max(lm) {
        if (nt < lm + 1 || np < 2 * lm + 1)
            throw std::invalid_argument("SphereGrid: undersampled grid for requested l_max");
        gauss_legendre(nt, mu, wmu);
        theta.resize(nt);
        for (int a = 0; a < nt; ++a) theta[a] = std::acos(mu[a]);
        phi.resize(np);
        for (int b = 0; b < np; ++b) phi[b] = 2.0 * PI * b / np;
        double dphi = 2.0 * PI / np;
        points.resize(nt * np);
        weight.resize(nt * np);
        for (int a = 0; a < nt; ++a) {
            double st = std::sqrt(std::max(0.0, 1.0 - mu[a] * mu[a]));
            for (int b = 0; b < np; ++b) {
                points[a * np + b] = {st * std::cos(phi[b]), st * std::sin(phi[b]), mu[a]};
                weight[a * np + b] = wmu[a] * dphi;
            }
        }
        build_tables();
    }

    int size() const { return n_theta * n_phi; }
    int node(int a, int b) const { return a * n_phi + b; }

    // normalized associated Legendre table, [tri(l,m)][a]
    const double* plm_row(int l, int m) const { return &plm_[tri(l, m) * n_theta]; }

private:
    std::vector<double> plm_;
    std::vector<double> cosm_, sinm_;  // [m*n_phi + b]

    int tri(int l, int m) const { return l * (l + 1) / 2 + m; }

    void build_tables() {
        int nlm = (l_max + 1) * (l_max + 2) / 2;
        plm_.assign(nlm * n_theta, 0.0);
        for (int a = 0; a < n_theta; ++a) {
            std::vector<double> col((l_max + 1) * (l_max + 2) / 2);
            normalized_plm(l_max, mu[a], col);
            for (int i = 0; i < nlm; ++i) plm_[i * n_theta + a] = col[i];
        }
        cosm_.resize((l_max + 1) * n_phi);
        sinm_.resize((l_max + 1) * n_phi);
        for (int m = 0; m <= l_max; ++m)
            for (int b = 0; b < n_phi; ++b) {
                cosm_[m * n_phi + b] = std::cos(m * phi[b]);
                sinm_[m * n_phi + b] = std::sin(m * phi[b]);
            }
    }

public:
    const double* cos_row(int m) const { return &cosm_[m * n_phi]; }
    const double* sin_row(int m) const { return &sinm_[m * n_phi]; }

    // P~_{lm}(mu) normalized so that the real harmonics built from them are
    // orthonormal on the sphere; no Condon-Shortley phase.
    static void normalized_plm(int l_max, double mu, std::vector<double>& out) {
        out.assign((l_max + 1) * (l_max + 2) / 2, 0.0);
        auto at = [&](int l, int m) -> double& { return out[l * (l + 1) / 2 + m]; };
        double st = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        at(0, 0) = 1.0 / std::sqrt(FOUR_PI);
        for (int m = 1; m <= l_max; ++m)
            at(m, m) = at(m - 1, m - 1) * st * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
        for (int m = 0; m < l_max; ++m)
            at(m + 1, m) = mu * std::sqrt(2.0 * m + 3.0) * at(m, m);
        for (int m = 0; m <= l_max; ++m)
            for (int l = m + 2; l <= l_max; ++l) {
                double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
                double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) /
                                     (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
                at(l, m) = a * (mu * at(l - 1, m) - b * at(l - 2, m));
            }
    }
};

inline SphereGrid build_grid(int n_theta, int n_phi, int l_max) {
    return SphereGrid(n_theta, n_phi, l_max);
}

// pointwise real spherical harmonic Y_{l,m}(x); m>0 cosine, m<0 sine
inline double real_sph_harm(int l, int m, const Vec3& x) {
    int am = std::abs(m);
    if (am > l) throw std::invalid_argument("real_sph_harm: |m| > l");
    std::vector<double> col;
    SphereGrid::normalized_plm(l, std::clamp(x.z, -1.0, 1.0), col);
    double p = col[l * (l + 1) / 2 + am];
    if (m == 0) return p;
    double ph = std::atan2(x.y, x.x);
    return std::sqrt(2.0) * p * (m > 0 ? std::cos(am * ph) : std::sin(am * ph));
}

// ---------------------------------------------------------------------------
// ScalarField and SpectralCoeffs
// ---------------------------------------------------------------------------

struct ScalarField {
    const SphereGrid* grid = nullptr;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const SphereGrid& g, double fill = 0.0)
        : grid(&g), v(g.size(), fill) {}

    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }
    int size() const { return (int)v.size(); }
};

struct SpectralCoeffs {
    int l_max = 0;
    std::vector<double> c;

    SpectralCoeffs() = default;
    explicit SpectralCoeffs(int lm) : l_max(lm), c(sh_count(lm), 0.0) {}
    double& at(int l, int m) { return c[sh_index(l, m)]; }
    double at(int l, int m) const { return c[sh_index(l, m)]; }
};

inline double integrate(const ScalarField& f) {
    double s = 0;
    for (int i = 0; i < f.size(); ++i) s += f.v[i] * f.grid->weight[i];
    return s;
}

inline double field_mean(const ScalarField& f) { return integrate(f) / FOUR_PI; }

inline double sup_norm(const ScalarField& f) {
    double s = 0;
    for (double x : f.v) s = std::max(s, std::abs(x));
    return s;
}

inline SpectralCoeffs analysis(const ScalarField& f) {
    const SphereGrid& g = *f.grid;
    int L = g.l_max, nt = g.n_theta, np = g.n_phi;
    double dphi = 2.0 * PI / np;
    // Fourier sums per latitude
    std::vector<double> Fc((L + 1) * nt, 0.0), Fs((L + 1) * nt, 0.0);
    for (int a = 0; a < nt; ++a) {
        const double* row = &f.v[a * np];
        for (int m = 0; m <= L; ++m) {
            const double* cm = g.cos_row(m);
            const double* sm = g.sin_row(m);
            double sc = 0, ss = 0;
            for (int b = 0; b < np; ++b) {
                sc += row[b] * cm[b];
                ss += row[b] * sm[b];
            }
            Fc[m * nt + a] = sc;
            Fs[m * nt + a] = ss;
        }
    }
    SpectralCoeffs out(L);
    const double sqrt2 = std::sqrt(2.0);
    for (int m = 0; m <= L; ++m) {
        double scale = (m == 0 ? 1.0 : sqrt2) * dphi;
        for (int l = m; l <= L; ++l) {
            const double* pl = g.plm_row(l, m);
            double sc = 0, ss = 0;
            const double* fc = &Fc[m * nt];
            const double* fs = &Fs[m * nt];
            for (int a = 0; a < nt; ++a) {
                double w = g.wmu[a] * pl[a];
                sc += w * fc[a];
                ss += w * fs[a];
            }
            out.at(l, m) = scale * sc;
            if (m > 0) out.at(l, -m) = scale * ss;
        }
    }
    return out;
}

inline ScalarField synthesis(const SpectralCoeffs& coef, const SphereGrid& g) {
    if (coef.l_max > g.l_max)
        throw std::invalid_argument("synthesis: coefficients exceed grid band limit");
    int L = coef.l_max, nt = g.n_theta, np = g.n_phi;
    const double sqrt2 = std::sqrt(2.0);
    // latitude-dependent Fourier amplitudes
    std::vector<double> Ac((L + 1) * nt, 0.0), As((L + 1) * nt, 0.0);
    for (int m = 0; m <= L; ++m) {
        double scale = (m == 0 ? 1.0 : sqrt2);
        for (int l = m; l <= L; ++l) {
            const double* pl = g.plm_row(l, m);
            double cc = coef.at(l, m) * scale;
            double cs = m > 0 ? coef.at(l, -m) * scale : 0.0;
            if (cc == 0.0 && cs == 0.0) continue;
            for (int a = 0; a < nt; ++a) {
                Ac[m * nt + a] += cc * pl[a];
                if (m > 0) As[m * nt + a] += cs * pl[a];
            }
        }
    }
    ScalarField f(g);
    for (int a = 0; a < nt; ++a) {
        double* row = &f.v[a * np];
        for (int m = 0; m <= L; ++m) {
            double ac = Ac[m * nt + a], as = As[m * nt + a];
            if (ac == 0.0 && as == 0.0) continue;
            const double* cm = g.cos_row(m);
            const double* sm = g.sin_row(m);
            for (int b = 0; b < np; ++b) row[b] += ac * cm[b] + as * sm[b];
        }
    }
    return f;
}

inline ScalarField laplacian(const ScalarField& f) {
    SpectralCoeffs c = analysis(f);
    for (int l = 0; l <= c.l_max; ++l)
        for (int m = -l; m <= l; ++m) c.at(l, m) *= -double(l) * (l + 1);
    return synthesis(c, *f.grid);
}

// inverse on the mean-zero subspace: l = 0 mode is dropped
inline ScalarField inverse_laplacian(const ScalarField& f) {
    SpectralCoeffs c = analysis(f);
    c.at(0, 0) = 0.0;
    for (int l = 1; l <= c.l_max; ++l)
        for (int m = -l; m <= l; ++m) c.at(l, m) /= -double(l) * (l + 1);
    return synthesis(c, *f.grid);
}

// Dirichlet energy int |grad u|^2 computed spectrally
inline double gradient_energy(const SpectralCoeffs& c) {
    double s = 0;
    for (int l = 1; l <= c.l_max; ++l)
        for (int m = -l; m <= l; ++m) {
            double v = c.at(l, m);
            s += double(l) * (l + 1) * v * v;
        }
    return s;
}

inline double gradient_energy(const ScalarField& f) { return gradient_energy(analysis(f)); }

// ---------------------------------------------------------------------------
// CSV dump/load: columns theta,phi,value (radians), row-major over (a,b).
// Values are printed with 17 significant digits so the round trip is
// bit-exact.
// ---------------------------------------------------------------------------

inline void dump_field_csv(const ScalarField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dump_field_csv: cannot open " + path);
    out << "theta,phi,value\n";
    const SphereGrid& g = *f.grid;
    char buf[96];
    for (int a = 0; a < g.n_theta; ++a)
        for (int b = 0; b < g.n_phi; ++b) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", g.theta[a], g.phi[b],
                          f.v[g.node(a, b)]);
            out << buf;
        }
}

inline ScalarField load_field_csv(const SphereGrid& g, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_field_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    ScalarField f(g);
    for (int i = 0; i < g.size(); ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("load_field_csv: truncated file " + path);
        const char* s = line.c_str();
        char* end = nullptr;
        std::strtod(s, &end);  // theta
        if (*end != ',') throw std::runtime_error("load_field_csv: malformed line");
        std::strtod(end + 1, &end);  // phi
        if (*end != ',') throw std::runtime_error("load_field_csv: malformed line");
        f.v[i] = std::strtod(end + 1, &end);
    }
    return f;
}

}  // namespace singmt
