#pragma once

// Exact machinery for the critical parameter set Gamma(alpha_1..alpha_m),
// the generating series
//   g(x) = (1 + x + x^2 + ...)^(m-2) * prod_i (1 - x^(1+alpha_i)),
// the degree d_rho obtained by partial coefficient sums, and the
// theorem-level existence verdicts driven by those quantities.
//
// Exponents are values k0 + sum_{i in mask} (1+alpha_i).  When every order
// is recognizably rational the whole computation runs on exact integer
// numerators over a common denominator, so distinct (k0, mask) pairs that
// collide numerically are merged exactly; otherwise merging uses an
// absolute tolerance.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace singmt {

inline constexpr double SERIES_PI = 3.14159265358979323846;
inline constexpr double EXPONENT_MERGE_TOL = 1e-9;

struct OrderVector {
    std::vector<double> alphas;  // sorted ascending, each > -1

    OrderVector() = default;
    explicit OrderVector(std::vector<double> a) : alphas(std::move(a)) {
        for (double x : alphas)
            if (!(x > -1.0))
                throw std::invalid_argument("OrderVector: orders must satisfy alpha > -1");
        std::sort(alphas.begin(), alphas.end());
    }

    int m() const { return (int)alphas.size(); }
    bool all_positive() const {
        for (double a : alphas)
            if (!(a > 0)) return false;
        return true;
    }
};

struct Exponent {
    int k0 = 0;
    std::uint32_t mask = 0;  // subset of singular indices contributing 1+alpha_i
    double value = 0;

    static double value_of(int k0, std::uint32_t mask, const OrderVector& orders) {
        double v = k0;
        for (int i = 0; i < orders.m(); ++i)
            if (mask & (1u << i)) v += 1.0 + orders.alphas[i];
        return v;
    }
};

// best rational p/q with q <= q_max via continued fractions; accepted only
// when the reconstruction error is at machine scale
inline std::optional<std::pair<std::int64_t, std::int64_t>> to_rational(double x,
                                                                        std::int64_t q_max = 100000) {
    double a = x;
    std::int64_t p0 = 1, q0 = 0, p1 = (std::int64_t)std::floor(a), q1 = 1;
    double frac = a - std::floor(a);
    for (int it = 0; it < 64 && frac > 1e-15; ++it) {
        a = 1.0 / frac;
        std::int64_t ai = (std::int64_t)std::floor(a);
        frac = a - std::floor(a);
        std::int64_t p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        if (q2 > q_max) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    }
    if (q1 <= 0) return std::nullopt;
    if (std::abs(x - double(p1) / double(q1)) < 1e-13) return std::make_pair(p1, q1);
    return std::nullopt;
}

// Exact-exponent plan: every 1+alpha_i as an integer numerator over a
// common denominator.  Empty when some order is not recognizably rational.
struct RationalPlan {
    std::int64_t denom = 1;
    std::vector<std::int64_t> num;  // numerators of 1+alpha_i

    static std::optional<RationalPlan> build(const OrderVector& orders) {
        RationalPlan plan;
        std::vector<std::pair<std::int64_t, std::int64_t>> fr;
        for (double a : orders.alphas) {
            auto r = to_rational(1.0 + a);
            if (!r) return std::nullopt;
            fr.push_back(*r);
            plan.denom = std::lcm(plan.denom, r->second);
            if (plan.denom > 2'000'000'000LL) return std::nullopt;
        }
        for (auto& [p, q] : fr) plan.num.push_back(p * (plan.denom / q));
        return plan;
    }

    std::int64_t key(int k0, std::uint32_t mask) const {
        std::int64_t k = std::int64_t(k0) * denom;
        for (size_t i = 0; i < num.size(); ++i)
            if (mask & (1u << i)) k += num[i];
        return k;
    }
};

struct TruncationOverflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CriticalRhoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t SERIES_TERM_CAP = 1'000'000;

// ---------------------------------------------------------------------------
// gamma_set: all distinct values k0 + sum_{i in mask}(1+alpha_i) <= x_max
// with k0 in N, mask a subset, and k0 + |mask| > 0.
// ---------------------------------------------------------------------------

inline std::vector<Exponent> gamma_set(const OrderVector& orders, double x_max) {
    if (!(x_max > 0)) throw std::invalid_argument("gamma_set: x_max must be positive");
    int m = orders.m();
    auto plan = RationalPlan::build(orders);

    std::vector<Exponent> raw;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        double base = Exponent::value_of(0, mask, orders);
        if (base > x_max + EXPONENT_MERGE_TOL) continue;
        int k0_min = mask == 0 ? 1 : 0;
        for (int k0 = k0_min; base + k0 <= x_max + EXPONENT_MERGE_TOL; ++k0) {
            raw.push_back({k0, mask, base + k0});
            if (raw.size() > SERIES_TERM_CAP)
                throw TruncationOverflowError("gamma_set: term count cap exceeded");
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const Exponent& a, const Exponent& b) { return a.value < b.value; });
    std::vector<Exponent> out;
    for (const Exponent& e : raw) {
        bool merged = false;
        if (!out.empty()) {
            if (plan)
                merged = plan->key(e.k0, e.mask) == plan->key(out.back().k0, out.back().mask);
            else
                merged = e.value - out.back().value < EXPONENT_MERGE_TOL;
        }
        if (!merged) out.push_back(e);
    }
    // drop anything above the cutoff that slipped in through the tolerance
    while (!out.empty() && out.back().value > x_max + EXPONENT_MERGE_TOL) out.pop_back();
    return out;
}

// ---------------------------------------------------------------------------
// GeneralizedSeries: finite sum of integer coefficients at real exponents.
// Zero coefficients at Gamma exponents are retained so a DegreeReport can
// show every critical value.
// ---------------------------------------------------------------------------

struct SeriesTerm {
    Exponent exponent;  // provenance of one representative
    long long coeff = 0;
};

struct GeneralizedSeries {
    std::vector<SeriesTerm> terms;  // sorted ascending by exponent value
    double truncation = 0;          // exponents < truncation are complete
};

namespace detail {

// multiply a sorted term list by a factor given as (k0, mask, coeff)
// monomials; results above x_max are dropped (exact for nonnegative
// exponents), merged per the shared plan
inline std::vector<SeriesTerm> series_multiply(const std::vector<SeriesTerm>& a,
                                               const std::vector<SeriesTerm>& factor,
                                               const OrderVector& orders, double x_max,
                                               const std::optional<RationalPlan>& plan) {
    struct Acc {
        Exponent e;
        long long c = 0;
    };
    std::map<std::int64_t, Acc> exact;
    std::vector<Acc> fuzzy;
    for (const SeriesTerm& s : a)
        for (const SeriesTerm& f : factor) {
            Exponent e;
            e.k0 = s.exponent.k0 + f.exponent.k0;
            e.mask = s.exponent.mask | f.exponent.mask;
            if (s.exponent.mask & f.exponent.mask)
                throw std::logic_error("series_multiply: singular factor reused");
            e.value = s.exponent.value + f.exponent.value;
            if (e.value > x_max + EXPONENT_MERGE_TOL) continue;
            long long c = s.coeff * f.coeff;
            if (plan) {
                auto& acc = exact[plan->key(e.k0, e.mask)];
                if (acc.c == 0 && acc.e.value == 0 && acc.e.k0 == 0 && acc.e.mask == 0) acc.e = e;
                acc.c += c;
            } else {
                fuzzy.push_back({e, c});
            }
            if (exact.size() + fuzzy.size() > SERIES_TERM_CAP)
                throw TruncationOverflowError("expand_g: term count cap exceeded");
        }
    std::vector<SeriesTerm> out;
    if (plan) {
        for (auto& [k, acc] : exact) out.push_back({acc.e, acc.c});
        std::sort(out.begin(), out.end(), [](const SeriesTerm& x, const SeriesTerm& y) {
            return x.exponent.value < y.exponent.value;
        });
    } else {
        std::sort(fuzzy.begin(), fuzzy.end(),
                  [](const Acc& x, const Acc& y) { return x.e.value < y.e.value; });
        for (const Acc& t : fuzzy) {
            if (!out.empty() && t.e.value - out.back().exponent.value < EXPONENT_MERGE_TOL)
                out.back().coeff += t.c;
            else
                out.push_back({t.e, t.c});
        }
    }
    return out;
}

}  // namespace detail

// expansion of (1+x+x^2+...)^(m-2) * prod_i (1-x^(1+alpha_i)); for m < 2
// the prefactor is the polynomial (1-x)^(2-m)
inline GeneralizedSeries expand_g(const OrderVector& orders, double x_max) {
    if (!(x_max > 0)) throw std::invalid_argument("expand_g: x_max must be positive");
    int m = orders.m();
    auto plan = RationalPlan::build(orders);

    std::vector<SeriesTerm> acc = {{Exponent{0, 0, 0.0}, 1}};
    if (m >= 2) {
        std::vector<SeriesTerm> geom;
        for (int k = 0; k <= (int)std::floor(x_max + EXPONENT_MERGE_TOL); ++k)
            geom.push_back({Exponent{k, 0, double(k)}, 1});
        for (int rep = 0; rep < m - 2; ++rep)
            acc = detail::series_multiply(acc, geom, orders, x_max, plan);
    } else {
        // (1-x)^(2-m), a genuine polynomial
        std::vector<SeriesTerm> one_minus_x = {{Exponent{0, 0, 0.0}, 1}, {Exponent{1, 0, 1.0}, -1}};
        for (int rep = 0; rep < 2 - m; ++rep)
            acc = detail::series_multiply(acc, one_minus_x, orders, x_max, plan);
    }
    for (int i = 0; i < m; ++i) {
        double e = 1.0 + orders.alphas[i];
        std::vector<SeriesTerm> factor = {{Exponent{0, 0, 0.0}, 1},
                                          {Exponent{0, 1u << i, e}, -1}};
        acc = detail::series_multiply(acc, factor, orders, x_max, plan);
    }

    // retain explicit zeros at Gamma exponents below the cutoff
    std::vector<Exponent> gamma = gamma_set(orders, x_max);
    for (const Exponent& e : gamma) {
        bool found = false;
        for (const SeriesTerm& t : acc) {
            bool same = plan ? plan->key(t.exponent.k0, t.exponent.mask) == plan->key(e.k0, e.mask)
                             : std::abs(t.exponent.value - e.value) < EXPONENT_MERGE_TOL;
            if (same) {
                found = true;
                break;
            }
        }
        if (!found) acc.push_back({e, 0});
    }
    std::sort(acc.begin(), acc.end(), [](const SeriesTerm& x, const SeriesTerm& y) {
        return x.exponent.value < y.exponent.value;
    });

    GeneralizedSeries out;
    out.terms = std::move(acc);
    out.truncation = x_max;
    if (out.terms.empty() || out.terms.front().exponent.value != 0.0 ||
        out.terms.front().coeff != 1)
        throw std::logic_error("expand_g: constant term is not 1");
    return out;
}

// ---------------------------------------------------------------------------
// degree
// ---------------------------------------------------------------------------

struct DegreeReport {
    double rho_over_8pi = 0;
    std::vector<Exponent> gamma_below;   // n_j <= rho/8pi (all critical values crossed)
    std::vector<long long> coefficients; // b_j matching gamma_below
    long long degree = 0;                // 1 + sum of b_j with n_j < rho/8pi
    long long paper_bar_d = 0;           // table value 2 / 0 / -1 by m
    long long expansion_bar_d = 0;       // d_{8pi+eps} from the expansion itself
    bool bar_d_mismatch = false;
};

inline long long paper_bar_d_table(int m) { return m >= 2 ? 2 : (m == 1 ? 0 : -1); }

inline DegreeReport degree(double rho, const OrderVector& orders) {
    if (!(rho > 0)) throw std::invalid_argument("degree: rho must be positive");
    double x = rho / (8.0 * SERIES_PI);
    double x_max = std::max(x + 1.0, 2.5);
    GeneralizedSeries g = expand_g(orders, x_max);

    DegreeReport rep;
    rep.rho_over_8pi = x;
    rep.degree = 1;
    rep.expansion_bar_d = 1;
    for (const SeriesTerm& t : g.terms) {
        double n = t.exponent.value;
        if (n == 0.0) continue;
        if (std::abs(n - x) < EXPONENT_MERGE_TOL)
            throw CriticalRhoError("degree: rho/8pi lies in the critical set Gamma");
        if (n < x) {
            rep.gamma_below.push_back(t.exponent);
            rep.coefficients.push_back(t.coeff);
            rep.degree += t.coeff;
        }
        if (n <= 1.0 + EXPONENT_MERGE_TOL) rep.expansion_bar_d += t.coeff;
    }
    rep.paper_bar_d = paper_bar_d_table(orders.m());
    rep.bar_d_mismatch = rep.paper_bar_d != rep.expansion_bar_d;
    return rep;
}

// ---------------------------------------------------------------------------
// existence verdicts
// ---------------------------------------------------------------------------

enum class Verdict { Exists, Unknown, NotCovered };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Exists: return "EXISTS";
        case Verdict::Unknown: return "UNKNOWN";
        case Verdict::NotCovered: return "NOT_COVERED";
    }
    return "?";
}

struct ExistenceReport {
    Verdict verdict = Verdict::Unknown;
    std::optional<long long> degree;  // attached when rho is not critical
    std::string reason;
};

// solvability for m >= 2, all alpha_i > 0, on (0, 8pi(1+alpha_1)) \ 8pi N
inline ExistenceReport existence_verdict(double rho, const OrderVector& orders) {
    ExistenceReport rep;
    if (orders.m() <= 1) {
        rep.verdict = Verdict::NotCovered;
        rep.reason = orders.m() == 1
                         ? "m=1: non-existence regime beyond 8pi, criterion not applicable"
                         : "m=0: criterion requires at least two singular points";
        return rep;
    }
    if (!orders.all_positive())
        throw std::invalid_argument("existence_verdict: requires all orders positive");
    double x = rho / (8.0 * SERIES_PI);
    double nearest_int = std::round(x);
    bool on_8pi_lattice = nearest_int >= 1 && std::abs(x - nearest_int) < EXPONENT_MERGE_TOL;
    try {
        rep.degree = degree(rho, orders).degree;
    } catch (const CriticalRhoError&) {
        rep.degree.reset();
    }
    double threshold = 1.0 + orders.alphas.front();
    if (!on_8pi_lattice && x > 0 && x < threshold - EXPONENT_MERGE_TOL) {
        rep.verdict = Verdict::Exists;
        rep.reason = "rho in (0, 8pi(1+alpha_1)) away from 8pi N: degree >= 1";
    } else {
        rep.verdict = Verdict::Unknown;
        rep.reason = on_8pi_lattice ? "rho on the 8pi lattice (excluded set)"
                                    : "rho at or above 8pi(1+alpha_1)";
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Morse-count existence check: d_{8pi} = 1 - r + s = bar_d - s' + r'
// ---------------------------------------------------------------------------

struct MorseExistenceReport {
    std::optional<long long> d_8pi;      // 1 - r + s, when (r,s) supplied
    std::optional<long long> d_8pi_alt;  // bar_d - s' + r', when (r',s') supplied
    long long bar_d = 0;
    bool exists = false;        // r != s+1 or s' != r' + bar_d, over supplied routes
    bool inconsistent = false;  // both routes supplied and they disagree
};

struct MorseCounts {
    std::optional<long long> r, s;          // maxima / saddles with negative Laplacian
    std::optional<long long> r_prime, s_prime;  // minima / saddles with positive Laplacian
};

inline MorseExistenceReport morse_existence_check(const MorseCounts& counts, int m,
                                                  std::optional<long long> bar_d_override = {}) {
    for (auto v : {counts.r, counts.s, counts.r_prime, counts.s_prime})
        if (v && *v < 0)
            throw std::invalid_argument("morse_existence_check: counts must be nonnegative");
    if (m < 0) throw std::invalid_argument("morse_existence_check: m must be nonnegative");
    MorseExistenceReport rep;
    rep.bar_d = bar_d_override.value_or(paper_bar_d_table(m));
    if (counts.r && counts.s) {
        rep.d_8pi = 1 - *counts.r + *counts.s;
        rep.exists = rep.exists || (*counts.r != *counts.s + 1);
    }
    if (counts.r_prime && counts.s_prime) {
        rep.d_8pi_alt = rep.bar_d - *counts.s_prime + *counts.r_prime;
        rep.exists = rep.exists || (*counts.s_prime != *counts.r_prime + rep.bar_d);
    }
    if (rep.d_8pi && rep.d_8pi_alt) rep.inconsistent = *rep.d_8pi != *rep.d_8pi_alt;
    return rep;
}

// convenience overload with all four counts supplied
inline MorseExistenceReport morse_existence_check(long long r, long long s, long long r_prime,
                                                  long long s_prime, int m,
                                                  std::optional<long long> bar_d_override = {}) {
    return morse_existence_check(MorseCounts{r, s, r_prime, s_prime}, m, bar_d_override);
}

}  // namespace singmt
