#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "singmt/series_degree.hpp"

#include <random>

using namespace singmt;

namespace {

OrderVector make_orders(std::initializer_list<double> a) {
    return OrderVector(std::vector<double>(a));
}

std::vector<double> gamma_values(const OrderVector& o, double x_max) {
    std::vector<double> v;
    for (const Exponent& e : gamma_set(o, x_max)) v.push_back(e.value);
    return v;
}

long long coeff_at(const GeneralizedSeries& s, double e) {
    for (const SeriesTerm& t : s.terms)
        if (std::abs(t.exponent.value - e) < 1e-9) return t.coeff;
    return 0;
}

}  // namespace

TEST_CASE("critical set for m=0 is the positive integers") {
    auto v = gamma_values(make_orders({}), 3.0);
    REQUIRE(v == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("critical set for a single half-order point") {
    auto v = gamma_values(make_orders({0.5}), 2.6);
    REQUIRE(v.size() == 4);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(v[3] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("critical set for two orders") {
    auto v = gamma_values(make_orders({0.5, 0.7}), 2.0);
    REQUIRE(v.size() == 4);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(1.7).epsilon(1e-12));
    CHECK(v[3] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("critical set is strictly increasing and matches re-enumeration") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> mdist(0, 5), adist(-32, 128);
    for (int trial = 0; trial < 50; ++trial) {
        int m = mdist(rng);
        std::vector<double> alphas;
        for (int i = 0; i < m; ++i) alphas.push_back(adist(rng) / 64.0);
        OrderVector o(alphas);
        double x_max = 4.0;
        auto got = gamma_values(o, x_max);
        std::sort(alphas.begin(), alphas.end());
        auto want = singmt::test::brute_force_gamma(alphas, x_max);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
            if (i) CHECK(got[i] > got[i - 1]);
        }
    }
}

TEST_CASE("exponent values are reproduced by their provenance") {
    OrderVector o = make_orders({0.5, 0.7, 1.25});
    for (const Exponent& e : gamma_set(o, 5.0)) {
        double v = e.k0;
        for (int i = 0; i < o.m(); ++i)
            if (e.mask & (1u << i)) v += 1.0 + o.alphas[i];
        CHECK(std::abs(v - e.value) < 1e-12);
    }
    GeneralizedSeries s = expand_g(o, 5.0);
    for (const SeriesTerm& t : s.terms) {
        double v = t.exponent.k0;
        for (int i = 0; i < o.m(); ++i)
            if (t.exponent.mask & (1u << i)) v += 1.0 + o.alphas[i];
        CHECK(std::abs(v - t.exponent.value) < 1e-12);
    }
}

TEST_CASE("series for m=0 is the squared binomial") {
    GeneralizedSeries s = expand_g(make_orders({}), 3.0);
    CHECK(coeff_at(s, 0.0) == 1);
    CHECK(coeff_at(s, 1.0) == -2);
    CHECK(coeff_at(s, 2.0) == 1);
    CHECK(coeff_at(s, 3.0) == 0);
}

TEST_CASE("series for one half-order point follows the definitional product") {
    GeneralizedSeries s = expand_g(make_orders({0.5}), 3.0);
    CHECK(coeff_at(s, 0.0) == 1);
    CHECK(coeff_at(s, 1.0) == -1);
    CHECK(coeff_at(s, 1.5) == -1);
    CHECK(coeff_at(s, 2.5) == 1);
    CHECK(coeff_at(s, 2.0) == 0);
}

TEST_CASE("series for two orders with trivial prefactor") {
    GeneralizedSeries s = expand_g(make_orders({0.5, 0.7}), 3.5);
    CHECK(coeff_at(s, 0.0) == 1);
    CHECK(coeff_at(s, 1.5) == -1);
    CHECK(coeff_at(s, 1.7) == -1);
    CHECK(coeff_at(s, 3.2) == 1);
    CHECK(coeff_at(s, 1.0) == 0);
}

TEST_CASE("series matches the brute-force product oracle") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> mdist(0, 5), adist(-32, 128);
    std::uniform_real_distribution<double> xdist(1.0, 6.0);
    for (int trial = 0; trial < 200; ++trial) {
        int m = mdist(rng);
        std::vector<double> alphas;
        for (int i = 0; i < m; ++i) alphas.push_back(adist(rng) / 64.0);
        double x_max = xdist(rng);
        OrderVector o(alphas);
        GeneralizedSeries s = expand_g(o, x_max);
        std::sort(alphas.begin(), alphas.end());
        auto want = singmt::test::brute_force_series(alphas, x_max);
        for (const auto& [e, c] : want)
            if (e < x_max - 1e-9) CHECK(coeff_at(s, e) == c);
        for (const SeriesTerm& t : s.terms) {
            auto it = want.lower_bound(t.exponent.value - 1e-9);
            long long c = (it != want.end() && it->first < t.exponent.value + 1e-9)
                              ? it->second
                              : 0;
            CHECK(t.coeff == c);
        }
    }
}

TEST_CASE("series truncation overflow is rejected") {
    // irrational orders disable exact merging, so the pairwise products of two
    // long geometric factors pile up past the term cap
    OrderVector o = make_orders({std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0,
                                 std::sqrt(5.0) - 1.0, std::sqrt(7.0) - 1.0});
    CHECK_THROWS_AS(expand_g(o, 1700.0), TruncationOverflowError);
}

TEST_CASE("degree below the first critical value is one") {
    DegreeReport d = degree(4.0 * SERIES_PI, make_orders({}));
    CHECK(d.degree == 1);
}

TEST_CASE("degree in the second window for the smooth case is minus one") {
    DegreeReport d = degree(12.0 * SERIES_PI, make_orders({}));
    CHECK(d.degree == -1);
    CHECK(d.paper_bar_d == -1);
    CHECK(d.expansion_bar_d == -1);
    CHECK_FALSE(d.bar_d_mismatch);
}

TEST_CASE("degree for two orders counts the zero coefficient at one") {
    // 12 pi sits exactly at 8 pi (1 + alpha_1) for alpha_1 = 0.5, which is a
    // critical value; the nearby non-critical parameter has degree 1 because
    // the x^1 coefficient of the series vanishes
    OrderVector o = make_orders({0.5, 0.7});
    CHECK_THROWS_AS(degree(12.0 * SERIES_PI, o), CriticalRhoError);
    DegreeReport d = degree(11.0 * SERIES_PI, o);
    CHECK(d.degree == 1);
}

TEST_CASE("degree errors on critical parameters") {
    CHECK_THROWS_AS(degree(8.0 * SERIES_PI, make_orders({})), CriticalRhoError);
    CHECK_THROWS_AS(degree(8.0 * SERIES_PI * 1.5, make_orders({0.5})), CriticalRhoError);
}

TEST_CASE("degree is piecewise constant between critical values") {
    OrderVector o = make_orders({0.25, 0.75});
    auto gam = gamma_values(o, 4.0);
    std::mt19937 rng(3);
    for (size_t j = 0; j + 1 < gam.size(); ++j) {
        std::uniform_real_distribution<double> dist(gam[j] + 1e-6, gam[j + 1] - 1e-6);
        DegreeReport a = degree(8.0 * SERIES_PI * dist(rng), o);
        DegreeReport b = degree(8.0 * SERIES_PI * dist(rng), o);
        CHECK(a.degree == b.degree);
        CHECK(a.coefficients == b.coefficients);
    }
}

TEST_CASE("bar d dual exposure flags the known mismatches") {
    // expansion value at just above the first integer exponent vs the fixed
    // table: agree for m=3, disagree for m=2 and m>=4
    DegreeReport d2 = degree(8.5 * SERIES_PI, make_orders({0.5, 0.7}));
    CHECK(d2.paper_bar_d == 2);
    CHECK(d2.expansion_bar_d == 1);
    CHECK(d2.bar_d_mismatch);

    DegreeReport d3 = degree(8.5 * SERIES_PI, make_orders({0.5, 0.7, 0.9}));
    CHECK(d3.paper_bar_d == 2);
    CHECK(d3.expansion_bar_d == 2);
    CHECK_FALSE(d3.bar_d_mismatch);

    DegreeReport d4 = degree(8.5 * SERIES_PI, make_orders({0.5, 0.7, 0.9, 1.1}));
    CHECK(d4.paper_bar_d == 2);
    CHECK(d4.expansion_bar_d == 3);
    CHECK(d4.bar_d_mismatch);
}

TEST_CASE("existence verdict in the guaranteed window") {
    ExistenceReport r = existence_verdict(12.0 * SERIES_PI, make_orders({0.6, 0.9}));
    CHECK(r.verdict == Verdict::Exists);
    REQUIRE(r.degree.has_value());
    CHECK(*r.degree >= 1);
}

TEST_CASE("existence verdict on the excluded lattice") {
    ExistenceReport r = existence_verdict(8.0 * SERIES_PI, make_orders({0.6, 0.9}));
    CHECK(r.verdict == Verdict::Unknown);
}

TEST_CASE("existence verdict rejects the single-point case") {
    ExistenceReport r = existence_verdict(12.0 * SERIES_PI, make_orders({0.5}));
    CHECK(r.verdict == Verdict::NotCovered);
}

TEST_CASE("critical-count existence arithmetic") {
    MorseExistenceReport a = morse_existence_check(2, 0, 0, 0, 0);
    CHECK(a.d_8pi == -1);
    CHECK(a.exists);

    MorseExistenceReport b = morse_existence_check(MorseCounts{1, 0, {}, {}}, 0);
    CHECK(b.d_8pi == 0);
    CHECK_FALSE(b.exists);

    MorseExistenceReport c = morse_existence_check(MorseCounts{{}, {}, 0, 1}, 2);
    CHECK(c.bar_d == 2);
    CHECK(c.d_8pi_alt == 1);
    CHECK(c.exists);
}

TEST_CASE("critical-count existence check is pure") {
    for (int rep = 0; rep < 3; ++rep) {
        MorseExistenceReport r = morse_existence_check(3, 1, 2, 4, 2);
        CHECK(r.d_8pi == -1);
        CHECK(r.d_8pi_alt == 0);
        CHECK(r.inconsistent);
        CHECK(r.exists);
    }
}

TEST_CASE("order vectors are validated and sorted") {
    CHECK_THROWS_AS(make_orders({-1.0}), std::invalid_argument);
    OrderVector o = make_orders({0.9, 0.6});
    CHECK(o.alphas == std::vector<double>{0.6, 0.9});
}
