#include <doctest.h>

#include <cmath>
#include <random>

#include "skoro/skorokhod.hpp"
#include "skoro/trace.hpp"
#include "oracle.hpp"

using namespace skoro;

namespace {

PolygonalTrace constant_trace(double value, double t0 = 0, double t1 = 1) {
    return linear_interpolate(SampledTrace({t0, t1}, {value, value}, 1));
}

// 0 before the ramp, linear rise to 1 across [r0, r0 + 0.1], 1 after,
// inside the domain [0, 2].
PolygonalTrace shifted_ramp(double r0) {
    return linear_interpolate(
        SampledTrace({0.0, r0, r0 + 0.1, 2.0}, {0, 0, 1, 1}, 1));
}

}  // namespace

TEST_CASE("check_within identity and constant gap") {
    auto a = constant_trace(0.0);
    auto b = constant_trace(1.0);
    CHECK(check_within(a, a, 0.0));
    CHECK_FALSE(check_within(a, b, 0.5));
    CHECK(check_within(a, b, 1.0));
}

TEST_CASE("check_within argument validation") {
    auto a = constant_trace(0.0);
    auto two = linear_interpolate(SampledTrace({0, 1}, {0, 0, 1, 1}, 2));
    CHECK_THROWS_AS(check_within(a, two, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(check_within(a, a, -0.5), std::invalid_argument);
}

TEST_CASE("shifted ramp pair: thresholds from the grid oracle") {
    auto a = shifted_ramp(1.0);
    auto b = shifted_ramp(1.3);

    CHECK(check_within(a, b, 0.35));
    CHECK_FALSE(check_within(a, b, 0.25));

    // Grid oracle locates the threshold; the exact value is 3/11 (trade the
    // remaining time shift against ramp misalignment at slope 10).
    double oracle = testing::grid_oracle_distance(a, b);
    double res = testing::grid_resolution(a, b);
    CHECK(oracle == doctest::Approx(3.0 / 11.0).epsilon(0.08));

    auto d = compute_distance(a, b);
    CHECK(std::abs(d.distance - oracle) <= res + 2 * d.tolerance);
    CHECK(std::abs(d.distance - 3.0 / 11.0) <= 2e-3);
}

TEST_CASE("compute_distance basics") {
    auto a = constant_trace(0.0);
    SUBCASE("identical traces") {
        auto d = compute_distance(a, a);
        CHECK(d.distance <= d.tolerance);
    }
    SUBCASE("constant offset attained by the identity retiming") {
        auto b = constant_trace(3.0);
        auto d = compute_distance(a, b, WindowParam::unbounded(), 1e-5);
        CHECK(std::abs(d.distance - 3.0) <= 1e-4);
    }
}

TEST_CASE("sampling_adjusted") {
    CHECK(sampling_adjusted(1.0, 0.0) == 1.0);
    CHECK(sampling_adjusted(1.0, 0.05) == doctest::Approx(1.1));
    CHECK(sampling_adjusted(0.0, 0.2) == doctest::Approx(0.4));
    CHECK_THROWS_AS(sampling_adjusted(-1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(sampling_adjusted(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("oracle equivalence on random pairs") {
    std::mt19937_64 rng(101);
    testing::TraceGenOptions opt;
    const double tol = 1e-4;
    for (int rep = 0; rep < 40; ++rep) {
        opt.dim = 1 + rep % 3;
        auto a = testing::random_trace(rng, opt);
        auto b = testing::random_trace(rng, opt);
        double oracle = testing::grid_oracle_distance(a, b);
        double res = testing::grid_resolution(a, b);
        auto d = compute_distance(a, b, WindowParam::unbounded(), tol);
        INFO("rep ", rep, " computed ", d.distance, " oracle ", oracle, " res ", res);
        CHECK(std::abs(d.distance - oracle) <= res + 2 * tol);
    }
}

TEST_CASE("delta monotonicity of check_within") {
    std::mt19937_64 rng(55);
    testing::TraceGenOptions opt;
    opt.dim = 2;
    std::uniform_real_distribution<double> ud(0.0, 1.5);
    for (int rep = 0; rep < 25; ++rep) {
        auto a = testing::random_trace(rng, opt);
        auto b = testing::random_trace(rng, opt);
        double d1 = ud(rng), d2 = ud(rng);
        if (d1 > d2) std::swap(d1, d2);
        if (check_within(a, b, d1)) CHECK(check_within(a, b, d2));
    }
}

TEST_CASE("distance bracket invariants") {
    std::mt19937_64 rng(77);
    testing::TraceGenOptions opt;
    opt.dim = 2;
    const double tol = 1e-4;
    for (int rep = 0; rep < 15; ++rep) {
        auto a = testing::random_trace(rng, opt);
        auto b = testing::random_trace(rng, opt);
        auto d = compute_distance(a, b, WindowParam::unbounded(), tol);
        double lo = endpoint_lower_bound(a, b);
        CHECK(d.distance >= lo - tol);
        CHECK(d.distance <= pointwise_distance(a, b) + 2 * tol);
        CHECK(check_within(a, b, d.distance + d.tolerance));
        // The lower invariant is vacuous when the distance sits exactly at
        // the forced endpoint bound (nothing below it was ever refutable).
        if (d.distance - d.tolerance > lo + 1e-9)
            CHECK_FALSE(check_within(a, b, d.distance - d.tolerance));
    }
}

TEST_CASE("symmetry of the unbounded distance") {
    std::mt19937_64 rng(99);
    testing::TraceGenOptions opt;
    const double tol = 1e-5;
    for (int rep = 0; rep < 10; ++rep) {
        auto a = testing::random_trace(rng, opt);
        auto b = testing::random_trace(rng, opt);
        auto dab = compute_distance(a, b, WindowParam::unbounded(), tol);
        auto dba = compute_distance(b, a, WindowParam::unbounded(), tol);
        CHECK(std::abs(dab.distance - dba.distance) <= 2 * tol + 1e-9);
    }
}

TEST_CASE("window monotonicity and upper bounds") {
    std::mt19937_64 rng(123);
    testing::TraceGenOptions opt;
    opt.min_segments = 12;
    opt.max_segments = 12;
    opt.min_gap_fraction = 0.04;
    const double tol = 1e-5;
    for (int rep = 0; rep < 10; ++rep) {
        auto a = testing::random_trace(rng, opt);
        auto b = testing::random_trace(rng, opt);
        auto d1 = compute_distance(a, b, WindowParam::bounded(1), tol);
        auto d3 = compute_distance(a, b, WindowParam::bounded(3), tol);
        auto dinf = compute_distance(a, b, WindowParam::unbounded(), tol);
        CHECK(d3.distance <= d1.distance + 2 * tol);
        CHECK(dinf.distance <= d3.distance + 2 * tol);
    }
}

TEST_CASE("windowed check refuses incompatible segment counts") {
    auto a = linear_interpolate(SampledTrace({0, 0.2, 0.4, 0.6, 0.8, 1.0},
                                             {0, 0, 0, 0, 0, 0}, 1));
    auto b = constant_trace(0.0);
    // 5 vs 1 segments: index difference 4 > W = 2 at the terminal cell.
    CHECK_FALSE(check_within(a, b, 100.0, WindowParam::bounded(2)));
    CHECK_THROWS_AS(compute_distance(a, b, WindowParam::bounded(2)),
                    std::invalid_argument);
    // A window that can span the difference works.
    CHECK(check_within(a, b, 100.0, WindowParam::bounded(4)));
}

TEST_CASE("bit determinism") {
    std::mt19937_64 rng(7);
    testing::TraceGenOptions opt;
    opt.dim = 2;
    auto a = testing::random_trace(rng, opt);
    auto b = testing::random_trace(rng, opt);
    auto d1 = compute_distance(a, b);
    auto d2 = compute_distance(a, b);
    CHECK(d1.distance == d2.distance);
    CHECK(d1.tolerance == d2.tolerance);
    CHECK(d1.monitor_calls == d2.monitor_calls);
}

TEST_CASE("single-segment traces use the same cell machinery") {
    auto a = linear_interpolate(SampledTrace({0, 1}, {0, 1}, 1));
    auto b = linear_interpolate(SampledTrace({0, 1}, {0.5, 1.5}, 1));
    auto d = compute_distance(a, b, WindowParam::bounded(1), 1e-6);
    CHECK(std::abs(d.distance - 0.5) <= 1e-4);
}

TEST_CASE("unequal domains use the affine alignment upper bound") {
    auto a = linear_interpolate(SampledTrace({0, 1}, {0, 1}, 1));
    auto b = linear_interpolate(SampledTrace({0, 1.4}, {0, 1}, 1));
    auto d = compute_distance(a, b, WindowParam::unbounded(), 1e-5);
    // Forced endpoint time gap is 0.4 and the affine alignment attains it.
    CHECK(std::abs(d.distance - 0.4) <= 1e-3);
    double oracle = testing::grid_oracle_distance(a, b);
    CHECK(std::abs(d.distance - oracle) <= testing::grid_resolution(a, b) + 1e-3);
}

TEST_CASE("propositional check and distance") {
    using L = std::set<std::string>;
    PropositionalTrace p({0, 1, 2}, {L{"Q"}, L{"R"}});
    PropositionalTrace q({0, 1.2, 2}, {L{"Q"}, L{"R"}});
    CHECK(prop_check_within(p, q, 0.25));
    CHECK_FALSE(prop_check_within(p, q, 0.15));
    CHECK(std::abs(prop_compute_distance(p, q) - 0.2) <= 1e-4);

    PropositionalTrace r({0, 1, 2}, {L{"R"}, L{"Q"}});
    CHECK(std::isinf(prop_compute_distance(p, r)));
    CHECK_FALSE(prop_check_within(p, r, 10.0));
}
