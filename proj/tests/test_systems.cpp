#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "skoro/systems.hpp"
#include "skoro/trace.hpp"

using namespace skoro;

namespace {

PolygonalTrace constant_ref(double value, double T) {
    return linear_interpolate(SampledTrace({0.0, T}, {value, value}, 1));
}

}  // namespace

TEST_CASE("integrate: constant and linear fields are exact") {
    IntegratorConfig cfg;
    cfg.step = 0.1;
    auto zero = [](double, std::span<const double>, std::span<double> dx) { dx[0] = 0; };
    auto tr = integrate(zero, {3.0}, 0, 1, cfg);
    for (std::size_t k = 0; k < tr.size(); ++k) CHECK(tr.point(k)[0] == 3.0);

    auto one = [](double, std::span<const double>, std::span<double> dx) { dx[0] = 1; };
    for (auto method : {IntegratorConfig::Method::euler, IntegratorConfig::Method::rk4}) {
        cfg.method = method;
        auto line = integrate(one, {0.5}, 0, 1, cfg);
        CHECK(line.point(line.size() - 1)[0] == doctest::Approx(1.5).epsilon(1e-12));
    }
}

TEST_CASE("integrate: rk4 on x' = -x hits e^-1 to 1e-9") {
    IntegratorConfig cfg;
    cfg.step = 0.01;
    auto decay = [](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = -x[0];
    };
    auto tr = integrate(decay, {1.0}, 0, 1, cfg);
    CHECK(std::abs(tr.point(tr.size() - 1)[0] - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("integrate: rk4 convergence order is about 4") {
    auto decay = [](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = -x[0];
    };
    auto err = [&](double h) {
        IntegratorConfig cfg;
        cfg.step = h;
        auto tr = integrate(decay, {1.0}, 0, 1, cfg);
        return std::abs(tr.point(tr.size() - 1)[0] - std::exp(-1.0));
    };
    double order = std::log2(err(0.02) / err(0.01));
    CHECK(order > 3.7);
    CHECK(order < 4.3);
}

TEST_CASE("integrate: non-finite state aborts with the blow-up time") {
    IntegratorConfig cfg;
    cfg.step = 0.5;
    auto blow = [](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = x[0] * x[0] * 1e6;
    };
    CHECK_THROWS_AS(integrate(blow, {10.0}, 0, 10, cfg), std::runtime_error);
}

TEST_CASE("two-tank: pure drain with no switching") {
    TwoTankModel m;
    m.h1_0 = 5;
    m.h2_0 = 5;
    auto tr = simulate_two_tank(m, /*i=*/0.0, /*d1=*/1.0, /*d2=*/1.0, 2.0, 0.25);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        double t = tr.time(k);
        CHECK(tr.point(k)[0] == doctest::Approx(5.0 - t).epsilon(1e-12));
        CHECK(tr.point(k)[1] == doctest::Approx(5.0 - t).epsilon(1e-12));
    }
}

TEST_CASE("two-tank: a single switch at t = 2 exactly") {
    TwoTankModel m;
    m.h1_0 = 5;
    m.h2_0 = 3;
    m.l2 = 2;
    // fill-1: h2' = -0.5 from 3 hits 2 at t = 2; before that h1 rises.
    auto tr = simulate_two_tank(m, 1.0, 0.2, 0.5, 3.0, 0.5);
    auto poly = linear_interpolate(tr);
    CHECK(poly.sample_at(2.0)[1] == doctest::Approx(2.0).epsilon(1e-12));
    // After the switch tank 2 fills: slope flips to +0.5.
    CHECK(poly.sample_at(2.5)[1] == doctest::Approx(2.25).epsilon(1e-9));
    // And tank 1 starts draining at 0.2.
    CHECK(poly.sample_at(2.5)[0] == doctest::Approx(5 + 0.8 * 2 - 0.2 * 0.5).epsilon(1e-9));
}

TEST_CASE("two-tank: hand-derived multi-switch event chain") {
    // i=1, d1=d2=0.4, levels (1,1), start (2,2): switches at 2.5, 8.75,
    // 18.125; at T=20 the levels are (5.875, 2.125).
    TwoTankModel m;
    auto tr = simulate_two_tank(m, 1.0, 0.4, 0.4, 20.0, 0.5);
    auto poly = linear_interpolate(tr);

    CHECK(poly.sample_at(2.5)[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poly.sample_at(2.5)[0] == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(poly.sample_at(8.75)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poly.sample_at(8.75)[1] == doctest::Approx(4.75).epsilon(1e-12));
    CHECK(poly.sample_at(18.125)[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poly.sample_at(18.125)[0] == doctest::Approx(6.625).epsilon(1e-12));
    CHECK(poly.sample_at(20.0)[0] == doctest::Approx(5.875).epsilon(1e-12));
    CHECK(poly.sample_at(20.0)[1] == doctest::Approx(2.125).epsilon(1e-12));
}

TEST_CASE("two-tank: output period does not change values at common times") {
    TwoTankModel m;
    auto a = linear_interpolate(simulate_two_tank(m, 1.0, 0.4, 0.4, 20.0, 0.5));
    auto b = linear_interpolate(simulate_two_tank(m, 1.0, 0.4, 0.4, 20.0, 0.3));
    for (double t : a.timestamps()) {
        auto pa = a.sample_at(t);
        auto pb = b.sample_at(t);
        CHECK(std::abs(pa[0] - pb[0]) <= 1e-12);
        CHECK(std::abs(pa[1] - pb[1]) <= 1e-12);
    }
}

TEST_CASE("two-tank: zero delay equals the undelayed model exactly") {
    TwoTankModel plain;
    TwoTankModel delayed;
    delayed.delayed = true;
    delayed.delay_constant = 0.0;
    auto a = simulate_two_tank(plain, 1.0, 0.4, 0.4, 20.0, 0.25);
    auto b = simulate_two_tank(delayed, 1.0, 0.4, 0.4, 20.0, 0.25);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.time(k) == b.time(k));
        CHECK(a.point(k)[0] == b.point(k)[0]);
        CHECK(a.point(k)[1] == b.point(k)[1]);
    }
}

TEST_CASE("two-tank: positive delay shifts the switch") {
    TwoTankModel m;
    m.delayed = true;
    m.delay_kappa = 0.5;  // delay = 0.5 at i = 1
    auto tr = linear_interpolate(simulate_two_tank(m, 1.0, 0.4, 0.4, 6.0, 0.25));
    // Guard fires at 2.5 but filling starts at 3.0; h2 keeps draining.
    CHECK(tr.sample_at(3.0)[1] == doctest::Approx(1.0 - 0.4 * 0.5).epsilon(1e-12));
    CHECK(tr.sample_at(3.5)[1] > tr.sample_at(3.0)[1]);
}

TEST_CASE("two-tank: causality prefix property") {
    TwoTankModel m;
    auto full = linear_interpolate(simulate_two_tank(m, 1.0, 0.4, 0.4, 20.0, 0.25));
    auto half = linear_interpolate(simulate_two_tank(m, 1.0, 0.4, 0.4, 10.0, 0.25));
    for (double t : half.timestamps()) {
        auto pf = full.sample_at(t);
        auto ph = half.sample_at(t);
        CHECK(std::abs(pf[0] - ph[0]) <= 1e-12);
        CHECK(std::abs(pf[1] - ph[1]) <= 1e-12);
    }
}

TEST_CASE("two-tank: Zeno configuration aborts") {
    TwoTankModel m;
    m.h1_0 = 0.5;  // both tanks start below their switch levels
    m.h2_0 = 0.5;
    CHECK_THROWS_AS(simulate_two_tank(m, 0.1, 1.0, 1.0, 5.0, 0.1), std::runtime_error);
}

TEST_CASE("lqr: zero reference stays at equilibrium") {
    LqrPitchModel m;
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    auto tr = simulate_lqr_pitch(m, constant_ref(0.0, 5.0), 5.0, cfg);
    for (std::size_t k = 0; k < tr.size(); k += 100) CHECK(tr.point(k)[0] == 0.0);
}

TEST_CASE("lqr: step response is step-size consistent (rk4 order)") {
    LqrPitchModel m;
    IntegratorConfig c1, c2;
    c1.step = 1e-3;
    c2.step = 5e-4;
    auto a = linear_interpolate(simulate_lqr_pitch(m, constant_ref(0.2, 5.0), 5.0, c1));
    auto b = linear_interpolate(simulate_lqr_pitch(m, constant_ref(0.2, 5.0), 5.0, c2));
    double sup = 0;
    for (double t : a.timestamps())
        sup = std::max(sup, std::abs(a.sample_at(t)[0] - b.sample_at(t)[0]));
    CHECK(sup < 1e-8);
}

TEST_CASE("lqr: sampled-data mode validates the step and reaches steady state") {
    LqrPitchModel m;
    m.mode = LqrPitchModel::Mode::sampled_data;
    m.sample_dt = 0.1;
    IntegratorConfig cfg;
    cfg.step = 0.2;
    CHECK_THROWS_AS(simulate_lqr_pitch(m, constant_ref(0.2, 5.0), 5.0, cfg),
                    std::invalid_argument);
    cfg.step = 1e-3;
    auto tr = simulate_lqr_pitch(m, constant_ref(0.2, 5.0), 5.0, cfg);
    CHECK(std::isfinite(tr.point(tr.size() - 1)[0]));
}

TEST_CASE("lqr: causality prefix property within integration tolerance") {
    LqrPitchModel m;
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    auto ref = constant_ref(0.2, 6.0);
    auto full = linear_interpolate(simulate_lqr_pitch(m, ref, 6.0, cfg));
    auto half = linear_interpolate(simulate_lqr_pitch(m, ref, 3.0, cfg));
    for (double t : half.timestamps())
        CHECK(std::abs(full.sample_at(t)[0] - half.sample_at(t)[0]) < 1e-6);
}

TEST_CASE("lqr: coarser controller periods drift further from continuous") {
    LqrPitchModel cont;
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    auto ref = constant_ref(0.2, 5.0);
    auto base = linear_interpolate(simulate_lqr_pitch(cont, ref, 5.0, cfg));

    auto sup_gap = [&](double dt) {
        LqrPitchModel m;
        m.mode = LqrPitchModel::Mode::sampled_data;
        m.sample_dt = dt;
        auto tr = linear_interpolate(simulate_lqr_pitch(m, ref, 5.0, cfg));
        double sup = 0;
        for (double t : base.timestamps())
            sup = std::max(sup, std::abs(base.sample_at(t)[0] - tr.sample_at(t)[0]));
        return sup;
    };
    CHECK(sup_gap(0.1) < sup_gap(0.5));
}
