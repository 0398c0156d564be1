#pragma once
// Built-in models for the desk-scale experiments: the two-tank switched
// system (exact event arithmetic, optional actuation delay) and the
// LQR-based aircraft pitch controller (continuous or sampled-data with
// sensor delay), plus fixed-step ODE integrators.

#include <array>
#include <functional>
#include <optional>
#include <span>

#include "skoro/trace.hpp"

namespace skoro {

// ---------------------------------------------------------------------------
// Generic fixed-step integration

struct IntegratorConfig {
    enum class Method { euler, rk4 };
    Method method = Method::rk4;
    double step = 1e-3;
    double event_tol = 1e-9;
};

/// Fixed-step integration of x' = f(t, x); knots at every step. Aborts with
/// the blow-up time when the state leaves the finite range.
SampledTrace integrate(const std::function<void(double, std::span<const double>,
                                                std::span<double>)>& f,
                       std::vector<double> x0, double t0, double t_end,
                       const IntegratorConfig& cfg);

// ---------------------------------------------------------------------------
// Two-tank switched system

/// One inlet pipe alternates between two draining tanks: while filling tank
/// 1, h1' = i - d1 and h2' = -d2 (symmetrically for tank 2). The pipe
/// switches to tank j when h_j falls below l_j. The delayed variant starts
/// filling only delay(i) seconds after the level trips.
struct TwoTankModel {
    double l1 = 1.0, l2 = 1.0;      // switch levels
    double h1_0 = 2.0, h2_0 = 2.0;  // initial levels
    bool delayed = false;
    double delay_kappa = 0.5;               // delay(i) = kappa / i
    std::optional<double> delay_constant;   // overrides kappa when set

    double delay_for(double inflow) const;
};

/// Exact simulation under piecewise-constant inputs (i, d1, d2): guard
/// crossings are solved in closed form and emitted as knots alongside the
/// uniform output samples. Inputs are held constant (zero-order) between
/// input knots. Output dims: h1, h2.
SampledTrace simulate_two_tank(const TwoTankModel& m, double inflow, double d1,
                               double d2, double horizon, double output_period);

/// Trace-driven variant; input dims are (i, d1, d2), sampled with
/// zero-order hold at the input knots.
SampledTrace simulate_two_tank(const TwoTankModel& m, const SampledTrace& input,
                               double horizon, double output_period);

// ---------------------------------------------------------------------------
// LQR pitch controller

struct LqrPitchModel {
    // State [alpha q theta]; plant x' = A x + B u with u = theta_des - K x.
    std::array<std::array<double, 3>, 3> A{{{-0.313, 56.7, 0.0},
                                            {-0.0139, -0.426, 0.0},
                                            {0.0, 56.7, 0.0}}};
    std::array<double, 3> B{0.232, 0.0203, 0.0};
    std::array<double, 3> K{-0.6435, 169.6950, 7.0711};

    enum class Mode { continuous, sampled_data };
    Mode mode = Mode::continuous;
    double sample_dt = 0.1;      // controller period (sampled-data)
    double sensor_delay = 0.05;  // state measurement delay (sampled-data)
};

/// Output is the pitch angle theta. In sampled-data mode the control value
/// theta_des(t_k) - K x(t_k - sensor_delay) is held over [t_k, t_k + dt);
/// the integrator step must not exceed the controller period.
SampledTrace simulate_lqr_pitch(const LqrPitchModel& m, const PolygonalTrace& theta_des,
                                double horizon, const IntegratorConfig& cfg);

}  // namespace skoro
