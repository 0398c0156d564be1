#include "skoro/systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace skoro {

SampledTrace integrate(const std::function<void(double, std::span<const double>,
                                                std::span<double>)>& f,
                       std::vector<double> x0, double t0, double t_end,
                       const IntegratorConfig& cfg) {
    if (!(cfg.step > 0)) throw std::invalid_argument("integrate: step must be positive");
    if (!(t_end > t0)) throw std::invalid_argument("integrate: empty time span");
    const std::size_t dim = x0.size();

    std::vector<double> ts{t0};
    std::vector<double> vals(x0);
    std::vector<double> x = std::move(x0);
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

    auto finite = [&](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
    };

    std::size_t steps = static_cast<std::size_t>(std::ceil((t_end - t0) / cfg.step - 1e-12));
    for (std::size_t s = 0; s < steps; ++s) {
        double t = t0 + s * cfg.step;
        double h = std::min(cfg.step, t_end - t);
        if (cfg.method == IntegratorConfig::Method::euler) {
            f(t, x, k1);
            for (std::size_t d = 0; d < dim; ++d) x[d] += h * k1[d];
        } else {
            f(t, x, k1);
            for (std::size_t d = 0; d < dim; ++d) tmp[d] = x[d] + 0.5 * h * k1[d];
            f(t + 0.5 * h, tmp, k2);
            for (std::size_t d = 0; d < dim; ++d) tmp[d] = x[d] + 0.5 * h * k2[d];
            f(t + 0.5 * h, tmp, k3);
            for (std::size_t d = 0; d < dim; ++d) tmp[d] = x[d] + h * k3[d];
            f(t + h, tmp, k4);
            for (std::size_t d = 0; d < dim; ++d)
                x[d] += h / 6.0 * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d]);
        }
        if (!finite(x))
            throw std::runtime_error("integrate: state blew up at t = " +
                                     std::to_string(t + h));
        ts.push_back(s + 1 == steps ? t_end : t + h);
        vals.insert(vals.end(), x.begin(), x.end());
    }
    return SampledTrace(std::move(ts), std::move(vals), dim);
}

// ---------------------------------------------------------------------------
// Two-tank

double TwoTankModel::delay_for(double inflow) const {
    if (delay_constant) return *delay_constant;
    return inflow > 0 ? delay_kappa / inflow : std::numeric_limits<double>::infinity();
}

namespace {

struct TankState {
    double t;
    double h1, h2;
    int mode;  // 1: filling tank 1, 2: filling tank 2
};

struct PendingSwitch {
    double at;
    int to_mode;
};

}  // namespace

SampledTrace simulate_two_tank(const TwoTankModel& m, const SampledTrace& input,
                               double horizon, double output_period) {
    if (input.dim() != 3)
        throw std::invalid_argument("two-tank input needs dims (i, d1, d2)");
    if (!(horizon > 0)) throw std::invalid_argument("two-tank: horizon must be positive");
    if (!(output_period > 0))
        throw std::invalid_argument("two-tank: output period must be positive");

    // Initial mode prefers tank 1 when both guards fire at the start.
    TankState st{0.0, m.h1_0, m.h2_0, 1};
    if (m.h1_0 >= m.l1 && m.h2_0 < m.l2) st.mode = 2;

    std::optional<PendingSwitch> pending;
    std::vector<double> knot_ts{0.0};
    std::vector<double> knot_vals{st.h1, st.h2};

    std::size_t input_idx = 0;  // zero-order hold: value of the latest knot <= t
    auto input_at = [&](double t) {
        while (input_idx + 1 < input.size() && input.time(input_idx + 1) <= t) ++input_idx;
        auto p = input.point(input_idx);
        return std::array<double, 3>{p[0], p[1], p[2]};
    };
    auto next_input_change = [&](double t) {
        for (std::size_t k = input_idx + 1; k < input.size(); ++k)
            if (input.time(k) > t) return input.time(k);
        return std::numeric_limits<double>::infinity();
    };

    double last_switch_time = -std::numeric_limits<double>::infinity();
    while (st.t < horizon) {
        auto [inflow, d1, d2] = input_at(st.t);
        double s1 = st.mode == 1 ? inflow - d1 : -d1;
        double s2 = st.mode == 2 ? inflow - d2 : -d2;

        // Guard crossing for the draining tank in closed form.
        double guard_time = std::numeric_limits<double>::infinity();
        if (!pending) {
            if (st.mode == 1) {
                if (st.h2 < m.l2) {
                    guard_time = st.t;  // already below: trips immediately
                } else if (s2 < 0) {
                    guard_time = st.t + (st.h2 - m.l2) / (-s2);
                }
            } else {
                if (st.h1 < m.l1) {
                    guard_time = st.t;
                } else if (s1 < 0) {
                    guard_time = st.t + (st.h1 - m.l1) / (-s1);
                }
            }
        }

        double stop = std::min({horizon, next_input_change(st.t),
                                pending ? pending->at : std::numeric_limits<double>::infinity(),
                                guard_time});

        if (stop > st.t) {
            double dt = stop - st.t;
            st.h1 += s1 * dt;
            st.h2 += s2 * dt;
            st.t = stop;
            knot_ts.push_back(st.t);
            knot_vals.push_back(st.h1);
            knot_vals.push_back(st.h2);
        }
        if (st.t >= horizon) break;

        if (pending && st.t >= pending->at) {
            if (st.t - last_switch_time < 1e-12 && last_switch_time >= 0)
                throw std::runtime_error("two-tank: Zeno switching at t = " +
                                         std::to_string(st.t));
            st.mode = pending->to_mode;
            last_switch_time = st.t;
            pending.reset();
        } else if (st.t >= guard_time) {
            int to = st.mode == 1 ? 2 : 1;
            double delay = m.delayed ? m.delay_for(inflow) : 0.0;
            if (delay > 0) {
                if (std::isfinite(delay)) pending = PendingSwitch{st.t + delay, to};
            } else {
                if (st.t - last_switch_time < 1e-12 && last_switch_time >= 0)
                    throw std::runtime_error("two-tank: Zeno switching at t = " +
                                             std::to_string(st.t));
                st.mode = to;
                last_switch_time = st.t;
            }
        }
    }

    // Merge the uniform output grid with the event knots.
    PolygonalTrace exact(SampledTrace(std::move(knot_ts), std::move(knot_vals), 2));
    std::vector<double> ts;
    for (double t = 0;; t += output_period) {
        if (t >= horizon) {
            ts.push_back(horizon);
            break;
        }
        ts.push_back(t);
    }
    for (double t : exact.timestamps())
        if (t < horizon) ts.push_back(t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    std::vector<double> vals;
    vals.reserve(ts.size() * 2);
    for (double t : ts) {
        auto p = exact.sample_at(std::min(t, exact.tdom().hi));
        vals.push_back(p[0]);
        vals.push_back(p[1]);
    }
    return SampledTrace(std::move(ts), std::move(vals), 2);
}

SampledTrace simulate_two_tank(const TwoTankModel& m, double inflow, double d1,
                               double d2, double horizon, double output_period) {
    SampledTrace input({0.0, horizon}, {inflow, d1, d2, inflow, d1, d2}, 3);
    return simulate_two_tank(m, input, horizon, output_period);
}

// ---------------------------------------------------------------------------
// LQR pitch controller

SampledTrace simulate_lqr_pitch(const LqrPitchModel& m, const PolygonalTrace& theta_des,
                                double horizon, const IntegratorConfig& cfg) {
    if (theta_des.dim() != 1)
        throw std::invalid_argument("lqr: theta_des must be one-dimensional");
    if (theta_des.tdom().lo > 0 || theta_des.tdom().hi < horizon)
        throw std::invalid_argument("lqr: theta_des must cover [0, horizon]");
    if (!(cfg.step > 0)) throw std::invalid_argument("lqr: step must be positive");

    auto closed_loop = [&](double t, std::span<const double> x, std::span<double> dx) {
        double ref = theta_des.sample_at(t)[0];
        double u = ref - (m.K[0] * x[0] + m.K[1] * x[1] + m.K[2] * x[2]);
        for (int r = 0; r < 3; ++r)
            dx[r] = m.A[r][0] * x[0] + m.A[r][1] * x[1] + m.A[r][2] * x[2] + m.B[r] * u;
    };

    std::vector<double> theta_ts, theta_vals;
    if (m.mode == LqrPitchModel::Mode::continuous) {
        SampledTrace full = integrate(closed_loop, {0, 0, 0}, 0.0, horizon, cfg);
        for (std::size_t k = 0; k < full.size(); ++k) {
            theta_ts.push_back(full.time(k));
            theta_vals.push_back(full.point(k)[2]);
        }
        return SampledTrace(std::move(theta_ts), std::move(theta_vals), 1);
    }

    if (cfg.step > m.sample_dt)
        throw std::invalid_argument("lqr: integrator step exceeds the controller period");

    // Sampled-data: hold u over each controller period; the sensed state is
    // delayed, interpolated from the integration history (x(0) before t =
    // delay).
    std::vector<double> hist_ts{0.0};
    std::vector<std::array<double, 3>> hist_x{{0, 0, 0}};
    auto delayed_state = [&](double t) -> std::array<double, 3> {
        double td = t - m.sensor_delay;
        if (td <= 0) return hist_x.front();
        auto it = std::upper_bound(hist_ts.begin(), hist_ts.end(), td);
        std::size_t k = static_cast<std::size_t>(it - hist_ts.begin());
        if (k >= hist_ts.size()) return hist_x.back();
        if (k == 0) return hist_x.front();
        double w = (td - hist_ts[k - 1]) / (hist_ts[k] - hist_ts[k - 1]);
        std::array<double, 3> out;
        for (int d = 0; d < 3; ++d)
            out[d] = hist_x[k - 1][d] + w * (hist_x[k][d] - hist_x[k - 1][d]);
        return out;
    };

    std::array<double, 3> x{0, 0, 0};
    theta_ts.push_back(0.0);
    theta_vals.push_back(x[2]);
    double t = 0;
    while (t < horizon - 1e-12) {
        double period_end = std::min(t + m.sample_dt, horizon);
        // Absorb accumulated rounding into the final period.
        if (horizon - period_end < 1e-9 * std::max(1.0, horizon)) period_end = horizon;
        auto xs = delayed_state(t);
        double u = theta_des.sample_at(t)[0] -
                   (m.K[0] * xs[0] + m.K[1] * xs[1] + m.K[2] * xs[2]);

        auto held = [&](double, std::span<const double> s, std::span<double> dx) {
            for (int r = 0; r < 3; ++r)
                dx[r] = m.A[r][0] * s[0] + m.A[r][1] * s[1] + m.A[r][2] * s[2] + m.B[r] * u;
        };
        IntegratorConfig sub = cfg;
        SampledTrace piece = integrate(held, {x[0], x[1], x[2]}, t, period_end, sub);
        for (std::size_t k = 1; k < piece.size(); ++k) {
            auto p = piece.point(k);
            hist_ts.push_back(piece.time(k));
            hist_x.push_back({p[0], p[1], p[2]});
            theta_ts.push_back(piece.time(k));
            theta_vals.push_back(p[2]);
        }
        auto last = piece.point(piece.size() - 1);
        x = {last[0], last[1], last[2]};
        t = period_end;
    }
    return SampledTrace(std::move(theta_ts), std::move(theta_vals), 1);
}

}  // namespace skoro
