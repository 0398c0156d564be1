#include "skoro/harness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "skoro/systems.hpp"

namespace skoro {

double BasisFunction::eval(double t, double horizon) const {
    switch (kind) {
        case Kind::constant:
            return 1.0;
        case Kind::step:
            return t >= at ? 1.0 : 0.0;
        case Kind::pwc_cell: {
            double cell = horizon / static_cast<double>(count);
            auto k = static_cast<std::size_t>(std::min(t / cell, count - 1.0));
            return k == index ? 1.0 : 0.0;
        }
        case Kind::pwl_hat: {
            // Hat centered at node `index` of `count` nodes spanning [0, T].
            double node_gap = horizon / static_cast<double>(count - 1);
            double center = node_gap * static_cast<double>(index);
            double w = 1.0 - std::abs(t - center) / node_gap;
            return w > 0 ? w : 0.0;
        }
    }
    return 0.0;
}

void InputParameterization::validate() const {
    if (names.size() != basis.size() || names.size() != bounds.size())
        throw std::invalid_argument("parameterization: |P| = |F| = |B| violated");
    if (names.empty()) throw std::invalid_argument("parameterization: no parameters");
    if (!(horizon > 0)) throw std::invalid_argument("parameterization: horizon must be > 0");
    if (!(sample_period > 0))
        throw std::invalid_argument("parameterization: sample period must be > 0");
    for (const auto& b : bounds)
        if (b.empty()) throw std::invalid_argument("parameterization: empty bound interval");
    for (const auto& f : basis) {
        if (f.dim >= input_dim)
            throw std::invalid_argument("parameterization: basis dim out of range");
        if (f.kind == BasisFunction::Kind::pwc_cell && f.index >= f.count)
            throw std::invalid_argument("parameterization: cell index out of range");
        if (f.kind == BasisFunction::Kind::pwl_hat && (f.count < 2 || f.index >= f.count))
            throw std::invalid_argument("parameterization: node index out of range");
    }
}

SampledTrace synthesize_input(const std::vector<double>& values,
                              const InputParameterization& ip) {
    ip.validate();
    if (values.size() != ip.names.size())
        throw std::invalid_argument("synthesize_input: expected " +
                                    std::to_string(ip.names.size()) + " values, got " +
                                    std::to_string(values.size()));
    std::vector<double> clamped = values;
    for (std::size_t i = 0; i < clamped.size(); ++i) {
        double c = std::clamp(clamped[i], ip.bounds[i].lo, ip.bounds[i].hi);
        if (c != clamped[i]) {
            std::cerr << "warning: parameter " << ip.names[i] << " = " << clamped[i]
                      << " clamped to [" << ip.bounds[i].lo << ", " << ip.bounds[i].hi
                      << "]\n";
            clamped[i] = c;
        }
    }

    std::vector<double> ts;
    for (double t = 0;; t += ip.sample_period) {
        if (t >= ip.horizon) {
            ts.push_back(ip.horizon);
            break;
        }
        ts.push_back(t);
    }
    std::vector<double> vals(ts.size() * ip.input_dim, 0.0);
    for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t i = 0; i < clamped.size(); ++i)
            vals[k * ip.input_dim + ip.basis[i].dim] +=
                clamped[i] * ip.basis[i].eval(ts[k], ip.horizon);
    return SampledTrace(std::move(ts), std::move(vals), ip.input_dim);
}

std::vector<double> pick_random_input(const InputParameterization& ip,
                                      std::uint64_t seed) {
    ip.validate();
    std::mt19937_64 rng(seed);
    std::vector<double> out(ip.names.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uniform_real_distribution<double> u(ip.bounds[i].lo, ip.bounds[i].hi);
        out[i] = u(rng);
    }
    return out;
}

namespace {

ScalingProfile effective_scaling(const ScalingProfile& s, std::size_t dim) {
    ScalingProfile out = s;
    if (out.dim_factors.empty()) out.dim_factors.assign(dim, 1.0);
    return out;
}

}  // namespace

double cost(const std::vector<double>& values, const InputParameterization& ip,
            const SystemModel& s1, const SystemModel& s2, const TestConfig& cfg) {
    if (s1.output_dim() != s2.output_dim())
        throw std::invalid_argument("cost: systems disagree on output dimension");
    SampledTrace u = synthesize_input(values, ip);
    SampledTrace y1 = [&] {
        try {
            return s1.simulate(u, ip.horizon);
        } catch (const std::exception& e) {
            throw SimulationError(std::string("system 1: ") + e.what(), values);
        }
    }();
    SampledTrace y2 = [&] {
        try {
            return s2.simulate(u, ip.horizon);
        } catch (const std::exception& e) {
            throw SimulationError(std::string("system 2: ") + e.what(), values);
        }
    }();
    ScalingProfile sc = effective_scaling(cfg.scaling, s1.output_dim());
    PolygonalTrace p1 = scale(linear_interpolate(std::move(y1)), sc);
    PolygonalTrace p2 = scale(linear_interpolate(std::move(y2)), sc);
    auto d = compute_distance(p1, p2, cfg.window, cfg.distance_tol);
    return sampling_adjusted(d.distance, cfg.sampling_error);
}

TestReport run_conformance_test(const SystemModel& s1, const SystemModel& s2,
                                const InputParameterization& ip, const TestConfig& cfg) {
    ip.validate();
    if (!(cfg.delta_bound > 0))
        throw std::invalid_argument("run_conformance_test: delta bound must be > 0");
    if (cfg.max_iterations < 1)
        throw std::invalid_argument("run_conformance_test: need at least one iteration");

    TestReport report;
    report.max_cost = -std::numeric_limits<double>::infinity();

    // The search keeps proposing inputs while maxCost < delta and the budget
    // lasts; a violation stops it immediately.
    struct StopSearch {};
    auto objective = [&](std::span<const double> v) -> double {
        if (report.iterations >= cfg.max_iterations) throw StopSearch{};
        std::vector<double> values(v.begin(), v.end());
        if (cfg.penalty_bounds) {
            double violation = 0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                violation += std::max(0.0, ip.bounds[i].lo - values[i]);
                violation += std::max(0.0, values[i] - ip.bounds[i].hi);
            }
            if (violation > 0) {
                report.log.push_back({report.iterations, values, -violation, false});
                ++report.iterations;
                return -violation;
            }
        }
        IterationRecord rec;
        rec.iteration = report.iterations;
        rec.values = values;
        double c;
        try {
            c = cost(values, ip, s1, s2, cfg);
        } catch (const SimulationError& e) {
            std::cerr << "simulation failure at iteration " << report.iterations << ": "
                      << e.what() << "\n";
            rec.failed = true;
            rec.cost = -std::numeric_limits<double>::infinity();
            report.log.push_back(rec);
            ++report.iterations;
            ++report.failures;
            return -std::numeric_limits<double>::infinity();
        }
        rec.cost = c;
        report.log.push_back(rec);
        ++report.iterations;
        if (c > report.max_cost) {
            report.max_cost = c;
            report.best_values = values;
        }
        if (report.max_cost > cfg.delta_bound) throw StopSearch{};
        return c;
    };

    std::vector<Interval> search_bounds = ip.bounds;
    if (cfg.penalty_bounds)
        for (auto& b : search_bounds) {
            double margin = 0.2 * b.width();
            b = {b.lo - margin, b.hi + margin};
        }

    std::vector<double> start = pick_random_input(ip, cfg.seed);
    try {
        nelder_mead_maximize(objective, search_bounds, cfg.max_iterations, cfg.seed,
                             &start);
    } catch (const StopSearch&) {
        // Budget exhausted or violation found.
    }

    report.violation_found = report.max_cost > cfg.delta_bound;
    if (report.best_values.empty()) report.best_values = start;
    report.best_input = synthesize_input(report.best_values, ip);
    return report;
}

// ---------------------------------------------------------------------------
// JSON config / report

namespace {

using nlohmann::json;

BasisFunction parse_basis(const json& j) {
    BasisFunction f;
    std::string kind = j.at("kind").get<std::string>();
    f.dim = j.value("dim", 0);
    if (kind == "constant") {
        f.kind = BasisFunction::Kind::constant;
    } else if (kind == "step") {
        f.kind = BasisFunction::Kind::step;
        f.at = j.at("at").get<double>();
    } else if (kind == "pwc") {
        f.kind = BasisFunction::Kind::pwc_cell;
        f.index = j.at("index").get<std::size_t>();
        f.count = j.at("count").get<std::size_t>();
    } else if (kind == "pwl") {
        f.kind = BasisFunction::Kind::pwl_hat;
        f.index = j.at("index").get<std::size_t>();
        f.count = j.at("count").get<std::size_t>();
    } else {
        throw std::invalid_argument("unknown basis kind '" + kind + "'");
    }
    return f;
}

std::shared_ptr<SystemModel> parse_system(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    json params = j.value("params", json::object());
    if (kind == "tank" || kind == "tank-delayed") {
        TwoTankModel m;
        m.delayed = kind == "tank-delayed";
        m.l1 = params.value("l1", m.l1);
        m.l2 = params.value("l2", m.l2);
        m.h1_0 = params.value("h1_0", m.h1_0);
        m.h2_0 = params.value("h2_0", m.h2_0);
        m.delay_kappa = params.value("delay_kappa", m.delay_kappa);
        if (params.contains("delay_constant"))
            m.delay_constant = params["delay_constant"].get<double>();
        double period = params.value("output_period", 0.05);
        return std::make_shared<CallbackSystem>(
            2, [m, period](const SampledTrace& u, double T) {
                return simulate_two_tank(m, u, T, period);
            });
    }
    if (kind == "lqr") {
        LqrPitchModel m;
        std::string mode = params.value("mode", std::string("continuous"));
        if (mode == "sampled") m.mode = LqrPitchModel::Mode::sampled_data;
        m.sample_dt = params.value("sample_dt", m.sample_dt);
        m.sensor_delay = params.value("sensor_delay", m.sensor_delay);
        IntegratorConfig cfg;
        cfg.step = params.value("step", cfg.step);
        return std::make_shared<CallbackSystem>(
            1, [m, cfg](const SampledTrace& u, double T) {
                return simulate_lqr_pitch(m, linear_interpolate(u, 0), T, cfg);
            });
    }
    throw std::invalid_argument("unknown system kind '" + kind + "'");
}

}  // namespace

ConformanceSetup load_conformance_config(const std::string& json_text) {
    json j = json::parse(json_text);
    ConformanceSetup setup;

    setup.ip.horizon = j.at("horizon").get<double>();
    setup.ip.sample_period = j.value("sample_period", 0.1);
    setup.ip.input_dim = j.value("input_dim", 1);
    for (const auto& p : j.at("params")) {
        setup.ip.names.push_back(p.at("name").get<std::string>());
        setup.ip.basis.push_back(parse_basis(p.at("basis")));
        auto b = p.at("bounds");
        setup.ip.bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    }
    setup.ip.validate();

    setup.cfg.delta_bound = j.at("delta").get<double>();
    setup.cfg.max_iterations = j.value("max_iterations", 100);
    setup.cfg.seed = j.value("seed", 0);
    setup.cfg.distance_tol = j.value("tolerance", 1e-4);
    setup.cfg.sampling_error = j.value("dsamp", 0.0);
    setup.cfg.penalty_bounds = j.value("penalty_bounds", false);
    if (j.contains("window")) {
        if (j["window"].is_number_integer())
            setup.cfg.window = WindowParam::bounded(j["window"].get<std::int64_t>());
        else
            setup.cfg.window = WindowParam::unbounded();
    }
    if (j.contains("scaling")) {
        setup.cfg.scaling.time_factor = j["scaling"].value("time", 1.0);
        if (j["scaling"].contains("dims"))
            setup.cfg.scaling.dim_factors =
                j["scaling"]["dims"].get<std::vector<double>>();
    }
    setup.system1 = parse_system(j.at("system1"));
    setup.system2 = parse_system(j.at("system2"));
    return setup;
}

std::string report_to_json(const TestReport& report) {
    json j;
    j["verdict"] = report.violation_found ? "violation" : "budget-exhausted";
    j["max_cost"] = report.max_cost;
    j["iterations"] = report.iterations;
    j["failures"] = report.failures;
    j["best_values"] = report.best_values;
    return j.dump(2);
}

std::string report_cost_log_csv(const TestReport& report) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "iteration,cost,failed";
    if (!report.log.empty())
        for (std::size_t i = 0; i < report.log.front().values.size(); ++i) out << ",p" << i;
    out << "\n";
    for (const auto& rec : report.log) {
        out << rec.iteration << "," << rec.cost << "," << (rec.failed ? 1 : 0);
        for (double v : rec.values) out << "," << v;
        out << "\n";
    }
    return out.str();
}

}  // namespace skoro
