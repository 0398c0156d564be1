// skoro: trace conformance toolkit.
//
// Subcommands: dist, check, relax, eval, conform, simulate. Exit codes:
// 0 ok / sat / violation found, 3 negative verdict, 2 usage or input error,
// 1 internal failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "skoro/csv.hpp"
#include "skoro/evaluate.hpp"
#include "skoro/formula.hpp"
#include "skoro/harness.hpp"
#include "skoro/relax.hpp"
#include "skoro/skorokhod.hpp"
#include "skoro/systems.hpp"
#include "skoro/trace.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNegative = 3;

skoro::WindowParam parse_window(const std::string& w) {
    if (w.empty() || w == "unbounded" || w == "inf")
        return skoro::WindowParam::unbounded();
    return skoro::WindowParam::bounded(std::stoll(w));
}

// "--scale time=2,0=0.08,1=1.0": time factor plus per-dimension factors.
skoro::ScalingProfile parse_scale(const std::string& text, std::size_t dim) {
    skoro::ScalingProfile s{1.0, std::vector<double>(dim, 1.0)};
    if (text.empty()) return s;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad --scale entry '" + item + "'");
        std::string key = item.substr(0, eq);
        double value = std::stod(item.substr(eq + 1));
        if (key == "time") {
            s.time_factor = value;
        } else {
            std::size_t d = std::stoul(key);
            if (d >= dim)
                throw std::invalid_argument("--scale dimension " + key + " out of range");
            s.dim_factors[d] = value;
        }
    }
    return s;
}

skoro::PredicateTable load_predicates(const std::string& path) {
    skoro::PredicateTable table;
    if (path.empty()) return table;
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open predicate file: " + path);
    json j = json::parse(in);
    for (auto it = j.begin(); it != j.end(); ++it) {
        skoro::NamedPredicate p;
        p.name = it.key();
        skoro::Poly poly;
        auto coeffs = it.value().at("coeffs").get<std::vector<double>>();
        for (std::size_t k = 0; k < coeffs.size(); ++k)
            if (coeffs[k] != 0) poly.linear["s" + std::to_string(k)] = coeffs[k];
        poly.constant = it.value().value("const", 0.0);
        std::string rel = it.value().value("rel", std::string(">="));
        if (rel == ">=")
            p.rel = skoro::Rel::ge;
        else if (rel == ">")
            p.rel = skoro::Rel::gt;
        else if (rel == "<=")
            p.rel = skoro::Rel::le;
        else if (rel == "<")
            p.rel = skoro::Rel::lt;
        else
            throw std::invalid_argument("bad predicate relation '" + rel + "'");
        p.fn = skoro::ConstraintFn::from_poly(poly);
        table.push_back(std::move(p));
    }
    return table;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_dist(const std::string& file_a, const std::string& file_b,
             const std::string& window, double tol, const std::string& scale,
             double dsamp) {
    auto a = skoro::linear_interpolate(skoro::read_csv_file(file_a));
    auto b = skoro::linear_interpolate(skoro::read_csv_file(file_b));
    auto sc = parse_scale(scale, a.dim());
    a = skoro::scale(a, sc);
    b = skoro::scale(b, sc);
    auto d = skoro::compute_distance(a, b, parse_window(window), tol);
    json out;
    out["distance"] = d.distance;
    out["adjusted_distance"] = skoro::sampling_adjusted(d.distance, dsamp);
    out["tolerance"] = d.tolerance;
    out["window"] = d.window.to_string();
    out["monitor_calls"] = d.monitor_calls;
    out["monitor_seconds_total"] = d.wall_seconds;
    out["monitor_seconds_per_call"] = d.wall_seconds_per_call;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_check(const std::string& file_a, const std::string& file_b, double delta,
              const std::string& window, const std::string& scale) {
    auto a = skoro::linear_interpolate(skoro::read_csv_file(file_a));
    auto b = skoro::linear_interpolate(skoro::read_csv_file(file_b));
    auto sc = parse_scale(scale, a.dim());
    a = skoro::scale(a, sc);
    b = skoro::scale(b, sc);
    bool ok = skoro::check_within(a, b, delta, parse_window(window));
    std::cout << (ok ? "within" : "exceeds") << " " << delta << "\n";
    return ok ? kExitOk : kExitNegative;
}

int cmd_relax(const std::string& formula_file, double delta,
              const std::string& hull_a, const std::string& hull_b,
              std::optional<std::pair<double, double>> interval,
              const std::string& jmap_file, bool no_analytic) {
    auto phi = skoro::parse_formula(read_file(formula_file));
    auto nnf = skoro::to_nnf(phi);

    skoro::RelaxationContext ctx;
    ctx.delta = delta;
    ctx.use_analytic_k = !no_analytic;
    if (!hull_a.empty()) {
        auto a = skoro::linear_interpolate(skoro::read_csv_file(hull_a));
        auto b = skoro::linear_interpolate(skoro::read_csv_file(hull_b));
        ctx.time_hull = {std::min(a.tdom().lo, b.tdom().lo),
                         std::max(a.tdom().hi, b.tdom().hi)};
        for (std::size_t k = 0; k < a.dim(); ++k) {
            double lo = a.point(0)[k], hi = lo;
            for (std::size_t i = 0; i < a.size(); ++i) {
                lo = std::min(lo, a.point(i)[k]);
                hi = std::max(hi, a.point(i)[k]);
            }
            for (std::size_t i = 0; i < b.size(); ++i) {
                lo = std::min(lo, b.point(i)[k]);
                hi = std::max(hi, b.point(i)[k]);
            }
            ctx.signal_hull["s" + std::to_string(k)] = {lo, hi};
        }
    } else if (interval) {
        ctx.time_hull = {interval->first, interval->second};
    } else {
        throw std::invalid_argument("relax needs --hull-from or --interval");
    }
    if (!jmap_file.empty()) {
        json j = json::parse(read_file(jmap_file));
        for (auto it = j.begin(); it != j.end(); ++it)
            ctx.signal_hull[it.key()] = {it.value().at(0).get<double>(),
                                         it.value().at(1).get<double>()};
    }
    auto relaxed = skoro::relax(nnf, ctx);
    std::cout << skoro::to_string(relaxed) << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& formula_file, const std::string& trace_file,
             const std::string& preds_file) {
    auto phi = skoro::parse_formula(read_file(formula_file));
    auto tr = skoro::linear_interpolate(skoro::read_csv_file(trace_file));
    auto preds = load_predicates(preds_file);
    auto res = skoro::evaluate(phi, tr, preds);
    if (res.sat) {
        std::cout << "sat";
        for (const auto& [var, t] : res.witness) std::cout << " " << var << "=" << t;
        std::cout << "\n";
        return kExitOk;
    }
    std::cout << "unsat\n";
    return kExitNegative;
}

int cmd_conform(const std::string& config_file, const std::string& out_prefix) {
    auto setup = skoro::load_conformance_config(read_file(config_file));
    auto report = skoro::run_conformance_test(*setup.system1, *setup.system2, setup.ip,
                                              setup.cfg);
    std::string prefix = out_prefix.empty() ? "conformance_report" : out_prefix;
    {
        std::ofstream out(prefix + ".json");
        out << skoro::report_to_json(report) << "\n";
    }
    {
        std::ofstream out(prefix + "_costs.csv");
        out << skoro::report_cost_log_csv(report);
    }
    skoro::write_csv_file(report.best_input, prefix + "_best_input.csv");
    std::cout << skoro::report_to_json(report) << "\n";
    return report.violation_found ? kExitOk : kExitNegative;
}

int cmd_simulate(const std::string& system, const std::string& params_json,
                 double horizon, const std::string& out_file,
                 const std::string& input_file) {
    json params = params_json.empty() ? json::object() : json::parse(params_json);
    skoro::SampledTrace out{{0, 1}, {0, 0}, 1};

    if (system == "tank" || system == "tank-delayed") {
        skoro::TwoTankModel m;
        m.delayed = system == "tank-delayed";
        m.l1 = params.value("l1", m.l1);
        m.l2 = params.value("l2", m.l2);
        m.h1_0 = params.value("h1_0", m.h1_0);
        m.h2_0 = params.value("h2_0", m.h2_0);
        m.delay_kappa = params.value("delay_kappa", m.delay_kappa);
        if (params.contains("delay_constant"))
            m.delay_constant = params["delay_constant"].get<double>();
        double period = params.value("output_period", 0.05);
        if (!input_file.empty()) {
            out = skoro::simulate_two_tank(m, skoro::read_csv_file(input_file), horizon,
                                           period);
        } else {
            out = skoro::simulate_two_tank(m, params.value("i", 1.0),
                                           params.value("d1", 0.4),
                                           params.value("d2", 0.4), horizon, period);
        }
        skoro::write_csv_file(out, out_file, "t,h1,h2");
    } else if (system == "lqr") {
        skoro::LqrPitchModel m;
        if (params.value("mode", std::string("continuous")) == "sampled")
            m.mode = skoro::LqrPitchModel::Mode::sampled_data;
        m.sample_dt = params.value("sample_dt", m.sample_dt);
        m.sensor_delay = params.value("sensor_delay", m.sensor_delay);
        skoro::IntegratorConfig cfg;
        cfg.step = params.value("step", 1e-3);
        skoro::PolygonalTrace ref = [&] {
            if (!input_file.empty())
                return skoro::linear_interpolate(skoro::read_csv_file(input_file));
            double step_ref = params.value("theta_des", 0.2);
            return skoro::linear_interpolate(
                skoro::SampledTrace({0.0, horizon}, {step_ref, step_ref}, 1));
        }();
        out = skoro::simulate_lqr_pitch(m, ref, horizon, cfg);
        skoro::write_csv_file(out, out_file, "t,theta");
    } else {
        throw std::invalid_argument("unknown system '" + system + "'");
    }
    std::cout << "wrote " << out_file << " (" << out.size() << " samples)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skoro: Skorokhod-metric trace conformance toolkit"};
    app.require_subcommand(1);

    std::string file_a, file_b, window = "unbounded", scale_text;
    double tol = 1e-4, dsamp = 0.0, delta = 0.0;

    auto* dist = app.add_subcommand("dist", "distance between two CSV traces");
    dist->add_option("traceA", file_a)->required();
    dist->add_option("traceB", file_b)->required();
    dist->add_option("--window", window, "segment window (integer or 'unbounded')");
    dist->add_option("--tol", tol, "bisection tolerance");
    dist->add_option("--scale", scale_text, "e.g. time=2,0=0.08,1=1.0");
    dist->add_option("--dsamp", dsamp, "sampling error bound Delta_samp");

    auto* check = app.add_subcommand("check", "is the distance within delta?");
    check->add_option("traceA", file_a)->required();
    check->add_option("traceB", file_b)->required();
    check->add_option("--delta", delta)->required();
    check->add_option("--window", window);
    check->add_option("--scale", scale_text);

    std::string formula_file, jmap_file, hull_a, hull_b, preds_file;
    std::vector<double> interval_args;
    bool no_analytic = false;
    auto* relax_cmd = app.add_subcommand("relax", "delta-relax a formula");
    relax_cmd->add_option("--formula", formula_file)->required();
    relax_cmd->add_option("--delta", delta)->required();
    relax_cmd->add_option("--hull-from", [&hull_a, &hull_b](const std::vector<std::string>& v) {
        if (v.size() != 2) return false;
        hull_a = v[0];
        hull_b = v[1];
        return true;
    }, "two trace files defining the hulls")->expected(2);
    relax_cmd->add_option("--interval", interval_args, "time hull lo hi")->expected(2);
    relax_cmd->add_option("--jmap", jmap_file, "JSON {var: [lo, hi]}");
    relax_cmd->add_flag("--no-analytic-k", no_analytic,
                        "always use the box K bound");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a formula on a trace");
    eval_cmd->add_option("--formula", formula_file)->required();
    eval_cmd->add_option("--trace", file_a)->required();
    eval_cmd->add_option("--preds", preds_file, "JSON predicate table");

    std::string config_file, out_prefix;
    auto* conform = app.add_subcommand("conform", "run a conformance test");
    conform->add_option("--config", config_file)->required();
    conform->add_option("--out", out_prefix, "output file prefix");

    std::string system_name, params_json, out_file = "trace.csv", input_file;
    double horizon = 10.0;
    auto* simulate = app.add_subcommand("simulate", "run a built-in system");
    simulate->add_option("--system", system_name, "tank | tank-delayed | lqr")->required();
    simulate->add_option("--params", params_json, "JSON parameter overrides");
    simulate->add_option("--T", horizon, "time horizon");
    simulate->add_option("--out", out_file, "output CSV path");
    simulate->add_option("--input", input_file, "input trace CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (dist->parsed()) return cmd_dist(file_a, file_b, window, tol, scale_text, dsamp);
        if (check->parsed()) return cmd_check(file_a, file_b, delta, window, scale_text);
        if (relax_cmd->parsed()) {
            std::optional<std::pair<double, double>> iv;
            if (interval_args.size() == 2) iv = {interval_args[0], interval_args[1]};
            return cmd_relax(formula_file, delta, hull_a, hull_b, iv, jmap_file,
                             no_analytic);
        }
        if (eval_cmd->parsed()) return cmd_eval(formula_file, file_a, preds_file);
        if (conform->parsed()) return cmd_conform(config_file, out_prefix);
        if (simulate->parsed())
            return cmd_simulate(system_name, params_json, horizon, out_file, input_file);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const skoro::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
