#pragma once
// Optimization-guided conformance testing: search the parameterized input
// space of two systems for a signal whose outputs exceed a Skorokhod
// distance bound.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "skoro/optimize.hpp"
#include "skoro/skorokhod.hpp"
#include "skoro/trace.hpp"

namespace skoro {

/// One term of the input signal u(t) = sum_i p_i * f_i(t). Each basis
/// function is scalar-valued on one input dimension.
struct BasisFunction {
    enum class Kind { constant, step, pwc_cell, pwl_hat };
    Kind kind = Kind::constant;
    std::size_t dim = 0;   // which input dimension this term feeds
    double at = 0.0;       // step time (step)
    std::size_t index = 0; // cell / node index (pwc_cell, pwl_hat)
    std::size_t count = 1; // cells / nodes over [0, T]

    double eval(double t, double horizon) const;
};

struct InputParameterization {
    std::vector<std::string> names;
    std::vector<BasisFunction> basis;
    std::vector<Interval> bounds;
    double horizon = 1.0;
    double sample_period = 0.1;
    std::size_t input_dim = 1;

    void validate() const;
};

/// Causal simulator interface: input trace + horizon -> output trace.
class SystemModel {
public:
    virtual ~SystemModel() = default;
    virtual std::size_t output_dim() const = 0;
    virtual SampledTrace simulate(const SampledTrace& input, double horizon) const = 0;
    /// Pure models may have their objective evaluations run concurrently.
    virtual bool pure() const { return true; }
};

/// Adapter over a plain function.
class CallbackSystem : public SystemModel {
public:
    using Fn = std::function<SampledTrace(const SampledTrace&, double)>;
    CallbackSystem(std::size_t dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
    std::size_t output_dim() const override { return dim_; }
    SampledTrace simulate(const SampledTrace& input, double horizon) const override {
        return fn_(input, horizon);
    }

private:
    std::size_t dim_;
    Fn fn_;
};

struct TestConfig {
    double delta_bound = 1.0;
    int max_iterations = 100;
    WindowParam window = WindowParam::unbounded();
    ScalingProfile scaling{1.0, {}};  // empty dims: identity for the output dim
    double distance_tol = 1e-4;
    double sampling_error = 0.0;  // Delta_samp
    std::uint64_t seed = 0;
    // Default bound handling clamps proposals. With the penalty flag the
    // simplex may probe a 20% margin around the box and out-of-bound points
    // score negative without being simulated.
    bool penalty_bounds = false;
};

/// Thrown when a simulation fails; carries the offending input values.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& msg, std::vector<double> values)
        : std::runtime_error(msg), values_(std::move(values)) {}
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

struct IterationRecord {
    int iteration = 0;
    std::vector<double> values;
    double cost = 0.0;
    bool failed = false;
};

struct TestReport {
    bool violation_found = false;
    double max_cost = 0.0;
    std::vector<double> best_values;
    SampledTrace best_input{{0, 1}, {0, 0}, 1};
    int iterations = 0;
    int failures = 0;
    std::vector<IterationRecord> log;
};

/// u(t) = sum_i values[i] * basis_i(t), sampled at the parameterization's
/// period over [0, horizon]. Out-of-bound values are clamped (a warning is
/// recorded on stderr).
SampledTrace synthesize_input(const std::vector<double>& values,
                              const InputParameterization& ip);

/// Uniform in-bounds sample; deterministic under seed.
std::vector<double> pick_random_input(const InputParameterization& ip,
                                      std::uint64_t seed);

/// Simulate both systems on the synthesized input, scale, compute the
/// windowed distance and add the 2 * sampling_error correction.
double cost(const std::vector<double>& values, const InputParameterization& ip,
            const SystemModel& s1, const SystemModel& s2, const TestConfig& cfg);

/// The optimization loop: iterate while maxCost < delta_bound and the
/// iteration budget remains (stops as soon as either fails). Simulation
/// failures are logged, skipped, and counted toward the budget.
TestReport run_conformance_test(const SystemModel& s1, const SystemModel& s2,
                                const InputParameterization& ip, const TestConfig& cfg);

// JSON config ingestion (schema shared with the CLI) and report output.
struct ConformanceSetup {
    InputParameterization ip;
    TestConfig cfg;
    std::shared_ptr<SystemModel> system1;
    std::shared_ptr<SystemModel> system2;
};

ConformanceSetup load_conformance_config(const std::string& json_text);
std::string report_to_json(const TestReport& report);
std::string report_cost_log_csv(const TestReport& report);

}  // namespace skoro
