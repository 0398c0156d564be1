#pragma once
// Derivative-free simplex search with box bounds, used by the conformance
// harness to drive inputs toward large output distances.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "skoro/trace.hpp"

namespace skoro {

struct OptimizationLogEntry {
    std::vector<double> values;
    double cost = 0.0;  // objective value (may be -inf for rejected points)
};

struct OptimizationResult {
    std::vector<double> best_values;
    double best_cost = 0.0;
    std::vector<OptimizationLogEntry> log;  // one entry per objective call
};

/// Nelder-Mead maximization (implemented as minimizing the negation) with
/// reflection 1, expansion 2, contraction 0.5, shrink 0.5. Proposed vertices
/// are clamped to the bounds; non-finite objective values reject the vertex.
/// The simplex restarts around the incumbent when it collapses (diameter
/// under 1e-6 of the widest bound). Deterministic under `seed`.
OptimizationResult nelder_mead_maximize(
    const std::function<double(std::span<const double>)>& objective,
    const std::vector<Interval>& bounds, int max_evals, std::uint64_t seed,
    const std::vector<double>* start = nullptr);

}  // namespace skoro
