#pragma once
// Decision procedure for "are two polygonal traces within Skorokhod distance
// delta under a segment window W?", plus the bisection search for the least
// such delta. The free space over each segment pair is the intersection of
// the |s - t| <= delta time band with the preimage of a delta-ball under an
// affine map, hence convex; monotone reachability over the per-cell edge
// intervals decides the question one column at a time in O(W) memory.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "skoro/trace.hpp"

namespace skoro {

/// Segment-index window: the i-th affine segment of one trace may only be
/// matched against segments i-W .. i+W of the other. Unbounded admits every
/// retiming.
struct WindowParam {
    std::optional<std::int64_t> w;  // nullopt = unbounded

    static WindowParam unbounded() { return {std::nullopt}; }
    static WindowParam bounded(std::int64_t k);

    bool is_unbounded() const { return !w.has_value(); }
    std::string to_string() const;
};

struct DistanceResult {
    double distance = 0.0;
    double tolerance = 0.0;    // certified half-width of the final bracket
    WindowParam window;
    int monitor_calls = 0;     // check_within invocations made by the search
    double wall_seconds = 0.0;          // total time spent in monitoring
    double wall_seconds_per_call = 0.0;
};

/// True iff some order-preserving continuous bijection r between the two
/// time domains keeps both sup|r(t)-t| and the retimed L2 value mismatch
/// within delta (restricted to the window when bounded).
bool check_within(const PolygonalTrace& a, const PolygonalTrace& b, double delta,
                  const WindowParam& w = WindowParam::unbounded());

/// Least delta accepted by check_within, located by bisection. The search
/// starts from the forced endpoint conditions below and from the pointwise
/// metric above (after an affine domain alignment when domains differ).
/// `relative_tol` scales the tolerance by the initial upper bound.
DistanceResult compute_distance(const PolygonalTrace& a, const PolygonalTrace& b,
                                const WindowParam& w = WindowParam::unbounded(),
                                double tol = 1e-4, bool relative_tol = false);

/// Additive correction lifting a polygonal-approximation distance to a bound
/// on the underlying trace distance: d + 2 * sampling_error.
double sampling_adjusted(double d, double sampling_error);

/// Max over the four forced endpoint conditions (start/end time gaps and
/// start/end value gaps); a lower bound on the distance under any window.
double endpoint_lower_bound(const PolygonalTrace& a, const PolygonalTrace& b);

/// Skorokhod check for propositional traces: letters must match exactly
/// under the retiming, so only the time distortion is searched.
bool prop_check_within(const PropositionalTrace& a, const PropositionalTrace& b,
                       double delta);

/// Least delta for propositional traces; +infinity when no letter-preserving
/// retiming exists at any delta.
double prop_compute_distance(const PropositionalTrace& a, const PropositionalTrace& b,
                             double tol = 1e-6);

}  // namespace skoro
