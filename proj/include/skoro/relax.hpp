#pragma once
// Delta-relaxation of formulae: each constraint constant is loosened by the
// K-bound, the sup of |f(t) - f(t')| over per-coordinate perturbations of
// size at most delta inside the constraint's variable domains. The untimed
// skeleton is left untouched.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skoro/formula.hpp"
#include "skoro/trace.hpp"

namespace skoro {

/// Sup of |f(z) - f(z')| subject to z, z' in the domain box and
/// |z_i - z_i'| <= delta. Exact for affine and quadratic forms; for black
/// boxes the sound over-approximation L * delta is returned. `domains` is
/// ordered like f.vars.
double k_bound(const ConstraintFn& f, double delta,
               const std::vector<Interval>& domains);

/// Range width (max - min) of f over the domain box; exact for affine and
/// quadratic forms. Used by tests and by the affine clipping rule.
double range_width(const ConstraintFn& f, const std::vector<Interval>& domains);

struct RelaxationContext {
    double delta = 0.0;
    Interval time_hull{0.0, 0.0};                 // J, hull of both time domains
    std::map<std::string, Interval> signal_hull;  // jmap, per signal variable
    // Use the level-aware analytic bound for the recognized three-event
    // quadratic pattern (tighter than the box K and still sound).
    bool use_analytic_k = true;
};

/// For the pattern (y-x)^2 + (z-y)^2 + (z-x)^2 - d <= 0 the level-aware
/// level bound 12*delta^2 + 4*sqrt(3)*delta*sqrt(d) applies; returns nullopt
/// for anything else (including the >= side, where the level argument fails).
std::optional<double> analytic_three_event_k(const Constraint& c, double delta);

/// Structurally identical formula with every constraint shifted by +K for
/// {>, >=} and -K for {<, <=}. Requires NNF input.
FormulaPtr relax(const FormulaPtr& f, const RelaxationContext& ctx);

}  // namespace skoro
