#pragma once
// Finite-trace evaluation of TLTL formulae and the transference checker.
//
// Quantified times range over the critical time set: booleanization
// breakpoints plus the real roots of each constraint restricted to its one
// unbound variable, plus midpoints of the gaps. This is exact for formulae
// whose truth changes only at predicate breakpoints and such roots (affine
// constraints and per-quantifier freeze variables); anything richer is a
// documented approximation.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skoro/formula.hpp"
#include "skoro/relax.hpp"
#include "skoro/skorokhod.hpp"
#include "skoro/trace.hpp"

namespace skoro {

/// A named booleanizing predicate over the trace value space.
struct NamedPredicate {
    std::string name;
    ConstraintFn fn;       // vars are signal variables s0, s1, ...
    Rel rel = Rel::ge;
};

using PredicateTable = std::vector<NamedPredicate>;

/// Piecewise-constant truth of the predicates along the trace: breakpoints
/// are the trace knots plus every predicate sign crossing (exact roots per
/// affine/quadratic segment restriction, bisection for black boxes); each
/// interval's letter is the set of predicates true on its interior.
PropositionalTrace booleanize(const PolygonalTrace& tr, const PredicateTable& preds);

struct EvalResult {
    bool sat = false;
    /// Freeze-variable bindings along the satisfying branch (when sat).
    std::map<std::string, double> witness;
};

/// Satisfaction of a closed formula on an Rn-valued trace; named
/// propositions resolve through `preds`, signal constraints read the trace
/// values directly.
EvalResult evaluate(const FormulaPtr& f, const PolygonalTrace& tr,
                    const PredicateTable& preds = {});

/// Satisfaction on a propositional trace (signal constraints are an error).
EvalResult evaluate(const FormulaPtr& f, const PropositionalTrace& tr);

struct TransferenceReport {
    bool base_sat = false;     // pi |= phi
    bool relaxed_sat = false;  // pi' |= relax(phi)
    double distance = 0.0;
    double delta_used = 0.0;   // distance + tol
    FormulaPtr nnf;            // the evaluated normal form of phi
    FormulaPtr relaxed;
    RelaxationContext context;
    /// True when base holds but the relaxed formula fails on pi' -- a
    /// soundness bug in the transference machinery.
    bool violation = false;
};

/// Builds the time hull and per-dimension value hulls, relaxes by
/// delta = distance(pi, pi') + tol, and evaluates both sides.
TransferenceReport check_transference(const PolygonalTrace& pi,
                                      const PolygonalTrace& pi_prime,
                                      const FormulaPtr& phi,
                                      const PredicateTable& preds,
                                      const WindowParam& w = WindowParam::unbounded(),
                                      double tol = 1e-4);

}  // namespace skoro
