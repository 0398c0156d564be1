#pragma once
// TLTL abstract syntax with freeze quantifiers and real-valued constraint
// functions, a concrete ASCII grammar, negation-normal form via the
// waiting-for operator, and structural utilities.
//
// Grammar sketch (precedence loosest to tightest: -> | & U/W unary):
//   formula := or ( "->" formula )?
//   or      := and ( "|" and )*
//   and     := until ( "&" until )*
//   until   := unary ( ( "U" bounds? | "W" ) until )?
//   unary   := "!" unary | "F" unary | "G" unary | ident "." unary | atom
//   atom    := "true" | "false" | Prop | constraint | "(" formula ")"
//   bounds  := "[" "a" ":" number "," "b" ":" number "]"
// Constraints are polynomial (degree <= 2) comparisons against zero, e.g.
// "y - x - 3 <= 0" or "(y-x)^2 + (z-y)^2 + (z-x)^2 - 25 <= 0". Time
// variables are lowercase identifiers; signal variables are s0, s1, ...;
// propositions start with an uppercase letter (U, W, F, G are reserved).

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skoro/trace.hpp"

namespace skoro {

enum class Rel { le, lt, ge, gt };

Rel negate_rel(Rel r);
std::string rel_to_string(Rel r);

/// Polynomial of degree <= 2 over named variables.
struct Poly {
    std::map<std::string, double> linear;
    // Quadratic monomials keyed by the sorted variable pair.
    std::map<std::pair<std::string, std::string>, double> quad;
    double constant = 0.0;

    bool is_affine() const { return quad.empty(); }
    std::vector<std::string> variables() const;
    double evaluate(const std::map<std::string, double>& env) const;

    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    Poly& operator*=(double s);
    static Poly var(const std::string& name);
    static Poly number(double c);
    /// Throws if the product exceeds degree 2.
    static Poly mul(const Poly& a, const Poly& b);

    /// Coefficient-wise equality; explicit zero entries are ignored.
    bool operator==(const Poly& o) const;
};

/// One f(vars) ~ 0 atom; all variables are time variables or all are signal
/// variables (s<k>), never mixed.
struct Constraint {
    Poly poly;
    Rel rel = Rel::le;

    bool operator==(const Constraint& o) const = default;
};

bool is_signal_variable(const std::string& name);
/// 0-based trace dimension encoded in a signal variable name ("s2" -> 2).
std::size_t signal_index(const std::string& name);

enum class FormulaKind {
    True,
    False,
    Prop,
    Not,
    And,
    Or,
    Until,
    WaitingFor,
    Freeze,
    TimeConstraint,
    SignalConstraint,
};

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class Formula {
public:
    FormulaKind kind;
    std::string name;       // Prop name / Freeze variable
    Constraint constraint;  // TimeConstraint / SignalConstraint
    FormulaPtr left, right;  // unary nodes use left only

    static FormulaPtr make_true();
    static FormulaPtr make_false();
    static FormulaPtr prop(std::string name);
    static FormulaPtr negation(FormulaPtr f);
    static FormulaPtr conj(FormulaPtr a, FormulaPtr b);
    static FormulaPtr disj(FormulaPtr a, FormulaPtr b);
    static FormulaPtr until(FormulaPtr a, FormulaPtr b);
    static FormulaPtr waiting_for(FormulaPtr a, FormulaPtr b);
    static FormulaPtr freeze(std::string var, FormulaPtr body);
    static FormulaPtr time_constraint(Constraint c);
    static FormulaPtr signal_constraint(Constraint c);
};

/// Parse error with a position into the source text.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t pos);
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

/// Parse a formula; expands F/G and bounded-until sugar, rejects freeze
/// rebinding and mixed time/signal constraints.
FormulaPtr parse_formula(std::string_view text);

/// Canonical text form; parse_formula(to_string(f)) is structurally equal
/// to f.
std::string to_string(const FormulaPtr& f);

/// Negation-normal form: negations remain only on propositions. Until and
/// waiting-for are dual through the identity
///   not(p U q) == (not q) W (not p & not q)     and symmetrically.
FormulaPtr to_nnf(const FormulaPtr& f);

/// True when negations appear only directly above propositions.
bool is_nnf(const FormulaPtr& f);

bool structural_equal(const FormulaPtr& a, const FormulaPtr& b);

/// Time variables used by constraints but not bound by any enclosing freeze.
std::vector<std::string> free_time_variables(const FormulaPtr& f);

/// Largest signal dimension index mentioned, or -1 when none.
int max_signal_index(const FormulaPtr& f);

/// Every constraint node in the subtree (used for root collection during
/// evaluation).
void collect_constraints(const FormulaPtr& f,
                         std::vector<const Formula*>& out);

/// A constraint function for the relaxation bound: exact affine and
/// quadratic forms plus Lipschitz black boxes.
struct ConstraintFn {
    enum class Kind { affine, quadratic, blackbox };
    Kind kind = Kind::affine;
    std::vector<std::string> vars;  // evaluation order
    Poly poly;                      // affine / quadratic
    std::function<double(std::span<const double>)> fn;  // blackbox
    double lipschitz = 0.0;  // blackbox, sup-norm

    static ConstraintFn from_poly(const Poly& p);
    static ConstraintFn blackbox(std::vector<std::string> vars,
                                 std::function<double(std::span<const double>)> fn,
                                 double lipschitz);
};

}  // namespace skoro
