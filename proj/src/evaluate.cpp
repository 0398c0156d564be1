#include "skoro/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace skoro {

namespace {

bool rel_holds(double value, Rel rel) {
    switch (rel) {
        case Rel::le: return value <= 0;
        case Rel::lt: return value < 0;
        case Rel::ge: return value >= 0;
        case Rel::gt: return value > 0;
    }
    return false;
}

double eval_fn_at(const ConstraintFn& fn, const PolygonalTrace& tr, double t,
                  std::vector<double>& scratch) {
    tr.sample_at(t, {scratch.data(), tr.dim()});
    if (fn.kind == ConstraintFn::Kind::blackbox) {
        std::vector<double> args(fn.vars.size());
        for (std::size_t i = 0; i < fn.vars.size(); ++i)
            args[i] = scratch[signal_index(fn.vars[i])];
        return fn.fn(args);
    }
    std::map<std::string, double> env;
    for (const auto& v : fn.poly.variables()) env[v] = scratch[signal_index(v)];
    return fn.poly.evaluate(env);
}

void check_arity(const ConstraintFn& fn, std::size_t dim, const std::string& what) {
    for (const auto& v : fn.vars) {
        if (!is_signal_variable(v))
            throw std::invalid_argument(what + ": variable " + v +
                                        " is not a signal variable");
        if (signal_index(v) >= dim)
            throw std::invalid_argument(what + ": variable " + v +
                                        " exceeds trace dimension " + std::to_string(dim));
    }
}

// Sign-crossing times of fn(trace values) along one affine segment. Exact
// roots for affine/quadratic forms; endpoint-sign bisection for black boxes
// (incomplete for functions oscillating inside one segment).
void segment_crossings(const ConstraintFn& fn, const PolygonalTrace& tr,
                       std::size_t seg, std::vector<double>& out) {
    double t0 = tr.time(seg), t1 = tr.time(seg + 1);
    auto p0 = tr.point(seg), p1 = tr.point(seg + 1);

    if (fn.kind == ConstraintFn::Kind::blackbox) {
        std::vector<double> scratch(tr.dim());
        double f0 = eval_fn_at(fn, tr, t0, scratch);
        double f1 = eval_fn_at(fn, tr, t1, scratch);
        if ((f0 < 0) == (f1 < 0)) return;
        double lo = t0, hi = t1;
        double tol = 1e-9 * tr.tlen();
        while (hi - lo > tol) {
            double mid = 0.5 * (lo + hi);
            double fm = eval_fn_at(fn, tr, mid, scratch);
            if ((fm < 0) == (f0 < 0))
                lo = mid;
            else
                hi = mid;
        }
        out.push_back(0.5 * (lo + hi));
        return;
    }

    // Restriction onto the segment in normalized coordinates: a quadratic
    // A tau^2 + B tau + C.
    double A = 0, B = 0, C = fn.poly.constant;
    for (const auto& [v, c] : fn.poly.linear) {
        std::size_t k = signal_index(v);
        C += c * p0[k];
        B += c * (p1[k] - p0[k]);
    }
    for (const auto& [pr, c] : fn.poly.quad) {
        std::size_t j = signal_index(pr.first), k = signal_index(pr.second);
        double dj = p1[j] - p0[j], dk = p1[k] - p0[k];
        C += c * p0[j] * p0[k];
        B += c * (p0[j] * dk + p0[k] * dj);
        A += c * dj * dk;
    }
    auto push = [&](double tau) {
        if (tau > 0 && tau < 1) out.push_back(t0 + tau * (t1 - t0));
    };
    if (A == 0) {
        if (B != 0) push(-C / B);
        return;
    }
    double disc = B * B - 4 * A * C;
    if (disc < 0) return;
    double r = std::sqrt(disc);
    push((-B - r) / (2 * A));
    push((-B + r) / (2 * A));
}

std::vector<double> merged_breakpoints(const PolygonalTrace& tr,
                                       std::vector<double> crossings) {
    std::vector<double> bps(tr.timestamps());
    bps.insert(bps.end(), crossings.begin(), crossings.end());
    std::sort(bps.begin(), bps.end());
    double eps = 1e-12 * std::max(1.0, tr.tlen() - tr.tdom().lo);
    std::vector<double> out;
    for (double t : bps) {
        if (t < tr.tdom().lo || t > tr.tdom().hi) continue;
        if (out.empty() || t - out.back() > eps) out.push_back(t);
    }
    // Keep the exact domain endpoints.
    out.front() = tr.tdom().lo;
    out.back() = tr.tdom().hi;
    return out;
}

}  // namespace

PropositionalTrace booleanize(const PolygonalTrace& tr, const PredicateTable& preds) {
    std::vector<double> crossings;
    for (const auto& p : preds) {
        check_arity(p.fn, tr.dim(), "booleanize predicate " + p.name);
        for (std::size_t seg = 0; seg < tr.segments(); ++seg)
            segment_crossings(p.fn, tr, seg, crossings);
    }
    std::vector<double> bps = merged_breakpoints(tr, std::move(crossings));

    std::vector<std::set<std::string>> letters;
    std::vector<double> scratch(tr.dim());
    letters.reserve(bps.size() - 1);
    for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
        double mid = 0.5 * (bps[k] + bps[k + 1]);
        std::set<std::string> letter;
        for (const auto& p : preds)
            if (rel_holds(eval_fn_at(p.fn, tr, mid, scratch), p.rel))
                letter.insert(p.name);
        letters.push_back(std::move(letter));
    }
    return PropositionalTrace(std::move(bps), std::move(letters));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

using Env = std::map<std::string, double>;

class Evaluator {
public:
    Evaluator(const FormulaPtr& root, const PolygonalTrace* poly,
              const PropositionalTrace* prop, std::vector<double> critical)
        : root_(root), poly_(poly), prop_(prop), critical_(std::move(critical)) {}

    EvalResult run() {
        EvalResult res;
        witness_ = &res.witness;
        Env env;
        res.sat = eval(root_.get(), domain().lo, env);
        if (!res.sat) res.witness.clear();
        return res;
    }

private:
    FormulaPtr root_;
    const PolygonalTrace* poly_;
    const PropositionalTrace* prop_;
    std::vector<double> critical_;
    std::map<std::string, double>* witness_ = nullptr;
    std::map<const Formula*, std::vector<const Formula*>> constraint_cache_;
    std::vector<double> scratch_ = std::vector<double>(poly_ ? poly_->dim() : 0);

    Interval domain() const {
        return poly_ ? poly_->tdom() : prop_->tdom();
    }

    bool eval(const Formula* f, double t0, const Env& env) {
        switch (f->kind) {
            case FormulaKind::True: return true;
            case FormulaKind::False: return false;
            case FormulaKind::Prop: {
                if (!prop_)
                    throw std::invalid_argument("proposition " + f->name +
                                                " has no predicate backing");
                return prop_->letter_at(t0).count(f->name) != 0;
            }
            case FormulaKind::Not: return !eval(f->left.get(), t0, env);
            case FormulaKind::And:
                return eval(f->left.get(), t0, env) && eval(f->right.get(), t0, env);
            case FormulaKind::Or:
                return eval(f->left.get(), t0, env) || eval(f->right.get(), t0, env);
            case FormulaKind::Freeze: {
                Env env2 = env;
                env2[f->name] = t0;
                bool ok = eval(f->left.get(), t0, env2);
                if (ok && witness_) (*witness_)[f->name] = t0;
                return ok;
            }
            case FormulaKind::TimeConstraint: {
                double v;
                try {
                    v = f->constraint.poly.evaluate(env);
                } catch (const std::invalid_argument&) {
                    throw std::invalid_argument("open formula: " + to_string(root_) +
                                                " has an unbound time variable");
                }
                return rel_holds(v, f->constraint.rel);
            }
            case FormulaKind::SignalConstraint: {
                if (!poly_)
                    throw std::invalid_argument(
                        "signal constraint evaluated on a propositional trace");
                ConstraintFn fn = ConstraintFn::from_poly(f->constraint.poly);
                check_arity(fn, poly_->dim(), "signal constraint");
                double v = eval_fn_at(fn, *poly_, t0, scratch_);
                return rel_holds(v, f->constraint.rel);
            }
            case FormulaKind::Until:
                return eval_until(f, t0, env, /*waiting=*/false);
            case FormulaKind::WaitingFor:
                return eval_until(f, t0, env, /*waiting=*/true);
        }
        return false;
    }

    // Shared scan for U and W over the probe points of [t0, T_e].
    bool eval_until(const Formula* f, double t0, const Env& env, bool waiting) {
        std::vector<double> probes = probe_points(f, t0, env);
        for (double t : probes) {
            if (eval(f->right.get(), t, env)) return true;
            if (!eval(f->left.get(), t, env)) return false;
        }
        // phi1 held everywhere: satisfies W clause (1), not U.
        return waiting;
    }

    const std::vector<const Formula*>& constraints_below(const Formula* f) {
        auto it = constraint_cache_.find(f);
        if (it != constraint_cache_.end()) return it->second;
        std::vector<const Formula*> out;
        // Non-owning walk.
        std::vector<const Formula*> stack{f};
        while (!stack.empty()) {
            const Formula* cur = stack.back();
            stack.pop_back();
            if (!cur) continue;
            if (cur->kind == FormulaKind::TimeConstraint) out.push_back(cur);
            if (cur->left) stack.push_back(cur->left.get());
            if (cur->right) stack.push_back(cur->right.get());
        }
        return constraint_cache_.emplace(f, std::move(out)).first->second;
    }

    // Candidate witness times: static breakpoints, roots of each time
    // constraint over its single unbound variable, and gap midpoints.
    std::vector<double> probe_points(const Formula* f, double t0, const Env& env) {
        double t_end = domain().hi;
        std::vector<double> pts{t0, t_end};
        for (double t : critical_)
            if (t > t0 && t < t_end) pts.push_back(t);
        for (const Formula* c : constraints_below(f)) add_roots(c, t0, t_end, env, pts);
        std::sort(pts.begin(), pts.end());
        double eps = 1e-12 * std::max(1.0, std::abs(t_end) + std::abs(t0));
        std::vector<double> uniq;
        for (double t : pts)
            if (uniq.empty() || t - uniq.back() > eps) uniq.push_back(t);
        std::vector<double> probes;
        probes.reserve(uniq.size() * 2);
        for (std::size_t k = 0; k < uniq.size(); ++k) {
            probes.push_back(uniq[k]);
            if (k + 1 < uniq.size()) probes.push_back(0.5 * (uniq[k] + uniq[k + 1]));
        }
        return probes;
    }

    void add_roots(const Formula* c, double t0, double t1, const Env& env,
                   std::vector<double>& out) {
        const Poly& p = c->constraint.poly;
        std::string axis;
        for (const auto& v : p.variables()) {
            if (env.count(v)) continue;
            if (!axis.empty()) return;  // two unbound variables: skip
            axis = v;
        }
        if (axis.empty()) return;
        double A = 0, B = 0, C = p.constant;
        for (const auto& [v, coeff] : p.linear) {
            if (v == axis)
                B += coeff;
            else
                C += coeff * env.at(v);
        }
        for (const auto& [pr, coeff] : p.quad) {
            bool f1 = pr.first == axis, f2 = pr.second == axis;
            if (f1 && f2)
                A += coeff;
            else if (f1)
                B += coeff * env.at(pr.second);
            else if (f2)
                B += coeff * env.at(pr.first);
            else
                C += coeff * env.at(pr.first) * env.at(pr.second);
        }
        auto push = [&](double t) {
            if (t >= t0 && t <= t1) out.push_back(t);
        };
        if (A == 0) {
            if (B != 0) push(-C / B);
            return;
        }
        double disc = B * B - 4 * A * C;
        if (disc < 0) return;
        double r = std::sqrt(disc);
        push((-B - r) / (2 * A));
        push((-B + r) / (2 * A));
    }
};

void require_closed(const FormulaPtr& f) {
    auto free = free_time_variables(f);
    if (!free.empty())
        throw std::invalid_argument("open formula: free time variable '" + free.front() +
                                    "'");
}

}  // namespace

EvalResult evaluate(const FormulaPtr& f, const PolygonalTrace& tr,
                    const PredicateTable& preds) {
    require_closed(f);
    int max_sig = max_signal_index(f);
    if (max_sig >= 0 && static_cast<std::size_t>(max_sig) >= tr.dim())
        throw std::invalid_argument("signal variable s" + std::to_string(max_sig) +
                                    " exceeds trace dimension");

    // Breakpoints: predicate table plus every signal constraint in the
    // formula (so constraint truth is constant between consecutive points).
    PredicateTable all = preds;
    std::vector<const Formula*> cs;
    collect_constraints(f, cs);
    int anon = 0;
    for (const Formula* c : cs) {
        if (c->kind != FormulaKind::SignalConstraint) continue;
        NamedPredicate np;
        np.name = "__sc" + std::to_string(anon++);
        np.fn = ConstraintFn::from_poly(c->constraint.poly);
        np.rel = c->constraint.rel;
        all.push_back(std::move(np));
    }
    PropositionalTrace booleanized = booleanize(tr, all);
    Evaluator ev(f, &tr, &booleanized, booleanized.breakpoints);
    return ev.run();
}

EvalResult evaluate(const FormulaPtr& f, const PropositionalTrace& tr) {
    require_closed(f);
    Evaluator ev(f, nullptr, &tr, tr.breakpoints);
    return ev.run();
}

TransferenceReport check_transference(const PolygonalTrace& pi,
                                      const PolygonalTrace& pi_prime,
                                      const FormulaPtr& phi, const PredicateTable& preds,
                                      const WindowParam& w, double tol) {
    if (pi.dim() != pi_prime.dim())
        throw std::invalid_argument("check_transference: dimension mismatch");

    TransferenceReport rep;
    auto d = compute_distance(pi, pi_prime, w, tol);
    rep.distance = d.distance;
    rep.delta_used = d.distance + tol;

    RelaxationContext ctx;
    ctx.delta = rep.delta_used;
    Interval da = pi.tdom(), db = pi_prime.tdom();
    ctx.time_hull = {std::min(da.lo, db.lo), std::max(da.hi, db.hi)};
    for (std::size_t k = 0; k < pi.dim(); ++k) {
        double lo = pi.point(0)[k], hi = lo;
        for (std::size_t i = 0; i < pi.size(); ++i) {
            lo = std::min(lo, pi.point(i)[k]);
            hi = std::max(hi, pi.point(i)[k]);
        }
        for (std::size_t i = 0; i < pi_prime.size(); ++i) {
            lo = std::min(lo, pi_prime.point(i)[k]);
            hi = std::max(hi, pi_prime.point(i)[k]);
        }
        ctx.signal_hull["s" + std::to_string(k)] = {lo, hi};
    }
    rep.context = ctx;

    rep.nnf = to_nnf(phi);
    rep.relaxed = relax(rep.nnf, ctx);
    rep.base_sat = evaluate(rep.nnf, pi, preds).sat;
    rep.relaxed_sat = evaluate(rep.relaxed, pi_prime, preds).sat;
    rep.violation = rep.base_sat && !rep.relaxed_sat;
    return rep;
}

}  // namespace skoro
