#include "skoro/relax.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace skoro {

namespace {

// ---------------------------------------------------------------------------
// Exact sup of a quadratic over a product of 2-D polygons.
//
// K for a quadratic f reduces to maximizing g(t, e) = f(t) - f(t + e) where
// each coordinate pair (t_i, e_i) ranges over the polygon
//   P_i = { l_i <= t_i <= h_i,  l_i <= t_i + e_i <= h_i,  |e_i| <= delta }.
// g is itself quadratic in (t, e), and the max of a quadratic over a compact
// polytope is attained at a vertex or at a stationary point of its
// restriction to some face; faces of a product are products of faces, so we
// enumerate vertex/edge/interior choices per coordinate and solve the
// restricted stationarity system.

struct Pt {
    double t, e;
};

std::vector<Pt> clip_halfplane(const std::vector<Pt>& poly, double a, double b,
                               double c) {
    // Keep a*t + b*e <= c.
    std::vector<Pt> out;
    std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Pt& p = poly[k];
        const Pt& q = poly[(k + 1) % n];
        double fp = a * p.t + b * p.e - c;
        double fq = a * q.t + b * q.e - c;
        if (fp <= 0) out.push_back(p);
        if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
            double w = fp / (fp - fq);
            out.push_back({p.t + w * (q.t - p.t), p.e + w * (q.e - p.e)});
        }
    }
    return out;
}

std::vector<Pt> coordinate_polygon(const Interval& dom, double delta) {
    std::vector<Pt> poly{{dom.lo, -delta}, {dom.hi, -delta}, {dom.hi, delta},
                         {dom.lo, delta}};
    poly = clip_halfplane(poly, -1, -1, -dom.lo);  // t + e >= lo
    poly = clip_halfplane(poly, 1, 1, dom.hi);     // t + e <= hi
    // Dedupe collapsed vertices.
    std::vector<Pt> out;
    double scale = std::max({1.0, std::abs(dom.lo), std::abs(dom.hi), delta});
    for (const Pt& p : poly) {
        bool dup = false;
        for (const Pt& q : out)
            if (std::abs(p.t - q.t) + std::abs(p.e - q.e) < 1e-14 * scale) dup = true;
        if (!dup) out.push_back(p);
    }
    return out;
}

// One face of a coordinate polygon: a fixed point, an edge, or the interior.
struct Face {
    int dims;             // 0, 1 or 2 free parameters
    Pt base;              // vertex, edge start, or unused
    Pt dir;               // edge direction (dims == 1)
    const std::vector<Pt>* poly = nullptr;  // membership test (dims == 2)
};

bool face_contains(const Face& f, double u, double v, double tol) {
    if (f.dims == 1) return u >= -tol && u <= 1 + tol;
    // Point-in-convex-polygon via halfplane checks (vertices are CCW).
    const auto& poly = *f.poly;
    std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Pt& p = poly[k];
        const Pt& q = poly[(k + 1) % n];
        double cross = (q.t - p.t) * (v - p.e) - (q.e - p.e) * (u - p.t);
        if (cross < -tol) return false;
    }
    return true;
}

// Dense symmetric matrix view of the poly's quadratic part over `vars`.
struct QuadData {
    std::size_t l;
    std::vector<double> A;  // l x l symmetric
    std::vector<double> b;  // linear
};

QuadData quad_data(const Poly& p, const std::vector<std::string>& vars) {
    QuadData q;
    q.l = vars.size();
    q.A.assign(q.l * q.l, 0.0);
    q.b.assign(q.l, 0.0);
    auto index = [&](const std::string& v) {
        return static_cast<std::size_t>(
            std::find(vars.begin(), vars.end(), v) - vars.begin());
    };
    for (const auto& [v, c] : p.linear) q.b[index(v)] += c;
    for (const auto& [pr, c] : p.quad) {
        std::size_t i = index(pr.first), j = index(pr.second);
        if (i == j) {
            q.A[i * q.l + i] += c;
        } else {
            q.A[i * q.l + j] += 0.5 * c;
            q.A[j * q.l + i] += 0.5 * c;
        }
    }
    return q;
}

// Solve S x = rhs by Gaussian elimination with partial pivoting. Singular
// but consistent systems yield one solution (stationary values coincide on
// the whole solution set); inconsistent ones report failure.
bool solve_linear(std::vector<double> S, std::vector<double> rhs,
                  std::vector<double>& x) {
    const std::size_t n = rhs.size();
    std::vector<std::size_t> cols(n);
    for (std::size_t k = 0; k < n; ++k) cols[k] = k;
    x.assign(n, 0.0);
    std::vector<std::size_t> pivot_row, pivot_col;
    std::size_t row = 0;
    for (std::size_t col = 0; col < n && row < n; ++col) {
        std::size_t best = row;
        for (std::size_t r = row + 1; r < n; ++r)
            if (std::abs(S[r * n + col]) > std::abs(S[best * n + col])) best = r;
        if (std::abs(S[best * n + col]) < 1e-12) continue;
        for (std::size_t c = 0; c < n; ++c) std::swap(S[row * n + c], S[best * n + c]);
        std::swap(rhs[row], rhs[best]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == row) continue;
            double f = S[r * n + col] / S[row * n + col];
            if (f == 0) continue;
            for (std::size_t c = 0; c < n; ++c) S[r * n + c] -= f * S[row * n + c];
            rhs[r] -= f * rhs[row];
        }
        pivot_row.push_back(row);
        pivot_col.push_back(col);
        ++row;
    }
    for (std::size_t r = row; r < n; ++r) {
        double lhs_mag = 0;
        for (std::size_t c = 0; c < n; ++c) lhs_mag += std::abs(S[r * n + c]);
        if (std::abs(rhs[r]) > 1e-9 * std::max(1.0, lhs_mag) && lhs_mag < 1e-12)
            return false;  // 0 = nonzero
    }
    for (std::size_t k = 0; k < pivot_row.size(); ++k)
        x[pivot_col[k]] = rhs[pivot_row[k]] / S[pivot_row[k] * n + pivot_col[k]];
    return true;
}

double quadratic_k_bound(const Poly& poly, const std::vector<std::string>& vars,
                         double delta, const std::vector<Interval>& domains) {
    const std::size_t l = vars.size();
    if (l > 6)
        throw std::invalid_argument("quadratic K supports at most 6 variables");
    QuadData qd = quad_data(poly, vars);

    // g(t, e) = f(t) - f(t+e) = -(e'Ae + 2 t'Ae + b'e), quadratic in
    // z = (t_1..t_l, e_1..e_l).
    const std::size_t n = 2 * l;
    std::vector<double> H(n * n, 0.0);  // Hessian of g
    std::vector<double> g0(n, 0.0);     // gradient at z = 0
    for (std::size_t i = 0; i < l; ++i) {
        g0[l + i] = -qd.b[i];
        for (std::size_t j = 0; j < l; ++j) {
            double a = qd.A[i * l + j];
            H[(l + i) * n + (l + j)] += -2.0 * a;  // -e'Ae
            H[i * n + (l + j)] += -2.0 * a;        // -2 t'Ae (split symmetric)
            H[(l + j) * n + i] += -2.0 * a;
        }
    }
    auto eval_g = [&](const std::vector<double>& z) {
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += g0[i] * z[i];
            double hz = 0;
            for (std::size_t j = 0; j < n; ++j) hz += H[i * n + j] * z[j];
            acc += 0.5 * z[i] * hz;
        }
        return acc;
    };

    // Faces per coordinate polygon.
    std::vector<std::vector<Face>> faces(l);
    std::vector<std::vector<Pt>> polys(l);
    double scale = delta;
    for (std::size_t i = 0; i < l; ++i) {
        polys[i] = coordinate_polygon(domains[i], delta);
        scale = std::max({scale, std::abs(domains[i].lo), std::abs(domains[i].hi)});
        auto& fl = faces[i];
        const auto& pv = polys[i];
        for (const Pt& v : pv) fl.push_back({0, v, {}, nullptr});
        if (pv.size() >= 2)
            for (std::size_t k = 0; k < pv.size(); ++k) {
                const Pt& p = pv[k];
                const Pt& q = pv[(k + 1) % pv.size()];
                if (pv.size() == 2 && k == 1) break;  // degenerate two-point polygon
                fl.push_back({1, p, {q.t - p.t, q.e - p.e}, nullptr});
            }
        if (pv.size() >= 3) fl.push_back({2, {}, {}, &polys[i]});
    }
    const double tol = 1e-9;

    double best = 0.0;
    std::vector<std::size_t> choice(l, 0);
    std::vector<double> z(n), dirs;  // dirs built per combo
    while (true) {
        // Build the affine parametrization z = z0 + D * lambda.
        std::size_t free_count = 0;
        for (std::size_t i = 0; i < l; ++i) free_count += faces[i][choice[i]].dims;
        std::vector<double> z0(n, 0.0);
        std::vector<double> D(n * free_count, 0.0);
        std::size_t col = 0;
        for (std::size_t i = 0; i < l; ++i) {
            const Face& fc = faces[i][choice[i]];
            if (fc.dims == 0) {
                z0[i] = fc.base.t;
                z0[l + i] = fc.base.e;
            } else if (fc.dims == 1) {
                z0[i] = fc.base.t;
                z0[l + i] = fc.base.e;
                D[i * free_count + col] = fc.dir.t;
                D[(l + i) * free_count + col] = fc.dir.e;
                ++col;
            } else {
                D[i * free_count + col] = 1.0;
                ++col;
                D[(l + i) * free_count + col] = 1.0;
                ++col;
            }
        }

        if (free_count == 0) {
            best = std::max(best, std::abs(eval_g(z0)));
        } else {
            // Restricted quadratic: Hr = D'HD, gr = D'(H z0 + g0).
            std::vector<double> Hz0(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Hz0[i] += H[i * n + j] * z0[j];
            std::vector<double> Hr(free_count * free_count, 0.0), gr(free_count, 0.0);
            for (std::size_t c1 = 0; c1 < free_count; ++c1) {
                for (std::size_t i = 0; i < n; ++i) gr[c1] += D[i * free_count + c1] * (Hz0[i] + g0[i]);
                for (std::size_t c2 = 0; c2 < free_count; ++c2) {
                    double acc = 0;
                    for (std::size_t i = 0; i < n; ++i) {
                        double hd = 0;
                        for (std::size_t j = 0; j < n; ++j)
                            hd += H[i * n + j] * D[j * free_count + c2];
                        acc += D[i * free_count + c1] * hd;
                    }
                    Hr[c1 * free_count + c2] = acc;
                }
            }
            for (double& v : gr) v = -v;
            std::vector<double> lambda;
            if (solve_linear(Hr, gr, lambda)) {
                // Check the stationary point lies inside the chosen faces.
                bool feasible = true;
                std::size_t cc = 0;
                for (std::size_t i = 0; i < l && feasible; ++i) {
                    const Face& fc = faces[i][choice[i]];
                    if (fc.dims == 1) {
                        feasible = face_contains(fc, lambda[cc], 0, tol);
                        cc += 1;
                    } else if (fc.dims == 2) {
                        double u = lambda[cc], v = lambda[cc + 1];
                        feasible = face_contains(fc, u, v, tol * std::max(1.0, scale));
                        cc += 2;
                    }
                }
                if (feasible) {
                    for (std::size_t i = 0; i < n; ++i) {
                        z[i] = z0[i];
                        for (std::size_t c = 0; c < free_count; ++c)
                            z[i] += D[i * free_count + c] * lambda[c];
                    }
                    best = std::max(best, std::abs(eval_g(z)));
                }
            }
        }

        // Next combo.
        std::size_t k = 0;
        while (k < l && ++choice[k] == faces[k].size()) {
            choice[k] = 0;
            ++k;
        }
        if (k == l) break;
    }
    return best;
}

// Exact range width of a quadratic over a box: same face machinery applied
// to f itself (e fixed at 0, so only the t polygon matters). Implemented by
// evaluating f at all box-face stationary points and corners.
double quadratic_range_width(const Poly& poly, const std::vector<std::string>& vars,
                             const std::vector<Interval>& domains) {
    const std::size_t l = vars.size();
    if (l > 12) throw std::invalid_argument("range width supports at most 12 variables");
    QuadData qd = quad_data(poly, vars);
    double fmin = 0, fmax = 0;
    bool first = true;

    // Enumerate faces of the box: per coordinate lo, hi, or free.
    std::vector<int> choice(l, 0);
    while (true) {
        std::vector<std::size_t> free_idx;
        std::vector<double> fixed(l, 0.0);
        for (std::size_t i = 0; i < l; ++i) {
            if (choice[i] == 0) fixed[i] = domains[i].lo;
            if (choice[i] == 1) fixed[i] = domains[i].hi;
            if (choice[i] == 2) free_idx.push_back(i);
        }
        auto consider = [&](const std::vector<double>& t) {
            double v = poly.constant;
            for (std::size_t i = 0; i < l; ++i) {
                v += qd.b[i] * t[i];
                for (std::size_t j = 0; j < l; ++j) v += qd.A[i * l + j] * t[i] * t[j];
            }
            if (first) {
                fmin = fmax = v;
                first = false;
            } else {
                fmin = std::min(fmin, v);
                fmax = std::max(fmax, v);
            }
        };
        if (free_idx.empty()) {
            consider(fixed);
        } else {
            std::size_t m = free_idx.size();
            std::vector<double> S(m * m), rhs(m);
            for (std::size_t r = 0; r < m; ++r) {
                double acc = qd.b[free_idx[r]];
                for (std::size_t i = 0; i < l; ++i)
                    if (std::find(free_idx.begin(), free_idx.end(), i) == free_idx.end())
                        acc += 2.0 * qd.A[free_idx[r] * l + i] * fixed[i];
                rhs[r] = -acc;
                for (std::size_t c = 0; c < m; ++c)
                    S[r * m + c] = 2.0 * qd.A[free_idx[r] * l + free_idx[c]];
            }
            std::vector<double> sol;
            if (solve_linear(S, rhs, sol)) {
                bool ok = true;
                std::vector<double> t = fixed;
                for (std::size_t r = 0; r < m; ++r) {
                    t[free_idx[r]] = sol[r];
                    const Interval& dom = domains[free_idx[r]];
                    double eps = 1e-9 * std::max(1.0, std::abs(dom.lo) + std::abs(dom.hi));
                    if (sol[r] < dom.lo - eps || sol[r] > dom.hi + eps) ok = false;
                }
                if (ok) consider(t);
            }
        }
        std::size_t k = 0;
        while (k < l && ++choice[k] == 3) {
            choice[k] = 0;
            ++k;
        }
        if (k == l) break;
    }
    return fmax - fmin;
}

}  // namespace

double k_bound(const ConstraintFn& f, double delta,
               const std::vector<Interval>& domains) {
    if (!(delta >= 0)) throw std::invalid_argument("k_bound: delta must be >= 0");
    if (domains.size() != f.vars.size())
        throw std::invalid_argument("k_bound: domain count must match variable count");
    for (const auto& d : domains)
        if (d.empty()) throw std::invalid_argument("k_bound: empty domain interval");

    switch (f.kind) {
        case ConstraintFn::Kind::affine: {
            double acc = 0;
            for (std::size_t i = 0; i < f.vars.size(); ++i) {
                auto it = f.poly.linear.find(f.vars[i]);
                double c = it == f.poly.linear.end() ? 0.0 : it->second;
                acc += std::abs(c) * std::min(delta, domains[i].width());
            }
            return acc;
        }
        case ConstraintFn::Kind::quadratic: {
            if (delta == 0) return 0.0;
            return quadratic_k_bound(f.poly, f.vars, delta, domains);
        }
        case ConstraintFn::Kind::blackbox:
            return f.lipschitz * delta;
    }
    return 0;
}

double range_width(const ConstraintFn& f, const std::vector<Interval>& domains) {
    if (domains.size() != f.vars.size())
        throw std::invalid_argument("range_width: domain count must match variables");
    switch (f.kind) {
        case ConstraintFn::Kind::affine: {
            double acc = 0;
            for (std::size_t i = 0; i < f.vars.size(); ++i) {
                auto it = f.poly.linear.find(f.vars[i]);
                double c = it == f.poly.linear.end() ? 0.0 : it->second;
                acc += std::abs(c) * domains[i].width();
            }
            return acc;
        }
        case ConstraintFn::Kind::quadratic:
            return quadratic_range_width(f.poly, f.vars, domains);
        case ConstraintFn::Kind::blackbox:
            throw std::invalid_argument("range_width: not available for black boxes");
    }
    return 0;
}

std::optional<double> analytic_three_event_k(const Constraint& c, double delta) {
    if (c.rel != Rel::le && c.rel != Rel::lt) return std::nullopt;
    if (!c.poly.linear.empty()) return std::nullopt;
    double d = -c.poly.constant;
    if (!(d > 0)) return std::nullopt;
    auto vars = c.poly.variables();
    if (vars.size() != 3 || c.poly.quad.size() != 6) return std::nullopt;
    for (const auto& [pr, coeff] : c.poly.quad) {
        if (pr.first == pr.second) {
            if (coeff != 2.0) return std::nullopt;
        } else if (coeff != -2.0) {
            return std::nullopt;
        }
    }
    return 12.0 * delta * delta + 4.0 * std::sqrt(3.0) * delta * std::sqrt(d);
}

namespace {

FormulaPtr relax_rec(const FormulaPtr& f, const RelaxationContext& ctx) {
    switch (f->kind) {
        case FormulaKind::True:
        case FormulaKind::False:
        case FormulaKind::Prop:
            return f;
        case FormulaKind::Not:
            if (f->left->kind != FormulaKind::Prop)
                throw std::invalid_argument(
                    "relax: input is not in negation-normal form (negation above " +
                    to_string(f->left) + ")");
            return f;
        case FormulaKind::And:
            return Formula::conj(relax_rec(f->left, ctx), relax_rec(f->right, ctx));
        case FormulaKind::Or:
            return Formula::disj(relax_rec(f->left, ctx), relax_rec(f->right, ctx));
        case FormulaKind::Until:
            return Formula::until(relax_rec(f->left, ctx), relax_rec(f->right, ctx));
        case FormulaKind::WaitingFor:
            return Formula::waiting_for(relax_rec(f->left, ctx),
                                        relax_rec(f->right, ctx));
        case FormulaKind::Freeze:
            return Formula::freeze(f->name, relax_rec(f->left, ctx));
        case FormulaKind::TimeConstraint:
        case FormulaKind::SignalConstraint: {
            const Constraint& c = f->constraint;
            double k = 0;
            std::optional<double> analytic;
            if (ctx.use_analytic_k && f->kind == FormulaKind::TimeConstraint)
                analytic = analytic_three_event_k(c, ctx.delta);
            if (analytic) {
                k = *analytic;
            } else {
                ConstraintFn fn = ConstraintFn::from_poly(c.poly);
                std::vector<Interval> domains;
                for (const auto& v : fn.vars) {
                    if (f->kind == FormulaKind::TimeConstraint) {
                        domains.push_back(ctx.time_hull);
                    } else {
                        auto it = ctx.signal_hull.find(v);
                        if (it == ctx.signal_hull.end())
                            throw std::invalid_argument(
                                "relax: signal variable " + v + " missing from jmap");
                        domains.push_back(it->second);
                    }
                }
                k = k_bound(fn, ctx.delta, domains);
            }
            Constraint out = c;
            if (c.rel == Rel::ge || c.rel == Rel::gt)
                out.poly.constant += k;
            else
                out.poly.constant -= k;
            return f->kind == FormulaKind::TimeConstraint
                       ? Formula::time_constraint(std::move(out))
                       : Formula::signal_constraint(std::move(out));
        }
    }
    return f;
}

}  // namespace

FormulaPtr relax(const FormulaPtr& f, const RelaxationContext& ctx) {
    if (!(ctx.delta >= 0)) throw std::invalid_argument("relax: delta must be >= 0");
    if (ctx.time_hull.empty()) throw std::invalid_argument("relax: empty time hull");
    if (!is_nnf(f))
        throw std::invalid_argument("relax: formula must be in negation-normal form");
    return relax_rec(f, ctx);
}

}  // namespace skoro
