#include <doctest.h>

#include <cmath>
#include <random>

#include "skoro/evaluate.hpp"
#include "skoro/formula.hpp"
#include "skoro/relax.hpp"
#include "formula_gen.hpp"
#include "oracle.hpp"

using namespace skoro;

namespace {

using L = std::set<std::string>;

NamedPredicate affine_pred(const std::string& name, std::vector<double> coeffs,
                           double c, Rel rel) {
    Poly p;
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        if (coeffs[k] != 0) p.linear["s" + std::to_string(k)] = coeffs[k];
    p.constant = c;
    return {name, ConstraintFn::from_poly(p), rel};
}

// Q on [0, 3), R on [3, 4].
PropositionalTrace q_then_r() {
    return PropositionalTrace({0, 3, 4}, {L{"Q"}, L{"R"}});
}

}  // namespace

TEST_CASE("booleanize finds affine roots") {
    auto tr = linear_interpolate(SampledTrace({0, 1}, {-1, 1}, 1));
    auto prop = booleanize(tr, {affine_pred("P", {1}, 0, Rel::ge)});
    REQUIRE(prop.breakpoints.size() == 3);
    CHECK(prop.breakpoints[1] == doctest::Approx(0.5));
    CHECK(prop.letters[0] == L{});
    CHECK(prop.letters[1] == L{"P"});
}

TEST_CASE("booleanize trivial predicate gives one interval") {
    auto tr = linear_interpolate(SampledTrace({0, 1}, {-1, 1}, 1));
    auto prop = booleanize(tr, {affine_pred("T", {0}, 1, Rel::ge)});
    CHECK(prop.intervals() == 1);
    CHECK(prop.letters[0] == L{"T"});
}

TEST_CASE("booleanize nonlinear predicate agrees with dense sampling") {
    std::mt19937_64 rng(17);
    testing::TraceGenOptions opt;
    opt.dim = 2;
    opt.value_lo = -30;
    opt.value_hi = 30;
    opt.max_slope = 80;
    auto tr = testing::random_trace(rng, opt);

    // |s0| + |s1| <= 20, supplied as a Lipschitz black box.
    NamedPredicate pred{
        "B",
        ConstraintFn::blackbox(
            {"s0", "s1"},
            [](std::span<const double> v) {
                return std::abs(v[0]) + std::abs(v[1]) - 20.0;
            },
            1.0),
        Rel::le};
    auto prop = booleanize(tr, {pred});

    // Strictly increasing breakpoints covering exactly tdom.
    CHECK(prop.breakpoints.front() == tr.tdom().lo);
    CHECK(prop.breakpoints.back() == tr.tdom().hi);
    for (std::size_t k = 1; k < prop.breakpoints.size(); ++k)
        CHECK(prop.breakpoints[k] > prop.breakpoints[k - 1]);

    int mismatches = 0;
    for (int k = 0; k <= 10000; ++k) {
        double t = tr.tdom().lo + tr.tdom().width() * k / 10000.0;
        auto v = tr.sample_at(t);
        bool truth = std::abs(v[0]) + std::abs(v[1]) <= 20.0;
        bool reported = prop.letter_at(t).count("B") != 0;
        if (truth != reported) ++mismatches;
    }
    // Disagreement is confined to the sign-crossing resolution.
    CHECK(mismatches <= 12);
}

TEST_CASE("evaluate basics on propositional traces") {
    PropositionalTrace tr({0, 1, 2}, {L{"Q"}, L{"R"}});
    CHECK(evaluate(Formula::make_true(), tr).sat);
    CHECK(evaluate(parse_formula("Q U R"), tr).sat);
    // A witness at the very start makes the prefix clause vacuous.
    CHECK(evaluate(parse_formula("R U Q"), tr).sat);
    // S never holds before R does, so this until genuinely fails.
    CHECK_FALSE(evaluate(parse_formula("S U R"), tr).sat);
    CHECK(evaluate(parse_formula("Q"), tr).sat);        // letter at t0
    CHECK_FALSE(evaluate(parse_formula("R"), tr).sat);  // R only later
    CHECK(evaluate(parse_formula("F R"), tr).sat);
    CHECK_FALSE(evaluate(parse_formula("G Q"), tr).sat);
    CHECK(evaluate(parse_formula("Q W R"), tr).sat);
    // W clause (1): phi1 forever.
    PropositionalTrace allq({0, 2}, {L{"Q"}});
    CHECK(evaluate(parse_formula("Q W false"), allq).sat);
    CHECK_FALSE(evaluate(parse_formula("Q U false"), allq).sat);
}

TEST_CASE("bounded until instance from the freeze encoding") {
    auto tr = q_then_r();
    CHECK(evaluate(parse_formula("Q U[a:2, b:5] R"), tr).sat);
    CHECK_FALSE(evaluate(parse_formula("Q U[a:3.5, b:5] R"), tr).sat);
    // Witness times: x at 0, y in [3, 4].
    auto res = evaluate(parse_formula("Q U[a:2, b:5] R"), tr);
    REQUIRE(res.sat);
    CHECK(res.witness.count("x"));
    CHECK(res.witness.count("y"));
    CHECK(res.witness.at("x") == 0.0);
    CHECK(res.witness.at("y") >= 3.0);
    CHECK(res.witness.at("y") <= 4.0);
}

TEST_CASE("evaluate rejects open formulas and bad arities") {
    PropositionalTrace tr({0, 1}, {L{"Q"}});
    CHECK_THROWS_AS(evaluate(parse_formula("x - 1 <= 0"), tr), std::invalid_argument);
    auto poly = linear_interpolate(SampledTrace({0, 1}, {0, 1}, 1));
    CHECK_THROWS_AS(evaluate(parse_formula("s3 - 1 <= 0"), poly),
                    std::invalid_argument);
    // Signal constraints cannot run on a letters-only trace.
    CHECK_THROWS_AS(evaluate(parse_formula("s0 - 1 <= 0"), tr), std::invalid_argument);
}

TEST_CASE("evaluate signal constraints on polygonal traces") {
    auto tr = linear_interpolate(SampledTrace({0, 1, 2}, {0, 2, 0}, 1));
    CHECK(evaluate(parse_formula("F (s0 - 1.5 >= 0)"), tr).sat);
    CHECK_FALSE(evaluate(parse_formula("G (s0 - 1.5 <= 0)"), tr).sat);
    CHECK(evaluate(parse_formula("G (s0 - 2.5 <= 0)"), tr).sat);
    CHECK(evaluate(parse_formula("(s0 >= 0) U (s0 - 2 >= 0)"), tr).sat);
    // The prefix fails on the rising flank where s0 is strictly positive.
    CHECK_FALSE(evaluate(parse_formula("(s0 <= 0) U (s0 - 2 >= 0)"), tr).sat);
    // The same with a named predicate table.
    PredicateTable preds{affine_pred("High", {1}, -1.5, Rel::ge)};
    CHECK(evaluate(parse_formula("F High"), tr, preds).sat);
}

TEST_CASE("nnf preserves evaluation (fuzz)") {
    std::mt19937_64 rng(404);
    testing::FormulaGenOptions opt;
    opt.max_depth = 4;
    int checked = 0;
    for (int rep = 0; rep < 150; ++rep) {
        testing::FormulaGen gen(rng, opt);
        auto f = gen.gen();
        auto tr = testing::random_prop_trace(rng, 2 + rep % 6);
        bool a = evaluate(f, tr).sat;
        bool b = evaluate(to_nnf(f), tr).sat;
        CHECK_MESSAGE(a == b, "formula: ", to_string(f));
        ++checked;
    }
    CHECK(checked == 150);
}

TEST_CASE("relax is a relaxation: satisfaction persists on the same trace") {
    std::mt19937_64 rng(2718);
    testing::TraceGenOptions topt;
    topt.dim = 2;
    testing::FormulaGenOptions fopt;
    fopt.nnf_only = true;
    fopt.allow_props = false;
    fopt.allow_signal = true;
    fopt.signal_dim = 2;
    std::uniform_real_distribution<double> ud(0.0, 0.6);
    int satisfied = 0;
    for (int rep = 0; rep < 150; ++rep) {
        auto tr = testing::random_trace(rng, topt);
        testing::FormulaGen gen(rng, fopt);
        auto phi = to_nnf(gen.gen());
        if (!evaluate(phi, tr).sat) continue;
        ++satisfied;

        RelaxationContext ctx;
        ctx.delta = ud(rng);
        ctx.time_hull = tr.tdom();
        for (std::size_t k = 0; k < tr.dim(); ++k) {
            double lo = tr.point(0)[k], hi = lo;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                lo = std::min(lo, tr.point(i)[k]);
                hi = std::max(hi, tr.point(i)[k]);
            }
            ctx.signal_hull["s" + std::to_string(k)] = {lo, hi};
        }
        CHECK_MESSAGE(evaluate(relax(phi, ctx), tr).sat, "formula: ", to_string(phi));
    }
    CHECK(satisfied > 30);
}

TEST_CASE("transference: reflexivity") {
    std::mt19937_64 rng(7);
    testing::TraceGenOptions opt;
    opt.dim = 2;
    auto tr = testing::random_trace(rng, opt);
    auto phi = parse_formula("F (s0 + s1 - 0.2 >= 0) | G (s0 - 1 <= 0)");
    auto rep = check_transference(tr, tr, phi, {});
    CHECK(rep.distance <= 1e-4);
    CHECK_FALSE(rep.violation);
    if (rep.base_sat) CHECK(rep.relaxed_sat);
}

TEST_CASE("transference: hand-built retiming with sup shift 0.2") {
    std::mt19937_64 rng(99);
    testing::TraceGenOptions opt;
    opt.dim = 1;
    opt.min_segments = 4;
    opt.max_segments = 6;
    auto pi = testing::random_trace(rng, opt);

    auto r = testing::random_retiming(rng, pi.timestamps(), 0.2);
    std::vector<double> ts;
    for (double t : pi.timestamps()) ts.push_back(r(t));
    auto pi2 = linear_interpolate(SampledTrace(ts, pi.knots().values(), 1));

    auto d = compute_distance(pi, pi2, WindowParam::unbounded(), 1e-5);
    CHECK(d.distance <= r.sup_shift() + 1e-3);

    auto phi = parse_formula(
        "x.((s0 - 2 <= 0) U y.((y - x - 1 <= 0) & (s0 + 2 >= 0)))");
    auto rep = check_transference(pi, pi2, phi, {});
    CHECK_FALSE(rep.violation);
}

TEST_CASE("transference: propositional retimed letters") {
    // Propositional flavor: identical letter sequences under a retiming are
    // within the sup shift, and the relaxed formula transfers.
    std::mt19937_64 rng(123);
    for (int rep = 0; rep < 20; ++rep) {
        auto p = testing::random_prop_trace(rng, 4);
        auto r = testing::random_retiming(rng, p.breakpoints, 0.15);
        std::vector<double> bps;
        for (double t : p.breakpoints) bps.push_back(r(t));
        PropositionalTrace q(bps, p.letters);

        double dist = prop_compute_distance(p, q, 1e-6);
        CHECK(dist <= r.sup_shift() + 1e-4);

        testing::FormulaGenOptions opt;
        opt.nnf_only = true;
        testing::FormulaGen gen(rng, opt);
        auto phi = gen.gen();
        if (!evaluate(phi, p).sat) continue;

        RelaxationContext ctx;
        ctx.delta = dist + 1e-4;
        ctx.time_hull = {std::min(p.breakpoints.front(), q.breakpoints.front()),
                         std::max(p.breakpoints.back(), q.breakpoints.back())};
        auto relaxed = relax(to_nnf(phi), ctx);
        CHECK_MESSAGE(evaluate(relaxed, q).sat, "formula: ", to_string(phi));
    }
}
