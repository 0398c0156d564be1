#pragma once
// Test-only reference machinery, kept independent of the engine under test:
// a dense-grid dynamic-programming oracle for the Skorokhod distance and a
// seeded random-trace generator.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "skoro/trace.hpp"

namespace skoro::testing {

/// Dynamic program over monotone lattice paths on an n x n grid of time
/// pairs. Converges to the unbounded-window Skorokhod distance as the grid
/// refines; the error is bounded by grid_resolution().
inline double grid_oracle_distance(const PolygonalTrace& a, const PolygonalTrace& b,
                                   int n = 400) {
    const double a0 = a.tdom().lo, a1 = a.tdom().hi;
    const double b0 = b.tdom().lo, b1 = b.tdom().hi;
    const std::size_t dim = a.dim();

    std::vector<double> ta(n), tb(n);
    std::vector<double> va(n * dim), vb(n * dim);
    for (int k = 0; k < n; ++k) {
        ta[k] = a0 + (a1 - a0) * k / (n - 1);
        tb[k] = b0 + (b1 - b0) * k / (n - 1);
        a.sample_at(ta[k], {va.data() + k * dim, dim});
        b.sample_at(tb[k], {vb.data() + k * dim, dim});
    }
    auto cost = [&](int i, int j) {
        double s = 0;
        for (std::size_t d = 0; d < dim; ++d) {
            double e = va[i * dim + d] - vb[j * dim + d];
            s += e * e;
        }
        return std::max(std::abs(ta[i] - tb[j]), std::sqrt(s));
    };

    std::vector<double> prev(n), cur(n);
    for (int j = 0; j < n; ++j)
        prev[j] = std::max(cost(0, j), j > 0 ? prev[j - 1] : 0.0);
    for (int i = 1; i < n; ++i) {
        cur[0] = std::max(cost(i, 0), prev[0]);
        for (int j = 1; j < n; ++j) {
            double reach = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = std::max(cost(i, j), reach);
        }
        prev.swap(cur);
    }
    return prev[n - 1];
}

/// Max segment slope (L2 norm of the derivative) of a polygonal trace.
inline double max_slope(const PolygonalTrace& tr) {
    double best = 0;
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
        double dt = tr.time(k + 1) - tr.time(k);
        double s = 0;
        auto p = tr.point(k), q = tr.point(k + 1);
        for (std::size_t d = 0; d < tr.dim(); ++d) {
            double e = (q[d] - p[d]) / dt;
            s += e * e;
        }
        best = std::max(best, std::sqrt(s));
    }
    return best;
}

/// Bound on |grid_oracle_distance - true distance|: snapping a monotone path
/// to the lattice moves each coordinate by at most one grid step, which moves
/// the objective by at most max(h_a + h_b, L_a h_a + L_b h_b).
inline double grid_resolution(const PolygonalTrace& a, const PolygonalTrace& b,
                              int n = 400) {
    double ha = a.tdom().width() / (n - 1);
    double hb = b.tdom().width() / (n - 1);
    return std::max(ha + hb, max_slope(a) * ha + max_slope(b) * hb);
}

struct TraceGenOptions {
    int min_segments = 1;
    int max_segments = 6;
    std::size_t dim = 1;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    double min_gap_fraction = 0.08;  // of the domain width
    double value_lo = -1.0;
    double value_hi = 1.0;
    double max_slope = 3.0;  // per dimension
};

/// Random polygonal trace with bounded slopes (keeps the grid oracle sharp).
inline PolygonalTrace random_trace(std::mt19937_64& rng, const TraceGenOptions& opt) {
    std::uniform_int_distribution<int> nseg(opt.min_segments, opt.max_segments);
    int m = nseg(rng);
    double width = opt.domain_hi - opt.domain_lo;
    double min_gap = opt.min_gap_fraction * width;

    std::vector<double> ts(m + 1);
    ts.front() = opt.domain_lo;
    ts.back() = opt.domain_hi;
    if (m > 1) {
        std::uniform_real_distribution<double> u(opt.domain_lo + min_gap,
                                                 opt.domain_hi - min_gap);
        std::vector<double> interior;
        while (static_cast<int>(interior.size()) < m - 1) {
            double t = u(rng);
            bool ok = true;
            for (double s : interior)
                if (std::abs(s - t) < min_gap) ok = false;
            if (ok) interior.push_back(t);
        }
        std::sort(interior.begin(), interior.end());
        for (int k = 1; k < m; ++k) ts[k] = interior[k - 1];
    }

    std::uniform_real_distribution<double> v0(opt.value_lo, opt.value_hi);
    std::vector<double> vals((m + 1) * opt.dim);
    for (std::size_t d = 0; d < opt.dim; ++d) vals[d] = v0(rng);
    for (int k = 1; k <= m; ++k) {
        double dt = ts[k] - ts[k - 1];
        std::uniform_real_distribution<double> dv(-opt.max_slope * dt, opt.max_slope * dt);
        for (std::size_t d = 0; d < opt.dim; ++d) {
            double nv = vals[(k - 1) * opt.dim + d] + dv(rng);
            nv = std::clamp(nv, opt.value_lo, opt.value_hi);
            vals[k * opt.dim + d] = nv;
        }
    }
    return PolygonalTrace(SampledTrace(std::move(ts), std::move(vals), opt.dim));
}

/// A piecewise-affine retiming of [lo, hi] onto itself with kinks exactly at
/// the given interior times and sup-shift at most `max_shift`.
struct PiecewiseRetiming {
    std::vector<double> from;  // strictly increasing, covers the domain
    std::vector<double> to;    // same endpoints, strictly increasing

    double operator()(double t) const {
        auto it = std::upper_bound(from.begin(), from.end(), t);
        std::size_t k = static_cast<std::size_t>(it - from.begin());
        if (k == 0) return to.front();
        if (k >= from.size()) return to.back();
        double w = (t - from[k - 1]) / (from[k] - from[k - 1]);
        return to[k - 1] + w * (to[k - 1 + 1] - to[k - 1]);
    }

    double sup_shift() const {
        double s = 0;
        for (std::size_t k = 0; k < from.size(); ++k)
            s = std::max(s, std::abs(to[k] - from[k]));
        return s;  // piecewise-affine difference attains its sup at a kink
    }
};

inline PiecewiseRetiming random_retiming(std::mt19937_64& rng,
                                         const std::vector<double>& knots,
                                         double max_shift) {
    PiecewiseRetiming r;
    r.from = knots;
    r.to = knots;
    for (std::size_t k = 1; k + 1 < knots.size(); ++k) {
        double room = std::min({max_shift, (knots[k] - knots[k - 1]) * 0.45,
                                (knots[k + 1] - knots[k]) * 0.45});
        std::uniform_real_distribution<double> u(-room, room);
        r.to[k] = knots[k] + u(rng);
    }
    return r;
}

}  // namespace skoro::testing
