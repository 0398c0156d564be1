#include "skoro/skorokhod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace skoro {

WindowParam WindowParam::bounded(std::int64_t k) {
    if (k < 1) throw std::invalid_argument("window must be >= 1");
    return {k};
}

std::string WindowParam::to_string() const {
    return w ? std::to_string(*w) : std::string("unbounded");
}

double sampling_adjusted(double d, double sampling_error) {
    if (!(d >= 0)) throw std::invalid_argument("distance must be nonnegative");
    if (!(sampling_error >= 0))
        throw std::invalid_argument("sampling error must be nonnegative");
    return d + 2.0 * sampling_error;
}

namespace {

constexpr Interval kEmpty{1.0, 0.0};

double l2(std::span<const double> p, std::span<const double> q) {
    double s = 0;
    for (std::size_t d = 0; d < p.size(); ++d) {
        double e = p[d] - q[d];
        s += e * e;
    }
    return std::sqrt(s);
}

// Unclipped parameter interval on a segment's absolute time axis where both
// ||fixed_pt - seg(u)||_2 <= delta and |fixed_time - u| <= delta hold. The
// value constraint restricted to the edge is one quadratic; the time band is
// linear. Caller intersects with the segment span.
Interval edge_constraint(double fixed_time, std::span<const double> fixed_pt,
                         double seg_t0, double seg_t1, std::span<const double> p0,
                         std::span<const double> p1, double delta) {
    double c2 = 0, c1 = 0, c0 = -delta * delta;
    for (std::size_t d = 0; d < fixed_pt.size(); ++d) {
        double dq = p1[d] - p0[d];
        double d0 = fixed_pt[d] - p0[d];
        c2 += dq * dq;
        c1 += -2.0 * d0 * dq;
        c0 += d0 * d0;
    }
    double nlo, nhi;  // normalized segment coordinate
    if (c2 <= 0) {
        if (c0 <= 0) {
            nlo = 0;
            nhi = 1;
        } else {
            return kEmpty;
        }
    } else {
        double half_p = 0.5 * c1 / c2;
        double q = c0 / c2;
        double disc = half_p * half_p - q;
        // Tiny negative discriminants from cancellation are tangency, not
        // emptiness.
        if (disc < 0 && disc > -1e-12 * std::max(1.0, half_p * half_p + std::abs(q)))
            disc = 0;
        if (disc < 0) return kEmpty;
        double r = std::sqrt(disc);
        nlo = -half_p - r;
        nhi = -half_p + r;
    }
    double len = seg_t1 - seg_t0;
    Interval out{seg_t0 + nlo * len, seg_t0 + nhi * len};
    if (out.lo < fixed_time - delta) out.lo = fixed_time - delta;
    if (out.hi > fixed_time + delta) out.hi = fixed_time + delta;
    return out;
}

Interval clip(const Interval& raw, double lo, double hi) {
    return {raw.lo < lo ? lo : raw.lo, raw.hi > hi ? hi : raw.hi};
}

Interval clamp_lo(const Interval& iv, double floor_value) {
    return {iv.lo < floor_value ? floor_value : iv.lo, iv.hi};
}

}  // namespace

double endpoint_lower_bound(const PolygonalTrace& a, const PolygonalTrace& b) {
    std::size_t la = a.size() - 1, lb = b.size() - 1;
    double bound = std::abs(a.time(0) - b.time(0));
    bound = std::max(bound, std::abs(a.time(la) - b.time(lb)));
    bound = std::max(bound, l2(a.point(0), b.point(0)));
    bound = std::max(bound, l2(a.point(la), b.point(lb)));
    return bound;
}

bool check_within(const PolygonalTrace& a, const PolygonalTrace& b, double delta,
                  const WindowParam& w) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("check_within: dimension mismatch");
    if (!(delta >= 0) || !std::isfinite(delta))
        throw std::invalid_argument("check_within: delta must be finite and >= 0");

    const std::int64_t M = static_cast<std::int64_t>(a.segments());
    const std::int64_t N = static_cast<std::int64_t>(b.segments());

    // A retiming is a bijection between the closed domains, so the endpoint
    // matches are forced.
    if (endpoint_lower_bound(a, b) > delta) return false;

    const bool windowed = !w.is_unbounded();
    const std::int64_t W = windowed ? *w.w : (M > N ? M : N);
    if (windowed && std::llabs(M - N) > W) return false;

    auto row_lo = [&](std::int64_t i) { return std::max<std::int64_t>(0, i - W); };
    auto row_hi = [&](std::int64_t i) { return std::min<std::int64_t>(N - 1, i + W); };

    // Reachable sub-intervals of the current column's left edges.
    std::int64_t jlo = row_lo(0), jhi = row_hi(0);
    std::vector<Interval> reach_left(static_cast<std::size_t>(jhi - jlo + 1), kEmpty);
    std::vector<Interval> next_left;

    // Climb the left boundary (s = a.time(0)): reachable while contiguous.
    for (std::int64_t j = jlo; j <= jhi; ++j) {
        Interval raw = edge_constraint(a.time(0), a.point(0), b.time(j), b.time(j + 1),
                                       b.point(j), b.point(j + 1), delta);
        if (raw.empty() || raw.lo > b.time(j)) break;
        Interval r = clip(raw, b.time(j), b.time(j + 1));
        if (r.empty()) break;
        reach_left[static_cast<std::size_t>(j - jlo)] = r;
        if (raw.hi < b.time(j + 1)) break;  // cannot climb past this edge
    }

    bool bottom_alive = true;
    Interval terminal_right = kEmpty, terminal_top = kEmpty;

    for (std::int64_t i = 0; i < M; ++i) {
        const std::int64_t cjlo = row_lo(i), cjhi = row_hi(i);

        Interval reach_bottom = kEmpty;
        if (cjlo == 0 && bottom_alive) {
            Interval raw = edge_constraint(b.time(0), b.point(0), a.time(i), a.time(i + 1),
                                           a.point(i), a.point(i + 1), delta);
            if (!raw.empty() && raw.lo <= a.time(i)) {
                reach_bottom = clip(raw, a.time(i), a.time(i + 1));
                bottom_alive = !reach_bottom.empty() && raw.hi >= a.time(i + 1);
            } else {
                bottom_alive = false;
            }
        } else if (cjlo > 0) {
            bottom_alive = false;
        }

        const std::int64_t njlo = row_lo(i + 1), njhi = row_hi(i + 1);
        next_left.assign(static_cast<std::size_t>(njhi - njlo + 1), kEmpty);

        for (std::int64_t j = cjlo; j <= cjhi; ++j) {
            Interval rl = reach_left[static_cast<std::size_t>(j - cjlo)];
            if (rl.empty() && reach_bottom.empty()) {
                reach_bottom = kEmpty;
                continue;
            }
            Interval raw_r = edge_constraint(a.time(i + 1), a.point(i + 1), b.time(j),
                                             b.time(j + 1), b.point(j), b.point(j + 1),
                                             delta);
            Interval rf = clip(raw_r, b.time(j), b.time(j + 1));
            Interval raw_t = edge_constraint(b.time(j + 1), b.point(j + 1), a.time(i),
                                             a.time(i + 1), a.point(i), a.point(i + 1),
                                             delta);
            Interval tf = clip(raw_t, a.time(i), a.time(i + 1));

            // Within the convex cell region, anything on the right edge is
            // monotonically reachable from a bottom point; from a left-edge
            // point only times at or above it are.
            Interval right = reach_bottom.empty() ? clamp_lo(rf, rl.lo) : rf;
            Interval top = rl.empty() ? clamp_lo(tf, reach_bottom.lo) : tf;

            if (i == M - 1 && j == N - 1) {
                terminal_right = right;
                terminal_top = top;
            }
            if (j >= njlo && j <= njhi)
                next_left[static_cast<std::size_t>(j - njlo)] = right;
            reach_bottom = top;
        }
        reach_left.swap(next_left);
        jlo = njlo;
        jhi = njhi;
    }

    bool corner = (!terminal_right.empty() && terminal_right.hi >= b.time(N)) ||
                  (!terminal_top.empty() && terminal_top.hi >= a.time(M));
    return corner;
}

namespace {

// Max |i - j| over the cells crossed by the affine diagonal that maps one
// domain onto the other. When this fits in the window, the pointwise metric
// over that alignment is a certified upper bound and needs no monitor call.
bool diagonal_within_window(const PolygonalTrace& a, const PolygonalTrace& b,
                            std::int64_t W) {
    const std::size_t M = a.segments(), N = b.segments();
    const double a0 = a.time(0), alen = a.time(M) - a0;
    const double b0 = b.time(0), blen = b.time(N) - b0;
    std::size_t i = 0, j = 0;
    while (true) {
        if (std::llabs(static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j)) > W)
            return false;
        if (i + 1 >= M && j + 1 >= N) return true;
        double ea = (a.time(i + 1) - a0) / alen;  // normalized right ends
        double eb = (b.time(j + 1) - b0) / blen;
        if (i + 1 >= M) {
            ++j;
        } else if (j + 1 >= N) {
            ++i;
        } else if (ea < eb) {
            ++i;
        } else if (eb < ea) {
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
}

// Upper bound on the distance witnessed by the affine retiming between the
// two domains.
double affine_alignment_bound(const PolygonalTrace& a, const PolygonalTrace& b) {
    const std::size_t N = b.segments();
    const double a0 = a.time(0), alen = a.time(a.segments()) - a0;
    const double b0 = b.time(0), blen = b.time(N) - b0;

    std::vector<double> ts(b.timestamps());
    for (double& u : ts) u = a0 + (u - b0) * (alen / blen);
    // Guard against rounding collapsing adjacent knots.
    for (std::size_t k = 1; k < ts.size(); ++k)
        if (!(ts[k] > ts[k - 1])) ts[k] = std::nextafter(ts[k - 1], 1e308);
    PolygonalTrace b_re(SampledTrace(std::move(ts), b.knots().values(), b.dim()));
    double bound = pointwise_distance(a, b_re);
    bound = std::max(bound, std::abs(a.time(0) - b.time(0)));
    bound = std::max(bound, std::abs(a.time(a.segments()) - b.time(N)));
    return bound;
}

}  // namespace

DistanceResult compute_distance(const PolygonalTrace& a, const PolygonalTrace& b,
                                const WindowParam& w, double tol, bool relative_tol) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("compute_distance: dimension mismatch");
    if (!(tol > 0)) throw std::invalid_argument("compute_distance: tol must be > 0");

    const std::int64_t M = static_cast<std::int64_t>(a.segments());
    const std::int64_t N = static_cast<std::int64_t>(b.segments());
    if (!w.is_unbounded() && std::llabs(M - N) > *w.w)
        throw std::invalid_argument(
            "compute_distance: window " + w.to_string() + " admits no retiming between " +
            std::to_string(M) + " and " + std::to_string(N) + " segments");

    double lo = endpoint_lower_bound(a, b);
    Interval da = a.tdom(), db = b.tdom();
    double hi = (da.lo == db.lo && da.hi == db.hi) ? pointwise_distance(a, b)
                                                   : affine_alignment_bound(a, b);
    if (hi < lo) hi = lo;

    DistanceResult res;
    res.window = w;

    double total = 0;
    auto monitored_check = [&](double delta) {
        auto t0 = std::chrono::steady_clock::now();
        bool ok = check_within(a, b, delta, w);
        auto t1 = std::chrono::steady_clock::now();
        total += std::chrono::duration<double>(t1 - t0).count();
        ++res.monitor_calls;
        return ok;
    };

    const double tol_abs = relative_tol ? tol * std::max(hi, 1e-300) : tol;

    // The alignment bound is certified when its diagonal fits the window;
    // otherwise verify, widening geometrically if needed.
    bool certified = w.is_unbounded() || diagonal_within_window(a, b, *w.w);
    if (hi > lo || !certified) {
        if (!certified) {
            int expansions = 0;
            while (!monitored_check(hi)) {
                lo = hi;
                hi = (hi > 0 ? hi * 2 : 1e-6);
                if (++expansions > 80)
                    throw std::runtime_error(
                        "compute_distance: no admissible retiming found while expanding "
                        "the search range under window " + w.to_string());
            }
        }
        while (hi - lo > 2.0 * tol_abs) {
            double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;  // bracket at float resolution
            if (monitored_check(mid))
                hi = mid;
            else
                lo = mid;
        }
    }

    res.distance = 0.5 * (lo + hi);
    res.tolerance = std::max(0.5 * (hi - lo), 0.0);
    res.wall_seconds = total;
    res.wall_seconds_per_call = res.monitor_calls ? total / res.monitor_calls : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Propositional traces: the value metric is 0 on equal letters and infinite
// otherwise, so a cell is admissible only when letters agree and the free
// region inside it is the |s - t| <= delta band.

namespace {

const std::set<std::string>& letter_of(const PropositionalTrace& p, std::size_t idx) {
    return p.letters[idx < p.letters.size() ? idx : p.letters.size() - 1];
}

}  // namespace

bool prop_check_within(const PropositionalTrace& a, const PropositionalTrace& b,
                       double delta) {
    if (!(delta >= 0) || !std::isfinite(delta))
        throw std::invalid_argument("prop_check_within: delta must be finite and >= 0");
    const std::size_t M = a.intervals(), N = b.intervals();

    if (std::abs(a.breakpoints.front() - b.breakpoints.front()) > delta) return false;
    if (std::abs(a.breakpoints.back() - b.breakpoints.back()) > delta) return false;
    if (a.letters.front() != b.letters.front()) return false;
    if (a.letters.back() != b.letters.back()) return false;

    auto band = [&](double fixed, double lo, double hi) {
        return clip({fixed - delta, fixed + delta}, lo, hi);
    };
    // Letters at breakpoints follow the right-open convention, so every edge
    // and corner is gated by the cell it leads into.
    auto corner_free = [&](std::size_t k, std::size_t l) {
        return letter_of(a, k) == letter_of(b, l) &&
               std::abs(a.breakpoints[k] - b.breakpoints[l]) <= delta;
    };

    std::vector<Interval> reach_left(N, kEmpty);
    for (std::size_t j = 0; j < N; ++j) {
        if (letter_of(a, 0) != letter_of(b, j)) break;
        Interval raw{a.breakpoints.front() - delta, a.breakpoints.front() + delta};
        if (raw.lo > b.breakpoints[j]) break;
        Interval r = clip(raw, b.breakpoints[j], b.breakpoints[j + 1]);
        if (r.empty()) break;
        reach_left[j] = r;
        if (raw.hi < b.breakpoints[j + 1]) break;
    }

    bool bottom_alive = true;
    bool accepted = false;
    std::vector<Interval> next_left(N, kEmpty);
    // corner_entry[j]: the bottom-left corner of cell (i, j) is reachable.
    // Both letter sequences flip there, which is how exactly-retimed letter
    // traces are matched.
    std::vector<char> corner_entry(N, 0), next_corner(N, 0);

    for (std::size_t i = 0; i < M; ++i) {
        Interval reach_bottom = kEmpty;
        if (bottom_alive) {
            if (letter_of(a, i) != letter_of(b, 0)) {
                bottom_alive = false;
            } else {
                Interval raw{b.breakpoints.front() - delta, b.breakpoints.front() + delta};
                if (raw.lo <= a.breakpoints[i]) {
                    reach_bottom = clip(raw, a.breakpoints[i], a.breakpoints[i + 1]);
                    bottom_alive = !reach_bottom.empty() && raw.hi >= a.breakpoints[i + 1];
                } else {
                    bottom_alive = false;
                }
            }
        }

        std::fill(next_left.begin(), next_left.end(), kEmpty);
        std::fill(next_corner.begin(), next_corner.end(), 0);
        for (std::size_t j = 0; j < N; ++j) {
            Interval rl = reach_left[j];
            bool via_corner = corner_entry[j] != 0;
            bool entered = via_corner || !rl.empty() || !reach_bottom.empty();
            if (!entered || letter_of(a, i) != letter_of(b, j)) {
                reach_bottom = kEmpty;
                continue;
            }
            Interval rf = (letter_of(a, i + 1) == letter_of(b, j))
                              ? band(a.breakpoints[i + 1], b.breakpoints[j],
                                     b.breakpoints[j + 1])
                              : kEmpty;
            Interval tf = (letter_of(a, i) == letter_of(b, j + 1))
                              ? band(b.breakpoints[j + 1], a.breakpoints[i],
                                     a.breakpoints[i + 1])
                              : kEmpty;
            Interval right = rf, top = tf;
            if (!via_corner) {
                if (reach_bottom.empty()) right = clamp_lo(rf, rl.lo);
                if (rl.empty()) top = clamp_lo(tf, reach_bottom.lo);
            }
            if (i == M - 1 && j == N - 1) {
                // Any entry reaches the terminal corner monotonically within
                // the free closed cell.
                accepted = corner_free(M, N);
            }
            if (j + 1 < N) next_corner[j + 1] = corner_free(i + 1, j + 1) ? 1 : 0;
            next_left[j] = right;
            reach_bottom = top;
        }
        reach_left.swap(next_left);
        corner_entry.swap(next_corner);
    }

    return accepted;
}

double prop_compute_distance(const PropositionalTrace& a, const PropositionalTrace& b,
                             double tol) {
    if (!(tol > 0)) throw std::invalid_argument("prop_compute_distance: tol must be > 0");
    // Merge consecutive equal letters so structurally identical traces align.
    auto reduce = [](const PropositionalTrace& p) {
        std::vector<double> bps{p.breakpoints.front()};
        std::vector<std::set<std::string>> ls{p.letters.front()};
        for (std::size_t k = 1; k < p.letters.size(); ++k) {
            if (p.letters[k] != ls.back()) {
                bps.push_back(p.breakpoints[k]);
                ls.push_back(p.letters[k]);
            }
        }
        bps.push_back(p.breakpoints.back());
        return std::pair(std::move(bps), std::move(ls));
    };
    auto [bpa, la] = reduce(a);
    auto [bpb, lb] = reduce(b);
    if (la != lb) return std::numeric_limits<double>::infinity();

    double hi = 0;
    for (std::size_t k = 0; k < bpa.size(); ++k)
        hi = std::max(hi, std::abs(bpa[k] - bpb[k]));
    double lo = std::max(std::abs(bpa.front() - bpb.front()),
                         std::abs(bpa.back() - bpb.back()));
    while (hi - lo > 2.0 * tol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (prop_check_within(a, b, mid))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace skoro
