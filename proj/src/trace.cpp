#include "skoro/trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace skoro {

namespace {

void check_finite(double x, const char* what) {
    if (!std::isfinite(x))
        throw std::invalid_argument(std::string(what) + " is not finite");
}

}  // namespace

SampledTrace::SampledTrace(std::vector<double> timestamps,
                           std::vector<double> values, std::size_t dim)
    : timestamps_(std::move(timestamps)), values_(std::move(values)), dim_(dim) {
    if (dim_ == 0) throw std::invalid_argument("trace dimension must be >= 1");
    if (timestamps_.size() < 2)
        throw std::invalid_argument("trace needs at least 2 samples");
    if (values_.size() != timestamps_.size() * dim_)
        throw std::invalid_argument("value count does not match timestamps * dim");
    for (std::size_t k = 0; k < timestamps_.size(); ++k) {
        check_finite(timestamps_[k], "timestamp");
        if (k > 0 && !(timestamps_[k] > timestamps_[k - 1]))
            throw std::invalid_argument("timestamps not strictly increasing at sample " +
                                        std::to_string(k));
    }
    for (double v : values_) check_finite(v, "value");
}

SampledTrace SampledTrace::from_points(std::vector<double> timestamps,
                                       const std::vector<std::vector<double>>& points) {
    if (points.empty()) throw std::invalid_argument("no samples");
    std::size_t dim = points.front().size();
    std::vector<double> flat;
    flat.reserve(points.size() * dim);
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (points[k].size() != dim)
            throw std::invalid_argument("ragged sample at index " + std::to_string(k));
        flat.insert(flat.end(), points[k].begin(), points[k].end());
    }
    return SampledTrace(std::move(timestamps), std::move(flat), dim);
}

std::size_t PolygonalTrace::segment_index(double t) const {
    const auto& ts = knots_.timestamps();
    if (t < ts.front() || t > ts.back())
        throw std::domain_error("time " + std::to_string(t) + " outside trace domain [" +
                                std::to_string(ts.front()) + ", " +
                                std::to_string(ts.back()) + "]");
    // Left-bracketing segment: largest k with ts[k] <= t, capped at the last segment.
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t k = static_cast<std::size_t>(it - ts.begin());
    if (k == 0) return 0;
    k -= 1;
    if (k >= segments()) k = segments() - 1;
    return k;
}

void PolygonalTrace::sample_at(double t, std::span<double> out) const {
    std::size_t k = segment_index(t);
    double t0 = knots_.time(k), t1 = knots_.time(k + 1);
    auto p0 = knots_.point(k);
    auto p1 = knots_.point(k + 1);
    if (t == t0) {
        std::copy(p0.begin(), p0.end(), out.begin());
        return;
    }
    if (t == t1) {
        std::copy(p1.begin(), p1.end(), out.begin());
        return;
    }
    double w = (t - t0) / (t1 - t0);
    for (std::size_t d = 0; d < dim(); ++d) out[d] = p0[d] + w * (p1[d] - p0[d]);
}

std::vector<double> PolygonalTrace::sample_at(double t) const {
    std::vector<double> out(dim());
    sample_at(t, out);
    return out;
}

PropositionalTrace::PropositionalTrace(std::vector<double> bps,
                                       std::vector<std::set<std::string>> lts)
    : breakpoints(std::move(bps)), letters(std::move(lts)) {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("propositional trace needs at least one interval");
    if (letters.size() + 1 != breakpoints.size())
        throw std::invalid_argument("letter count must be breakpoint count - 1");
    for (std::size_t k = 1; k < breakpoints.size(); ++k)
        if (!(breakpoints[k] > breakpoints[k - 1]))
            throw std::invalid_argument("breakpoints not strictly increasing");
}

const std::set<std::string>& PropositionalTrace::letter_at(double t) const {
    if (t < breakpoints.front() || t > breakpoints.back())
        throw std::domain_error("time outside propositional trace domain");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    std::size_t k = static_cast<std::size_t>(it - breakpoints.begin());
    if (k == 0) return letters.front();
    k -= 1;
    if (k >= letters.size()) k = letters.size() - 1;
    return letters[k];
}

PolygonalTrace linear_interpolate(SampledTrace tr) {
    return PolygonalTrace(std::move(tr));
}

PolygonalTrace linear_interpolate(const SampledTrace& tr, int) {
    return PolygonalTrace(tr);
}

PolygonalTrace scale(const PolygonalTrace& tr, const ScalingProfile& s) {
    if (s.dim_factors.size() != tr.dim())
        throw std::invalid_argument("scaling profile has " +
                                    std::to_string(s.dim_factors.size()) +
                                    " dim factors, trace has dim " +
                                    std::to_string(tr.dim()));
    if (!(s.time_factor > 0)) throw std::invalid_argument("time factor must be positive");
    for (double f : s.dim_factors)
        if (!(f > 0)) throw std::invalid_argument("dim factors must be positive");

    std::vector<double> ts(tr.timestamps());
    for (double& t : ts) t *= s.time_factor;
    std::vector<double> vals(tr.knots().values());
    std::size_t dim = tr.dim();
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] *= s.dim_factors[k % dim];
    return PolygonalTrace(SampledTrace(std::move(ts), std::move(vals), dim));
}

PolygonalTrace restrict(const PolygonalTrace& tr, double t_end) {
    Interval dom = tr.tdom();
    if (!dom.contains(t_end)) throw std::domain_error("restrict cut outside domain");
    if (t_end == dom.hi) return tr;
    if (t_end == dom.lo) throw std::domain_error("restrict would produce an empty-duration trace");

    std::vector<double> ts;
    std::vector<double> vals;
    std::size_t dim = tr.dim();
    for (std::size_t k = 0; k < tr.size() && tr.time(k) < t_end; ++k) {
        ts.push_back(tr.time(k));
        auto p = tr.point(k);
        vals.insert(vals.end(), p.begin(), p.end());
    }
    ts.push_back(t_end);
    auto cut = tr.sample_at(t_end);
    vals.insert(vals.end(), cut.begin(), cut.end());
    return PolygonalTrace(SampledTrace(std::move(ts), std::move(vals), dim));
}

PolygonalTrace suffix(const PolygonalTrace& tr, double t) {
    Interval dom = tr.tdom();
    if (!dom.contains(t)) throw std::domain_error("suffix cut outside domain");
    if (t == dom.lo) return tr;
    if (t == dom.hi) throw std::domain_error("suffix would produce an empty-duration trace");

    std::vector<double> ts{t};
    std::vector<double> vals = tr.sample_at(t);
    std::size_t dim = tr.dim();
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.time(k) > t) {
            ts.push_back(tr.time(k));
            auto p = tr.point(k);
            vals.insert(vals.end(), p.begin(), p.end());
        }
    }
    return PolygonalTrace(SampledTrace(std::move(ts), std::move(vals), dim));
}

namespace {

double l2_gap(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double e = a[d] - b[d];
        s += e * e;
    }
    return std::sqrt(s);
}

}  // namespace

double pointwise_distance(const PolygonalTrace& a, const PolygonalTrace& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("pointwise_distance: dimension mismatch");
    Interval da = a.tdom(), db = b.tdom();
    if (da.lo != db.lo || da.hi != db.hi)
        throw std::invalid_argument("pointwise_distance: unequal time domains");

    // Merged knot set.
    std::vector<double> ts;
    ts.reserve(a.size() + b.size());
    std::merge(a.timestamps().begin(), a.timestamps().end(), b.timestamps().begin(),
               b.timestamps().end(), std::back_inserter(ts));
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

    std::size_t dim = a.dim();
    std::vector<double> pa(dim), pb(dim), qa(dim), qb(dim), mid_a(dim), mid_b(dim);
    double best = 0;
    a.sample_at(ts[0], pa);
    b.sample_at(ts[0], pb);
    best = l2_gap(pa, pb);
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        a.sample_at(ts[k + 1], qa);
        b.sample_at(ts[k + 1], qb);
        best = std::max(best, l2_gap(qa, qb));
        // The squared gap is quadratic on the segment; its interior critical
        // point is checked as well (convexity makes it a minimum, but the
        // check is cheap and keeps this exact without relying on that).
        double num = 0, den = 0;
        for (std::size_t d = 0; d < dim; ++d) {
            double d0 = pa[d] - pb[d];
            double dv = (qa[d] - qb[d]) - d0;
            num += d0 * dv;
            den += dv * dv;
        }
        if (den > 0) {
            double s = -num / den;
            if (s > 0 && s < 1) {
                double acc = 0;
                for (std::size_t d = 0; d < dim; ++d) {
                    double d0 = pa[d] - pb[d];
                    double dv = (qa[d] - qb[d]) - d0;
                    double e = d0 + s * dv;
                    acc += e * e;
                }
                best = std::max(best, std::sqrt(acc));
            }
        }
        pa.swap(qa);
        pb.swap(qb);
    }
    return best;
}

}  // namespace skoro
