#pragma once
// Trace representations: time-sampled sequences, their piecewise-affine
// completions, propositional traces over a finite alphabet, scaling, and
// the naive pointwise metric used as the upper end of the distance search.

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace skoro {

/// A closed real interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool empty() const { return !(lo <= hi); }
    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    Interval intersect(const Interval& other) const {
        return {lo > other.lo ? lo : other.lo, hi < other.hi ? hi : other.hi};
    }
};

/// A finite timed sequence of vector samples. Timestamps are strictly
/// increasing, at least two samples, all entries finite.
class SampledTrace {
public:
    /// `values` is row-major: sample k occupies [k*dim, (k+1)*dim).
    SampledTrace(std::vector<double> timestamps, std::vector<double> values,
                 std::size_t dim);

    static SampledTrace from_points(std::vector<double> timestamps,
                                    const std::vector<std::vector<double>>& points);

    std::size_t size() const { return timestamps_.size(); }
    std::size_t dim() const { return dim_; }
    std::size_t segments() const { return timestamps_.size() - 1; }

    double time(std::size_t k) const { return timestamps_[k]; }
    std::span<const double> point(std::size_t k) const {
        return {values_.data() + k * dim_, dim_};
    }
    const std::vector<double>& timestamps() const { return timestamps_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> timestamps_;
    std::vector<double> values_;  // row-major, size() * dim_ entries
    std::size_t dim_;
};

/// The piecewise-affine completion of a SampledTrace: a continuous function
/// on [first timestamp, last timestamp], affine between consecutive knots.
class PolygonalTrace {
public:
    explicit PolygonalTrace(SampledTrace knots) : knots_(std::move(knots)) {}

    std::size_t size() const { return knots_.size(); }
    std::size_t dim() const { return knots_.dim(); }
    std::size_t segments() const { return knots_.segments(); }
    double time(std::size_t k) const { return knots_.time(k); }
    std::span<const double> point(std::size_t k) const { return knots_.point(k); }
    const std::vector<double>& timestamps() const { return knots_.timestamps(); }
    const SampledTrace& knots() const { return knots_; }

    Interval tdom() const { return {knots_.time(0), knots_.time(size() - 1)}; }
    double tlen() const { return knots_.time(size() - 1); }

    /// Exact affine interpolation; knots reproduce stored values bit-exactly.
    /// Throws std::domain_error for t outside tdom().
    std::vector<double> sample_at(double t) const;
    void sample_at(double t, std::span<double> out) const;

    /// Index of the segment [t_k, t_k+1] bracketing t (left-bracketing at
    /// interior knots, last segment at the right endpoint).
    std::size_t segment_index(double t) const;

private:
    SampledTrace knots_;
};

/// A finitely-variable map from [T_i, T_e] to subsets of the proposition
/// alphabet: `letters[k]` holds on [breakpoints[k], breakpoints[k+1]).
/// The final point carries the last interval's letter.
struct PropositionalTrace {
    std::vector<double> breakpoints;         // size m+1, strictly increasing
    std::vector<std::set<std::string>> letters;  // size m

    PropositionalTrace(std::vector<double> bps,
                       std::vector<std::set<std::string>> lts);

    std::size_t intervals() const { return letters.size(); }
    Interval tdom() const { return {breakpoints.front(), breakpoints.back()}; }

    /// Letter at time t under the right-open convention.
    const std::set<std::string>& letter_at(double t) const;
};

/// Per-dimension (and time) multiplicative scaling so that one unit of
/// deviation means the same thing in every direction of the search.
struct ScalingProfile {
    double time_factor = 1.0;
    std::vector<double> dim_factors;

    static ScalingProfile identity(std::size_t dim) {
        return {1.0, std::vector<double>(dim, 1.0)};
    }
};

PolygonalTrace linear_interpolate(SampledTrace tr);
PolygonalTrace linear_interpolate(const SampledTrace& tr, int);  // copy overload

/// Timestamps scaled by s.time_factor, dimension k scaled by s.dim_factors[k].
PolygonalTrace scale(const PolygonalTrace& tr, const ScalingProfile& s);

/// Prefix trace on [T_i, t_end]; a knot is interpolated at the cut.
PolygonalTrace restrict(const PolygonalTrace& tr, double t_end);
/// Suffix trace on [t, T_e]; a knot is interpolated at the cut.
PolygonalTrace suffix(const PolygonalTrace& tr, double t);

/// Max over the merged knot set (plus per-segment interior critical points)
/// of the L2 distance between the two interpolations. Exact for polygonal
/// inputs. Requires equal time domains.
double pointwise_distance(const PolygonalTrace& a, const PolygonalTrace& b);

}  // namespace skoro
