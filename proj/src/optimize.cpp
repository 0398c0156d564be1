#include "skoro/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace skoro {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

struct Vertex {
    std::vector<double> x;
    double f = 0.0;  // minimized value (= -objective)
};

}  // namespace

OptimizationResult nelder_mead_maximize(
    const std::function<double(std::span<const double>)>& objective,
    const std::vector<Interval>& bounds, int max_evals, std::uint64_t seed,
    const std::vector<double>* start) {
    const std::size_t n = bounds.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: need at least one dimension");
    for (const auto& b : bounds)
        if (b.empty() || !std::isfinite(b.lo) || !std::isfinite(b.hi))
            throw std::invalid_argument("nelder_mead: bounds must be finite intervals");
    if (max_evals < 1) throw std::invalid_argument("nelder_mead: max_evals must be >= 1");

    std::mt19937_64 rng(seed);
    OptimizationResult res;
    res.best_cost = -std::numeric_limits<double>::infinity();
    int evals = 0;

    double widest = 0;
    for (const auto& b : bounds) widest = std::max(widest, b.width());

    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t d = 0; d < n; ++d) x[d] = std::clamp(x[d], bounds[d].lo, bounds[d].hi);
    };
    auto eval = [&](std::vector<double> x) -> Vertex {
        clamp(x);
        double obj = objective(x);
        ++evals;
        if (!std::isfinite(obj)) obj = -std::numeric_limits<double>::infinity();
        res.log.push_back({x, obj});
        if (obj > res.best_cost) {
            res.best_cost = obj;
            res.best_values = x;
        }
        return {std::move(x), -obj};
    };
    auto random_point = [&] {
        std::vector<double> x(n);
        for (std::size_t d = 0; d < n; ++d) {
            std::uniform_real_distribution<double> u(bounds[d].lo, bounds[d].hi);
            x[d] = u(rng);
        }
        return x;
    };
    auto initial_simplex = [&](const std::vector<double>& x0) {
        std::vector<Vertex> simplex;
        simplex.push_back(eval(x0));
        for (std::size_t d = 0; d < n && evals < max_evals; ++d) {
            std::vector<double> x = x0;
            double step = 0.05 * bounds[d].width();
            if (step == 0) step = 1e-3;
            x[d] += (x[d] + step <= bounds[d].hi) ? step : -step;
            simplex.push_back(eval(x));
        }
        return simplex;
    };

    std::vector<Vertex> simplex = initial_simplex(start ? *start : random_point());

    while (evals < max_evals) {
        if (simplex.size() < n + 1) {  // budget ran out mid-init
            break;
        }
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });

        // Restart around the incumbent when the simplex has collapsed.
        double diameter = 0;
        for (std::size_t v = 1; v < simplex.size(); ++v)
            for (std::size_t d = 0; d < n; ++d)
                diameter = std::max(diameter, std::abs(simplex[v].x[d] - simplex[0].x[d]));
        if (diameter < 1e-6 * widest) {
            std::vector<double> center = res.best_values;
            std::vector<Vertex> fresh;
            fresh.push_back(eval(center));
            for (std::size_t d = 0; d < n && evals < max_evals; ++d) {
                std::vector<double> x = random_point();
                fresh.push_back(eval(x));
            }
            simplex = std::move(fresh);
            continue;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v + 1 < simplex.size(); ++v)
            for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[v].x[d];
        for (double& c : centroid) c /= static_cast<double>(n);

        const Vertex& worst = simplex.back();
        std::vector<double> reflected(n);
        for (std::size_t d = 0; d < n; ++d)
            reflected[d] = centroid[d] + kReflect * (centroid[d] - worst.x[d]);
        Vertex vr = eval(reflected);
        if (evals >= max_evals) break;

        if (vr.f < simplex.front().f) {
            std::vector<double> expanded(n);
            for (std::size_t d = 0; d < n; ++d)
                expanded[d] = centroid[d] + kExpand * (centroid[d] - worst.x[d]);
            Vertex ve = eval(expanded);
            simplex.back() = ve.f < vr.f ? std::move(ve) : std::move(vr);
        } else if (vr.f < simplex[simplex.size() - 2].f) {
            simplex.back() = std::move(vr);
        } else {
            std::vector<double> contracted(n);
            for (std::size_t d = 0; d < n; ++d)
                contracted[d] = centroid[d] + kContract * (worst.x[d] - centroid[d]);
            Vertex vc = eval(contracted);
            if (vc.f < worst.f) {
                simplex.back() = std::move(vc);
            } else {
                // Shrink toward the best vertex.
                for (std::size_t v = 1; v < simplex.size() && evals < max_evals; ++v) {
                    std::vector<double> x(n);
                    for (std::size_t d = 0; d < n; ++d)
                        x[d] = simplex[0].x[d] + kShrink * (simplex[v].x[d] - simplex[0].x[d]);
                    simplex[v] = eval(x);
                }
            }
        }
    }

    if (res.best_values.empty()) res.best_values.assign(n, 0.0);
    return res;
}

}  // namespace skoro
