#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "tmsmd/error.hpp"

namespace tmsmd::optimize {

struct TracePoint {
    double objective;
    std::vector<double> point;
};

struct NelderMeadOptions {
    /// Stop once max f - min f over the simplex falls below this.
    double f_tolerance = 1e-6;
    /// Evaluation budget; 0 means 500 * dimension.
    std::size_t max_evaluations = 0;
    /// Edge length of the initial axis-aligned simplex.
    double initial_step = 0.5;
    bool record_trace = true;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<TracePoint> trace;
};

/// Derivative-free simplex minimization (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Non-finite objective values count as +inf,
/// so callers may return NaN outside the feasible region.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> start, const NelderMeadOptions& options = {}) {
    const std::size_t dim = start.size();
    detail::require(dim >= 1, "nelder_mead needs at least one coordinate");
    const std::size_t budget = options.max_evaluations ? options.max_evaluations : 500 * dim;

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(dim + 1, start);
    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += options.initial_step;
    std::vector<double> values(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);

    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        std::vector<std::vector<double>> s(dim + 1);
        std::vector<double> v(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) {
            s[i] = std::move(simplex[order[i]]);
            v[i] = values[order[i]];
        }
        simplex.swap(s);
        values.swap(v);
    };

    auto along = [&](std::vector<double>& out, const std::vector<double>& from, double t) {
        // out = centroid + t * (centroid - from)
        for (std::size_t i = 0; i < dim; ++i) out[i] = centroid[i] + t * (centroid[i] - from[i]);
    };

    for (;;) {
        sort_simplex();
        if (options.record_trace) result.trace.push_back({values.front(), simplex.front()});
        const double spread = values.back() - values.front();
        if (std::isfinite(values.back()) && spread < options.f_tolerance) {
            result.converged = true;
            break;
        }
        if (result.evaluations >= budget) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t j = 0; j < dim; ++j)
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[j][i] / static_cast<double>(dim);

        auto& worst = simplex.back();
        along(trial, worst, 1.0);
        const double fr = eval(trial);
        if (fr < values.front()) {
            along(trial2, worst, 2.0);
            const double fe = eval(trial2);
            if (fe < fr) {
                worst = trial2;
                values.back() = fe;
            } else {
                worst = trial;
                values.back() = fr;
            }
            continue;
        }
        if (fr < values[dim - 1]) {
            worst = trial;
            values.back() = fr;
            continue;
        }
        const bool outside = fr < values.back();
        along(trial2, worst, outside ? 0.5 : -0.5);
        const double fc = eval(trial2);
        if (fc < (outside ? fr : values.back())) {
            worst = trial2;
            values.back() = fc;
            continue;
        }
        for (std::size_t j = 1; j <= dim; ++j) {
            for (std::size_t i = 0; i < dim; ++i)
                simplex[j][i] = simplex[0][i] + 0.5 * (simplex[j][i] - simplex[0][i]);
            values[j] = eval(simplex[j]);
        }
    }

    result.x = simplex.front();
    result.f = values.front();
    return result;
}

}  // namespace tmsmd::optimize
