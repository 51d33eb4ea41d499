#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace robreg {

/// Result of a numerical integral with its estimated absolute error.
struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
    bool converged = true;
};

/// Globally adaptive 21-point Gauss-Kronrod over [lo, hi].  The range starts
/// as `pieces` equal subintervals; the subinterval with the largest error
/// estimate is bisected until the summed error is below rel_tol times the
/// summed value or `max_intervals` is reached.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, double lo, double hi, double rel_tol, int pieces = 1,
                                    int max_intervals = 2000) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    struct Piece {
        double a, b, value, error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    auto eval = [&](double a, double b) {
        double err = 0.0;
        const double v = GK::integrate(f, a, b, 0, 0.0, &err);
        // Boost reports the single-pass error on the reference interval [-1, 1].
        return Piece{a, b, v, err * 0.5 * (b - a)};
    };

    if (pieces < 1) pieces = 1;
    std::priority_queue<Piece> heap;
    const double width = (hi - lo) / pieces;
    for (int k = 0; k < pieces; ++k) {
        const double a = lo + k * width;
        const double b = (k + 1 == pieces) ? hi : lo + (k + 1) * width;
        heap.push(eval(a, b));
    }

    auto totals = [&heap]() {
        // Re-summed from scratch so rounding in running totals cannot accumulate.
        auto copy = heap;
        double v = 0.0, e = 0.0;
        for (; !copy.empty(); copy.pop()) {
            v += copy.top().value;
            e += copy.top().error;
        }
        return std::pair{v, e};
    };

    auto [value, error] = totals();
    int count = pieces;
    while (std::isfinite(value) && error > rel_tol * std::abs(value) && count < max_intervals) {
        const Piece worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        heap.pop();
        const Piece left = eval(worst.a, mid), right = eval(mid, worst.b);
        heap.push(left);
        heap.push(right);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        ++count;
        if (count % 64 == 0) std::tie(value, error) = totals();
    }
    std::tie(value, error) = totals();

    QuadratureResult out{value, error, std::isfinite(value) && error <= rel_tol * std::abs(value)};
    return out;
}

}  // namespace robreg
