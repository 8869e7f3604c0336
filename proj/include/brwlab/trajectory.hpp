#pragma once

// Grid-evaluated normalized ancestral trajectories and the small family of
// bounded, uniformly continuous path functionals the verification campaigns
// use. A trajectory records H(t) = V(z_floor(t n)) / sqrt(sigma2 n) on a
// fixed grid of times in [0, 1].

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace brwlab {

struct Trajectory {
    std::vector<double> grid;    // strictly increasing, grid[0] = 0, back() <= 1
    std::vector<double> values;  // values[i] = V(z_floor(grid[i] * n)) / sqrt(sigma2 n)
};

inline std::vector<double> uniform_grid(int m) {
    if (m < 1) throw std::invalid_argument("uniform_grid: m < 1");
    std::vector<double> g(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i)
        g[static_cast<std::size_t>(i)] = static_cast<double>(i) / static_cast<double>(m);
    return g;
}

// Floor convention of the time change: index of the ancestor evaluated at
// time t in an n-step path.
inline std::size_t floor_time_index(double t, int n) {
    const auto i = static_cast<long>(std::floor(t * static_cast<double>(n)));
    return static_cast<std::size_t>(std::clamp(i, long{0}, static_cast<long>(n)));
}

inline Trajectory normalize_trajectory(std::span<const double> positions, double sigma2,
                                       int n, std::span<const double> grid) {
    if (positions.size() != static_cast<std::size_t>(n) + 1)
        throw std::invalid_argument("normalize_trajectory: positions must have length n+1");
    const double scale = n > 0 ? 1.0 / std::sqrt(sigma2 * n) : 0.0;
    Trajectory out;
    out.grid.assign(grid.begin(), grid.end());
    out.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        out.values[i] = positions[floor_time_index(grid[i], n)] * scale;
    return out;
}

class PathFunctional {
public:
    enum class Kind { Constant, EvalAt, Max, TimeAverage, SoftThreshold };

    static PathFunctional constant(double c) {
        PathFunctional f;
        f.kind = Kind::Constant;
        f.c = c;
        f.bound = std::abs(c);
        return f;
    }
    static PathFunctional eval_at(double t) {
        PathFunctional f;
        f.kind = Kind::EvalAt;
        f.t = t;
        return f;
    }
    static PathFunctional max() {
        PathFunctional f;
        f.kind = Kind::Max;
        return f;
    }
    static PathFunctional time_average() {
        PathFunctional f;
        f.kind = Kind::TimeAverage;
        return f;
    }
    // Smooth surrogate of the indicator {path(t) >= level}; values in (0, 1).
    static PathFunctional soft_threshold(double t, double level, double slope) {
        PathFunctional f;
        f.kind = Kind::SoftThreshold;
        f.t = t;
        f.level = level;
        f.slope = slope;
        f.bound = 1.0;
        return f;
    }

    Kind kind = Kind::Constant;
    double t = 0.0;
    double level = 0.0;
    double slope = 1.0;
    double c = 0.0;
    // Sup-norm when finite; EvalAt/Max/TimeAverage are unbounded on the full
    // path space and report infinity unless the caller tightens it.
    double bound = std::numeric_limits<double>::infinity();

    // Evaluation on a grid path over [0, domain_length]; times are absolute.
    // Point evaluations use the cadlag convention: the value at the last grid
    // time <= t (t clamped into the domain).
    double evaluate(std::span<const double> times, std::span<const double> values,
                    double domain_length = 1.0) const {
        if (times.empty() || times.size() != values.size())
            throw std::invalid_argument("PathFunctional: malformed grid path");
        switch (kind) {
            case Kind::Constant:
                return c;
            case Kind::EvalAt:
                return value_at(times, values, std::min(t, domain_length));
            case Kind::Max: {
                double m = values[0];
                for (double v : values) m = std::max(m, v);
                return m;
            }
            case Kind::TimeAverage: {
                double s = 0.0;
                for (double v : values) s += v;
                return s / static_cast<double>(values.size());
            }
            case Kind::SoftThreshold: {
                const double v = value_at(times, values, std::min(t, domain_length));
                return logistic(slope * (v - level));
            }
        }
        return 0.0;
    }

    double evaluate(const Trajectory& traj) const { return evaluate(traj.grid, traj.values); }

    std::string describe() const {
        char buf[96];
        switch (kind) {
            case Kind::Constant:
                std::snprintf(buf, sizeof buf, "const(%g)", c);
                break;
            case Kind::EvalAt:
                std::snprintf(buf, sizeof buf, "eval_at(%g)", t);
                break;
            case Kind::Max:
                return "max";
            case Kind::TimeAverage:
                return "time_avg";
            case Kind::SoftThreshold:
                std::snprintf(buf, sizeof buf, "soft_thr(%g,%g,%g)", t, level, slope);
                break;
        }
        return buf;
    }

    static double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

    static double value_at(std::span<const double> times, std::span<const double> values,
                           double at) {
        auto it = std::upper_bound(times.begin(), times.end(), at);
        if (it == times.begin()) return values[0];
        return values[static_cast<std::size_t>(std::distance(times.begin(), it)) - 1];
    }
};

}  // namespace brwlab
