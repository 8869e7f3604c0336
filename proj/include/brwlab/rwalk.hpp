#pragma once

// Fluctuation-theory toolkit for a centred random walk: strict ladder
// structure, renewal-function estimation, the sqrt(n) survival scaling,
// the renewal-function h-transform (walk conditioned to stay nonnegative),
// a ballot-type bound check, and the meander invariance check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "brwlab/limits.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/trajectory.hpp"

namespace brwlab {

struct StepLaw {
    enum class Kind { Gaussian, Lattice };
    Kind kind = Kind::Gaussian;
    double variance = 1.0;

    static StepLaw gaussian(double variance) {
        if (!(variance > 0.0)) throw std::invalid_argument("StepLaw: variance must be positive");
        return {Kind::Gaussian, variance};
    }
    static StepLaw lattice() { return {Kind::Lattice, 1.0}; }

    double sample(Rng& rng) const {
        if (kind == Kind::Lattice) return rng.coin() ? 1.0 : -1.0;
        return rng.normal(0.0, std::sqrt(variance));
    }
    double sigma2() const { return variance; }
    std::string name() const { return kind == Kind::Lattice ? "lattice" : "gaussian"; }
};

// ---------------------------------------------------------------------------
// Strict ladder epochs and heights.
// ---------------------------------------------------------------------------

struct LadderDecomposition {
    std::vector<long> ascending_epochs;
    std::vector<double> ascending_heights;   // strictly increasing
    std::vector<long> descending_epochs;
    std::vector<double> descending_heights;  // heights of -S, strictly increasing, positive
};

inline LadderDecomposition ladder_epochs(std::span<const double> path) {
    if (path.empty() || path[0] != 0.0)
        throw std::invalid_argument("ladder_epochs: path must start at 0");
    LadderDecomposition out;
    double hi = 0.0, lo = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        if (path[k] > hi) {
            hi = path[k];
            out.ascending_epochs.push_back(static_cast<long>(k));
            out.ascending_heights.push_back(hi);
        }
        if (path[k] < lo) {
            lo = path[k];
            out.descending_epochs.push_back(static_cast<long>(k));
            out.descending_heights.push_back(-lo);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Renewal functions V^-(x) = sum_k P(H_k^- <= x) (and symmetrically V^+),
// estimated through the strict-record representation: V^-(x) - 1 is the
// expected number of strict descending records with depth <= x. A path stops
// contributing once its records pass below -x_max, so each replica runs until
// both sides are exhausted or the horizon is hit; the horizon residual is
// O((1 + x_max) / sqrt(horizon)).
// ---------------------------------------------------------------------------

struct RenewalTable {
    std::vector<double> x_grid;
    std::vector<McEstimate> v_minus;
    std::vector<McEstimate> v_plus;
    double slope_minus = 1.0;  // fitted linear-growth constant, for extrapolation
    double slope_plus = 1.0;
    long horizon = 0;
};

inline RenewalTable renewal_estimate(const StepLaw& step, std::span<const double> x_grid,
                                     long replicas, long horizon, std::uint64_t seed,
                                     unsigned workers = 1) {
    if (x_grid.empty() || x_grid.front() < 0.0)
        throw std::invalid_argument("renewal_estimate: grid must be nonnegative");
    if (!std::is_sorted(x_grid.begin(), x_grid.end()))
        throw std::invalid_argument("renewal_estimate: grid must be sorted");
    const double x_max = x_grid.back();
    const std::size_t g = x_grid.size();
    std::vector<double> counts_minus(static_cast<std::size_t>(replicas) * g, 0.0);
    std::vector<double> counts_plus(static_cast<std::size_t>(replicas) * g, 0.0);

    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        Rng rng(derive_stream(seed, r, 0x7e4e));
        double s = 0.0, lo = 0.0, hi = 0.0;
        for (long k = 1; k <= horizon && !(lo < -x_max && hi > x_max); ++k) {
            s += step.sample(rng);
            if (s < lo) {
                lo = s;
                const double depth = -s;
                for (std::size_t i = 0; i < g; ++i)
                    if (depth <= x_grid[i]) counts_minus[r * g + i] += 1.0;
            }
            if (s > hi) {
                hi = s;
                for (std::size_t i = 0; i < g; ++i)
                    if (s <= x_grid[i]) counts_plus[r * g + i] += 1.0;
            }
        }
    });

    RenewalTable table;
    table.x_grid.assign(x_grid.begin(), x_grid.end());
    table.horizon = horizon;
    table.v_minus.resize(g);
    table.v_plus.resize(g);
    for (std::size_t i = 0; i < g; ++i) {
        RunningStat sm, sp;
        for (long r = 0; r < replicas; ++r) {
            sm.add(1.0 + counts_minus[static_cast<std::size_t>(r) * g + i]);
            sp.add(1.0 + counts_plus[static_cast<std::size_t>(r) * g + i]);
        }
        table.v_minus[i] = sm.estimate();
        table.v_plus[i] = sp.estimate();
    }

    // Fit the linear-growth slope on the upper half of the grid.
    auto fit = [&](const std::vector<McEstimate>& v) {
        const std::size_t from = g / 2;
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double cnt = static_cast<double>(g - from);
        for (std::size_t i = from; i < g; ++i) {
            sx += x_grid[i];
            sy += v[i].mean;
            sxx += x_grid[i] * x_grid[i];
            sxy += x_grid[i] * v[i].mean;
        }
        const double denom = sxx - sx * sx / cnt;
        return denom > 0.0 ? (sxy - sx * sy / cnt) / denom : 1.0;
    };
    if (g >= 2) {
        table.slope_minus = fit(table.v_minus);
        table.slope_plus = fit(table.v_plus);
    }
    return table;
}

// Piecewise-linear interpolation inside the grid; linear extrapolation with
// the fitted slope beyond it.
inline double renewal_value_minus(const RenewalTable& t, double x) {
    if (x <= t.x_grid.front()) return t.v_minus.front().mean;
    if (x >= t.x_grid.back())
        return t.v_minus.back().mean + t.slope_minus * (x - t.x_grid.back());
    const auto it = std::upper_bound(t.x_grid.begin(), t.x_grid.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.x_grid.begin());
    const double x0 = t.x_grid[i - 1], x1 = t.x_grid[i];
    const double y0 = t.v_minus[i - 1].mean, y1 = t.v_minus[i].mean;
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

// Exact renewal table for the lattice walk: V^-(x) = floor(x) + 1.
inline RenewalTable lattice_exact_renewal(double x_max) {
    RenewalTable t;
    for (double x = 0.0; x <= x_max + 0.5; x += 1.0) {
        t.x_grid.push_back(x);
        t.v_minus.push_back({x + 1.0, 0.0, 1});
        t.v_plus.push_back({x + 1.0, 0.0, 1});
    }
    t.slope_minus = t.slope_plus = 1.0;
    return t;
}

// ---------------------------------------------------------------------------
// Survival scaling: sqrt(n) P(the walk stays on one side up to n).
// ---------------------------------------------------------------------------

struct SurvivalScaling {
    std::vector<long> n_list;
    std::vector<McEstimate> stay_nonnegative;  // sqrt(n) P(min_{k<=n} S_k >= 0)
    std::vector<McEstimate> stay_nonpositive;  // sqrt(n) P(max_{k<=n} S_k <= 0)
};

inline SurvivalScaling survival_scaling(const StepLaw& step, std::span<const long> n_list,
                                        long replicas, std::uint64_t seed,
                                        unsigned workers = 1) {
    if (!std::is_sorted(n_list.begin(), n_list.end()))
        throw std::invalid_argument("survival_scaling: n_list must be increasing");
    const long n_max = n_list.back();
    // tau_neg[r] = first k with S_k < 0 (or n_max + 1), tau_pos likewise.
    std::vector<long> tau_neg(static_cast<std::size_t>(replicas));
    std::vector<long> tau_pos(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        Rng rng(derive_stream(seed, r, 0x5ca1e));
        double s = 0.0;
        long tn = n_max + 1, tp = n_max + 1;
        for (long k = 1; k <= n_max && (tn > n_max || tp > n_max); ++k) {
            s += step.sample(rng);
            if (s < 0.0 && tn > n_max) tn = k;
            if (s > 0.0 && tp > n_max) tp = k;
        }
        tau_neg[r] = tn;
        tau_pos[r] = tp;
    });
    SurvivalScaling out;
    out.n_list.assign(n_list.begin(), n_list.end());
    for (long n : n_list) {
        const double root = std::sqrt(static_cast<double>(n));
        RunningStat sn, sp;
        for (long r = 0; r < replicas; ++r) {
            sn.add(tau_neg[static_cast<std::size_t>(r)] > n ? root : 0.0);
            sp.add(tau_pos[static_cast<std::size_t>(r)] > n ? root : 0.0);
        }
        out.stay_nonnegative.push_back(sn.estimate());
        out.stay_nonpositive.push_back(sp.estimate());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Doob h-transform: the walk conditioned to stay nonnegative, with kernel
// p^(x, dy) proportional to p(x, dy) V^-(y) 1{y >= 0}. Sampled by per-step
// acceptance-rejection with the envelope max V^- over the reachable window.
// ---------------------------------------------------------------------------

struct EnvelopeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<double> h_transform_sample(const StepLaw& step, const RenewalTable& renewal,
                                              double x0, long n_steps, Rng& rng) {
    if (!(x0 >= 0.0)) throw std::invalid_argument("h_transform_sample: x0 must be >= 0");
    std::vector<double> path(static_cast<std::size_t>(n_steps) + 1);
    path[0] = x0;
    const double window =
        step.kind == StepLaw::Kind::Lattice ? 1.0 : 10.0 * std::sqrt(step.variance);
    double x = x0;
    for (long k = 1; k <= n_steps; ++k) {
        const double envelope = renewal_value_minus(renewal, x + window);
        for (;;) {
            const double y = x + step.sample(rng);
            if (y < 0.0) continue;
            if (y > x + window)
                throw EnvelopeFailure("h_transform_sample: proposal escaped the envelope window");
            const double v = renewal_value_minus(renewal, y);
            if (v > envelope)
                throw EnvelopeFailure("h_transform_sample: renewal table not monotone enough");
            if (rng.u01() * envelope < v) {
                x = y;
                break;
            }
        }
        path[static_cast<std::size_t>(k)] = x;
    }
    return path;
}

// ---------------------------------------------------------------------------
// Ballot-type estimate: n^{3/2} P_x(S_n in [y+a, y+b], min_{k<=n} S_k >= 0,
// min_{lambda n <= k <= n} S_k >= y) stays bounded in n.
// ---------------------------------------------------------------------------

struct BallotCheck {
    std::vector<long> n_list;
    std::vector<McEstimate> scaled_prob;
};

inline BallotCheck ballot_check(const StepLaw& step, std::span<const long> n_list, double x,
                                double y, double a, double b, double lambda, long replicas,
                                std::uint64_t seed, unsigned workers = 1) {
    if (!(0.0 <= a && a <= b) || x < 0.0 || y < 0.0 || !(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("ballot_check: parameter constraints violated");
    BallotCheck out;
    out.n_list.assign(n_list.begin(), n_list.end());
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        const long n = n_list[ni];
        const long guard_from = static_cast<long>(std::ceil(lambda * static_cast<double>(n)));
        const double scale = std::pow(static_cast<double>(n), 1.5);
        std::vector<double> vals(static_cast<std::size_t>(replicas));
        parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
            Rng rng(derive_stream(seed, r, 0xba110 + ni));
            double s = x;
            bool ok = true;
            for (long k = 1; k <= n; ++k) {
                s += step.sample(rng);
                if (s < 0.0 || (k >= guard_from && s < y)) {
                    ok = false;
                    break;
                }
            }
            vals[r] = (ok && s >= y + a && s <= y + b) ? scale : 0.0;
        });
        out.scaled_prob.push_back(mc_estimate(vals));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Meander invariance: the normalized walk conditioned (by rejection) to stay
// nonnegative matches the Brownian meander functional laws.
// ---------------------------------------------------------------------------

inline IdentityCheck meander_limit_check(const StepLaw& step, long n_steps,
                                         const PathFunctional& f, long replicas,
                                         std::uint64_t seed, unsigned workers = 1) {
    const double scale = 1.0 / std::sqrt(step.sigma2() * static_cast<double>(n_steps));
    std::vector<double> walk_vals(static_cast<std::size_t>(replicas));
    std::vector<double> meander_vals(static_cast<std::size_t>(replicas));
    std::vector<double> times(static_cast<std::size_t>(n_steps) + 1);
    for (long i = 0; i <= n_steps; ++i)
        times[static_cast<std::size_t>(i)] =
            static_cast<double>(i) / static_cast<double>(n_steps);

    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        std::vector<double> values(static_cast<std::size_t>(n_steps) + 1, 0.0);
        for (std::uint64_t attempt = 0;; ++attempt) {
            Rng rng(derive_stream(seed, r, 0x3ea0d00 + attempt));
            double s = 0.0;
            bool ok = true;
            for (long k = 1; k <= n_steps; ++k) {
                s += step.sample(rng);
                if (s < 0.0) {
                    ok = false;
                    break;
                }
                values[static_cast<std::size_t>(k)] = s * scale;
            }
            if (ok) break;
        }
        walk_vals[r] = f.evaluate(times, values, 1.0);
        Rng rng(derive_stream(seed, r, 0x3ea0d));
        meander_vals[r] = sample_meander(static_cast<int>(n_steps), rng).evaluate(f);
    });
    IdentityCheck out{mc_estimate(walk_vals), mc_estimate(meander_vals), 0.0};
    out.z = z_score(out.lhs, out.rhs);
    return out;
}

}  // namespace brwlab
