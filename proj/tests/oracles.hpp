#pragma once

// Independent oracles used by the test suite: numerical quadrature for
// tilted Gaussian moments, exact dynamic programs for the +-1 lattice walk,
// closed-form endpoint distributions of the limit processes, and the Vervaat
// rotation as a second excursion sampler. Nothing here touches the library's
// own estimation paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "brwlab/limits.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace oracles {

// E[X^k exp(-X)] for X ~ Normal(m, s2), k in {0, 1, 2}, by quadrature.
inline double tilted_gaussian_moment(double m, double s2, int k) {
    const double sd = std::sqrt(s2);
    const double lo = m - s2 - 16.0 * sd, hi = m + 16.0 * sd;
    return brwlab::integrate(
        [&](double x) {
            const double z = (x - m) / sd;
            const double phi = std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * 3.14159265358979323846));
            return std::pow(x, k) * std::exp(-x) * phi;
        },
        lo, hi, 1e-14);
}

// Extinction probability by generation g for the brood law {0 children w.p.
// q, 2 w.p. 1-q}: iterate f(x) = q + (1-q) x^2 from 0.
inline double extinction_by_generation(double q, int g) {
    double p = 0.0;
    for (int k = 0; k < g; ++k) p = q + (1.0 - q) * p * p;
    return p;
}

// ---------------------------------------------------------------------------
// Exact dynamic programs for the +-1 symmetric lattice walk.
// ---------------------------------------------------------------------------

// Truncated strict-descending-record series: sum_{k=0..horizon} P(-x <= S_k <
// min_{j<k} S_j); the k = 0 term is 1. Exact enumeration over (position,
// running minimum) states.
inline double lattice_truncated_renewal_minus(double x, int horizon) {
    // state: (position, min so far) -> probability; positions are integers.
    std::map<std::pair<int, int>, double> state{{{0, 0}, 1.0}};
    double total = 1.0;
    for (int k = 1; k <= horizon; ++k) {
        std::map<std::pair<int, int>, double> next;
        for (const auto& [pm, prob] : state) {
            const auto [p, m] = pm;
            for (int step : {-1, +1}) {
                const int p2 = p + step;
                const int m2 = std::min(m, p2);
                next[{p2, m2}] += 0.5 * prob;
                if (p2 < m && -p2 <= x + 1e-12) total += 0.5 * prob;
            }
        }
        state = std::move(next);
    }
    return total;
}

// E[(x + S_N + 1) 1{min_{k<=N} S_k >= -x}] for integer x >= 0; with
// V^-(y) = y + 1 this is the exact harmonicity expectation.
inline double lattice_harmonicity_expectation(int x, int N) {
    // position offset by x: walk on {0, 1, ...} absorbed below 0.
    std::vector<double> prob(static_cast<std::size_t>(x + N + 2), 0.0);
    prob[static_cast<std::size_t>(x)] = 1.0;
    for (int k = 0; k < N; ++k) {
        std::vector<double> next(prob.size(), 0.0);
        for (std::size_t p = 0; p < prob.size(); ++p) {
            if (prob[p] == 0.0) continue;
            if (p + 1 < next.size()) next[p + 1] += 0.5 * prob[p];
            if (p >= 1) next[p - 1] += 0.5 * prob[p];
            // p == 0 stepping down is absorbed (min < -x).
        }
        prob = std::move(next);
    }
    double e = 0.0;
    for (std::size_t p = 0; p < prob.size(); ++p)
        e += prob[p] * (static_cast<double>(p) + 1.0);
    return e;
}

// Exact law of the lattice walk conditioned to stay nonnegative (renewal
// h-transform with V^-(y) = y + 1) after N steps from x0.
inline std::map<int, double> lattice_h_transform_law(int x0, int N) {
    std::map<int, double> law{{x0, 1.0}};
    for (int k = 0; k < N; ++k) {
        std::map<int, double> next;
        for (const auto& [x, p] : law) {
            const double vx = static_cast<double>(x) + 1.0;
            const double up = 0.5 * (static_cast<double>(x) + 2.0) / vx;
            next[x + 1] += p * up;
            if (x >= 1) next[x - 1] += p * 0.5 * static_cast<double>(x) / vx;
        }
        law = std::move(next);
    }
    return law;
}

// ---------------------------------------------------------------------------
// Closed-form endpoint laws.
// ---------------------------------------------------------------------------

// CDF of the Bessel-3 bridge value at time lambda (bridge 0 -> 0, length 1):
// density sqrt(2/pi) a^{-3/2} v^2 exp(-v^2 / 2a) with a = lambda (1-lambda).
inline double excursion_marginal_cdf(double v, double lambda) {
    const double a = lambda * (1.0 - lambda);
    if (v <= 0.0) return 0.0;
    return std::erf(v / std::sqrt(2.0 * a)) -
           std::sqrt(2.0 / (3.14159265358979323846 * a)) * v * std::exp(-v * v / (2.0 * a));
}

inline double excursion_marginal_mean(double lambda) {
    const double a = lambda * (1.0 - lambda);
    return brwlab::integrate(
        [&](double v) {
            return v * std::sqrt(2.0 / 3.14159265358979323846) * std::pow(a, -1.5) * v * v *
                   std::exp(-v * v / (2.0 * a));
        },
        0.0, 12.0, 1e-13);
}

inline double rayleigh_cdf(double v) { return v <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * v * v); }

// ---------------------------------------------------------------------------
// Gamma/Beta sampling and the stick-breaking (GEM) route to the
// Poisson-Dirichlet mixture; an independent construction of the same law as
// the ranked Poisson-arrival weights.
// ---------------------------------------------------------------------------

inline double gamma_sample(double shape, brwlab::Rng& rng) {
    if (shape < 1.0)
        return gamma_sample(shape + 1.0, rng) * std::pow(rng.u01_open(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.u01_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

inline double beta_sample(double a, double b, brwlab::Rng& rng) {
    const double x = gamma_sample(a, rng);
    const double y = gamma_sample(b, rng);
    return x / (x + y);
}

// One draw of sum_k p_k F(e_k) with the weights built by stick breaking in
// size-biased order: V_k ~ Beta(1 - alpha, k alpha) for PD(alpha, 0). The sum
// is permutation-invariant, so this has the same law as the ranked-weight
// mixture draw.
inline double gem_mixture_sample(double beta, const brwlab::PathFunctional& f, int m,
                                 brwlab::Rng& rng, double tail_eps = 1e-3) {
    const double alpha = 1.0 / beta;
    double remaining = 1.0, acc = 0.0;
    for (int k = 1; remaining > tail_eps && k < 100000; ++k) {
        const double v = beta_sample(1.0 - alpha, k * alpha, rng);
        const double w = remaining * v;
        acc += w * brwlab::sample_excursion(m, rng).evaluate(f);
        remaining -= w;
    }
    return acc / (1.0 - remaining);  // renormalise the truncated sticks
}

// ---------------------------------------------------------------------------
// Vervaat rotation: excursion from a Brownian bridge rotated at its minimum.
// Cross-check oracle for the three-bridge excursion sampler.
// ---------------------------------------------------------------------------

inline std::vector<double> vervaat_excursion_values(int m, brwlab::Rng& rng) {
    const auto b = brwlab::brownian_bridge_values(1.0, m, rng);
    std::size_t tau = 0;
    for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i] < b[tau]) tau = i;
    std::vector<double> e(static_cast<std::size_t>(m) + 1);
    for (int j = 0; j <= m; ++j) {
        const std::size_t idx = (tau + static_cast<std::size_t>(j)) % static_cast<std::size_t>(m);
        e[static_cast<std::size_t>(j)] = b[idx] - b[tau];
    }
    e[0] = 0.0;
    e[static_cast<std::size_t>(m)] = 0.0;
    return e;
}

}  // namespace oracles
