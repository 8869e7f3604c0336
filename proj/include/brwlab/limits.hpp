#pragma once

// Exact (discretized) samplers of the limiting objects: Brownian bridge,
// three-dimensional Bessel bridge, normalised excursion, meander,
// Poisson-Dirichlet weights and the excursion mixture, plus closed-form
// identity checks between them.
//
// All samplers are deterministic functions of (parameters, rng stream
// position) and safe for concurrent use on independent streams. Identity
// checks discretize both sides on matching grids so the first-order
// discretization bias cancels.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/trajectory.hpp"

namespace brwlab {

struct LimitPath {
    enum class Kind { Bridge, BesselBridge, Excursion, Meander };
    Kind kind = Kind::Bridge;
    double length = 1.0;
    std::vector<double> times;   // i * length / m, i = 0..m
    std::vector<double> values;

    double evaluate(const PathFunctional& f) const { return f.evaluate(times, values, length); }
};

// Standard Brownian bridge of length T pinned at 0 on both ends, sampled by
// exact sequential conditioning on a uniform grid of m steps.
inline std::vector<double> brownian_bridge_values(double T, int m, Rng& rng) {
    if (m < 2) throw std::invalid_argument("brownian_bridge_values: m < 2");
    std::vector<double> b(static_cast<std::size_t>(m) + 1, 0.0);
    const double dt = T / m;
    for (int i = 0; i < m - 1; ++i) {
        const double remaining = T - i * dt;
        const double shrink = (remaining - dt) / remaining;
        const double var = dt * shrink;
        b[static_cast<std::size_t>(i) + 1] =
            b[static_cast<std::size_t>(i)] * shrink + rng.normal(0.0, std::sqrt(var));
    }
    b.back() = 0.0;
    return b;
}

// Three-dimensional Bessel bridge of length t between x >= 0 and y >= 0:
// rho(s) = sqrt((x (1 - s/t) + y s/t + b1(s))^2 + b2(s)^2 + b3(s)^2) with
// three independent standard Brownian bridges.
inline LimitPath sample_bessel3_bridge(double x, double y, double t, int m, Rng& rng) {
    if (!(x >= 0.0 && y >= 0.0)) throw std::invalid_argument("bessel bridge: x, y must be >= 0");
    const auto b1 = brownian_bridge_values(t, m, rng);
    const auto b2 = brownian_bridge_values(t, m, rng);
    const auto b3 = brownian_bridge_values(t, m, rng);
    LimitPath p;
    p.kind = LimitPath::Kind::BesselBridge;
    p.length = t;
    p.times.resize(static_cast<std::size_t>(m) + 1);
    p.values.resize(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) {
        const double s = static_cast<double>(i) / m;
        const double line = x * (1.0 - s) + y * s;
        const double a = line + b1[static_cast<std::size_t>(i)];
        p.times[static_cast<std::size_t>(i)] = s * t;
        p.values[static_cast<std::size_t>(i)] =
            std::sqrt(a * a + b2[static_cast<std::size_t>(i)] * b2[static_cast<std::size_t>(i)] +
                      b3[static_cast<std::size_t>(i)] * b3[static_cast<std::size_t>(i)]);
    }
    return p;
}

// Normalised Brownian excursion = Bessel-3 bridge from 0 to 0 of length 1.
inline LimitPath sample_excursion(int m, Rng& rng) {
    LimitPath p = sample_bessel3_bridge(0.0, 0.0, 1.0, m, rng);
    p.kind = LimitPath::Kind::Excursion;
    return p;
}

// Brownian meander of length 1: endpoint drawn from the Rayleigh density
// x exp(-x^2/2), then a Bessel-3 bridge from 0 to that endpoint.
inline LimitPath sample_meander(int m, Rng& rng) {
    const double r = rng.rayleigh();
    LimitPath p = sample_bessel3_bridge(0.0, r, 1.0, m, rng);
    p.kind = LimitPath::Kind::Meander;
    return p;
}

// Meander of length lambda by Brownian scaling of the unit meander.
inline LimitPath sample_meander_of_length(double lambda, int m, Rng& rng) {
    LimitPath p = sample_meander(m, rng);
    const double root = std::sqrt(lambda);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        p.values[i] *= root;
        p.times[i] *= lambda;
    }
    p.length = lambda;
    return p;
}

// Free three-dimensional Bessel process from 0 on [0, T]: modulus of a
// standard 3d Brownian motion.
inline LimitPath sample_bessel3_process(double T, int m, Rng& rng) {
    LimitPath p;
    p.kind = LimitPath::Kind::BesselBridge;
    p.length = T;
    p.times.resize(static_cast<std::size_t>(m) + 1);
    p.values.resize(static_cast<std::size_t>(m) + 1);
    const double sd = std::sqrt(T / m);
    double w1 = 0.0, w2 = 0.0, w3 = 0.0;
    p.times[0] = 0.0;
    p.values[0] = 0.0;
    for (int i = 1; i <= m; ++i) {
        w1 += rng.normal(0.0, sd);
        w2 += rng.normal(0.0, sd);
        w3 += rng.normal(0.0, sd);
        p.times[static_cast<std::size_t>(i)] = static_cast<double>(i) / m * T;
        p.values[static_cast<std::size_t>(i)] = std::sqrt(w1 * w1 + w2 * w2 + w3 * w3);
    }
    return p;
}

struct IdentityCheck {
    McEstimate lhs;
    McEstimate rhs;
    double z = 0.0;
};

// Meander-to-Bessel absolute-continuity identity on [0, t]:
//   E[Phi(M(u), u <= t)] = sqrt(pi/2) E[sqrt(t) / R(t) Phi(R(u), u <= t)].
inline IdentityCheck imhof_check(const PathFunctional& phi, double t, long replicas, int m,
                                 Rng& rng) {
    if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("imhof_check: t outside (0,1]");
    RunningStat lhs, rhs;
    const double factor = std::sqrt(3.14159265358979323846 / 2.0) * std::sqrt(t);
    for (long r = 0; r < replicas; ++r) {
        const LimitPath meander = sample_meander_of_length(t, m, rng);
        lhs.add(meander.evaluate(phi));
        const LimitPath bessel = sample_bessel3_process(t, m, rng);
        rhs.add(factor / bessel.values.back() * bessel.evaluate(phi));
    }
    IdentityCheck out{lhs.estimate(), rhs.estimate(), 0.0};
    out.z = z_score(out.lhs, out.rhs);
    return out;
}

// Excursion splicing identity at lambda: the excursion restricted to
// [0, lambda] and re-based [lambda, 1] match a weighted independent pair
// (meander of length lambda, Bessel bridge to 0 of length 1 - lambda):
//   E[G1*G2(e)] = sqrt(2/pi) lambda^{-1/2} (1-lambda)^{-3/2}
//                 E[M(lambda) exp(-M(lambda)^2 / (2(1-lambda))) G1(M) G2(rho)].
inline IdentityCheck gamma_identity_check(const PathFunctional& g1, const PathFunctional& g2,
                                          double lambda, long replicas, int m, Rng& rng) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("gamma_identity_check: lambda outside (0,1)");
    const double lm = lambda * m;
    const int m1 = static_cast<int>(std::lround(lm));
    if (std::abs(lm - m1) > 1e-9 || m1 < 2 || m - m1 < 2)
        throw std::invalid_argument("gamma_identity_check: lambda*m must be an integer >= 2");
    const int m2 = m - m1;

    RunningStat lhs, rhs;
    std::vector<double> t1(static_cast<std::size_t>(m1) + 1), v1(t1.size());
    std::vector<double> t2(static_cast<std::size_t>(m2) + 1), v2(t2.size());
    const double weight_scale = std::sqrt(2.0 / 3.14159265358979323846) /
                                (std::sqrt(lambda) * std::pow(1.0 - lambda, 1.5));
    for (long r = 0; r < replicas; ++r) {
        // Left side: split one excursion at lambda.
        const LimitPath e = sample_excursion(m, rng);
        for (int i = 0; i <= m1; ++i) {
            t1[static_cast<std::size_t>(i)] = e.times[static_cast<std::size_t>(i)];
            v1[static_cast<std::size_t>(i)] = e.values[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i <= m2; ++i) {
            t2[static_cast<std::size_t>(i)] = e.times[static_cast<std::size_t>(m1 + i)] - lambda;
            v2[static_cast<std::size_t>(i)] = e.values[static_cast<std::size_t>(m1 + i)];
        }
        lhs.add(g1.evaluate(t1, v1, lambda) * g2.evaluate(t2, v2, 1.0 - lambda));

        // Right side: independent weighted pair.
        const LimitPath meander = sample_meander_of_length(lambda, m1, rng);
        const double endpoint = meander.values.back();
        const LimitPath bridge = sample_bessel3_bridge(endpoint, 0.0, 1.0 - lambda, m2, rng);
        const double w = weight_scale * endpoint *
                         std::exp(-endpoint * endpoint / (2.0 * (1.0 - lambda)));
        rhs.add(w * meander.evaluate(g1) * bridge.evaluate(g2));
    }
    IdentityCheck out{lhs.estimate(), rhs.estimate(), 0.0};
    out.z = z_score(out.lhs, out.rhs);
    return out;
}

// ---------------------------------------------------------------------------
// Poisson-Dirichlet weights with parameter (1/beta, 0), via the ordered
// atoms of a Poisson process with intensity e^x dx: if Gamma_k are the
// arrival times of a unit-rate Poisson process, the ranked weights are
// Gamma_k^{-beta} / sum_j Gamma_j^{-beta}.
// ---------------------------------------------------------------------------

struct PDSample {
    std::vector<double> weights;  // strictly decreasing, sum in [1 - tail_bound, 1]
    double tail_bound = 0.0;      // normalized bound on mass not individually kept
    bool truncated_by_cap = false;
};

inline constexpr std::size_t kDefaultPdAtomCap = std::size_t{1} << 16;

// Atoms are generated until the analytic bound on the remaining raw mass,
// Gamma_K^{1-beta} / (beta - 1), falls below tail_eps times the retained raw
// mass. For beta close to 1 that bound decays so slowly that the required K
// is astronomically large; past atom_cap the remaining mass is instead
// absorbed into the normalizer through its exact conditional mean, and the
// achieved tail_bound is recorded (it then exceeds tail_eps).
inline PDSample sample_poisson_dirichlet(double beta, double tail_eps, Rng& rng,
                                         std::size_t atom_cap = kDefaultPdAtomCap) {
    if (!(beta > 1.0)) throw std::invalid_argument("sample_poisson_dirichlet: beta must be > 1");
    if (!(tail_eps > 0.0 && tail_eps <= 1e-3))
        throw std::invalid_argument("sample_poisson_dirichlet: tail_eps outside (0, 1e-3]");
    std::vector<double> log_w;
    log_w.reserve(1024);
    double gamma = 0.0;
    double acc = 0.0;  // sum of exp(log_w - log_w[0]); log_w is decreasing
    const double log_eps = std::log(tail_eps);
    const double log_beta_m1 = std::log(beta - 1.0);
    double log_tail = 0.0;
    bool bound_met = false;
    while (log_w.size() < atom_cap) {
        gamma += rng.exponential();
        const double lg = std::log(gamma);
        const double lw = -beta * lg;
        log_w.push_back(lw);
        acc += std::exp(lw - log_w.front());
        log_tail = (1.0 - beta) * lg - log_beta_m1;
        const double log_retained = log_w.front() + std::log(acc);
        if (log_tail <= log_eps + log_retained) {
            bound_met = true;
            break;
        }
    }
    const double log_retained = log_w.front() + std::log(acc);
    PDSample out;
    out.truncated_by_cap = !bound_met;
    double log_total = log_retained;
    if (bound_met) {
        out.tail_bound = std::exp(log_tail - log_retained);
    } else {
        log_total = log_add_exp(log_retained, log_tail);
        out.tail_bound = std::exp(log_tail - log_total);
    }
    out.weights.resize(log_w.size());
    for (std::size_t i = 0; i < log_w.size(); ++i)
        out.weights[i] = std::exp(log_w[i] - log_total);
    return out;
}

// Monte Carlo mean of the overlap pi = sum_k p_k^2.
inline McEstimate pd_overlap_moment(double beta, long replicas, double tail_eps, Rng& rng,
                                    std::size_t atom_cap = kDefaultPdAtomCap) {
    if (replicas < 10000)
        throw std::invalid_argument("pd_overlap_moment: need at least 1e4 replicas");
    RunningStat s;
    for (long r = 0; r < replicas; ++r) {
        const PDSample pd = sample_poisson_dirichlet(beta, tail_eps, rng, atom_cap);
        double pi = 0.0;
        for (double p : pd.weights) pi += p * p;
        s.add(pi);
    }
    return s.estimate();
}

// One draw of the limit mixture sum_k p_k F(e_k) with i.i.d. excursions on an
// m-point grid, drawn only for the retained weights.
inline double limit_mixture_sample(double beta, const PathFunctional& f, int m, Rng& rng,
                                   double tail_eps = 1e-3,
                                   std::size_t atom_cap = kDefaultPdAtomCap) {
    const PDSample pd = sample_poisson_dirichlet(beta, tail_eps, rng, atom_cap);
    double acc = 0.0;
    for (double p : pd.weights) acc += p * sample_excursion(m, rng).evaluate(f);
    return acc;
}

// E[F(e)^power] by excursion sampling; power = 1/beta feeds the tail-profile
// comparisons and power = 1 the annealed first-moment checks.
inline McEstimate excursion_functional_moment(const PathFunctional& f, double power, int m,
                                              long replicas, Rng& rng) {
    RunningStat s;
    for (long r = 0; r < replicas; ++r)
        s.add(std::pow(sample_excursion(m, rng).evaluate(f), power));
    return s.estimate();
}

// log( C_beta / -integral (e^{-e^{-beta u}} - 1) e^u du ); the integral
// evaluates to -Gamma(1 - 1/beta) in closed form.
inline double c_star_beta(double beta, double c_beta) {
    return std::log(c_beta / std::tgamma(1.0 - 1.0 / beta));
}

}  // namespace brwlab
