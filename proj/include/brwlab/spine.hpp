#pragma once

// Size-biased spinal decomposition. Under the size-biased measure the tree
// carries one distinguished line of descent: the spine individual reproduces
// with the exp(-displacement)-reweighted brood law, the next spine individual
// is chosen among its children proportionally to exp(-V), and everyone else
// branches as usual. The spine positions then form a centred random walk
// with variance sigma2, which is the bridge between tree sums and
// single-walk expectations.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "brwlab/gibbs.hpp"
#include "brwlab/offspring.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/tree.hpp"

namespace brwlab {

struct SpineStepLaw {
    double mean = 0.0;
    double variance = 0.0;  // equals the law's sigma2
};

// Closed-form step law of the spine walk. Tilting Normal(m, s2) by
// exp(-x) shifts the mean by -s2, and m = s2 for calibrated laws.
inline SpineStepLaw spine_step_law(const OffspringLaw& law) {
    return {law.mean - law.variance, law.variance};
}

struct SpineRun {
    TreeArena tree;
    std::vector<std::int32_t> spine;       // omega_0 ... omega_n
    std::vector<double> spine_positions;   // V(omega_k)
};

// Draws the tilted two-child brood: one child (uniformly placed) gets the
// exp(-x)-tilted displacement Normal(0, s2), the sibling a plain
// Normal(m, s2). The mixture density is exactly
// (exp(-x) + exp(-y)) phi(x) phi(y) / E[sum exp(-l)], rejection-free.
inline void sample_tilted_brood(const OffspringLaw& law, Rng& rng, double out[2]) {
    const double sd = std::sqrt(law.variance);
    const double tilted = rng.normal(0.0, sd);
    const double plain = rng.normal(law.mean, sd);
    if (rng.coin()) {
        out[0] = tilted;
        out[1] = plain;
    } else {
        out[0] = plain;
        out[1] = tilted;
    }
}

// The spine positions alone (tilted broods plus exp(-V)-proportional child
// selection), without materialising the off-spine subtrees. Usable at depths
// where the full size-biased tree would be astronomically large.
inline std::vector<double> simulate_spine_walk(const OffspringLaw& law, int n,
                                               std::uint64_t seed) {
    Rng rng(derive_stream(seed, 0x5b1e2));
    std::vector<double> positions(static_cast<std::size_t>(n) + 1, 0.0);
    double child[2];
    for (int k = 1; k <= n; ++k) {
        sample_tilted_brood(law, rng, child);
        const double w0 = std::exp(-child[0]), w1 = std::exp(-child[1]);
        const double step = rng.u01() * (w0 + w1) < w0 ? child[0] : child[1];
        positions[static_cast<std::size_t>(k)] = positions[static_cast<std::size_t>(k) - 1] + step;
    }
    return positions;
}

inline SpineRun simulate_spine(const OffspringLaw& law, int n, std::uint64_t seed,
                               std::int64_t node_cap = kDefaultNodeCap) {
    if (n < 0) throw std::invalid_argument("simulate_spine: n < 0");
    Rng rng(derive_stream(seed, 0x5b1e));
    TreeBuilder builder;
    SpineRun run;
    run.spine = {0};
    run.spine_positions = {0.0};

    std::vector<std::int32_t> current{0};
    std::vector<double> current_pos{0.0};
    std::int32_t spine_node = 0;
    double spine_pos = 0.0;
    double child[2];
    for (int g = 0; g < n; ++g) {
        std::vector<std::int32_t> next;
        std::vector<double> next_pos;
        next.reserve(2 * current.size());
        next_pos.reserve(2 * current.size());
        std::int32_t next_spine = -1;
        double next_spine_pos = 0.0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            const std::int32_t p = current[i];
            const double base = current_pos[i];
            if (p == spine_node) {
                sample_tilted_brood(law, rng, child);
                const double v0 = base + child[0];
                const double v1 = base + child[1];
                const std::int32_t c0 = builder.add_child(p, v0);
                const std::int32_t c1 = builder.add_child(p, v1);
                next.push_back(c0);
                next.push_back(c1);
                next_pos.push_back(v0);
                next_pos.push_back(v1);
                // Choose the next spine individual proportionally to exp(-V).
                const double w0 = std::exp(-v0), w1 = std::exp(-v1);
                if (rng.u01() * (w0 + w1) < w0) {
                    next_spine = c0;
                    next_spine_pos = v0;
                } else {
                    next_spine = c1;
                    next_spine_pos = v1;
                }
            } else {
                const int c = law.sample_brood(rng, child);
                for (int j = 0; j < c; ++j) {
                    const double v = base + child[j];
                    next.push_back(builder.add_child(p, v));
                    next_pos.push_back(v);
                }
            }
            if (static_cast<std::int64_t>(builder.node_count()) > node_cap)
                throw CapExceeded("simulate_spine: node cap exceeded");
        }
        builder.seal_generation();
        current = std::move(next);
        current_pos = std::move(next_pos);
        spine_node = next_spine;
        spine_pos = next_spine_pos;
        run.spine.push_back(spine_node);
        run.spine_positions.push_back(spine_pos);
    }
    run.tree = builder.take();
    return run;
}

// ---------------------------------------------------------------------------
// Many-to-one consistency check.
// ---------------------------------------------------------------------------

// Bounded test functions of a walk path (x_1, ..., x_n).
struct WalkFunctional {
    enum class Kind { One, Last, SmoothedPositivity };
    Kind kind = Kind::One;
    double slope = 8.0;  // for SmoothedPositivity: logistic(slope * min)

    double evaluate(std::span<const double> path) const {
        switch (kind) {
            case Kind::One:
                return 1.0;
            case Kind::Last:
                return path.empty() ? 0.0 : path.back();
            case Kind::SmoothedPositivity: {
                double m = std::numeric_limits<double>::infinity();
                for (double x : path) m = std::min(m, x);
                return PathFunctional::logistic(slope * m);
            }
        }
        return 0.0;
    }

    std::string describe() const {
        switch (kind) {
            case Kind::One:
                return "one";
            case Kind::Last:
                return "last";
            case Kind::SmoothedPositivity:
                return "smoothed_positivity";
        }
        return "";
    }
};

enum class ManyToOneMode {
    // Direct weighted estimate E[exp(S_n) g(S)] with S the spine walk. The
    // exp(S_n) weight makes this an honest but very high-variance estimator.
    Direct,
    // Same expectation after absorbing exp(S_n) into an exact exponential
    // change of measure: rho^n E[g(walk with Normal(m, s2) steps)], where
    // rho = E[exp(step)] = mean brood size. Tight variance; the default.
    Tilted,
};

struct ManyToOneResult {
    McEstimate tree_side;  // E[sum_{|z|=n} g(V(z_1), ..., V(z_n))]
    McEstimate walk_side;  // E[exp(S_n) g(S_1, ..., S_n)]
    double z = 0.0;
};

inline ManyToOneResult many_to_one_check(const OffspringLaw& law, int n,
                                         const WalkFunctional& g, long replicas,
                                         std::uint64_t seed,
                                         ManyToOneMode mode = ManyToOneMode::Tilted,
                                         unsigned workers = 1) {
    if (n < 1) throw std::invalid_argument("many_to_one_check: n < 1");
    ManyToOneResult res;

    // Tree side: one forward population sweep per replica, carrying the state
    // g needs (last position, or the running minimum) per individual.
    std::vector<double> tree_vals(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        Rng rng(derive_stream(seed, r, 0x17ee));
        std::vector<double> pos{0.0};
        std::vector<double> run_min{std::numeric_limits<double>::infinity()};
        std::vector<double> npos, nmin;
        double child[2];
        for (int ggen = 0; ggen < n; ++ggen) {
            npos.clear();
            nmin.clear();
            for (std::size_t i = 0; i < pos.size(); ++i) {
                const int c = law.sample_brood(rng, child);
                for (int j = 0; j < c; ++j) {
                    const double v = pos[i] + child[j];
                    npos.push_back(v);
                    nmin.push_back(std::min(run_min[i], v));
                }
            }
            pos.swap(npos);
            run_min.swap(nmin);
        }
        double total = 0.0;
        switch (g.kind) {
            case WalkFunctional::Kind::One:
                total = static_cast<double>(pos.size());
                break;
            case WalkFunctional::Kind::Last:
                for (double v : pos) total += v;
                break;
            case WalkFunctional::Kind::SmoothedPositivity:
                for (double m : run_min) total += PathFunctional::logistic(g.slope * m);
                break;
        }
        tree_vals[r] = total;
    });
    res.tree_side = mc_estimate(tree_vals);

    // Walk side.
    const SpineStepLaw step = spine_step_law(law);
    const double sd = std::sqrt(step.variance);
    double rho_n = 1.0;
    for (int k = 0; k < n; ++k) rho_n *= law.mean_brood_size();
    std::vector<double> walk_vals(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        Rng rng(derive_stream(seed, r, 0x3a1c));
        std::vector<double> path(static_cast<std::size_t>(n));
        double s = 0.0;
        const double drift = mode == ManyToOneMode::Tilted ? step.mean + step.variance : step.mean;
        for (int k = 0; k < n; ++k) {
            s += rng.normal(drift, sd);
            path[static_cast<std::size_t>(k)] = s;
        }
        if (mode == ManyToOneMode::Tilted)
            walk_vals[r] = rho_n * g.evaluate(path);
        else
            walk_vals[r] = std::exp(s) * g.evaluate(path);
    });
    res.walk_side = mc_estimate(walk_vals);
    res.z = z_score(res.tree_side, res.walk_side);
    return res;
}

// ---------------------------------------------------------------------------
// Change-of-measure identity: E_sized[phi / W_{n,1}] = E_plain[phi] for
// bounded functionals phi of the first n generations, run with
// phi = min(W_{n,beta}, cap). The raw W_{n,beta} is a valid phi mathematically
// but a hopeless Monte Carlo statistic: its second moment grows like
// exp(n psi(2 beta)), so the plain-side sample mean sits far below the true
// mean at any feasible replica count while the size-biased side, which tilts
// toward the heavy contributions, does not. The cap restores a sharp
// comparison of the same identity; cap = +inf gives the raw statistic.
// ---------------------------------------------------------------------------

struct ChangeOfMeasureResult {
    McEstimate size_biased;  // E_sized[phi / W_{n,1}]
    McEstimate plain;        // E_plain[phi]
    double z = 0.0;
    double cap = 0.0;
};

inline ChangeOfMeasureResult change_of_measure_check(
    const OffspringLaw& law, int n, double beta, long replicas, std::uint64_t seed,
    unsigned workers = 1, double cap = std::numeric_limits<double>::infinity()) {
    ChangeOfMeasureResult res;
    res.cap = cap;
    std::vector<double> sized(static_cast<std::size_t>(replicas));
    std::vector<double> plain(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        const SpineRun run = simulate_spine(law, n, derive_stream(seed, r, 0xcf));
        const auto mart = martingales(run.tree, n, beta);
        sized[r] = std::min(mart.w_n_beta, cap) / mart.w_n_1;  // spine keeps W_{n,1} > 0
        const TreeArena tree = simulate(law, n, derive_stream(seed, r, 0xcd));
        plain[r] = std::min(martingales(tree, n, beta).w_n_beta, cap);
    });
    res.size_biased = mc_estimate(sized);
    res.plain = mc_estimate(plain);
    res.z = z_score(res.size_biased, res.plain);
    return res;
}

// ---------------------------------------------------------------------------
// Spine identification: conditionally on the tree, the spine leaf is a
// beta = 1 Gibbs pick, so paired differences between a spine-leaf statistic
// and its Gibbs average over the same tree are centred.
// ---------------------------------------------------------------------------

struct SpineIdentityResult {
    McEstimate argmin_diff;    // 1{omega_n = argmin leaf} - nu_1(argmin leaf)
    McEstimate position_diff;  // V(omega_n) - sum_u nu_1(u) V(u)
};

inline SpineIdentityResult spine_identity_check(const OffspringLaw& law, int n, long replicas,
                                                std::uint64_t seed, unsigned workers = 1) {
    std::vector<double> d_argmin(static_cast<std::size_t>(replicas));
    std::vector<double> d_pos(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        const SpineRun run = simulate_spine(law, n, derive_stream(seed, r, 0x51d));
        const auto w = gibbs_weights(run.tree, n, 1.0);
        const auto norm = w.normalized();
        const auto [b, e] = run.tree.generation_range(n);
        std::int32_t argmin = b;
        for (std::int32_t v = b; v < e; ++v)
            if (run.tree.position(v) < run.tree.position(argmin)) argmin = v;
        double mean_pos = 0.0;
        for (std::int32_t v = b; v < e; ++v)
            mean_pos += norm[static_cast<std::size_t>(v - b)] * run.tree.position(v);
        const std::int32_t leaf = run.spine.back();
        d_argmin[r] = (leaf == argmin ? 1.0 : 0.0) - norm[static_cast<std::size_t>(argmin - b)];
        d_pos[r] = run.tree.position(leaf) - mean_pos;
    });
    return {mc_estimate(d_argmin), mc_estimate(d_pos)};
}

}  // namespace brwlab
