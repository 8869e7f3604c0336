#pragma once

// Gibbs measure on generation n: log-domain leaf weights proportional to
// exp(-beta V(u)), exact full-population trajectory functionals, sampling,
// and genealogical overlap statistics for replica pairs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "brwlab/parallel.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/trajectory.hpp"
#include "brwlab/tree.hpp"

namespace brwlab {

struct ExtinctGeneration : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GibbsWeights {
    std::int32_t first_leaf = 0;  // generation-n nodes occupy [first_leaf, first_leaf + size)
    std::vector<double> log_weights;  // -beta * V(u)
    double log_partition = 0.0;       // log-sum-exp of log_weights (log W_{n,beta})
    double beta = 1.0;
    int n = 0;

    std::size_t size() const { return log_weights.size(); }

    std::vector<double> normalized() const {
        std::vector<double> w(log_weights.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = std::exp(log_weights[i] - log_partition);
        return w;
    }
};

inline GibbsWeights gibbs_weights(const TreeArena& tree, int n, double beta) {
    const auto [b, e] = tree.generation_range(n);
    if (b == e)
        throw ExtinctGeneration("gibbs_weights: generation " + std::to_string(n) + " is empty");
    GibbsWeights w;
    w.first_leaf = b;
    w.beta = beta;
    w.n = n;
    w.log_weights.resize(static_cast<std::size_t>(e - b));
    const auto pos = tree.positions();
    for (std::int32_t v = b; v < e; ++v)
        w.log_weights[static_cast<std::size_t>(v - b)] = -beta * pos[static_cast<std::size_t>(v)];
    w.log_partition = log_sum_exp(w.log_weights);
    return w;
}

// Walker alias table; O(size) setup, O(1) per draw.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> weights) {
        const std::size_t n = weights.size();
        if (n == 0) throw std::invalid_argument("AliasTable: empty weights");
        prob_.resize(n);
        alias_.resize(n);
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("AliasTable: negative weight");
            total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("AliasTable: zero total weight");
        std::vector<double> scaled(n);
        for (std::size_t i = 0; i < n; ++i)
            scaled[i] = weights[i] / total * static_cast<double>(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i)
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        while (!small.empty() && !large.empty()) {
            const std::uint32_t s = small.back(), l = large.back();
            small.pop_back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (std::uint32_t i : large) prob_[i] = 1.0;
        for (std::uint32_t i : small) prob_[i] = 1.0;  // numerical leftovers
    }

    std::size_t draw(Rng& rng) const {
        const std::size_t i = static_cast<std::size_t>(rng.below(prob_.size()));
        return rng.u01() < prob_[i] ? i : alias_[i];
    }

private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

// k i.i.d. draws (with replacement) from the normalized Gibbs weights,
// returned as arena node indices.
inline std::vector<std::int32_t> sample_leaves(const GibbsWeights& w, std::size_t k, Rng& rng) {
    if (k < 1) throw std::invalid_argument("sample_leaves: k < 1");
    const auto norm = w.normalized();
    const AliasTable table(norm);
    std::vector<std::int32_t> out(k);
    for (auto& v : out)
        v = w.first_leaf + static_cast<std::int32_t>(table.draw(rng));
    return out;
}

// ---------------------------------------------------------------------------
// Exact per-leaf functional evaluation by one forward sweep over generations.
// Equivalent to lineage extraction + normalize_trajectory + evaluate for
// every leaf, but costs O(#nodes) instead of O(n * #leaves).
// ---------------------------------------------------------------------------

inline std::vector<double> leaf_functional_values(const TreeArena& tree, int n, double sigma2,
                                                  const PathFunctional& f,
                                                  std::span<const double> grid) {
    const auto [b, e] = tree.generation_range(n);
    const std::size_t leaves = static_cast<std::size_t>(e - b);
    using Kind = PathFunctional::Kind;
    if (f.kind == Kind::Constant) return std::vector<double>(leaves, f.c);

    // Which generations feed the functional, with multiplicity. Point
    // evaluations resolve t to the last grid time <= t first, mirroring the
    // cadlag lookup in PathFunctional::evaluate.
    std::vector<int> mult(static_cast<std::size_t>(n) + 1, 0);
    int capture_gen = -1;
    if (f.kind == Kind::EvalAt || f.kind == Kind::SoftThreshold) {
        auto it = std::upper_bound(grid.begin(), grid.end(), std::min(f.t, 1.0));
        const double t_grid = it == grid.begin() ? grid.front() : *(it - 1);
        capture_gen = static_cast<int>(floor_time_index(t_grid, n));
    } else {
        for (double t : grid) ++mult[floor_time_index(t, n)];
    }

    const double scale = n > 0 ? 1.0 / std::sqrt(sigma2 * n) : 0.0;
    const double neg_inf = -std::numeric_limits<double>::infinity();

    std::vector<double> state{0.0}, next;
    // Root state at generation 0 (position 0).
    switch (f.kind) {
        case Kind::Max:
            state[0] = mult[0] > 0 ? 0.0 : neg_inf;
            break;
        case Kind::TimeAverage:
            state[0] = 0.0;
            break;
        default:
            state[0] = 0.0;
            break;
    }
    const auto pos = tree.positions();
    const auto par = tree.parents();
    for (int g = 1; g <= n; ++g) {
        const auto [gb, ge] = tree.generation_range(g);
        const auto [pb, pe] = tree.generation_range(g - 1);
        (void)pe;
        next.resize(static_cast<std::size_t>(ge - gb));
        const int m = mult[static_cast<std::size_t>(g)];
        for (std::int32_t v = gb; v < ge; ++v) {
            const double parent_state = state[static_cast<std::size_t>(par[static_cast<std::size_t>(v)] - pb)];
            const double p = pos[static_cast<std::size_t>(v)];
            double s;
            switch (f.kind) {
                case Kind::Max:
                    s = m > 0 ? std::max(parent_state, p) : parent_state;
                    break;
                case Kind::TimeAverage:
                    s = parent_state + m * p;
                    break;
                default:  // EvalAt, SoftThreshold
                    s = g == capture_gen ? p : parent_state;
                    break;
            }
            next[static_cast<std::size_t>(v - gb)] = s;
        }
        state.swap(next);
    }

    std::vector<double> out(leaves);
    const double grid_points = static_cast<double>(grid.size());
    for (std::size_t i = 0; i < leaves; ++i) {
        switch (f.kind) {
            case Kind::Max:
                out[i] = state[i] == neg_inf ? 0.0 : state[i] * scale;
                break;
            case Kind::TimeAverage:
                out[i] = state[i] * scale / grid_points;
                break;
            case Kind::EvalAt:
                out[i] = state[i] * scale;
                break;
            case Kind::SoftThreshold:
                out[i] = PathFunctional::logistic(f.slope * (state[i] * scale - f.level));
                break;
            default:
                out[i] = f.c;
                break;
        }
    }
    return out;
}

// mu_{n,beta}(F): exact Gibbs-weighted average of F over all leaves.
inline double mu_functional(const TreeArena& tree, int n, double beta, double sigma2,
                            const PathFunctional& f, std::span<const double> grid) {
    const auto w = gibbs_weights(tree, n, beta);
    const auto fv = leaf_functional_values(tree, n, sigma2, f, grid);
    std::vector<double> terms(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i)
        terms[i] = std::exp(w.log_weights[i] - w.log_partition) * fv[i];
    return pairwise_sum(terms);
}

// tilde-mu_{n,beta}(F) = n^{3 beta / 2} sum_u exp(-beta V(u)) F(H(u));
// zero on an extinct generation. Assembled with a max shift so the scale
// factor and the raw weights never overflow separately.
inline double tilde_mu(const TreeArena& tree, int n, double beta, double sigma2,
                       const PathFunctional& f, std::span<const double> grid) {
    const auto [b, e] = tree.generation_range(n);
    if (b == e) return 0.0;
    const auto w = gibbs_weights(tree, n, beta);
    const auto fv = leaf_functional_values(tree, n, sigma2, f, grid);
    double shift = w.log_weights[0];
    for (double lw : w.log_weights) shift = std::max(shift, lw);
    std::vector<double> terms(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i)
        terms[i] = std::exp(w.log_weights[i] - shift) * fv[i];
    const double s = pairwise_sum(terms);
    const double log_scale = 1.5 * beta * std::log(static_cast<double>(n)) + shift;
    return std::exp(log_scale) * s;
}

// tilde-mu for several functionals over one tree, sharing the weight pass.
inline std::vector<double> tilde_mu_batch(const TreeArena& tree, int n, double beta,
                                          double sigma2, std::span<const PathFunctional> fs,
                                          std::span<const double> grid) {
    std::vector<double> out(fs.size(), 0.0);
    const auto [b, e] = tree.generation_range(n);
    if (b == e) return out;
    const auto w = gibbs_weights(tree, n, beta);
    double shift = w.log_weights[0];
    for (double lw : w.log_weights) shift = std::max(shift, lw);
    std::vector<double> weights(w.log_weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights[i] = std::exp(w.log_weights[i] - shift);
    const double scale = std::exp(1.5 * beta * std::log(static_cast<double>(n)) + shift);
    std::vector<double> terms(weights.size());
    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        const auto fv = leaf_functional_values(tree, n, sigma2, fs[fi], grid);
        for (std::size_t i = 0; i < weights.size(); ++i) terms[i] = weights[i] * fv[i];
        out[fi] = scale * pairwise_sum(terms);
    }
    return out;
}

// Generation of the most recent common ancestor (node identity, not position
// equality).
inline int mrca(const TreeArena& tree, std::int32_t z, std::int32_t z2) {
    int g = tree.generation_of(z);
    int g2 = tree.generation_of(z2);
    while (g > g2) {
        z = tree.parent(z);
        --g;
    }
    while (g2 > g) {
        z2 = tree.parent(z2);
        --g2;
    }
    while (z != z2) {
        z = tree.parent(z);
        z2 = tree.parent(z2);
        --g;
    }
    return g;
}

struct OverlapReport {
    std::vector<double> t_grid;
    std::vector<McEstimate> split_prob;  // estimate of nu^{(x)2}(MRCA < floor(n t)) per t
    std::vector<double> mrca_histogram;  // frequencies of MRCA / n, uniform bins on [0, 1]
    int n = 0;
    double beta = 1.0;
    long replicas = 0;
    long pairs_per_replica = 0;
};

// Simulates one arena conditioned on a nonempty generation n by rejection;
// attempt a of replica r uses the stream (seed, r, a).
inline TreeArena simulate_surviving(const OffspringLaw& law, int n, std::uint64_t seed,
                                    std::uint64_t replica, std::int64_t node_cap,
                                    int max_attempts = 4096) {
    for (int a = 0; a < max_attempts; ++a) {
        TreeArena t = simulate(law, n, derive_stream(seed, replica, static_cast<std::uint64_t>(a)),
                               node_cap);
        if (t.generation_size(n) > 0) return t;
    }
    throw std::runtime_error("simulate_surviving: exceeded rejection attempts");
}

inline OverlapReport overlap_estimate(const OffspringLaw& law, int n, double beta,
                                      std::span<const double> t_grid, long replicas,
                                      long pairs_per_replica, std::uint64_t seed,
                                      unsigned workers = 1,
                                      std::int64_t node_cap = kDefaultNodeCap,
                                      int histogram_bins = 20) {
    for (double t : t_grid)
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("overlap_estimate: t_grid must lie in (0,1)");
    OverlapReport rep;
    rep.t_grid.assign(t_grid.begin(), t_grid.end());
    rep.n = n;
    rep.beta = beta;
    rep.replicas = replicas;
    rep.pairs_per_replica = pairs_per_replica;

    const std::size_t nt = t_grid.size();
    std::vector<double> replica_split(static_cast<std::size_t>(replicas) * nt);
    std::vector<std::vector<double>> replica_hist(
        static_cast<std::size_t>(replicas),
        std::vector<double>(static_cast<std::size_t>(histogram_bins), 0.0));

    std::vector<int> thresholds(nt);
    for (std::size_t i = 0; i < nt; ++i)
        thresholds[i] = static_cast<int>(std::floor(t_grid[i] * n));

    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        const TreeArena tree = simulate_surviving(law, n, seed, r, node_cap);
        const auto w = gibbs_weights(tree, n, beta);
        const AliasTable table(w.normalized());
        Rng rng(derive_stream(seed, r, 0x9a175));
        std::vector<long> split_count(nt, 0);
        for (long p = 0; p < pairs_per_replica; ++p) {
            const auto z = w.first_leaf + static_cast<std::int32_t>(table.draw(rng));
            const auto z2 = w.first_leaf + static_cast<std::int32_t>(table.draw(rng));
            const int k = mrca(tree, z, z2);
            for (std::size_t i = 0; i < nt; ++i)
                if (k < thresholds[i]) ++split_count[i];
            const double frac = static_cast<double>(k) / static_cast<double>(n);
            const int bin = std::min(histogram_bins - 1,
                                     static_cast<int>(frac * histogram_bins));
            replica_hist[r][static_cast<std::size_t>(bin)] += 1.0;
        }
        for (std::size_t i = 0; i < nt; ++i)
            replica_split[r * nt + i] =
                static_cast<double>(split_count[i]) / static_cast<double>(pairs_per_replica);
    });

    rep.split_prob.resize(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        RunningStat s;
        for (long r = 0; r < replicas; ++r)
            s.add(replica_split[static_cast<std::size_t>(r) * nt + i]);
        rep.split_prob[i] = s.estimate();
    }
    rep.mrca_histogram.assign(static_cast<std::size_t>(histogram_bins), 0.0);
    double total = 0.0;
    for (const auto& h : replica_hist)
        for (std::size_t bin = 0; bin < h.size(); ++bin) {
            rep.mrca_histogram[bin] += h[bin];
            total += h[bin];
        }
    for (auto& v : rep.mrca_histogram) v /= total;
    return rep;
}

}  // namespace brwlab
