#pragma once

// Flat, index-addressed genealogical tree and the forward simulation of the
// branching random walk. Nodes of one generation are stored contiguously;
// a node knows only its parent index and its position, so a lineage is an
// O(depth) chase and children never need to be materialised.

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwlab/offspring.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kDefaultNodeCap = std::int64_t{1} << 26;

class TreeArena {
public:
    static constexpr std::int32_t kNoParent = -1;

    TreeArena() = default;

    std::size_t node_count() const { return position_.size(); }
    int max_generation() const { return static_cast<int>(gen_begin_.size()) - 2; }

    std::int32_t parent(std::int32_t node) const { return parent_[check(node)]; }
    double position(std::int32_t node) const { return position_[check(node)]; }

    // Contiguous index range [first, last) of generation g; empty when the
    // population has died out by g.
    std::pair<std::int32_t, std::int32_t> generation_range(int g) const {
        if (g < 0 || g > max_generation())
            throw std::out_of_range("generation_range: generation not simulated");
        return {gen_begin_[static_cast<std::size_t>(g)],
                gen_begin_[static_cast<std::size_t>(g) + 1]};
    }

    std::int64_t generation_size(int g) const {
        const auto [b, e] = generation_range(g);
        return e - b;
    }

    int generation_of(std::int32_t node) const {
        check(node);
        int lo = 0, hi = max_generation();
        while (lo < hi) {
            const int mid = (lo + hi + 1) / 2;
            if (gen_begin_[static_cast<std::size_t>(mid)] <= node)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

    std::span<const double> positions() const { return position_; }
    std::span<const std::int32_t> parents() const { return parent_; }

    // Ancestral positions V(z_0), ..., V(z_{|leaf|}); positions[0] = 0.
    std::vector<double> lineage(std::int32_t leaf) const {
        check(leaf);
        const int g = generation_of(leaf);
        std::vector<double> path(static_cast<std::size_t>(g) + 1);
        std::int32_t v = leaf;
        for (int k = g; k >= 0; --k) {
            path[static_cast<std::size_t>(k)] = position_[static_cast<std::size_t>(v)];
            v = parent_[static_cast<std::size_t>(v)];
        }
        return path;
    }

    friend class TreeBuilder;
    friend TreeArena simulate(const OffspringLaw& law, int n, std::uint64_t seed,
                              std::int64_t node_cap);

private:
    std::size_t check(std::int32_t node) const {
        if (node < 0 || static_cast<std::size_t>(node) >= position_.size())
            throw std::out_of_range("TreeArena: invalid node index " + std::to_string(node));
        return static_cast<std::size_t>(node);
    }

    std::vector<std::int32_t> parent_;
    std::vector<double> position_;
    std::vector<std::int32_t> gen_begin_;  // size max_gen + 2
};

// Incremental construction, one sealed generation at a time. Starts with the
// root at position 0.
class TreeBuilder {
public:
    TreeBuilder() {
        t_.parent_.push_back(TreeArena::kNoParent);
        t_.position_.push_back(0.0);
        t_.gen_begin_ = {0, 1};
    }
    std::int32_t add_child(std::int32_t parent, double position) {
        t_.parent_.push_back(parent);
        t_.position_.push_back(position);
        return static_cast<std::int32_t>(t_.position_.size()) - 1;
    }
    void seal_generation() {
        t_.gen_begin_.push_back(static_cast<std::int32_t>(t_.position_.size()));
    }
    std::size_t node_count() const { return t_.position_.size(); }
    TreeArena take() { return std::move(t_); }

private:
    TreeArena t_;
};

// Simulates all individuals up to generation n. Deterministic in (law, n,
// seed). Throws CapExceeded before materialising a generation that would
// push the node count above node_cap; never truncates silently.
inline TreeArena simulate(const OffspringLaw& law, int n, std::uint64_t seed,
                          std::int64_t node_cap = kDefaultNodeCap) {
    if (n < 0) throw std::invalid_argument("simulate: n < 0");
    if (node_cap < 1) throw std::invalid_argument("simulate: node_cap < 1");
    TreeArena t;
    if (law.kind == LawKind::BinaryGaussian && n < 31) {
        const auto total = static_cast<std::size_t>((std::int64_t{1} << (n + 1)) - 1);
        if (static_cast<std::int64_t>(total) <= node_cap) {
            t.parent_.reserve(total);
            t.position_.reserve(total);
        }
    }
    t.parent_.push_back(TreeArena::kNoParent);
    t.position_.push_back(0.0);
    t.gen_begin_ = {0, 1};
    Rng rng(derive_stream(seed, 0x7ee));
    double child[2];
    for (int g = 0; g < n; ++g) {
        const std::int32_t b = t.gen_begin_[static_cast<std::size_t>(g)];
        const std::int32_t e = t.gen_begin_[static_cast<std::size_t>(g) + 1];
        for (std::int32_t p = b; p < e; ++p) {
            const int c = law.sample_brood(rng, child);
            if (c == 0) continue;
            if (static_cast<std::int64_t>(t.position_.size()) + c > node_cap)
                throw CapExceeded("simulate: node cap " + std::to_string(node_cap) +
                                  " exceeded at generation " + std::to_string(g + 1));
            const double base = t.position_[static_cast<std::size_t>(p)];
            for (int i = 0; i < c; ++i) {
                t.parent_.push_back(p);
                t.position_.push_back(base + child[i]);
            }
        }
        t.gen_begin_.push_back(static_cast<std::int32_t>(t.position_.size()));
    }
    return t;
}

struct MartingaleReadout {
    double w_n_1 = 0.0;       // sum exp(-V) over generation n
    double z_n = 0.0;         // sum V exp(-V)
    double w_n_beta = 0.0;    // sum exp(-beta V)
    double log_w_n_beta = -std::numeric_limits<double>::infinity();
    int n = 0;
    double beta = 1.0;
};

// Additive and derivative martingales of generation n; all sums are
// compensated, and W_{n,beta} is assembled in the log domain.
inline MartingaleReadout martingales(const TreeArena& tree, int n, double beta) {
    MartingaleReadout out;
    out.n = n;
    out.beta = beta;
    const auto [b, e] = tree.generation_range(n);
    if (b == e) return out;
    const auto pos = tree.positions();
    std::vector<double> w1(static_cast<std::size_t>(e - b)), zv(w1.size()), lb(w1.size());
    for (std::int32_t v = b; v < e; ++v) {
        const double x = pos[static_cast<std::size_t>(v)];
        const double w = std::exp(-x);
        const std::size_t i = static_cast<std::size_t>(v - b);
        w1[i] = w;
        zv[i] = x * w;
        lb[i] = -beta * x;
    }
    out.w_n_1 = compensated_sum(w1);
    out.z_n = compensated_sum(zv);
    out.log_w_n_beta = log_sum_exp(lb);
    out.w_n_beta = std::exp(out.log_w_n_beta);
    return out;
}

// Minimum of generation n; empty generation yields nullopt.
inline std::optional<double> min_position(const TreeArena& tree, int n) {
    const auto [b, e] = tree.generation_range(n);
    if (b == e) return std::nullopt;
    const auto pos = tree.positions();
    double m = pos[static_cast<std::size_t>(b)];
    for (std::int32_t v = b + 1; v < e; ++v)
        m = std::min(m, pos[static_cast<std::size_t>(v)]);
    return m;
}

// Columnar debug export: node,parent,gen,position.
inline void export_arena(const TreeArena& tree, std::ostream& os) {
    os << "node,parent,gen,position\n";
    char buf[64];
    for (int g = 0; g <= tree.max_generation(); ++g) {
        const auto [b, e] = tree.generation_range(g);
        for (std::int32_t v = b; v < e; ++v) {
            std::snprintf(buf, sizeof buf, "%.17g", tree.position(v));
            os << v << ',' << tree.parent(v) << ',' << g << ',' << buf << '\n';
        }
    }
}

}  // namespace brwlab
