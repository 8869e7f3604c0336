#include <catch2/catch_amalgamated.hpp>

#include "brwlab/gibbs.hpp"
#include "brwlab/stats.hpp"
#include "test_util.hpp"

using namespace brwlab;

namespace {

// Root with k children at the given displacements, sealed as generation 1.
TreeArena leaf_tree(const std::vector<double>& displacements) {
    TreeBuilder b;
    for (double d : displacements) b.add_child(0, d);
    b.seal_generation();
    return b.take();
}

}  // namespace

TEST_CASE("gibbs weights") {
    SECTION("equal positions split the mass evenly") {
        const auto w = gibbs_weights(leaf_tree({2.7, 2.7}), 1, 3.0);
        const auto norm = w.normalized();
        CHECK(norm[0] == Catch::Approx(0.5).margin(1e-15));
        CHECK(norm[1] == Catch::Approx(0.5).margin(1e-15));
    }
    SECTION("positions (0, ln 2) at beta = 1 weigh (2/3, 1/3)") {
        const auto w = gibbs_weights(leaf_tree({0.0, std::log(2.0)}), 1, 1.0);
        const auto norm = w.normalized();
        CHECK(norm[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
        CHECK(norm[1] == Catch::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    SECTION("large offsets do not overflow") {
        for (double beta : {1.5, 8.0, 64.0}) {
            const auto w = gibbs_weights(leaf_tree({1000.0, 1000.0}), 1, beta);
            const auto norm = w.normalized();
            CHECK(norm[0] == Catch::Approx(0.5).margin(1e-12));
            const auto w2 = gibbs_weights(leaf_tree({-700.0, -700.0 + std::log(2.0)}), 1, 1.0);
            const auto norm2 = w2.normalized();
            CHECK(norm2[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
        }
    }
    SECTION("normalized weights sum to one") {
        const auto tree = simulate(calibrate_binary_gaussian(), 9, 4);
        const auto norm = gibbs_weights(tree, 9, 2.0).normalized();
        CHECK(compensated_sum(norm) == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("extinct generation is an error") {
        TreeBuilder b;
        b.seal_generation();
        const auto tree = b.take();
        CHECK_THROWS_AS(gibbs_weights(tree, 1, 2.0), ExtinctGeneration);
    }
    SECTION("scaling all weights by a common factor leaves the measure unchanged") {
        const auto tree = simulate(calibrate_binary_gaussian(), 7, 12);
        auto w = gibbs_weights(tree, 7, 1.7);
        const auto norm = w.normalized();
        for (auto& lw : w.log_weights) lw += 123.456;  // scale raw weights by e^123.456
        w.log_partition = log_sum_exp(w.log_weights);
        const auto scaled = w.normalized();
        for (std::size_t i = 0; i < norm.size(); ++i)
            CHECK(scaled[i] == Catch::Approx(norm[i]).epsilon(1e-12));
    }
}

TEST_CASE("sampling leaves from the Gibbs measure") {
    SECTION("a single leaf is always drawn") {
        const auto tree = leaf_tree({1.0});
        const auto w = gibbs_weights(tree, 1, 2.0);
        Rng rng(5);
        for (auto v : sample_leaves(w, 50, rng)) CHECK(v == 1);
    }
    SECTION("two-leaf frequencies") {
        Rng rng(6);
        const auto even = gibbs_weights(leaf_tree({1.0, 1.0}), 1, 2.0);
        long hits = 0;
        for (auto v : sample_leaves(even, 100000, rng)) hits += v == 1;
        CHECK(std::abs(hits / 1e5 - 0.5) <= 3.0 * std::sqrt(0.25 / 1e5));

        const auto skew = gibbs_weights(leaf_tree({0.0, std::log(2.0)}), 1, 1.0);
        hits = 0;
        for (auto v : sample_leaves(skew, 100000, rng)) hits += v == 1;
        CHECK(std::abs(hits / 1e5 - 2.0 / 3.0) <= 3.0 * std::sqrt(2.0 / 9.0 / 1e5));
    }
    SECTION("empirical law matches exact enumeration (chi-square, level 1e-3)") {
        const auto tree = simulate(calibrate_binary_gaussian(), 5, 77);  // 32 leaves
        const auto w = gibbs_weights(tree, 5, 1.2);
        const auto norm = w.normalized();
        const long draws = 500000;
        Rng rng(8);
        std::vector<long> counts(norm.size(), 0);
        for (auto v : sample_leaves(w, draws, rng))
            ++counts[static_cast<std::size_t>(v - w.first_leaf)];
        // Merge leaves until every cell expects at least 5 draws.
        std::vector<std::size_t> order(norm.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return norm[a] < norm[b]; });
        std::vector<std::pair<double, double>> cells;  // (expected, observed)
        double ce = 0.0, co = 0.0;
        for (std::size_t i : order) {
            ce += norm[i] * static_cast<double>(draws);
            co += static_cast<double>(counts[i]);
            if (ce >= 5.0) {
                cells.emplace_back(ce, co);
                ce = co = 0.0;
            }
        }
        if (ce > 0.0 && !cells.empty()) {
            cells.back().first += ce;
            cells.back().second += co;
        }
        REQUIRE(cells.size() >= 10);
        double chi2 = 0.0;
        for (const auto& [expected, observed] : cells)
            chi2 += (observed - expected) * (observed - expected) / expected;
        CHECK(chi2 < chi_square_quantile(1.0 - 1e-3, static_cast<int>(cells.size()) - 1));
    }
}

TEST_CASE("mu functional") {
    const auto law = calibrate_binary_gaussian();
    const auto grid = uniform_grid(16);
    SECTION("constants integrate to themselves") {
        const auto tree = simulate(law, 8, 3);
        CHECK(mu_functional(tree, 8, 2.0, law.sigma2, PathFunctional::constant(3.25), grid) ==
              Catch::Approx(3.25).margin(1e-10));
    }
    SECTION("single-leaf tree evaluates that leaf's trajectory") {
        TreeBuilder b;
        auto v = b.add_child(0, 0.4);
        b.seal_generation();
        v = b.add_child(v, 1.1);
        b.seal_generation();
        const auto tree = b.take();
        const auto f = PathFunctional::max();
        const double direct =
            f.evaluate(normalize_trajectory(tree.lineage(v), law.sigma2, 2, grid));
        CHECK(mu_functional(tree, 2, 2.0, law.sigma2, f, grid) == Catch::Approx(direct));
    }
    SECTION("paths start at the origin") {
        const auto tree = simulate(law, 6, 9);
        CHECK(mu_functional(tree, 6, 2.0, law.sigma2, PathFunctional::eval_at(0.0), grid) == 0.0);
    }
    SECTION("bounded functionals stay bounded") {
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto tree = simulate(law, 7, derive_stream(90, s));
            const auto f = PathFunctional::soft_threshold(0.5, 0.1, 7.0);
            const double v = mu_functional(tree, 7, 1.5, law.sigma2, f, grid);
            CHECK(v >= 0.0);
            CHECK(v <= f.bound);
        }
    }
}

TEST_CASE("tilde mu") {
    const auto law = calibrate_binary_gaussian();
    const auto grid = uniform_grid(16);
    SECTION("extinct generation contributes zero") {
        TreeBuilder b;
        b.seal_generation();
        CHECK(tilde_mu(b.take(), 1, 2.0, law.sigma2, PathFunctional::constant(1.0), grid) == 0.0);
    }
    SECTION("F = 1 recovers n^{3 beta/2} W_{n,beta}") {
        const auto tree = simulate(law, 9, 31);
        for (double beta : {1.5, 2.0, 4.0}) {
            const auto m = martingales(tree, 9, beta);
            const double expected = std::exp(1.5 * beta * std::log(9.0) + m.log_w_n_beta);
            CHECK(tilde_mu(tree, 9, beta, law.sigma2, PathFunctional::constant(1.0), grid) ==
                  Catch::Approx(expected).epsilon(1e-12));
        }
    }
    SECTION("linearity") {
        const auto tree = simulate(law, 8, 32);
        const double a = tilde_mu(tree, 8, 2.0, law.sigma2, PathFunctional::constant(0.7), grid);
        const double b = tilde_mu(tree, 8, 2.0, law.sigma2, PathFunctional::constant(1.9), grid);
        const double ab = tilde_mu(tree, 8, 2.0, law.sigma2, PathFunctional::constant(2.6), grid);
        CHECK(ab == Catch::Approx(a + b).epsilon(1e-10));
    }
    SECTION("batched evaluation equals one-at-a-time evaluation") {
        const auto tree = simulate(law, 9, 77);
        const std::vector<PathFunctional> fs{PathFunctional::constant(1.0),
                                             PathFunctional::max(),
                                             PathFunctional::eval_at(0.5)};
        const auto batch = tilde_mu_batch(tree, 9, 2.0, law.sigma2, fs, grid);
        for (std::size_t i = 0; i < fs.size(); ++i)
            CHECK(batch[i] == tilde_mu(tree, 9, 2.0, law.sigma2, fs[i], grid));
    }
    SECTION("median of tilde_mu(1) is stable in n (frozen tolerance)") {
        const auto& cfg = testutil::thresholds()["tilde_mu_median_stability"];
        const long replicas = cfg["replicas"].get<long>();
        const double max_ratio = cfg["max_ratio"].get<double>();
        std::vector<double> medians;
        for (const auto& jn : cfg["n_list"]) {
            const int n = jn.get<int>();
            const auto g = uniform_grid(n);
            std::vector<double> vals;
            for (long r = 0; r < replicas; ++r) {
                const auto tree =
                    simulate(law, n, derive_stream(606, static_cast<std::uint64_t>(r)));
                vals.push_back(
                    tilde_mu(tree, n, 2.0, law.sigma2, PathFunctional::constant(1.0), g));
            }
            medians.push_back(median(vals));
        }
        const auto [lo, hi] = std::minmax_element(medians.begin(), medians.end());
        INFO("medians span " << *lo << " .. " << *hi);
        CHECK(*hi / *lo <= max_ratio);
    }
}

TEST_CASE("most recent common ancestor") {
    // Root -> A, B; A -> A1, A2; B -> B1, B2; then one more level under A1.
    TreeBuilder b;
    const auto A = b.add_child(0, 1.0);
    const auto B = b.add_child(0, -1.0);
    b.seal_generation();
    const auto A1 = b.add_child(A, 1.5), A2 = b.add_child(A, 0.5);
    const auto B1 = b.add_child(B, -1.5), B2 = b.add_child(B, -0.5);
    b.seal_generation();
    const auto A11 = b.add_child(A1, 2.0);
    b.seal_generation();
    const auto tree = b.take();

    CHECK(mrca(tree, A11, A11) == 3);
    CHECK(mrca(tree, A, B) == 0);
    CHECK(mrca(tree, A1, A2) == 1);
    CHECK(mrca(tree, A1, B1) == 0);
    CHECK(mrca(tree, A11, A2) == 1);
    CHECK(mrca(tree, A11, B2) == 0);
    SECTION("symmetry and bound on random pairs") {
        const auto big = simulate(calibrate_binary_gaussian(), 9, 55);
        Rng rng(4);
        for (int i = 0; i < 300; ++i) {
            const auto z = static_cast<std::int32_t>(rng.below(big.node_count()));
            const auto z2 = static_cast<std::int32_t>(rng.below(big.node_count()));
            const int m = mrca(big, z, z2);
            CHECK(m == mrca(big, z2, z));
            CHECK(m <= std::min(big.generation_of(z), big.generation_of(z2)));
            CHECK(m >= 0);
        }
    }
}

TEST_CASE("overlap estimation") {
    const auto law = calibrate_binary_gaussian();
    SECTION("thresholds below 1/n never split") {
        const std::vector<double> t{0.04};  // floor(0.04 * 20) = 0
        const auto rep = overlap_estimate(law, 20, 2.0, t, 8, 16, 11, 2);
        CHECK(rep.split_prob[0].mean == 0.0);
        CHECK(rep.split_prob[0].se == 0.0);
    }
    SECTION("split probability is monotone in t and the histogram is a law") {
        const std::vector<double> t{0.1, 0.3, 0.5, 0.7, 0.9};
        const auto rep = overlap_estimate(law, 12, 2.0, t, 60, 32, 12, 2);
        for (std::size_t i = 0; i + 1 < t.size(); ++i)
            CHECK(rep.split_prob[i].mean <= rep.split_prob[i + 1].mean + 1e-15);
        for (const auto& e : rep.split_prob) {
            CHECK(e.mean >= 0.0);
            CHECK(e.mean <= 1.0);
        }
        double mass = 0.0;
        for (double h : rep.mrca_histogram) {
            CHECK(h >= 0.0);
            mass += h;
        }
        CHECK(mass == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("invalid grid is rejected") {
        const std::vector<double> bad{0.0, 0.5};
        CHECK_THROWS_AS(overlap_estimate(law, 8, 2.0, bad, 4, 4, 1), std::invalid_argument);
    }
}
