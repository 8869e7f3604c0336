#include <catch2/catch_amalgamated.hpp>

#include "brwlab/rwalk.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace brwlab;

TEST_CASE("ladder epochs and heights") {
    SECTION("monotone increasing path") {
        const std::vector<double> p{0, 1, 2, 3};
        const auto lad = ladder_epochs(p);
        CHECK(lad.ascending_epochs == std::vector<long>{1, 2, 3});
        CHECK(lad.ascending_heights == std::vector<double>{1, 2, 3});
        CHECK(lad.descending_epochs.empty());
    }
    SECTION("monotone decreasing path") {
        const std::vector<double> p{0, -1, -2};
        const auto lad = ladder_epochs(p);
        CHECK(lad.ascending_epochs.empty());
        CHECK(lad.descending_epochs == std::vector<long>{1, 2});
        CHECK(lad.descending_heights == std::vector<double>{1, 2});
    }
    SECTION("strict records only") {
        const std::vector<double> p{0, 1, 0.5, 2};
        const auto lad = ladder_epochs(p);
        CHECK(lad.ascending_epochs == std::vector<long>{1, 3});
        CHECK(lad.ascending_heights == std::vector<double>{1, 2});
    }
    SECTION("extending a path never rewrites earlier records") {
        Rng rng(21);
        const auto step = StepLaw::gaussian(1.0);
        std::vector<double> p{0.0};
        for (int k = 0; k < 30; ++k) p.push_back(p.back() + step.sample(rng));
        const auto before = ladder_epochs(p);
        for (int k = 0; k < 20; ++k) p.push_back(p.back() + step.sample(rng));
        const auto after = ladder_epochs(p);
        REQUIRE(after.ascending_epochs.size() >= before.ascending_epochs.size());
        for (std::size_t i = 0; i < before.ascending_epochs.size(); ++i) {
            CHECK(after.ascending_epochs[i] == before.ascending_epochs[i]);
            CHECK(after.ascending_heights[i] == before.ascending_heights[i]);
        }
        for (std::size_t i = 0; i < before.descending_epochs.size(); ++i)
            CHECK(after.descending_epochs[i] == before.descending_epochs[i]);
        CHECK(ladder_epochs(p).ascending_epochs == after.ascending_epochs);  // idempotent
    }
    SECTION("path must start at zero") {
        const std::vector<double> p{1.0, 2.0};
        CHECK_THROWS_AS(ladder_epochs(p), std::invalid_argument);
    }
}

TEST_CASE("renewal function estimation") {
    SECTION("V^-(0) = 1 exactly") {
        const std::vector<double> grid{0.0, 1.0};
        const auto t = renewal_estimate(StepLaw::gaussian(1.0), grid, 2000, 100000, 5, 2);
        CHECK(t.v_minus[0].mean == 1.0);
        CHECK(t.v_minus[0].se == 0.0);
    }
    SECTION("lattice truncated series matches the exact DP at the same horizon") {
        const std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
        const auto t = renewal_estimate(StepLaw::lattice(), grid, 200000, 40, 6, 2);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double exact = oracles::lattice_truncated_renewal_minus(grid[i], 40);
            INFO("x = " << grid[i] << " exact " << exact);
            CHECK(std::abs(t.v_minus[i].mean - exact) <= 4.0 * t.v_minus[i].se);
        }
    }
    SECTION("lattice deep horizon recovers V^-(x) = x + 1") {
        const std::vector<double> grid{0.0, 1.0, 2.0, 3.0};
        const auto t = renewal_estimate(StepLaw::lattice(), grid, 4000, 2000000, 7, 2);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(std::abs(t.v_minus[i].mean - (grid[i] + 1.0)) <=
                  4.0 * t.v_minus[i].se + 0.01);
        CHECK(t.v_minus[3].mean == Catch::Approx(4.0).margin(0.08));
    }
    SECTION("gaussian renewal grows linearly") {
        std::vector<double> grid;
        for (double x = 0.0; x <= 40.0; x += 2.5) grid.push_back(x);
        const auto t = renewal_estimate(StepLaw::gaussian(1.0), grid, 1200, 4000000, 8, 2);
        const double r20 = renewal_value_minus(t, 20.0) / 20.0;
        const double r40 = renewal_value_minus(t, 40.0) / 40.0;
        CHECK(std::abs(r40 / r20 - 1.0) < 0.15);
        // Symmetric step law: both renewal functions agree within noise.
        for (std::size_t i = 4; i < grid.size(); i += 4)
            CHECK(std::abs(t.v_minus[i].mean - t.v_plus[i].mean) <=
                  4.0 * std::sqrt(t.v_minus[i].se * t.v_minus[i].se +
                                  t.v_plus[i].se * t.v_plus[i].se));
        SECTION("extrapolation continues the fitted slope") {
            const double v50 = renewal_value_minus(t, 50.0);
            CHECK(v50 == Catch::Approx(t.v_minus.back().mean + 10.0 * t.slope_minus));
        }
    }
}

TEST_CASE("survival scaling") {
    SECTION("lattice at n = 2 is exactly 1/2") {
        const std::vector<long> ns{2};
        const auto s = survival_scaling(StepLaw::lattice(), ns, 200000, 9, 2);
        const double expected = std::sqrt(2.0) * 0.5;
        CHECK(std::abs(s.stay_nonnegative[0].mean - expected) <=
              3.0 * s.stay_nonnegative[0].se);
    }
    SECTION("gaussian plateau and symmetry") {
        const std::vector<long> ns{256, 1024, 4096};
        const auto s = survival_scaling(StepLaw::gaussian(1.0), ns, 300000, 10, 2);
        double lo = 1e9, hi = 0.0;
        for (const auto& e : s.stay_nonnegative) {
            lo = std::min(lo, e.mean);
            hi = std::max(hi, e.mean);
        }
        INFO("plateau " << lo << " .. " << hi);
        CHECK((hi - lo) / lo < 0.10);
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const auto& a = s.stay_nonnegative[i];
            const auto& b = s.stay_nonpositive[i];
            CHECK(std::abs(a.mean - b.mean) <=
                  3.0 * std::sqrt(a.se * a.se + b.se * b.se));
        }
    }
}

TEST_CASE("h-transform sampling") {
    SECTION("lattice from 0: the first step is forced up") {
        const auto table = lattice_exact_renewal(40.0);
        Rng rng(11);
        for (int i = 0; i < 500; ++i) {
            const auto path = h_transform_sample(StepLaw::lattice(), table, 0.0, 1, rng);
            CHECK(path[1] == 1.0);
        }
    }
    SECTION("lattice N = 3 law matches exact enumeration") {
        const auto table = lattice_exact_renewal(40.0);
        const auto exact = oracles::lattice_h_transform_law(0, 3);
        REQUIRE(exact.size() == 2);
        CHECK(exact.at(1) == Catch::Approx(0.5));
        CHECK(exact.at(3) == Catch::Approx(0.5));
        Rng rng(12);
        long ones = 0;
        const long draws = 100000;
        for (long i = 0; i < draws; ++i) {
            const auto path = h_transform_sample(StepLaw::lattice(), table, 0.0, 3, rng);
            REQUIRE((path[3] == 1.0 || path[3] == 3.0));
            ones += path[3] == 1.0;
        }
        CHECK(std::abs(ones / static_cast<double>(draws) - 0.5) <=
              4.0 * std::sqrt(0.25 / static_cast<double>(draws)));
    }
    SECTION("lattice N = 6 total variation against enumeration") {
        const auto table = lattice_exact_renewal(40.0);
        const auto exact = oracles::lattice_h_transform_law(0, 6);
        std::map<int, double> freq;
        Rng rng(13);
        const long draws = 200000;
        for (long i = 0; i < draws; ++i) {
            const auto path = h_transform_sample(StepLaw::lattice(), table, 0.0, 6, rng);
            freq[static_cast<int>(path[6])] += 1.0 / static_cast<double>(draws);
        }
        double tv = 0.0;
        for (const auto& [k, p] : exact) tv += std::abs(freq[k] - p);
        CHECK(0.5 * tv < 0.02);
    }
    SECTION("paths never go negative") {
        std::vector<double> grid;
        for (double x = 0.0; x <= 30.0; x += 2.5) grid.push_back(x);
        const auto table = renewal_estimate(StepLaw::gaussian(1.0), grid, 800, 1000000, 14, 2);
        Rng rng(15);
        for (int i = 0; i < 50; ++i) {
            const auto path = h_transform_sample(StepLaw::gaussian(1.0), table, 0.5, 200, rng);
            for (double v : path) CHECK(v >= 0.0);
        }
    }
    SECTION("gaussian endpoint approaches the Bessel-3 marginal") {
        std::vector<double> grid;
        for (double x = 0.0; x <= 40.0; x += 2.5) grid.push_back(x);
        const auto table = renewal_estimate(StepLaw::gaussian(1.0), grid, 1500, 4000000, 16, 2);
        const long draws = 10000;
        const long n = 4096;
        std::vector<double> endpoints(static_cast<std::size_t>(draws));
        parallel_for(static_cast<std::size_t>(draws), 2, [&](std::size_t i) {
            Rng rng(derive_stream(17, i));
            const auto path = h_transform_sample(StepLaw::gaussian(1.0), table, 0.0, n, rng);
            endpoints[i] = path.back() / std::sqrt(static_cast<double>(n));
        });
        // Bessel-3 endpoint CDF: erf(y / sqrt 2) - sqrt(2/pi) y exp(-y^2 / 2).
        const double d = ks_distance_to_cdf(endpoints, [](double y) {
            return y <= 0.0 ? 0.0
                            : std::erf(y / std::sqrt(2.0)) -
                                  std::sqrt(2.0 / 3.14159265358979323846) * y *
                                      std::exp(-0.5 * y * y);
        });
        INFO("KS distance " << d);
        CHECK(d < 0.05);
    }
}

TEST_CASE("harmonicity of the renewal function") {
    SECTION("lattice, exact for N <= 12") {
        for (int x : {0, 1, 2, 5}) {
            for (int n : {1, 4, 12}) {
                CHECK(oracles::lattice_harmonicity_expectation(x, n) ==
                      Catch::Approx(static_cast<double>(x) + 1.0).margin(1e-12));
            }
        }
    }
    SECTION("gaussian, Monte Carlo") {
        std::vector<double> grid;
        for (double x = 0.0; x <= 30.0; x += 2.5) grid.push_back(x);
        const auto table = renewal_estimate(StepLaw::gaussian(1.0), grid, 3000, 1000000, 18, 2);
        const double x = 2.5;
        const long n = 64, replicas = 200000;
        std::vector<double> vals(static_cast<std::size_t>(replicas));
        parallel_for(static_cast<std::size_t>(replicas), 2, [&](std::size_t r) {
            Rng rng(derive_stream(19, r));
            double s = 0.0, lo = 0.0;
            for (long k = 0; k < n; ++k) {
                s += rng.normal();
                lo = std::min(lo, s);
            }
            vals[r] = lo >= -x ? renewal_value_minus(table, x + s) : 0.0;
        });
        const auto lhs = mc_estimate(vals);
        const double rhs = renewal_value_minus(table, x);
        const double table_se = table.v_minus[1].se;
        INFO("lhs " << lhs.mean << " +- " << lhs.se << " rhs " << rhs);
        CHECK(std::abs(lhs.mean - rhs) <=
              4.0 * std::sqrt(lhs.se * lhs.se + table_se * table_se));
    }
}

TEST_CASE("ballot-type bound") {
    const std::vector<long> ns{64, 256, 1024};
    const auto res =
        ballot_check(StepLaw::gaussian(1.0), ns, 1.0, 1.0, 0.0, 2.0, 0.3, 400000, 20, 2);
    double lo = 1e18, hi = 0.0;
    for (const auto& e : res.scaled_prob) {
        lo = std::min(lo, e.mean);
        hi = std::max(hi, e.mean);
        CHECK(e.mean > 0.0);
    }
    const double max_ratio = testutil::thresholds()["ballot_max_over_min"].get<double>();
    INFO("scaled probabilities " << lo << " .. " << hi);
    CHECK(hi / lo < max_ratio);

    SECTION("monotone in the window width under shared randomness") {
        const std::vector<long> one{256};
        const auto narrow =
            ballot_check(StepLaw::gaussian(1.0), one, 1.0, 0.0, 0.0, 1.0, 0.3, 200000, 21, 2);
        const auto wide =
            ballot_check(StepLaw::gaussian(1.0), one, 1.0, 0.0, 0.0, 3.0, 0.3, 200000, 21, 2);
        CHECK(narrow.scaled_prob[0].mean <= wide.scaled_prob[0].mean);
    }
    SECTION("an empty interval has probability zero for continuous steps") {
        const std::vector<long> one{64};
        const auto res0 =
            ballot_check(StepLaw::gaussian(1.0), one, 1.0, 1.0, 1.0, 1.0, 0.3, 50000, 22, 2);
        CHECK(res0.scaled_prob[0].mean == 0.0);
    }
}

TEST_CASE("conditioned walk converges to the meander") {
    const auto step = StepLaw::gaussian(1.0);
    SECTION("constants are exact") {
        const auto res = meander_limit_check(step, 256, PathFunctional::constant(1.0), 500, 23, 2);
        CHECK(res.lhs.mean == 1.0);
        CHECK(res.rhs.mean == 1.0);
    }
    SECTION("endpoint mean is the Rayleigh mean sqrt(pi/2)") {
        const auto res =
            meander_limit_check(step, 1024, PathFunctional::eval_at(1.0), 4000, 24, 2);
        const double rayleigh_mean = std::sqrt(3.14159265358979323846 / 2.0);
        CHECK(rayleigh_mean == Catch::Approx(1.2533141).epsilon(1e-7));
        CHECK(std::abs(res.lhs.mean - rayleigh_mean) <= 4.0 * res.lhs.se);
        CHECK(std::abs(res.z) < 4.0);
    }
    SECTION("running maximum agrees across the two samplers") {
        const auto res = meander_limit_check(step, 1024, PathFunctional::max(), 4000, 25, 2);
        CHECK(std::abs(res.z) < 4.0);
    }
}
