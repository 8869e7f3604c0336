#pragma once

// Verification campaigns connecting branching-random-walk simulations to the
// limit objects: the Laplace-tail plateau of tilde-mu, annealed trajectory
// functional comparisons against the Poisson-Dirichlet excursion mixture,
// and the genealogical overlap step report. Campaigns are replica-parallel
// with per-replica streams; every estimate carries a standard error.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "brwlab/gibbs.hpp"
#include "brwlab/limits.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/rwalk.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/tree.hpp"

namespace brwlab {

struct WindowEmpty : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultPlateauMargin = 1.5;

// Admissible plateau window [A, (3/2) log n - A].
inline std::pair<double, double> plateau_window(int n, double margin = kDefaultPlateauMargin) {
    const double hi = 1.5 * std::log(static_cast<double>(n)) - margin;
    if (hi <= margin)
        throw WindowEmpty("plateau_window: (3/2) log n - A <= A for n = " + std::to_string(n));
    return {margin, hi};
}

// ---------------------------------------------------------------------------
// Tree campaigns: per replica, tilde-mu for each functional plus the
// generation-n martingale readout.
// ---------------------------------------------------------------------------

struct TreeCampaign {
    std::vector<std::vector<double>> tilde;  // [functional][replica]
    std::vector<double> z_n;                 // derivative martingale at n
    std::vector<double> w_n_1;
    long replicas = 0;
    int n = 0;
    double beta = 1.0;
};

inline TreeCampaign run_tree_campaign(const OffspringLaw& law, int n, double beta,
                                      std::span<const PathFunctional> functionals,
                                      std::span<const double> grid, long replicas,
                                      std::uint64_t seed, unsigned workers,
                                      bool survivors_only,
                                      std::int64_t node_cap = kDefaultNodeCap) {
    TreeCampaign c;
    c.replicas = replicas;
    c.n = n;
    c.beta = beta;
    c.tilde.assign(functionals.size(), std::vector<double>(static_cast<std::size_t>(replicas)));
    c.z_n.resize(static_cast<std::size_t>(replicas));
    c.w_n_1.resize(static_cast<std::size_t>(replicas));
    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t r) {
        TreeArena tree =
            survivors_only
                ? simulate_surviving(law, n, seed, r, node_cap)
                : simulate(law, n, derive_stream(seed, r, 0), node_cap);
        const auto mart = martingales(tree, n, beta);
        c.z_n[r] = mart.z_n;
        c.w_n_1[r] = mart.w_n_1;
        const auto tilde = tilde_mu_batch(tree, n, beta, law.sigma2, functionals, grid);
        for (std::size_t fi = 0; fi < functionals.size(); ++fi) c.tilde[fi][r] = tilde[fi];
    });
    return c;
}

// ---------------------------------------------------------------------------
// Laplace-tail profile: x -> (e^x / x) E[1 - exp(-e^{-beta x} tilde-mu(F))].
// ---------------------------------------------------------------------------

struct TailProfile {
    std::vector<double> x_grid;
    std::vector<McEstimate> values;
    double beta = 1.0;
    int n = 0;
    std::string functional;
    double relative_spread = 0.0;  // (max - min) / mean over the grid
};

inline double laplace_transform_term(double tilde, double beta, double x) {
    return 1.0 - std::exp(-std::exp(-beta * x) * tilde);
}

inline TailProfile profile_from_samples(std::span<const double> tilde_samples, double beta,
                                        int n, std::span<const double> x_grid,
                                        const std::string& fdesc) {
    TailProfile prof;
    prof.x_grid.assign(x_grid.begin(), x_grid.end());
    prof.beta = beta;
    prof.n = n;
    prof.functional = fdesc;
    for (double x : x_grid) {
        RunningStat s;
        for (double t : tilde_samples) s.add(laplace_transform_term(t, beta, x));
        const double factor = std::exp(x) / x;
        prof.values.push_back({factor * s.mean(), factor * s.se(), s.count()});
    }
    double lo = prof.values.front().mean, hi = lo, sum = 0.0;
    for (const auto& v : prof.values) {
        lo = std::min(lo, v.mean);
        hi = std::max(hi, v.mean);
        sum += v.mean;
    }
    const double mean = sum / static_cast<double>(prof.values.size());
    prof.relative_spread = mean != 0.0 ? (hi - lo) / mean : 0.0;
    return prof;
}

inline TailProfile laplace_tail_profile(const OffspringLaw& law, int n, double beta,
                                        const PathFunctional& f,
                                        std::span<const double> x_grid, long replicas,
                                        std::uint64_t seed, unsigned workers = 1,
                                        double margin = kDefaultPlateauMargin) {
    const auto [lo, hi] = plateau_window(n, margin);
    for (double x : x_grid)
        if (x < lo || x > hi)
            throw std::invalid_argument("laplace_tail_profile: x outside the admissible window");
    const auto grid = uniform_grid(n);
    const PathFunctional fs[] = {f};
    const TreeCampaign c =
        run_tree_campaign(law, n, beta, fs, grid, replicas, seed, workers, false);
    return profile_from_samples(c.tilde[0], beta, n, x_grid, f.describe());
}

// Ratio of two plateau transforms sharing the same replicas, with the
// paired delta-method standard error.
struct RatioEstimate {
    double ratio = 0.0;
    double se = 0.0;
};

inline RatioEstimate paired_plateau_ratio(std::span<const double> tilde_num,
                                          std::span<const double> tilde_den, double beta,
                                          double x) {
    if (tilde_num.size() != tilde_den.size() || tilde_num.empty())
        throw std::invalid_argument("paired_plateau_ratio: mismatched samples");
    const std::size_t n = tilde_num.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += laplace_transform_term(tilde_num[i], beta, x);
        mb += laplace_transform_term(tilde_den[i], beta, x);
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double va = 0.0, vb = 0.0, cab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = laplace_transform_term(tilde_num[i], beta, x) - ma;
        const double db = laplace_transform_term(tilde_den[i], beta, x) - mb;
        va += da * da;
        vb += db * db;
        cab += da * db;
    }
    const double denom = static_cast<double>(n - 1);
    va /= denom;
    vb /= denom;
    cab /= denom;
    RatioEstimate out;
    out.ratio = ma / mb;
    const double rel_var =
        va / (ma * ma) + vb / (mb * mb) - 2.0 * cab / (ma * mb);
    out.se = std::abs(out.ratio) * std::sqrt(std::max(rel_var, 0.0) / static_cast<double>(n));
    return out;
}

struct CBetaEstimate {
    McEstimate value;
    double relative_spread = 0.0;
    bool reliable = false;  // spread <= 25%
};

// Plateau average of the F = 1 profile. The per-replica average over the
// x-grid keeps the standard error honest under the strong cross-x
// correlation of shared replicas.
inline CBetaEstimate c_beta_from_samples(std::span<const double> tilde_one, double beta,
                                         std::span<const double> x_grid, int n) {
    RunningStat s;
    for (double t : tilde_one) {
        double acc = 0.0;
        for (double x : x_grid) acc += std::exp(x) / x * laplace_transform_term(t, beta, x);
        s.add(acc / static_cast<double>(x_grid.size()));
    }
    CBetaEstimate out;
    out.value = s.estimate();
    const TailProfile prof = profile_from_samples(tilde_one, beta, n, x_grid, "const(1)");
    out.relative_spread = prof.relative_spread;
    out.reliable = out.relative_spread <= 0.25;
    return out;
}

inline CBetaEstimate estimate_c_beta(const OffspringLaw& law, int n, double beta,
                                     std::span<const double> x_grid, long replicas,
                                     std::uint64_t seed, unsigned workers = 1) {
    const auto grid = uniform_grid(n);
    const PathFunctional fs[] = {PathFunctional::constant(1.0)};
    const TreeCampaign c =
        run_tree_campaign(law, n, beta, fs, grid, replicas, seed, workers, false);
    return c_beta_from_samples(c.tilde[0], beta, x_grid, n);
}

// ---------------------------------------------------------------------------
// Annealed trajectory comparison: samples of mu_{n,beta}(F) given survival
// against samples of the limit mixture sum_k p_k F(e_k).
// ---------------------------------------------------------------------------

struct AnnealedCompare {
    std::vector<long> n_list;
    std::vector<KsWithCi> ks;  // two-sample KS(mu_n sample, limit sample) per n
    double spearman = 0.0;     // rank correlation of KS distance against n
    McEstimate brw_mean;       // mean of mu at the deepest n
    McEstimate limit_mean;     // E[F(e)]
    double first_moment_z = 0.0;
    std::vector<double> limit_samples;
    std::vector<std::vector<double>> brw_samples;
};

inline AnnealedCompare annealed_functional_compare(const OffspringLaw& law,
                                                   std::span<const long> n_list, double beta,
                                                   const PathFunctional& f, long samples,
                                                   std::uint64_t seed, unsigned workers = 1,
                                                   int limit_grid_m = 512,
                                                   int bootstrap_resamples = 500) {
    AnnealedCompare out;
    out.n_list.assign(n_list.begin(), n_list.end());

    out.limit_samples.resize(static_cast<std::size_t>(samples));
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t r) {
        Rng rng(derive_stream(seed, r, 0x11a17));
        out.limit_samples[r] = limit_mixture_sample(beta, f, limit_grid_m, rng);
    });

    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        const int n = static_cast<int>(n_list[ni]);
        const auto grid = uniform_grid(n);
        const PathFunctional fs[] = {f, PathFunctional::constant(1.0)};
        const TreeCampaign c = run_tree_campaign(law, n, beta, fs, grid, samples,
                                                 derive_stream(seed, 0xb, ni), workers, true);
        std::vector<double> mu(static_cast<std::size_t>(samples));
        for (long r = 0; r < samples; ++r)
            mu[static_cast<std::size_t>(r)] =
                c.tilde[0][static_cast<std::size_t>(r)] / c.tilde[1][static_cast<std::size_t>(r)];
        Rng boot(derive_stream(seed, 0xb007, ni));
        out.ks.push_back(
            ks_two_sample_bootstrap(mu, out.limit_samples, bootstrap_resamples, boot));
        if (ni + 1 == n_list.size()) out.brw_mean = mc_estimate(mu);
        out.brw_samples.push_back(std::move(mu));
    }

    std::vector<double> ns(n_list.size()), ds(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        ns[i] = static_cast<double>(n_list[i]);
        ds[i] = out.ks[i].distance;
    }
    out.spearman = spearman_rho(ns, ds);

    // First-moment reduction: E[sum p_k F(e_k)] = E[F(e)].
    Rng rng(derive_stream(seed, 0xe1));
    out.limit_mean = excursion_functional_moment(f, 1.0, limit_grid_m,
                                                 std::max<long>(samples * 10, 20000), rng);
    out.first_moment_z = z_score(out.brw_mean, out.limit_mean);
    return out;
}

// ---------------------------------------------------------------------------
// Overlap step report: the BRW split-probability curve joined with the limit
// level E[1 - pi_beta] = 1/beta.
// ---------------------------------------------------------------------------

struct OverlapStepReport {
    OverlapReport brw;
    McEstimate limit_split;  // E[1 - pi_beta] from the Poisson-Dirichlet side
    double flatness = 0.0;   // max - min of the split curve over the mid window
};

inline OverlapStepReport overlap_step_report(const OffspringLaw& law, int n, double beta,
                                             std::span<const double> t_grid, long replicas,
                                             long pairs_per_replica, std::uint64_t seed,
                                             unsigned workers = 1, long pd_replicas = 20000,
                                             double tail_eps = 1e-3) {
    OverlapStepReport rep;
    rep.brw =
        overlap_estimate(law, n, beta, t_grid, replicas, pairs_per_replica, seed, workers);
    Rng rng(derive_stream(seed, 0x9d));
    const McEstimate pi = pd_overlap_moment(beta, pd_replicas, tail_eps, rng);
    rep.limit_split = {1.0 - pi.mean, pi.se, pi.count};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] < 0.25 - 1e-12 || t_grid[i] > 0.75 + 1e-12) continue;
        lo = std::min(lo, rep.brw.split_prob[i].mean);
        hi = std::max(hi, rep.brw.split_prob[i].mean);
    }
    rep.flatness = hi > lo ? hi - lo : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Laplace-functional linkage diagnostic: E[exp(-tilde-mu(F)) | survival]
// against E[exp(-C_beta Z E[F(e)^{1/beta}]) | Z > 0] with Z the derivative
// martingale at the deepest simulated generation. Reported with a combined
// standard-error band, not gated: the depth-n proxy for the martingale limit
// carries uncontrolled bias.
// ---------------------------------------------------------------------------

struct LinkageDiagnostic {
    McEstimate lhs;
    McEstimate rhs;
    double z = 0.0;
    double c_beta = 0.0;
    double excursion_moment = 0.0;  // E[F(e)^{1/beta}]
};

inline LinkageDiagnostic laplace_linkage_diagnostic(const TreeCampaign& c,
                                                    std::span<const double> tilde_f,
                                                    double c_beta, double f_moment) {
    RunningStat lhs, rhs;
    for (std::size_t r = 0; r < tilde_f.size(); ++r) {
        if (c.w_n_1[r] > 0.0) lhs.add(std::exp(-tilde_f[r]));
        if (c.z_n[r] > 0.0) rhs.add(std::exp(-c_beta * f_moment * c.z_n[r]));
    }
    LinkageDiagnostic out;
    out.lhs = lhs.estimate();
    out.rhs = rhs.estimate();
    out.z = z_score(out.lhs, out.rhs);
    out.c_beta = c_beta;
    out.excursion_moment = f_moment;
    return out;
}

// ---------------------------------------------------------------------------
// Fluctuation constants assembled from the survival scaling and the plateau.
// ---------------------------------------------------------------------------

struct ConstantsTable {
    McEstimate c_plus;   // sqrt(n) P(max <= 0) at the deepest n
    McEstimate c_minus;  // sqrt(n) P(min >= 0)
    McEstimate c_star;   // c_plus / sigma
    McEstimate c_1;      // c_plus c_minus / sigma * sqrt(pi/2)
    McEstimate c_beta;
    double beta = 0.0;
    double c_star_of_beta = 0.0;
};

inline ConstantsTable build_constants_table(const SurvivalScaling& scaling, double sigma2,
                                            const CBetaEstimate& cb, double beta) {
    ConstantsTable t;
    t.c_plus = scaling.stay_nonpositive.back();
    t.c_minus = scaling.stay_nonnegative.back();
    const double sigma = std::sqrt(sigma2);
    t.c_star = {t.c_plus.mean / sigma, t.c_plus.se / sigma, t.c_plus.count};
    const double c1 = t.c_plus.mean * t.c_minus.mean / sigma *
                      std::sqrt(3.14159265358979323846 / 2.0);
    const double rel = std::sqrt(std::pow(t.c_plus.se / t.c_plus.mean, 2) +
                                 std::pow(t.c_minus.se / t.c_minus.mean, 2));
    t.c_1 = {c1, std::abs(c1) * rel, std::min(t.c_plus.count, t.c_minus.count)};
    t.c_beta = cb.value;
    t.beta = beta;
    t.c_star_of_beta = c_star_beta(beta, cb.value.mean);
    return t;
}

}  // namespace brwlab
