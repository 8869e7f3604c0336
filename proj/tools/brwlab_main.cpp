// Command-line front end: every sampler and verification campaign behind one
// batch binary. Outputs are UTF-8 CSV/JSON with LF endings and
// 17-significant-digit reals; a header comment names the statement being
// exercised and the hash of the fully-resolved configuration, so identical
// configurations produce byte-identical files. With --gate, statistical
// checks drive the exit status.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "brwlab/brwlab.hpp"

using namespace brwlab;
using nlohmann::json;

namespace {

struct Common {
    std::string law = "binary_gaussian";
    double q = 0.25;
    std::uint64_t seed = 0;
    unsigned workers = 2;
    std::string out_dir = ".";
    bool gate = false;
};

void add_law_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--law", c.law, "offspring law: binary_gaussian | bernoulli_binary")
        ->check(CLI::IsMember({"binary_gaussian", "bernoulli_binary"}));
    cmd->add_option("--q", c.q, "extinction probability for bernoulli_binary (in [0, 1/2))");
}

void add_run_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "master seed")->required();
    cmd->add_option("--workers", c.workers, "worker threads");
    cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_flag("--gate", c.gate, "nonzero exit when a statistical gate fails");
}

std::string out_path(const Common& c, const std::string& name) {
    std::filesystem::create_directories(c.out_dir);
    return (std::filesystem::path(c.out_dir) / name).string();
}

PathFunctional parse_functional(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.empty()) throw CLI::ValidationError("functional", "empty functional spec");
    const auto arg = [&](std::size_t i) {
        if (i >= parts.size())
            throw CLI::ValidationError("functional", "missing argument in " + spec);
        return std::stod(parts[i]);
    };
    if (parts[0] == "const") return PathFunctional::constant(arg(1));
    if (parts[0] == "eval_at") return PathFunctional::eval_at(arg(1));
    if (parts[0] == "max") return PathFunctional::max();
    if (parts[0] == "time_avg") return PathFunctional::time_average();
    if (parts[0] == "soft_thr") return PathFunctional::soft_threshold(arg(1), arg(2), arg(3));
    throw CLI::ValidationError("functional", "unknown functional kind: " + parts[0]);
}

StepLaw parse_step(const std::string& name, double variance) {
    if (name == "lattice") return StepLaw::lattice();
    if (name == "gaussian") return StepLaw::gaussian(variance);
    throw CLI::ValidationError("step", "unknown step law: " + name);
}

std::vector<double> parse_reals(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<long> parse_longs(const std::string& csv) {
    std::vector<long> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
}

std::string config_hash(const std::string& canonical) {
    return hash_hex(fnv1a64(canonical));
}

void write_json(const Common& c, const std::string& name, const json& j) {
    std::ofstream os(out_path(c, name), std::ios::binary);
    os << j.dump(2) << "\n";
}

int gate_status(const Common& c, bool ok, const std::string& what) {
    if (ok) {
        std::printf("[gate] %s: pass\n", what.c_str());
        return 0;
    }
    std::printf("[gate] %s: FAIL\n", what.c_str());
    return c.gate ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching random walk Gibbs-measure laboratory"};
    app.require_subcommand(1);

    int exit_code = 0;

    // ------------------------------------------------------------------ simulate
    {
        auto c = std::make_shared<Common>();
        auto n = std::make_shared<int>(10);
        auto cap = std::make_shared<std::int64_t>(kDefaultNodeCap);
        auto* cmd = app.add_subcommand("simulate", "forward population simulation, columnar export");
        add_law_options(cmd, *c);
        add_run_options(cmd, *c);
        cmd->add_option("--n", *n, "generations")->required();
        cmd->add_option("--cap", *cap, "node cap");
        cmd->callback([=, &exit_code]() {
            const auto law = make_law(c->law, c->q);
            const auto tree = simulate(law, *n, c->seed, *cap);
            const std::string cfg = "cmd=simulate,law=" + c->law + ",q=" + format_real(c->q) +
                                    ",n=" + std::to_string(*n) + ",seed=" + std::to_string(c->seed);
            std::ofstream os(out_path(*c, "arena.csv"), std::ios::binary);
            os << "# statement: forward simulation of the branching population\n";
            os << "# config: " << cfg << " hash=" << config_hash(cfg) << "\n";
            export_arena(tree, os);
            std::printf("wrote %s (%zu nodes)\n", out_path(*c, "arena.csv").c_str(),
                        tree.node_count());
            exit_code = 0;
        });
    }

    // --------------------------------------------------------------- martingales
    {
        auto c = std::make_shared<Common>();
        auto n = std::make_shared<int>(10);
        auto beta = std::make_shared<double>(2.0);
        auto replicas = std::make_shared<long>(10000);
        auto* cmd = app.add_subcommand("martingales", "additive/derivative martingale means");
        add_law_options(cmd, *c);
        add_run_options(cmd, *c);
        cmd->add_option("--n", *n)->required();
        cmd->add_option("--beta", *beta);
        cmd->add_option("--replicas", *replicas);
        cmd->callback([=, &exit_code]() {
            const auto law = make_law(c->law, c->q);
            RunningStat w, z;
            for (long r = 0; r < *replicas; ++r) {
                const auto tree =
                    simulate(law, *n, derive_stream(c->seed, static_cast<std::uint64_t>(r)));
                const auto m = martingales(tree, *n, *beta);
                w.add(m.w_n_1);
                z.add(m.z_n);
            }
            const std::string cfg = "cmd=martingales,law=" + c->law + ",q=" + format_real(c->q) +
                                    ",n=" + std::to_string(*n) + ",beta=" + format_real(*beta) +
                                    ",replicas=" + std::to_string(*replicas) +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "martingales.csv"));
            csv.comment("statement: additive and derivative martingale means are (1, 0)");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("quantity,mean,se,replicas");
            csv.row("W_n_1_minus_1", w.mean() - 1.0, w.se(), w.count());
            csv.row("Z_n", z.mean(), z.se(), z.count());
            csv.write();
            std::printf("E[W] - 1 = %.6g +- %.2g, E[Z] = %.6g +- %.2g\n", w.mean() - 1.0,
                        w.se(), z.mean(), z.se());
            const bool ok =
                std::abs(w.mean() - 1.0) <= 3.0 * w.se() && std::abs(z.mean()) <= 3.0 * z.se();
            exit_code = gate_status(*c, ok, "martingale means within 3 se");
        });
    }

    // --------------------------------------------------------------- many-to-one
    {
        auto c = std::make_shared<Common>();
        auto n = std::make_shared<int>(10);
        auto replicas = std::make_shared<long>(100000);
        auto gname = std::make_shared<std::string>("positivity");
        auto mode = std::make_shared<std::string>("tilted");
        auto* cmd =
            app.add_subcommand("many-to-one", "population sum vs weighted single-walk value");
        add_law_options(cmd, *c);
        add_run_options(cmd, *c);
        cmd->add_option("--n", *n)->required();
        cmd->add_option("--replicas", *replicas);
        cmd->add_option("--g", *gname, "test function: one | last | positivity")
            ->check(CLI::IsMember({"one", "last", "positivity"}));
        cmd->add_option("--mode", *mode, "walk-side estimator: tilted | direct")
            ->check(CLI::IsMember({"tilted", "direct"}));
        cmd->callback([=, &exit_code]() {
            const auto law = make_law(c->law, c->q);
            WalkFunctional g;
            g.kind = *gname == "one"    ? WalkFunctional::Kind::One
                     : *gname == "last" ? WalkFunctional::Kind::Last
                                        : WalkFunctional::Kind::SmoothedPositivity;
            const auto m = *mode == "direct" ? ManyToOneMode::Direct : ManyToOneMode::Tilted;
            const auto res = many_to_one_check(law, *n, g, *replicas, c->seed, m, c->workers);
            const std::string cfg = "cmd=many-to-one,law=" + c->law + ",q=" + format_real(c->q) +
                                    ",n=" + std::to_string(*n) + ",g=" + *gname + ",mode=" +
                                    *mode + ",replicas=" + std::to_string(*replicas) +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "many_to_one.csv"));
            csv.comment("statement: population sum vs weighted single-walk expectation");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("side,mean,se,replicas");
            csv.row("tree", res.tree_side.mean, res.tree_side.se, res.tree_side.count);
            csv.row("walk", res.walk_side.mean, res.walk_side.se, res.walk_side.count);
            csv.row("z", res.z, 0.0, res.tree_side.count);
            csv.write();
            std::printf("tree %.6g +- %.2g | walk %.6g +- %.2g | z = %.3f\n",
                        res.tree_side.mean, res.tree_side.se, res.walk_side.mean,
                        res.walk_side.se, res.z);
            exit_code = gate_status(*c, std::abs(res.z) < 4.0, "many-to-one |z| < 4");
        });
    }

    // ------------------------------------------------------------------- overlap
    {
        auto c = std::make_shared<Common>();
        auto n = std::make_shared<int>(20);
        auto beta = std::make_shared<double>(2.0);
        auto replicas = std::make_shared<long>(200);
        auto pairs = std::make_shared<long>(48);
        auto tgrid = std::make_shared<std::string>("0.25,0.375,0.5,0.625,0.75");
        auto* cmd = app.add_subcommand(
            "overlap", "pair split probabilities vs the Poisson-Dirichlet overlap level");
        add_law_options(cmd, *c);
        add_run_options(cmd, *c);
        cmd->add_option("--n", *n);
        cmd->add_option("--beta", *beta);
        cmd->add_option("--replicas", *replicas);
        cmd->add_option("--pairs", *pairs, "pairs per replica");
        cmd->add_option("--t-grid", *tgrid, "comma-separated thresholds in (0,1)");
        cmd->callback([=, &exit_code]() {
            const auto law = make_law(c->law, c->q);
            const auto ts = parse_reals(*tgrid);
            const auto rep = overlap_step_report(law, *n, *beta, ts, *replicas, *pairs, c->seed,
                                                 c->workers);
            const std::string cfg = "cmd=overlap,law=" + c->law + ",q=" + format_real(c->q) +
                                    ",n=" + std::to_string(*n) + ",beta=" + format_real(*beta) +
                                    ",replicas=" + std::to_string(*replicas) + ",pairs=" +
                                    std::to_string(*pairs) + ",t=" + *tgrid +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "overlap.csv"));
            csv.comment(
                "statement: two-draw genealogical split probabilities against the "
                "Poisson-Dirichlet overlap level");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("t,split_prob,se,limit_split,limit_se,n,beta,replicas");
            for (std::size_t i = 0; i < ts.size(); ++i)
                csv.row(ts[i], rep.brw.split_prob[i].mean, rep.brw.split_prob[i].se,
                        rep.limit_split.mean, rep.limit_split.se, *n, *beta, *replicas);
            csv.write();
            CsvWriter hist(out_path(*c, "mrca_histogram.csv"));
            hist.comment("statement: most-recent-common-ancestor depth over pair draws");
            hist.comment("config: " + cfg + " hash=" + config_hash(cfg));
            hist.header("bin_low,bin_high,frequency");
            const double width = 1.0 / static_cast<double>(rep.brw.mrca_histogram.size());
            for (std::size_t b = 0; b < rep.brw.mrca_histogram.size(); ++b)
                hist.row(b * width, (b + 1) * width, rep.brw.mrca_histogram[b]);
            hist.write();
            std::printf("flatness %.4f | limit %.4f +- %.2g\n", rep.flatness,
                        rep.limit_split.mean, rep.limit_split.se);
            double mid = rep.brw.split_prob[ts.size() / 2].mean;
            for (std::size_t i = 0; i < ts.size(); ++i)
                if (std::abs(ts[i] - 0.5) < 1e-9) mid = rep.brw.split_prob[i].mean;
            const bool ok = std::abs(mid - 1.0 / *beta) <= 0.1;
            exit_code = gate_status(*c, ok, "annealed split level within 0.1 of 1/beta");
        });
    }

    // ------------------------------------------------------------ laplace-profile
    {
        auto c = std::make_shared<Common>();
        auto n = std::make_shared<int>(20);
        auto beta = std::make_shared<double>(2.0);
        auto replicas = std::make_shared<long>(2000);
        auto fspec = std::make_shared<std::string>("const:1");
        auto xgrid = std::make_shared<std::string>("");
        auto margin = std::make_shared<double>(kDefaultPlateauMargin);
        auto* cmd = app.add_subcommand("laplace-profile",
                                       "scaled Laplace-tail plateau of the partition sum");
        add_law_options(cmd, *c);
        add_run_options(cmd, *c);
        cmd->add_option("--n", *n);
        cmd->add_option("--beta", *beta);
        cmd->add_option("--replicas", *replicas);
        cmd->add_option("--F", *fspec, "functional, e.g. const:1 | max | eval_at:0.5");
        cmd->add_option("--x-grid", *xgrid, "comma-separated x values (default: 4-point window)");
        cmd->add_option("--margin", *margin, "window margin A");
        cmd->callback([=, &exit_code]() {
            const auto law = make_law(c->law, c->q);
            const auto f = parse_functional(*fspec);
            std::vector<double> xs;
            if (xgrid->empty()) {
                const auto [lo, hi] = plateau_window(*n, *margin);
                for (int i = 0; i < 4; ++i) xs.push_back(lo + (hi - lo) * i / 3.0);
            } else {
                xs = parse_reals(*xgrid);
            }
            const auto prof =
                laplace_tail_profile(law, *n, *beta, f, xs, *replicas, c->seed, c->workers,
                                     *margin);
            const std::string cfg = "cmd=laplace-profile,law=" + c->law + ",q=" +
                                    format_real(c->q) + ",n=" + std::to_string(*n) + ",beta=" +
                                    format_real(*beta) + ",F=" + *fspec + ",replicas=" +
                                    std::to_string(*replicas) + ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "laplace_profile.csv"));
            csv.comment(
                "statement: scaled Laplace-tail profile plateau of the normalized partition "
                "sum");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("x,value,se,n,beta,functional");
            for (std::size_t i = 0; i < xs.size(); ++i)
                csv.row(xs[i], prof.values[i].mean, prof.values[i].se, *n, *beta, *fspec);
            csv.write();

            json j;
            j["functional"] = *fspec;
            j["relative_spread"] = prof.relative_spread;
            if (f.kind == PathFunctional::Kind::Constant && f.c == 1.0) {
                const auto campaign_grid = uniform_grid(*n);
                const PathFunctional fs[] = {f};
                const auto camp = run_tree_campaign(law, *n, *beta, fs, campaign_grid,
                                                    *replicas, c->seed, c->workers, false);
                const auto cb = c_beta_from_samples(camp.tilde[0], *beta, xs, *n);
                j["c_beta"] = {{"mean", cb.value.mean}, {"se", cb.value.se},
                               {"reliable", cb.reliable}};
                j["c_star_beta"] = c_star_beta(*beta, cb.value.mean);
                std::printf("C_beta = %.5g +- %.2g (spread %.3f%s)\n", cb.value.mean,
                            cb.value.se, cb.relative_spread,
                            cb.reliable ? "" : ", flagged unreliable");
            }
            j["config_hash"] = config_hash(cfg);
            write_json(*c, "laplace_profile.json", j);
            exit_code = gate_status(*c, prof.relative_spread <= 0.25,
                                    "plateau spread within 25%");
        });
    }

    // ------------------------------------------------------------ annealed-compare
    {
        auto c = std::make_shared<Common>();
        auto beta = std::make_shared<double>(2.0);
        auto samples = std::make_shared<long>(1000);
        auto fspec = std::make_shared<std::string>("eval_at:0.5");
        auto nlist = std::make_shared<std::string>("8,12,16,20");
        auto* cmd = app.add_subcommand(
            "annealed-compare", "Gibbs trajectory functional law vs the excursion mixture");
        add_law_options(cmd, *c);
        add_run_options(cmd, *c);
        cmd->add_option("--beta", *beta);
        cmd->add_option("--samples", *samples, "samples per side");
        cmd->add_option("--F", *fspec);
        cmd->add_option("--n-list", *nlist);
        cmd->callback([=, &exit_code]() {
            const auto law = make_law(c->law, c->q);
            const auto ns = parse_longs(*nlist);
            const auto f = parse_functional(*fspec);
            const auto cmp = annealed_functional_compare(law, ns, *beta, f, *samples, c->seed,
                                                         c->workers);
            const std::string cfg = "cmd=annealed-compare,law=" + c->law + ",q=" +
                                    format_real(c->q) + ",beta=" + format_real(*beta) + ",F=" +
                                    *fspec + ",n=" + *nlist + ",samples=" +
                                    std::to_string(*samples) + ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "annealed_compare.csv"));
            csv.comment(
                "statement: Gibbs trajectory functional law vs Poisson-Dirichlet excursion "
                "mixture");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("n,ks,ks_ci_low,ks_ci_high");
            for (std::size_t i = 0; i < ns.size(); ++i)
                csv.row(ns[i], cmp.ks[i].distance, cmp.ks[i].ci_low, cmp.ks[i].ci_high);
            csv.write();
            json j;
            j["spearman"] = cmp.spearman;
            j["brw_mean_deepest"] = {{"mean", cmp.brw_mean.mean}, {"se", cmp.brw_mean.se}};
            j["limit_mean"] = {{"mean", cmp.limit_mean.mean}, {"se", cmp.limit_mean.se}};
            j["first_moment_z"] = cmp.first_moment_z;
            j["config_hash"] = config_hash(cfg);
            write_json(*c, "annealed_compare.json", j);
            std::printf("spearman %.3f | first-moment z %.2f\n", cmp.spearman,
                        cmp.first_moment_z);
            exit_code = gate_status(*c, cmp.spearman <= 0.0 && std::abs(cmp.first_moment_z) < 4.0,
                                    "KS trend non-increasing and first moment within 4 se");
        });
    }

    // ----------------------------------------------------- excursion/meander sample
    for (const bool meander : {false, true}) {
        auto c = std::make_shared<Common>();
        auto m = std::make_shared<int>(512);
        auto count = std::make_shared<long>(8);
        auto* cmd = app.add_subcommand(meander ? "meander-sample" : "excursion-sample",
                                       meander ? "Brownian meander paths"
                                               : "normalised Brownian excursion paths");
        add_run_options(cmd, *c);
        cmd->add_option("--m", *m, "grid points");
        cmd->add_option("--count", *count, "number of paths");
        cmd->callback([=, &exit_code]() {
            const std::string name = meander ? "meander" : "excursion";
            const std::string cfg = "cmd=" + name + "-sample,m=" + std::to_string(*m) +
                                    ",count=" + std::to_string(*count) +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, name + "_paths.csv"));
            csv.comment(meander
                            ? "statement: Brownian meander paths (Rayleigh endpoint, Bessel-3 "
                              "bridge route)"
                            : "statement: normalised Brownian excursion paths (three-bridge "
                              "route)");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("sample,t,value");
            for (long s = 0; s < *count; ++s) {
                Rng rng(derive_stream(c->seed, static_cast<std::uint64_t>(s)));
                const auto path = meander ? sample_meander(*m, rng) : sample_excursion(*m, rng);
                for (std::size_t i = 0; i < path.times.size(); ++i)
                    csv.row(s, path.times[i], path.values[i]);
            }
            csv.write();
            std::printf("wrote %s\n", out_path(*c, name + "_paths.csv").c_str());
            exit_code = 0;
        });
    }

    // ----------------------------------------------------------------- pd-sample
    {
        auto c = std::make_shared<Common>();
        auto beta = std::make_shared<double>(2.0);
        auto tail = std::make_shared<double>(1e-3);
        auto count = std::make_shared<long>(8);
        auto* cmd = app.add_subcommand("pd-sample", "ranked Poisson-Dirichlet weights");
        add_run_options(cmd, *c);
        cmd->add_option("--beta", *beta);
        cmd->add_option("--tail-eps", *tail);
        cmd->add_option("--count", *count);
        cmd->callback([=, &exit_code]() {
            const std::string cfg = "cmd=pd-sample,beta=" + format_real(*beta) + ",tail_eps=" +
                                    format_real(*tail) + ",count=" + std::to_string(*count) +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "pd_weights.csv"));
            csv.comment(
                "statement: ranked Poisson-Dirichlet weights from unit Poisson arrivals");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("sample,k,weight,tail_bound");
            for (long s = 0; s < *count; ++s) {
                Rng rng(derive_stream(c->seed, static_cast<std::uint64_t>(s)));
                const auto pd = sample_poisson_dirichlet(*beta, *tail, rng);
                for (std::size_t k = 0; k < std::min<std::size_t>(pd.weights.size(), 64); ++k)
                    csv.row(s, k + 1, pd.weights[k], pd.tail_bound);
            }
            csv.write();
            std::printf("wrote %s\n", out_path(*c, "pd_weights.csv").c_str());
            exit_code = 0;
        });
    }

    // ------------------------------------------------------------------- renewal
    {
        auto c = std::make_shared<Common>();
        auto step = std::make_shared<std::string>("gaussian");
        auto variance = std::make_shared<double>(1.0);
        auto xmax = std::make_shared<double>(20.0);
        auto points = std::make_shared<int>(9);
        auto replicas = std::make_shared<long>(2000);
        auto horizon = std::make_shared<long>(1000000);
        auto* cmd = app.add_subcommand("renewal", "renewal functions from strict records");
        add_run_options(cmd, *c);
        cmd->add_option("--step", *step)->check(CLI::IsMember({"gaussian", "lattice"}));
        cmd->add_option("--variance", *variance);
        cmd->add_option("--x-max", *xmax);
        cmd->add_option("--points", *points);
        cmd->add_option("--replicas", *replicas);
        cmd->add_option("--horizon", *horizon);
        cmd->callback([=, &exit_code]() {
            const auto law = parse_step(*step, *variance);
            std::vector<double> grid;
            for (int i = 0; i < *points; ++i)
                grid.push_back(*xmax * i / (*points - 1.0));
            const auto t = renewal_estimate(law, grid, *replicas, *horizon, c->seed, c->workers);
            const std::string cfg = "cmd=renewal,step=" + *step + ",variance=" +
                                    format_real(*variance) + ",x_max=" + format_real(*xmax) +
                                    ",replicas=" + std::to_string(*replicas) + ",horizon=" +
                                    std::to_string(*horizon) + ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "renewal.csv"));
            csv.comment(
                "statement: descending/ascending renewal functions from strict-record counts");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.comment("slope_minus: " + format_real(t.slope_minus) +
                        " slope_plus: " + format_real(t.slope_plus));
            csv.header("x,v_minus,se_minus,v_plus,se_plus");
            for (std::size_t i = 0; i < grid.size(); ++i)
                csv.row(grid[i], t.v_minus[i].mean, t.v_minus[i].se, t.v_plus[i].mean,
                        t.v_plus[i].se);
            csv.write();
            std::printf("wrote %s\n", out_path(*c, "renewal.csv").c_str());
            exit_code = 0;
        });
    }

    // ---------------------------------------------------------- survival-scaling
    {
        auto c = std::make_shared<Common>();
        auto step = std::make_shared<std::string>("gaussian");
        auto variance = std::make_shared<double>(1.0);
        auto nlist = std::make_shared<std::string>("256,1024,4096");
        auto replicas = std::make_shared<long>(1000000);
        auto* cmd =
            app.add_subcommand("survival-scaling", "sqrt(n)-scaled one-sided survival constants");
        add_run_options(cmd, *c);
        cmd->add_option("--step", *step)->check(CLI::IsMember({"gaussian", "lattice"}));
        cmd->add_option("--variance", *variance);
        cmd->add_option("--n-list", *nlist);
        cmd->add_option("--replicas", *replicas);
        cmd->callback([=, &exit_code]() {
            const auto law = parse_step(*step, *variance);
            const auto ns = parse_longs(*nlist);
            const auto s = survival_scaling(law, ns, *replicas, c->seed, c->workers);
            const std::string cfg = "cmd=survival-scaling,step=" + *step + ",variance=" +
                                    format_real(*variance) + ",n=" + *nlist + ",replicas=" +
                                    std::to_string(*replicas) + ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "survival_scaling.csv"));
            csv.comment("statement: sqrt(n)-scaled one-sided survival constants");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("n,stay_nonnegative,se,stay_nonpositive,se2");
            for (std::size_t i = 0; i < ns.size(); ++i)
                csv.row(ns[i], s.stay_nonnegative[i].mean, s.stay_nonnegative[i].se,
                        s.stay_nonpositive[i].mean, s.stay_nonpositive[i].se);
            csv.write();

            json j;
            const double sigma = std::sqrt(law.sigma2());
            const auto& cm = s.stay_nonnegative.back();
            const auto& cp = s.stay_nonpositive.back();
            j["C_minus"] = {{"mean", cm.mean}, {"se", cm.se}};
            j["C_plus"] = {{"mean", cp.mean}, {"se", cp.se}};
            j["C_star"] = {{"mean", cp.mean / sigma}, {"se", cp.se / sigma}};
            const double c1 =
                cp.mean * cm.mean / sigma * std::sqrt(3.14159265358979323846 / 2.0);
            const double rel = std::sqrt(std::pow(cp.se / cp.mean, 2) +
                                         std::pow(cm.se / cm.mean, 2));
            j["C_1"] = {{"mean", c1}, {"se", c1 * rel}};
            j["config_hash"] = config_hash(cfg);
            write_json(*c, "constants.json", j);
            double lo = 1e300, hi = 0.0;
            for (const auto& e : s.stay_nonnegative) {
                lo = std::min(lo, e.mean);
                hi = std::max(hi, e.mean);
            }
            std::printf("plateau %.5g .. %.5g\n", lo, hi);
            exit_code = gate_status(*c, (hi - lo) / lo <= 0.10, "plateau within 10%");
        });
    }

    // ----------------------------------------------------------------- htransform
    {
        auto c = std::make_shared<Common>();
        auto step = std::make_shared<std::string>("gaussian");
        auto variance = std::make_shared<double>(1.0);
        auto x0 = std::make_shared<double>(0.0);
        auto n = std::make_shared<long>(256);
        auto count = std::make_shared<long>(4);
        auto* cmd =
            app.add_subcommand("htransform", "walk conditioned to stay nonnegative");
        add_run_options(cmd, *c);
        cmd->add_option("--step", *step)->check(CLI::IsMember({"gaussian", "lattice"}));
        cmd->add_option("--variance", *variance);
        cmd->add_option("--x0", *x0);
        cmd->add_option("--n", *n);
        cmd->add_option("--count", *count);
        cmd->callback([=, &exit_code]() {
            const auto law = parse_step(*step, *variance);
            RenewalTable table;
            if (law.kind == StepLaw::Kind::Lattice) {
                table =
                    lattice_exact_renewal(*x0 + 2.0 * std::sqrt(static_cast<double>(*n)) + 8.0);
            } else {
                std::vector<double> grid;
                const double xmax =
                    *x0 + 5.0 * std::sqrt(law.variance * static_cast<double>(*n));
                for (int i = 0; i <= 16; ++i) grid.push_back(xmax * i / 16.0);
                table = renewal_estimate(law, grid, 2000, 4000000,
                                         derive_stream(c->seed, 0xab), c->workers);
            }
            const std::string cfg = "cmd=htransform,step=" + *step + ",variance=" +
                                    format_real(*variance) + ",x0=" + format_real(*x0) + ",n=" +
                                    std::to_string(*n) + ",count=" + std::to_string(*count) +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "htransform_paths.csv"));
            csv.comment("statement: renewal-h-transform walk conditioned to stay nonnegative");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("sample,k,value");
            bool nonneg = true;
            for (long s = 0; s < *count; ++s) {
                Rng rng(derive_stream(c->seed, static_cast<std::uint64_t>(s)));
                const auto path = h_transform_sample(law, table, *x0, *n, rng);
                for (std::size_t k = 0; k < path.size(); ++k) {
                    csv.row(s, static_cast<long>(k), path[k]);
                    nonneg = nonneg && path[k] >= 0.0;
                }
            }
            csv.write();
            std::printf("wrote %s\n", out_path(*c, "htransform_paths.csv").c_str());
            exit_code = gate_status(*c, nonneg, "paths stay nonnegative");
        });
    }

    // --------------------------------------------------------------------- ballot
    {
        auto c = std::make_shared<Common>();
        auto step = std::make_shared<std::string>("gaussian");
        auto variance = std::make_shared<double>(1.0);
        auto nlist = std::make_shared<std::string>("64,256,1024");
        auto x = std::make_shared<double>(1.0);
        auto y = std::make_shared<double>(1.0);
        auto a = std::make_shared<double>(0.0);
        auto b = std::make_shared<double>(2.0);
        auto lambda = std::make_shared<double>(0.3);
        auto replicas = std::make_shared<long>(400000);
        auto* cmd = app.add_subcommand("ballot", "scaled corridor probabilities stay bounded");
        add_run_options(cmd, *c);
        cmd->add_option("--step", *step)->check(CLI::IsMember({"gaussian", "lattice"}));
        cmd->add_option("--variance", *variance);
        cmd->add_option("--n-list", *nlist);
        cmd->add_option("--x", *x);
        cmd->add_option("--y", *y);
        cmd->add_option("--a", *a);
        cmd->add_option("--b", *b);
        cmd->add_option("--lambda", *lambda);
        cmd->add_option("--replicas", *replicas);
        cmd->callback([=, &exit_code]() {
            const auto law = parse_step(*step, *variance);
            const auto ns = parse_longs(*nlist);
            const auto res =
                ballot_check(law, ns, *x, *y, *a, *b, *lambda, *replicas, c->seed, c->workers);
            const std::string cfg = "cmd=ballot,step=" + *step + ",n=" + *nlist + ",x=" +
                                    format_real(*x) + ",y=" + format_real(*y) + ",a=" +
                                    format_real(*a) + ",b=" + format_real(*b) + ",lambda=" +
                                    format_real(*lambda) + ",replicas=" +
                                    std::to_string(*replicas) + ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "ballot.csv"));
            csv.comment("statement: n^{3/2}-scaled ballot-type corridor probabilities");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("n,scaled_prob,se");
            double lo = 1e300, hi = 0.0;
            for (std::size_t i = 0; i < ns.size(); ++i) {
                csv.row(ns[i], res.scaled_prob[i].mean, res.scaled_prob[i].se);
                lo = std::min(lo, res.scaled_prob[i].mean);
                hi = std::max(hi, res.scaled_prob[i].mean);
            }
            csv.write();
            std::printf("scaled probabilities %.5g .. %.5g\n", lo, hi);
            exit_code = gate_status(*c, lo > 0.0 && hi / lo < 3.0, "max/min ratio below 3");
        });
    }

    // ---------------------------------------------------------------------- imhof
    {
        auto c = std::make_shared<Common>();
        auto phi = std::make_shared<std::string>("eval_at:1");
        auto t = std::make_shared<double>(1.0);
        auto replicas = std::make_shared<long>(100000);
        auto m = std::make_shared<int>(256);
        auto* cmd =
            app.add_subcommand("imhof", "meander vs weighted Bessel-3 functional identity");
        add_run_options(cmd, *c);
        cmd->add_option("--phi", *phi);
        cmd->add_option("--t", *t);
        cmd->add_option("--replicas", *replicas);
        cmd->add_option("--m", *m);
        cmd->callback([=, &exit_code]() {
            Rng rng(derive_stream(c->seed, 0x1f));
            const auto res = imhof_check(parse_functional(*phi), *t, *replicas, *m, rng);
            const std::string cfg = "cmd=imhof,phi=" + *phi + ",t=" + format_real(*t) +
                                    ",replicas=" + std::to_string(*replicas) + ",m=" +
                                    std::to_string(*m) + ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "imhof.csv"));
            csv.comment("statement: meander vs weighted Bessel-3 functional identity");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("side,mean,se");
            csv.row("meander", res.lhs.mean, res.lhs.se);
            csv.row("bessel", res.rhs.mean, res.rhs.se);
            csv.row("z", res.z, 0.0);
            csv.write();
            std::printf("meander %.6g +- %.2g | bessel %.6g +- %.2g | z = %.3f\n", res.lhs.mean,
                        res.lhs.se, res.rhs.mean, res.rhs.se, res.z);
            exit_code = gate_status(*c, std::abs(res.z) < 4.0, "identity |z| < 4");
        });
    }

    // ------------------------------------------------------------- gamma-identity
    {
        auto c = std::make_shared<Common>();
        auto g1 = std::make_shared<std::string>("eval_at:0.5");
        auto g2 = std::make_shared<std::string>("const:1");
        auto lambda = std::make_shared<double>(0.5);
        auto replicas = std::make_shared<long>(100000);
        auto m = std::make_shared<int>(256);
        auto* cmd = app.add_subcommand("gamma-identity",
                                       "excursion splice vs weighted meander-bridge pair");
        add_run_options(cmd, *c);
        cmd->add_option("--g1", *g1);
        cmd->add_option("--g2", *g2);
        cmd->add_option("--lambda", *lambda);
        cmd->add_option("--replicas", *replicas);
        cmd->add_option("--m", *m);
        cmd->callback([=, &exit_code]() {
            Rng rng(derive_stream(c->seed, 0x2f));
            const auto res = gamma_identity_check(parse_functional(*g1), parse_functional(*g2),
                                                  *lambda, *replicas, *m, rng);
            const std::string cfg = "cmd=gamma-identity,g1=" + *g1 + ",g2=" + *g2 + ",lambda=" +
                                    format_real(*lambda) + ",replicas=" +
                                    std::to_string(*replicas) + ",m=" + std::to_string(*m) +
                                    ",seed=" + std::to_string(c->seed);
            CsvWriter csv(out_path(*c, "gamma_identity.csv"));
            csv.comment("statement: excursion splice vs weighted meander-bridge pair identity");
            csv.comment("config: " + cfg + " hash=" + config_hash(cfg));
            csv.header("side,mean,se");
            csv.row("excursion_splice", res.lhs.mean, res.lhs.se);
            csv.row("meander_bridge", res.rhs.mean, res.rhs.se);
            csv.row("z", res.z, 0.0);
            csv.write();
            std::printf("splice %.6g +- %.2g | pair %.6g +- %.2g | z = %.3f\n", res.lhs.mean,
                        res.lhs.se, res.rhs.mean, res.rhs.se, res.z);
            exit_code = gate_status(*c, std::abs(res.z) < 4.0, "identity |z| < 4");
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return exit_code;
}
