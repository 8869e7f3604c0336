#pragma once

// Small statistics toolkit: compensated and pairwise summation, streaming
// moment accumulation, Kolmogorov-Smirnov distances, rank correlation and a
// few quantile helpers used by the verification campaigns.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "brwlab/rng.hpp"

namespace brwlab {

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
    long count = 0;
};

// Welford accumulator.
class RunningStat {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    long count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double sd() const { return std::sqrt(variance()); }
    double se() const { return n_ > 0 ? sd() / std::sqrt(static_cast<double>(n_)) : 0.0; }
    McEstimate estimate() const { return {mean(), se(), n_}; }

private:
    long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline McEstimate mc_estimate(std::span<const double> xs) {
    RunningStat s;
    for (double x : xs) s.add(x);
    return s.estimate();
}

// Neumaier compensated sum.
inline double compensated_sum(std::span<const double> xs) {
    double sum = 0.0, c = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            c += (sum - t) + x;
        else
            c += (x - t) + sum;
        sum = t;
    }
    return sum + c;
}

// Pairwise reduction in a fixed tree order; the result is independent of how
// the input was produced (worker count, chunking), which the determinism
// contract relies on.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

// log(sum(exp(x_i))) with max shift; -inf on empty input.
inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0, c = 0.0;
    for (double x : xs) {
        const double e = std::exp(x - m);
        const double t = s + e;
        c += (s >= e) ? (s - t) + e : (e - t) + s;
        s = t;
    }
    return m + std::log(s + c);
}

inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
    // Acklam's rational approximation, |rel err| < 1.15e-9.
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > phigh) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Wilson-Hilferty chi-square quantile; adequate for test gating at the
// degrees of freedom we use (< 100).
inline double chi_square_quantile(double p, int df) {
    const double z = normal_quantile(p);
    const double k = static_cast<double>(df);
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

template <typename Cdf>
double ks_distance_to_cdf(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

// Asymptotic two-sample KS critical value at level alpha.
inline double ks_two_sample_critical(double alpha, std::size_t n, std::size_t m) {
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c * std::sqrt((static_cast<double>(n) + static_cast<double>(m)) /
                         (static_cast<double>(n) * static_cast<double>(m)));
}

struct KsWithCi {
    double distance = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Percentile bootstrap CI (resampling both sides).
inline KsWithCi ks_two_sample_bootstrap(const std::vector<double>& a,
                                        const std::vector<double>& b, int resamples,
                                        Rng& rng) {
    KsWithCi out;
    out.distance = ks_two_sample(a, b);
    std::vector<double> ds(static_cast<std::size_t>(resamples));
    std::vector<double> ra(a.size()), rb(b.size());
    for (int r = 0; r < resamples; ++r) {
        for (auto& x : ra) x = a[rng.below(a.size())];
        for (auto& x : rb) x = b[rng.below(b.size())];
        ds[static_cast<std::size_t>(r)] = ks_two_sample(ra, rb);
    }
    std::sort(ds.begin(), ds.end());
    const auto lo = static_cast<std::size_t>(0.025 * (static_cast<double>(ds.size()) - 1));
    const auto hi = static_cast<std::size_t>(0.975 * (static_cast<double>(ds.size()) - 1));
    out.ci_low = ds[lo];
    out.ci_high = ds[hi];
    return out;
}

inline std::vector<double> ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return xs[i] < xs[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_rho: need two equal-length samples");
    const auto rx = ranks(x), ry = ranks(y);
    RunningStat sx, sy;
    for (double v : rx) sx.add(v);
    for (double v : ry) sy.add(v);
    double cov = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i)
        cov += (rx[i] - sx.mean()) * (ry[i] - sy.mean());
    cov /= static_cast<double>(rx.size() - 1);
    const double denom = sx.sd() * sy.sd();
    return denom > 0.0 ? cov / denom : 0.0;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median: empty sample");
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    double hi = xs[mid];
    if (xs.size() % 2 == 1) return hi;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid) - 1, xs.end());
    return 0.5 * (xs[mid - 1] + hi);
}

// z-score of the difference of two independent estimates.
inline double z_score(const McEstimate& a, const McEstimate& b) {
    const double se = std::sqrt(a.se * a.se + b.se * b.se);
    if (se == 0.0) return a.mean == b.mean ? 0.0 : std::numeric_limits<double>::infinity();
    return (a.mean - b.mean) / se;
}

// Adaptive Simpson quadrature; used by analytic oracles.
namespace detail {
template <typename F>
double simpson(F&& f, double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}
template <typename F>
double adapt(F&& f, double a, double b, double fa, double fm, double fb, double whole,
             double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <typename F>
double integrate(F&& f, double a, double b, double tol = 1e-12, int max_depth = 40) {
    // Seed the adaptive recursion with 32 panels; a single Simpson estimate
    // over a wide interval can agree with its refinement by accident and
    // stop the subdivision too early.
    const int panels = 32;
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        const double lo = a + i * h, hi = i + 1 == panels ? b : a + (i + 1) * h;
        const double m = 0.5 * (lo + hi);
        const double fa = f(lo), fm = f(m), fb = f(hi);
        total += detail::adapt(f, lo, hi, fa, fm, fb, detail::simpson(f, lo, hi, fa, fm, fb),
                               tol / panels, max_depth);
    }
    return total;
}

}  // namespace brwlab
