#pragma once

// Offspring point-process laws, analytically calibrated so that
//   E[ sum_children exp(-V) ] = 1   and   E[ sum_children V exp(-V) ] = 0
// hold exactly. Only calibrated laws are constructible; everything downstream
// assumes these two identities.
//
// Both laws scatter either 0 or 2 children with i.i.d. Gaussian
// displacements. For X ~ Normal(m, s2):
//   E[exp(-X)]     = exp(-m + s2/2)
//   E[X exp(-X)]   = (m - s2) exp(-m + s2/2)
//   E[X^2 exp(-X)] = ((m - s2)^2 + s2) exp(-m + s2/2)
// so m = s2 kills the drift term, and the mass identity fixes s2.

#include <cmath>
#include <stdexcept>
#include <string>

#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

enum class LawKind { BinaryGaussian, BernoulliBinaryGaussian };

struct OffspringLaw {
    LawKind kind = LawKind::BinaryGaussian;
    double extinction_prob = 0.0;  // q; 0 for the always-binary law
    double mean = 0.0;             // m, displacement mean
    double variance = 0.0;         // s2, displacement variance
    double sigma2 = 0.0;           // E[ sum V^2 exp(-V) ]

    double mean_brood_size() const { return 2.0 * (1.0 - extinction_prob); }

    // Closed-form residuals of the two calibration identities.
    double mass_residual() const {
        return mean_brood_size() * std::exp(-mean + 0.5 * variance) - 1.0;
    }
    double drift_residual() const {
        return mean_brood_size() * (mean - variance) * std::exp(-mean + 0.5 * variance);
    }

    // Draws one brood; returns the child count (0 or 2) and writes the child
    // displacements into out[0..count).
    int sample_brood(Rng& rng, double out[2]) const {
        if (kind == LawKind::BernoulliBinaryGaussian && rng.u01() < extinction_prob) return 0;
        const double sd = std::sqrt(variance);
        out[0] = rng.normal(mean, sd);
        out[1] = rng.normal(mean, sd);
        return 2;
    }

    std::string name() const {
        return kind == LawKind::BinaryGaussian ? "binary_gaussian" : "bernoulli_binary";
    }
};

// Two children almost surely: m = s2 = 2 ln 2.
inline OffspringLaw calibrate_binary_gaussian() {
    OffspringLaw law;
    law.kind = LawKind::BinaryGaussian;
    law.extinction_prob = 0.0;
    law.mean = law.variance = 2.0 * std::log(2.0);
    law.sigma2 = law.variance;
    return law;
}

// No children with probability q, else two; requires q < 1/2 so that the
// calibrated displacement variance s2 = 2 ln(2(1-q)) stays positive.
inline OffspringLaw calibrate_bernoulli_binary(double q) {
    if (!(q >= 0.0 && q < 0.5))
        throw std::invalid_argument(
            "calibrate_bernoulli_binary: need q in [0, 1/2), got q=" + std::to_string(q));
    OffspringLaw law;
    law.kind = q == 0.0 ? LawKind::BinaryGaussian : LawKind::BernoulliBinaryGaussian;
    law.extinction_prob = q;
    law.mean = law.variance = 2.0 * std::log(2.0 * (1.0 - q));
    law.sigma2 = law.variance;
    return law;
}

inline OffspringLaw make_law(const std::string& name, double q) {
    if (name == "binary_gaussian") return calibrate_binary_gaussian();
    if (name == "bernoulli_binary") return calibrate_bernoulli_binary(q);
    throw std::invalid_argument("unknown offspring law: " + name);
}

struct BoundaryResiduals {
    McEstimate mass;   // estimate of E[sum exp(-V)] - 1
    McEstimate drift;  // estimate of E[sum V exp(-V)]
};

// Monte Carlo check of the calibration identities on single broods.
inline BoundaryResiduals verify_boundary(const OffspringLaw& law, long replicas,
                                         std::uint64_t seed) {
    if (replicas < 100) throw std::invalid_argument("verify_boundary: replicas < 100");
    RunningStat mass, drift;
    Rng rng(derive_stream(seed, 0x0ffb));
    double child[2];
    for (long r = 0; r < replicas; ++r) {
        const int n = law.sample_brood(rng, child);
        double sm = 0.0, sd = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = std::exp(-child[i]);
            sm += w;
            sd += child[i] * w;
        }
        mass.add(sm - 1.0);
        drift.add(sd);
    }
    return {mass.estimate(), drift.estimate()};
}

}  // namespace brwlab
