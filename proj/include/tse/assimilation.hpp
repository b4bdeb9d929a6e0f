#pragma once

// Observation likelihoods over velocity patches, particle weighting on the
// scenario grid, systematic resampling with lattice rejuvenation, and MAP
// extraction.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "tse/errors.hpp"
#include "tse/field.hpp"
#include "tse/model.hpp"
#include "tse/priors.hpp"
#include "tse/rng.hpp"

namespace tse {

struct LikelihoodConfig {
    double sigma_p = 20.0;  // percentage-error tolerance (%)
    double sigma_a = 10.0;  // absolute-error tolerance (km/h)
};

inline double gaussian_kernel(double e, double sigma) {
    return std::exp(-0.5 * (e / sigma) * (e / sigma)) / (std::sqrt(2.0 * M_PI) * sigma);
}

namespace detail {
// Keeps logs finite when a kernel integral underflows.
inline double safe_log(double x) {
    return std::log(std::max(x, std::numeric_limits<double>::min()));
}
}  // namespace detail

// Non-missing segment: product of percentage- and absolute-error kernels,
// percentage error taken against the observed value.
inline double segment_loglik_observed(double u_obs, double u_sim, const LikelihoodConfig& cfg) {
    double e_p = 100.0 * (u_sim - u_obs) / u_obs;
    double e_a = u_sim - u_obs;
    return detail::safe_log(gaussian_kernel(e_p, cfg.sigma_p)) +
           detail::safe_log(gaussian_kernel(e_a, cfg.sigma_a));
}

// Missing segment: each kernel averaged over the prior, errors taken against
// the integration variable.
inline double segment_loglik_missing(const PriorQuadrature& prior, double u_sim,
                                     const LikelihoodConfig& cfg) {
    double ip = prior.integrate(
        [&](double u) { return gaussian_kernel(100.0 * (u_sim - u) / u, cfg.sigma_p); });
    double ia = prior.integrate([&](double u) { return gaussian_kernel(u_sim - u, cfg.sigma_a); });
    return detail::safe_log(ip) + detail::safe_log(ia);
}

inline double segment_loglik_missing(const PriorSpec& spec, double u_sim,
                                     const LikelihoodConfig& cfg) {
    return segment_loglik_missing(make_quadrature(spec), u_sim, cfg);
}

// Scenario weight: inverse square of the summed log-likelihood.
inline double joint_logweight(double sum_loglik) {
    double l = std::max(std::abs(sum_loglik), 1e-6);
    return 1.0 / (l * l);
}

inline void normalize_weights(std::vector<double>& w) {
    double sum = 0.0;
    for (double x : w) {
        if (x < 0.0) throw ValidationError("negative weight");
        sum += x;
    }
    if (sum <= 0.0) throw ValidationError("weights sum to zero");
    for (double& x : w) x /= sum;
}

// Particle counts over the discrete scenario grid; the total is invariant
// under resampling.
struct ParticleEnsemble {
    std::vector<std::int64_t> counts;

    static ParticleEnsemble uniform(size_t n_scenarios, std::int64_t per_scenario = 1) {
        ParticleEnsemble e;
        e.counts.assign(n_scenarios, per_scenario);
        return e;
    }

    std::int64_t total() const {
        std::int64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

namespace detail {

inline std::vector<std::int64_t> systematic_counts(const std::vector<double>& w,
                                                   std::int64_t n_particles, Rng& rng) {
    std::vector<std::int64_t> out(w.size(), 0);
    double u0 = rng.u01();
    std::int64_t j = 0;
    double cum = 0.0;
    for (size_t n = 0; n < w.size(); ++n) {
        cum = (n + 1 == w.size()) ? 1.0 : cum + w[n];
        while (j < n_particles && (static_cast<double>(j) + u0) / static_cast<double>(n_particles) < cum) {
            out[n] += 1;
            j += 1;
        }
    }
    return out;
}

}  // namespace detail

// Lattice shape of the scenario grid, lexicographic (p_bn, p, q, r).
using GridDims = std::array<int, 4>;

inline size_t grid_index(const GridDims& dims, int i0, int i1, int i2, int i3) {
    return static_cast<size_t>(((i0 * dims[1] + i1) * dims[2] + i2) * dims[3] + i3);
}

// Systematic resampling proportional to w, then rejuvenation: each particle
// hops, with the given probability, to a uniformly chosen adjacent lattice
// point along one uniformly chosen dimension (clamped at the grid edge).
inline void resample(ParticleEnsemble& ens, const std::vector<double>& w, Rng& rng,
                     const GridDims& dims, double rejuvenation_prob = 0.1) {
    if (w.size() != ens.counts.size())
        throw ValidationError("weight vector does not match scenario count");
    std::int64_t n_particles = ens.total();
    std::vector<std::int64_t> resampled = detail::systematic_counts(w, n_particles, rng);

    if (rejuvenation_prob <= 0.0) {
        ens.counts = std::move(resampled);
        return;
    }
    std::vector<std::int64_t> out(resampled.size(), 0);
    for (size_t n = 0; n < resampled.size(); ++n) {
        int idx[4];
        size_t rest = n;
        for (int d = 3; d >= 0; --d) {
            idx[d] = static_cast<int>(rest % dims[d]);
            rest /= dims[d];
        }
        for (std::int64_t k = 0; k < resampled[n]; ++k) {
            if (!rng.bernoulli(rejuvenation_prob)) {
                out[n] += 1;
                continue;
            }
            int d = static_cast<int>(rng.below(4));
            int dir = rng.bernoulli(0.5) ? 1 : -1;
            int hopped[4] = {idx[0], idx[1], idx[2], idx[3]};
            hopped[d] = std::clamp(idx[d] + dir, 0, dims[d] - 1);
            out[grid_index(dims, hopped[0], hopped[1], hopped[2], hopped[3])] += 1;
        }
    }
    ens.counts = std::move(out);
}

// Simulated comparison fields per scenario parameter set.
struct ScenarioSet {
    std::vector<ModelParams> params;
    std::vector<PatchGrid> grids;  // densified, one per scenario
    GridDims dims{1, 1, 1, 1};
    std::uint64_t saturation_events = 0;

    size_t size() const { return params.size(); }
};

// Highest particle count wins; ties fall to the lexicographically smallest
// parameter set (grid order is lexicographic).
inline size_t map_index(const ParticleEnsemble& ens) {
    size_t best = 0;
    for (size_t n = 1; n < ens.counts.size(); ++n)
        if (ens.counts[n] > ens.counts[best]) best = n;
    return best;
}

inline ModelParams map_estimate(const ParticleEnsemble& ens, const ScenarioSet& scenarios) {
    if (ens.counts.empty() || ens.counts.size() != scenarios.size())
        throw ValidationError("ensemble does not match scenario set");
    return scenarios.params[map_index(ens)];
}

struct Posterior {
    std::vector<int> minutes;                       // assimilated minute indices
    std::vector<std::vector<double>> weights;       // normalized w per minute
    ParticleEnsemble final_ensemble;
    size_t map_idx = 0;
    ModelParams map_params;
};

// Priors for the missing patches of one grid, indexed like the grid.
struct PriorField {
    std::vector<std::optional<PriorQuadrature>> patch;
    int uniform_fallbacks = 0;
};

inline PriorField build_priors(const PatchGrid& obs, const SegmentClassMap& classes,
                               const std::vector<double>& u_max, double sigma_a = 10.0,
                               double u_min = 1.0) {
    PriorField field;
    field.patch.resize(obs.values.size());
    for (int m = 0; m < obs.segments; ++m) {
        for (int t = 0; t < obs.minutes; ++t) {
            size_t idx = static_cast<size_t>(m) * obs.minutes + t;
            PatchClass c = classes.at(m, t);
            if (c == PatchClass::observed) continue;
            double hi = std::max(u_max[idx], u_min + 1.0);  // keep the support non-degenerate
            PriorSpec spec = c == PatchClass::class1
                                 ? PriorSpec::class1(classes.v_tc(m, t), sigma_a, u_min, hi)
                                 : PriorSpec::class2(u_min, hi);
            field.patch[idx] = make_quadrature(spec);
            if (field.patch[idx]->uniform_fallback) field.uniform_fallbacks += 1;
        }
    }
    return field;
}

// Summed log-likelihood of one scenario grid against one observation minute.
inline double minute_loglik(const PatchGrid& obs, int t, const PriorField& priors,
                            const PatchGrid& sim, const LikelihoodConfig& cfg) {
    double l = 0.0;
    for (int m = 0; m < obs.segments; ++m) {
        size_t idx = static_cast<size_t>(m) * obs.minutes + t;
        double u_sim = *sim.at(m, t);
        if (obs.at(m, t).has_value())
            l += segment_loglik_observed(*obs.at(m, t), u_sim, cfg);
        else
            l += segment_loglik_missing(*priors.patch[idx], u_sim, cfg);
    }
    return l;
}

// Per-minute weighting and resampling over the window; the ensemble is
// updated in place so it can persist across consecutive windows.
inline Posterior assimilate_window(const PatchGrid& obs, const SegmentClassMap& classes,
                                   const PriorField& priors, const ScenarioSet& scenarios,
                                   ParticleEnsemble& ens, std::uint64_t seed,
                                   const LikelihoodConfig& cfg = {},
                                   double rejuvenation_prob = 0.1) {
    if (scenarios.size() != ens.counts.size())
        throw ValidationError("ensemble does not match scenario set");
    Posterior post;
    for (int t = 0; t < obs.minutes; ++t) {
        if (obs.segments == 0) continue;  // nothing classified this minute
        std::vector<double> w(scenarios.size());
        for (size_t n = 0; n < scenarios.size(); ++n)
            w[n] = joint_logweight(minute_loglik(obs, t, priors, scenarios.grids[n], cfg));
        normalize_weights(w);
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        resample(ens, w, rng, scenarios.dims, rejuvenation_prob);
        post.minutes.push_back(t);
        post.weights.push_back(std::move(w));
    }
    post.final_ensemble = ens;
    post.map_idx = map_index(ens);
    post.map_params = scenarios.params[post.map_idx];
    return post;
}

}  // namespace tse
