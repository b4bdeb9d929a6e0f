#pragma once

// End-to-end imputation pipeline: scenario-grid construction, ensemble
// simulation driven by counter inflow, per-minute particle filtering, MAP
// imputation, the synthetic-twin oracle, and MAE evaluation.

#include <cstdint>
#include <string>
#include <vector>

#include "tse/assimilation.hpp"
#include "tse/counters.hpp"
#include "tse/errors.hpp"
#include "tse/field.hpp"
#include "tse/model.hpp"
#include "tse/parallel.hpp"
#include "tse/rng.hpp"
#include "tse/simulator.hpp"
#include "tse/units.hpp"

namespace tse {

// ---------------------------------------------------------------------------
// Scenario parameter lattice

struct GridSpec {
    struct Dim {
        double lower = 0.0;
        double upper = 0.0;
        double increment = 1.0;
    };
    Dim p_bn, p, q, r;

    static GridSpec full_defaults() {
        return {{0.26, 0.54, 0.02}, {0.06, 0.24, 0.03}, {0.06, 0.24, 0.03}, {0.90, 0.99, 0.01}};
    }
};

namespace detail {

inline long long micro(double x) { return std::llround(x * 1e6); }
inline double from_micro(long long u) { return static_cast<double>(u) / 1e6; }

// Lattice values in exact micro-unit arithmetic; float drift killed by the
// 1e-6 rounding.
inline std::vector<double> lattice(const GridSpec::Dim& dim, const char* name) {
    long long lo = micro(dim.lower), up = micro(dim.upper), inc = micro(dim.increment);
    if (inc <= 0) throw ValidationError(std::string(name) + ": increment must be positive");
    if (up < lo) throw ValidationError(std::string(name) + ": upper below lower");
    if ((up - lo) % inc != 0)
        throw ValidationError(std::string(name) + ": range is not a whole number of increments");
    std::vector<double> vals;
    for (long long v = lo; v <= up; v += inc) vals.push_back(from_micro(v));
    return vals;
}

}  // namespace detail

// Cartesian product of the four lattices in lexicographic (p_bn, p, q, r)
// order.
inline std::vector<ModelParams> build_scenario_grid(const GridSpec& spec,
                                                    GridDims* dims_out = nullptr) {
    auto vb = detail::lattice(spec.p_bn, "p_bn");
    auto vp = detail::lattice(spec.p, "p");
    auto vq = detail::lattice(spec.q, "q");
    auto vr = detail::lattice(spec.r, "r");
    if (dims_out)
        *dims_out = {static_cast<int>(vb.size()), static_cast<int>(vp.size()),
                     static_cast<int>(vq.size()), static_cast<int>(vr.size())};
    std::vector<ModelParams> grid;
    grid.reserve(vb.size() * vp.size() * vq.size() * vr.size());
    for (double b : vb)
        for (double p : vp)
            for (double q : vq)
                for (double r : vr) {
                    ModelParams m{b, p, q, r};
                    m.validate();
                    grid.push_back(m);
                }
    return grid;
}

// Coarse preset spanning the same ranges with 5 x 3 x 3 x 4 samples.
inline GridSpec ci_preset(const GridSpec& base = GridSpec::full_defaults()) {
    auto coarsen = [](GridSpec::Dim d, int n, const char* name) {
        long long lo = detail::micro(d.lower), up = detail::micro(d.upper);
        if ((up - lo) % (n - 1) != 0)
            throw ValidationError(std::string(name) + ": range not divisible for the CI preset");
        d.increment = detail::from_micro((up - lo) / (n - 1));
        return d;
    };
    GridSpec ci;
    ci.p_bn = coarsen(base.p_bn, 5, "p_bn");
    ci.p = coarsen(base.p, 3, "p");
    ci.q = coarsen(base.q, 3, "q");
    ci.r = coarsen(base.r, 4, "r");
    return ci;
}

inline bool on_lattice(const GridSpec& spec, const ModelParams& theta) {
    auto member = [](const GridSpec::Dim& d, double x) {
        long long lo = detail::micro(d.lower), up = detail::micro(d.upper),
                  inc = detail::micro(d.increment), v = detail::micro(x);
        return v >= lo && v <= up && (v - lo) % inc == 0;
    };
    return member(spec.p_bn, theta.p_bn) && member(spec.p, theta.p) &&
           member(spec.q, theta.q) && member(spec.r, theta.r);
}

// ---------------------------------------------------------------------------
// Scenario runs

// One continuous simulation with per-patch accumulation, extended a minute
// at a time. Extending is equivalent to a single longer run with the same
// seed, which is what makes window caching exact.
struct ScenarioRun {
    SimState state;
    PatchAccumulator acc;
    int minutes_done = 0;

    ScenarioRun(const RoadConfig& road, std::uint64_t seed)
        : state(road, seed), acc(road.segments()) {}

    void run_minute(const RoadConfig& road, const ModelParams& params, const InflowRecord& rec) {
        InflowSchedule one;
        one.minutes.push_back(rec);
        run_scenario_visit(state, road, params, one, 1,
                           [&](int t, int, int cell, int velocity) {
                               acc.add(cell, minute_of_step(t), velocity);
                           });
        minutes_done += 1;
    }

    PatchGrid grid(int t0, int span, const RoadConfig& road) const {
        return densify(acc.to_grid(minutes_done).window(t0, span), road);
    }
};

inline std::uint64_t scenario_seed(std::uint64_t base_seed, size_t scenario_index) {
    return mix_seed(base_seed, 0x5ce0u, scenario_index);
}

// One run per parameter set: warmup minutes simulated first and discarded,
// then the window aggregated and densified.
inline ScenarioSet simulate_ensemble(const std::vector<ModelParams>& grid, const GridDims& dims,
                                     const RoadConfig& road, const InflowSchedule& inflow,
                                     int window_minutes, int warmup_minutes,
                                     std::uint64_t base_seed, unsigned threads = 0) {
    if (window_minutes < 1) throw ValidationError("window must be at least one minute");
    if (warmup_minutes < 0) throw ValidationError("warmup must be non-negative");
    if (inflow.size() < warmup_minutes + window_minutes)
        throw ValidationError("inflow must cover warmup + window");
    ScenarioSet set;
    set.params = grid;
    set.dims = dims;
    set.grids.resize(grid.size());
    std::vector<std::uint64_t> saturation(grid.size(), 0);
    parallel_for(
        grid.size(),
        [&](size_t n) {
            ScenarioRun run(road, scenario_seed(base_seed, n));
            for (int m = 0; m < warmup_minutes + window_minutes; ++m)
                run.run_minute(road, grid[n], inflow.at(m));
            set.grids[n] = run.grid(warmup_minutes, window_minutes, road);
            saturation[n] = run.state.saturation_events;
        },
        threads);
    for (auto s : saturation) set.saturation_events += s;
    return set;
}

// ---------------------------------------------------------------------------
// Synthetic twin

struct TwinData {
    PatchGrid truth;     // densified field of the generating run
    PatchGrid observed;  // noisy, masked
    CounterTable counters;
    std::uint64_t saturation_events = 0;
};

// Simulates the generating scenario, reads virtual counters (per-minute mean
// speed of samples in the counter cell; vehicle count from cell crossings),
// then masks the densified truth. The 0 km counter reports every minute so
// it can serve as the inflow boundary downstream.
inline TwinData synth_twin(const RoadConfig& road, const ModelParams& theta,
                           const InflowSchedule& demand, const MaskSpec& mask,
                           std::uint64_t seed) {
    road.validate();
    theta.validate();
    demand.validate();
    const int minutes = demand.size();
    const size_t n_counters = road.counter_positions_km.size();

    std::vector<int> counter_cells(n_counters);
    for (size_t c = 0; c < n_counters; ++c)
        counter_cells[c] = cell_of_km(road.counter_positions_km[c]);

    struct CounterAcc {
        double presence_sum = 0.0;
        std::int64_t presence_n = 0;
        double crossing_sum = 0.0;
        int crossings = 0;
    };
    std::vector<std::vector<CounterAcc>> acc(n_counters,
                                             std::vector<CounterAcc>(minutes));

    PatchAccumulator patches(road.segments());
    SimState state(road, mix_seed(seed, 0x791au));
    // visit sees post-move positions; prev_cell identifies crossings
    for (int m = 0; m < minutes; ++m) {
        inject_vehicles(state, demand.at(m));
        for (int k = 0; k < kStepsPerMinute; ++k) {
            int executed = state.time_step;
            advance_step(state, road, theta);
            int minute = minute_of_step(executed);
            for (int l = 0; l < road.lanes; ++l) {
                for (const Vehicle& v : state.lanes[l]) {
                    patches.add(v.cell, minute, v.velocity);
                    for (size_t c = 0; c < n_counters; ++c) {
                        if (v.cell == counter_cells[c]) {
                            acc[c][minute].presence_sum += cells_to_kmh(v.velocity);
                            acc[c][minute].presence_n += 1;
                        }
                        if (v.prev_cell <= counter_cells[c] && counter_cells[c] < v.cell) {
                            acc[c][minute].crossing_sum += cells_to_kmh(v.velocity);
                            acc[c][minute].crossings += 1;
                        }
                    }
                }
            }
        }
        if (demand.at(m).count > 0 &&
            state.pending_injections.size() > 10u * static_cast<unsigned>(demand.at(m).count))
            state.saturation_events += 1;
    }

    TwinData twin;
    twin.saturation_events = state.saturation_events;
    twin.truth = densify(patches.to_grid(minutes), road);
    twin.observed = mask_synthetic(twin.truth, mask, mix_seed(seed, 0x3a50u));
    twin.counters.positions_km = road.counter_positions_km;
    twin.counters.readings.resize(n_counters);
    for (size_t c = 0; c < n_counters; ++c) {
        bool is_origin = counter_cells[c] == 0;
        twin.counters.readings[c].resize(minutes);
        for (int t = 0; t < minutes; ++t) {
            const CounterAcc& a = acc[c][t];
            if (a.presence_n > 0) {
                double speed = a.presence_sum / static_cast<double>(a.presence_n);
                if (a.crossings > 0) speed = std::max(speed, 1.0);
                twin.counters.readings[c][t] = CounterReading{a.crossings, speed};
            } else if (a.crossings > 0) {
                twin.counters.readings[c][t] =
                    CounterReading{a.crossings, a.crossing_sum / a.crossings};
            } else if (is_origin) {
                twin.counters.readings[c][t] = CounterReading{0, 0.0};
            }
        }
    }
    return twin;
}

// ---------------------------------------------------------------------------
// Pipeline

// Missing patches take the best scenario's value at the same place and time;
// present patches pass through untouched.
inline PatchGrid impute(const PatchGrid& obs, const PatchGrid& best) {
    if (!obs.same_shape(best))
        throw ValidationError("imputation grids must share one shape");
    PatchGrid out = obs;
    for (size_t i = 0; i < out.values.size(); ++i)
        if (!out.values[i].has_value()) out.values[i] = best.values[i];
    return out;
}

struct PipelineConfig {
    int window_minutes = 30;
    int warmup_minutes = 10;  // used by standalone ensemble builds
    int cadence_minutes = 1;
    std::uint64_t seed = 0;
    LikelihoodConfig likelihood;
    double rejuvenation_prob = 0.1;
    double u_min_kmh = 1.0;
    std::int64_t particles_per_scenario = 1;
    unsigned threads = 0;
};

struct MapTraceEntry {
    int window_end_minute = 0;
    size_t scenario_index = 0;
    ModelParams params;
};

struct PosteriorRow {
    int minute = 0;
    ModelParams params;
    std::int64_t count = 0;
    bool is_map = false;
};

struct PipelineResult {
    PatchGrid imputed;
    std::vector<MapTraceEntry> map_trace;
    std::vector<PosteriorRow> posterior_rows;
    std::uint64_t saturation_events = 0;
    int degraded_class1 = 0;
    int prior_uniform_fallbacks = 0;
};

// Sliding-window loop: the ensemble runs continuously from the stream start
// (so overlapping windows share their simulated past), the particle filter
// persists across windows and assimilates each observation minute exactly
// once, and every window's missing patches are imputed from the current MAP
// scenario, latest window winning.
inline PipelineResult run_pipeline(const PatchGrid& obs, const CounterTable& counters,
                                   const RoadConfig& road, const std::vector<ModelParams>& grid,
                                   const GridDims& dims, const PipelineConfig& cfg) {
    road.validate();
    if (grid.empty()) throw ValidationError("scenario grid is empty");
    if (cfg.window_minutes < 1) throw ValidationError("window must be at least one minute");
    const int total_minutes = obs.minutes;
    const int window = cfg.window_minutes;
    if (total_minutes < window)
        throw ValidationError("observation stream shorter than the window");
    if (obs.segments != road.segments())
        throw ValidationError("observation grid does not match the road segmentation");

    InflowSchedule inflow = inflow_from_counters(counters, total_minutes);
    CounterVelocities counter_speeds = counters.velocities();

    std::vector<ScenarioRun> runs;
    runs.reserve(grid.size());
    for (size_t n = 0; n < grid.size(); ++n)
        runs.emplace_back(road, scenario_seed(cfg.seed, n));

    if (cfg.particles_per_scenario < 1)
        throw ValidationError("particles_per_scenario must be at least 1");
    ParticleEnsemble ens = ParticleEnsemble::uniform(grid.size(), cfg.particles_per_scenario);

    PipelineResult result;
    result.imputed = obs;

    ScenarioSet scenarios;
    scenarios.params = grid;
    scenarios.dims = dims;
    scenarios.grids.resize(grid.size());

    for (int s = 0; s + window <= total_minutes; s += cfg.cadence_minutes) {
        const int window_end = s + window - 1;

        parallel_for(
            grid.size(),
            [&](size_t n) {
                while (runs[n].minutes_done <= window_end)
                    runs[n].run_minute(road, grid[n], inflow.at(runs[n].minutes_done));
                scenarios.grids[n] = runs[n].grid(s, window, road);
            },
            cfg.threads);

        PatchGrid obs_win = obs.window(s, window);
        std::vector<double> u_max = interpolate_bounds(obs_win);

        // first window assimilates every minute; later windows only the new one
        const int first_t = s == 0 ? 0 : window - 1;
        for (int t = first_t; t < window; ++t) {
            PatchGrid obs_col = obs_win.window(t, 1);
            SegmentClassMap classes = classify(obs_col, road, counter_speeds, s + t);
            std::vector<double> u_max_col(obs.segments);
            for (int m = 0; m < obs.segments; ++m)
                u_max_col[m] = u_max[static_cast<size_t>(m) * window + t];
            PriorField priors = build_priors(obs_col, classes, u_max_col,
                                             cfg.likelihood.sigma_a, cfg.u_min_kmh);
            result.degraded_class1 += classes.degraded_class1;
            result.prior_uniform_fallbacks += priors.uniform_fallbacks;

            std::vector<double> w(grid.size());
            parallel_for(
                grid.size(),
                [&](size_t n) {
                    PatchGrid sim_col = scenarios.grids[n].window(t, 1);
                    w[n] = joint_logweight(minute_loglik(obs_col, 0, priors, sim_col,
                                                         cfg.likelihood));
                },
                cfg.threads);
            normalize_weights(w);
            Rng rng(mix_seed(cfg.seed, 0x4e5au, static_cast<std::uint64_t>(s + t)));
            resample(ens, w, rng, dims, cfg.rejuvenation_prob);
        }

        size_t map = map_index(ens);
        PatchGrid window_imputed = impute(obs_win, scenarios.grids[map]);
        for (int m = 0; m < obs.segments; ++m)
            for (int t = 0; t < window; ++t)
                if (!obs.at(m, s + t).has_value())
                    result.imputed.at(m, s + t) = window_imputed.at(m, t);

        result.map_trace.push_back({window_end, map, grid[map]});
        for (size_t n = 0; n < grid.size(); ++n)
            if (ens.counts[n] > 0)
                result.posterior_rows.push_back({window_end, grid[n], ens.counts[n], false});
        result.posterior_rows.push_back({window_end, grid[map], ens.counts[map], true});
    }

    for (const auto& run : runs) result.saturation_events += run.state.saturation_events;
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalReport {
    double mae_missing = 0.0;   // imputed patches vs reference
    double mae_observed = 0.0;  // originally present patches vs reference
    std::int64_t n_missing = 0;
    std::int64_t n_observed = 0;
    std::int64_t skipped = 0;  // evaluated patches without reference coverage
};

// Full-grid reference: MAE split by the originally-missing set of `obs`.
inline EvalReport evaluate_mae(const PatchGrid& imputed, const PatchGrid& obs,
                               const PatchGrid& reference) {
    if (!imputed.same_shape(obs) || !imputed.same_shape(reference))
        throw ValidationError("evaluation grids must share one shape");
    EvalReport rep;
    double sum_missing = 0.0, sum_observed = 0.0;
    for (int m = 0; m < imputed.segments; ++m) {
        for (int t = 0; t < imputed.minutes; ++t) {
            const auto& val = imputed.at(m, t);
            const auto& ref = reference.at(m, t);
            if (!val.has_value()) continue;
            if (!ref.has_value()) {
                rep.skipped += 1;
                continue;
            }
            double err = std::abs(*val - *ref);
            if (obs.at(m, t).has_value()) {
                sum_observed += err;
                rep.n_observed += 1;
            } else {
                sum_missing += err;
                rep.n_missing += 1;
            }
        }
    }
    if (rep.n_missing + rep.n_observed == 0) throw ValidationError("empty evaluation set");
    if (rep.n_missing > 0) rep.mae_missing = sum_missing / static_cast<double>(rep.n_missing);
    if (rep.n_observed > 0) rep.mae_observed = sum_observed / static_cast<double>(rep.n_observed);
    return rep;
}

// Counter reference: compares the counter's segment against its per-minute
// readings, split by the originally-missing set.
inline EvalReport evaluate_mae_counter(const PatchGrid& imputed, const PatchGrid& obs,
                                       const CounterTable& counters, double position_km) {
    if (!imputed.same_shape(obs))
        throw ValidationError("evaluation grids must share one shape");
    int c = counters.counter_at(position_km);
    if (c < 0)
        throw ValidationError("no counter at the requested position");
    int seg = segment_of_cell(cell_of_km(position_km));
    if (seg < 0 || seg >= imputed.segments)
        throw ValidationError("counter segment outside the grid");
    EvalReport rep;
    double sum_missing = 0.0, sum_observed = 0.0;
    for (int t = 0; t < imputed.minutes; ++t) {
        const auto& val = imputed.at(seg, t);
        if (!val.has_value()) continue;
        if (t >= static_cast<int>(counters.readings[c].size()) ||
            !counters.readings[c][t].has_value()) {
            rep.skipped += 1;
            continue;
        }
        double err = std::abs(*val - counters.readings[c][t]->speed_kmh);
        if (obs.at(seg, t).has_value()) {
            sum_observed += err;
            rep.n_observed += 1;
        } else {
            sum_missing += err;
            rep.n_missing += 1;
        }
    }
    if (rep.n_missing + rep.n_observed == 0) throw ValidationError("empty evaluation set");
    if (rep.n_missing > 0) rep.mae_missing = sum_missing / static_cast<double>(rep.n_missing);
    if (rep.n_observed > 0) rep.mae_observed = sum_observed / static_cast<double>(rep.n_observed);
    return rep;
}

}  // namespace tse
