#pragma once

// Spatiotemporal mean-velocity patch grids (500 m x 1 minute): aggregation
// from simulator samples, missing-value classification against counters,
// linear-interpolation upper bounds, and synthetic masking.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "tse/errors.hpp"
#include "tse/model.hpp"
#include "tse/rng.hpp"
#include "tse/simulator.hpp"
#include "tse/units.hpp"

namespace tse {

struct PatchGrid {
    int segments = 0;
    int minutes = 0;
    std::vector<std::optional<double>> values;  // segment-major: [m * minutes + t]

    PatchGrid() = default;
    PatchGrid(int m, int t) : segments(m), minutes(t), values(static_cast<size_t>(m) * t) {}

    std::optional<double>& at(int m, int t) { return values[static_cast<size_t>(m) * minutes + t]; }
    const std::optional<double>& at(int m, int t) const {
        return values[static_cast<size_t>(m) * minutes + t];
    }
    bool same_shape(const PatchGrid& o) const {
        return segments == o.segments && minutes == o.minutes;
    }
    int present_count() const {
        int n = 0;
        for (const auto& v : values) n += v.has_value() ? 1 : 0;
        return n;
    }
    int missing_count() const { return segments * minutes - present_count(); }

    // Columns [t0, t0+span) as a new grid.
    PatchGrid window(int t0, int span) const {
        PatchGrid w(segments, span);
        for (int m = 0; m < segments; ++m)
            for (int t = 0; t < span; ++t) w.at(m, t) = at(m, t0 + t);
        return w;
    }
};

// Running per-patch sums; lanes pooled, arithmetic mean over vehicle-step
// samples.
struct PatchAccumulator {
    int segments = 0;
    std::vector<double> sum;     // [m * minutes + t]
    std::vector<std::int64_t> count;
    int minutes = 0;

    explicit PatchAccumulator(int segs) : segments(segs) {}

    void ensure_minutes(int t) {
        if (t < minutes) return;
        minutes = t + 1;
        sum.resize(static_cast<size_t>(segments) * minutes, 0.0);
        count.resize(static_cast<size_t>(segments) * minutes, 0);
    }

    void add(int cell, int minute, int velocity_cells) {
        ensure_minutes(minute);
        // segment-major with a growing minute axis would invalidate indices;
        // store minute-major instead.
        size_t idx = static_cast<size_t>(minute) * segments + segment_of_cell(cell);
        sum[idx] += cells_to_kmh(velocity_cells);
        count[idx] += 1;
    }

    PatchGrid to_grid(int total_minutes) const {
        PatchGrid g(segments, total_minutes);
        for (int t = 0; t < std::min(minutes, total_minutes); ++t)
            for (int m = 0; m < segments; ++m) {
                size_t idx = static_cast<size_t>(t) * segments + m;
                if (count[idx] > 0) g.at(m, t) = sum[idx] / static_cast<double>(count[idx]);
            }
        return g;
    }
};

// Mean over all vehicle-step samples per 500 m x 1 minute patch; patches
// with no samples stay missing.
inline PatchGrid aggregate(const SampleLog& log, const RoadConfig& road, int minutes) {
    if (road.length_cells % kCellsPerSegment != 0)
        throw ValidationError("road length must be a whole number of 500 m segments");
    PatchAccumulator acc(road.segments());
    for (const Sample& s : log.samples) acc.add(s.cell, minute_of_step(s.time_step), s.velocity);
    return acc.to_grid(minutes);
}

inline PatchGrid aggregate(const SampleLog& log, const RoadConfig& road) {
    int minutes = 0;
    for (const Sample& s : log.samples)
        minutes = std::max(minutes, minute_of_step(s.time_step) + 1);
    return aggregate(log, road, minutes);
}

inline double mean_limit_kmh(const RoadConfig& road) {
    double s = 0.0;
    for (int v : road.speed_limit_cells) s += cells_to_kmh(v);
    return s / static_cast<double>(road.lanes);
}

// Fills absent patches with the lane-count-weighted mean speed limit so the
// simulated comparison field is total. Idempotent.
inline PatchGrid densify(PatchGrid grid, const RoadConfig& road) {
    double fill = mean_limit_kmh(road);
    for (auto& v : grid.values)
        if (!v.has_value()) v = fill;
    return grid;
}

enum class PatchClass : std::uint8_t { observed, class1, class2 };

struct SegmentClassMap {
    int segments = 0;
    int minutes = 0;
    std::vector<PatchClass> cls;
    std::vector<double> counter_speed;  // valid where cls == class1
    int degraded_class1 = 0;            // class-1 patches lacking a reading that minute

    PatchClass at(int m, int t) const { return cls[static_cast<size_t>(m) * minutes + t]; }
    double v_tc(int m, int t) const { return counter_speed[static_cast<size_t>(m) * minutes + t]; }
};

// Per-counter, per-minute speed readings aligned with positions_km.
struct CounterVelocities {
    std::vector<double> positions_km;
    std::vector<std::vector<std::optional<double>>> speed_kmh;  // [counter][minute]

    std::optional<double> reading(int counter, int minute) const {
        const auto& series = speed_kmh[counter];
        if (minute < 0 || minute >= static_cast<int>(series.size())) return std::nullopt;
        return series[minute];
    }
};

// Missing patches in a segment holding a counter become class 1 with that
// counter's reading; a missing reading degrades the patch to class 2.
inline SegmentClassMap classify(const PatchGrid& grid, const RoadConfig& road,
                                const CounterVelocities& counters, int minute_offset = 0) {
    SegmentClassMap map;
    map.segments = grid.segments;
    map.minutes = grid.minutes;
    map.cls.assign(grid.values.size(), PatchClass::class2);
    map.counter_speed.assign(grid.values.size(), 0.0);

    std::vector<int> counter_of_segment(grid.segments, -1);
    for (size_t c = 0; c < counters.positions_km.size(); ++c) {
        int seg = segment_of_cell(cell_of_km(counters.positions_km[c]));
        if (seg >= 0 && seg < grid.segments && counter_of_segment[seg] < 0)
            counter_of_segment[seg] = static_cast<int>(c);
    }

    for (int m = 0; m < grid.segments; ++m) {
        for (int t = 0; t < grid.minutes; ++t) {
            size_t idx = static_cast<size_t>(m) * grid.minutes + t;
            if (grid.at(m, t).has_value()) {
                map.cls[idx] = PatchClass::observed;
                continue;
            }
            int c = counter_of_segment[m];
            if (c >= 0) {
                auto v = counters.reading(c, t + minute_offset);
                if (v.has_value()) {
                    map.cls[idx] = PatchClass::class1;
                    map.counter_speed[idx] = *v;
                } else {
                    map.degraded_class1 += 1;
                }
            }
        }
    }
    return map;
}

namespace detail {

// 1-D linear interpolation between nearest present neighbours; boundary gaps
// extend the nearest value. `get(i)` over n slots.
template <typename Get>
inline std::optional<double> interp_1d(int i, int n, Get&& get) {
    int lo = -1, hi = -1;
    for (int k = i - 1; k >= 0; --k)
        if (get(k).has_value()) { lo = k; break; }
    for (int k = i + 1; k < n; ++k)
        if (get(k).has_value()) { hi = k; break; }
    if (lo < 0 && hi < 0) return std::nullopt;
    if (lo < 0) return *get(hi);
    if (hi < 0) return *get(lo);
    double a = *get(lo), b = *get(hi);
    double w = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
    return a + w * (b - a);
}

}  // namespace detail

// Upper prior bound u_max per patch: mean of the 1-D linear interpolations
// along time (within the segment) and along space (within the minute);
// present patches keep their own value. A patch with neither estimate falls
// back to the grid mean of present values.
inline std::vector<double> interpolate_bounds(const PatchGrid& grid) {
    if (grid.present_count() == 0)
        throw ValidationError("cannot interpolate a grid with no present values");
    double global_sum = 0.0;
    for (const auto& v : grid.values)
        if (v.has_value()) global_sum += *v;
    double global_mean = global_sum / grid.present_count();

    std::vector<double> umax(grid.values.size(), 0.0);
    for (int m = 0; m < grid.segments; ++m) {
        for (int t = 0; t < grid.minutes; ++t) {
            size_t idx = static_cast<size_t>(m) * grid.minutes + t;
            if (grid.at(m, t).has_value()) {
                umax[idx] = *grid.at(m, t);
                continue;
            }
            auto along_time = detail::interp_1d(
                t, grid.minutes, [&](int k) { return grid.at(m, k); });
            auto along_space = detail::interp_1d(
                m, grid.segments, [&](int k) { return grid.at(k, t); });
            if (along_time && along_space)
                umax[idx] = 0.5 * (*along_time + *along_space);
            else if (along_time)
                umax[idx] = *along_time;
            else if (along_space)
                umax[idx] = *along_space;
            else
                umax[idx] = global_mean;
        }
    }
    return umax;
}

// Synthetic missing-value mask: velocity noise then independent removal,
// removal probability chosen by the pre-noise value against the threshold.
struct MaskSpec {
    double threshold_kmh = 20.0;
    double mask_prob_below = 0.0;
    double mask_prob_above = 0.0;
    double noise_sigma_kmh = 0.0;

    void validate() const {
        if (threshold_kmh <= 0.0) throw ValidationError("mask threshold must be positive");
        auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in_unit(mask_prob_below) || !in_unit(mask_prob_above))
            throw ValidationError("mask probabilities must lie in [0,1]");
        if (noise_sigma_kmh < 0.0) throw ValidationError("noise sigma must be non-negative");
    }
};

// Draw order is fixed (segment-major, one normal + one uniform per present
// patch) so a seed reproduces the mask exactly.
inline PatchGrid mask_synthetic(const PatchGrid& grid, const MaskSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    PatchGrid out = grid;
    for (int m = 0; m < grid.segments; ++m) {
        for (int t = 0; t < grid.minutes; ++t) {
            const auto& truth = grid.at(m, t);
            if (!truth.has_value()) continue;
            double noise = rng.normal(0.0, spec.noise_sigma_kmh);
            double remove_draw = rng.u01();
            double p = *truth < spec.threshold_kmh ? spec.mask_prob_below : spec.mask_prob_above;
            if (remove_draw < p)
                out.at(m, t) = std::nullopt;
            else if (spec.noise_sigma_kmh > 0.0)
                out.at(m, t) = std::max(1.0, *truth + noise);  // keep observations positive
        }
    }
    return out;
}

}  // namespace tse
