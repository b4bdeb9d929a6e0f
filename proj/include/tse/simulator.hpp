#pragma once

// Multi-lane open-boundary S-NFS cellular automaton: per-step velocity rules
// with bottleneck-specific random braking, achievable-velocity lane changing,
// and counter-driven inflow at the origin.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "tse/model.hpp"
#include "tse/rng.hpp"
#include "tse/units.hpp"

namespace tse {

inline constexpr double kLaneChangeProb = 0.10;

struct Vehicle {
    int cell = 0;
    int velocity = 0;
    int prev_cell = 0;  // position one step earlier (slow-to-start rule)
    std::uint32_t id = 0;
};

struct ExitRecord {
    int time_step = 0;
    std::uint32_t id = 0;
};

struct Sample {
    int time_step = 0;
    int lane = 0;
    int cell = 0;
    int velocity = 0;
};

struct SampleLog {
    std::vector<Sample> samples;
};

struct SimState {
    int time_step = 0;
    std::vector<std::vector<Vehicle>> lanes;  // per lane, ascending cell
    Rng rng;
    std::vector<ExitRecord> exit_log;
    std::deque<double> pending_injections;  // queued arrival speeds (km/h)
    std::vector<int> arrivals_per_step;     // current minute's schedule
    double arrival_speed_kmh = 0.0;
    std::uint64_t injected = 0;
    std::uint64_t saturation_events = 0;
    std::uint32_t next_id = 0;

    SimState(const RoadConfig& road, std::uint64_t seed)
        : lanes(road.lanes), rng(seed), arrivals_per_step(kStepsPerMinute, 0) {}

    std::uint64_t vehicles_present() const {
        std::uint64_t n = 0;
        for (const auto& ln : lanes) n += ln.size();
        return n;
    }
};

namespace detail {

// First vehicle strictly ahead of `cell`, or lane.size() if none.
inline std::size_t leader_index(const std::vector<Vehicle>& lane, int cell) {
    auto it = std::upper_bound(lane.begin(), lane.end(), cell,
                               [](int c, const Vehicle& v) { return c < v.cell; });
    return static_cast<std::size_t>(it - lane.begin());
}

inline bool cell_occupied(const std::vector<Vehicle>& lane, int cell) {
    auto it = std::lower_bound(lane.begin(), lane.end(), cell,
                               [](const Vehicle& v, int c) { return v.cell < c; });
    return it != lane.end() && it->cell == cell;
}

// Deterministic achievable velocity (acceleration + perspective with s = 1,
// no random braking) for a vehicle of velocity `v` at `cell` in `lane`.
inline int achievable_velocity(const std::vector<Vehicle>& lane, int limit, int cell, int v) {
    int a = std::min(limit, v + 1);
    std::size_t li = leader_index(lane, cell);
    if (li < lane.size()) a = std::min(a, lane[li].cell - cell - 1);
    return std::max(0, a);
}

}  // namespace detail

// Schedules one minute's arrivals, spread uniformly over the minute's steps.
inline void inject_vehicles(SimState& state, const InflowRecord& record) {
    std::fill(state.arrivals_per_step.begin(), state.arrivals_per_step.end(), 0);
    state.arrival_speed_kmh = record.speed_kmh;
    for (int k = 0; k < record.count; ++k) {
        int offset = static_cast<int>((static_cast<long long>(k) * kStepsPerMinute) / record.count);
        state.arrivals_per_step[offset] += 1;
    }
}

namespace detail {

// One arrival attempt: enter cell 0 of a uniformly chosen free lane.
inline bool try_enter(SimState& state, const RoadConfig& road, double speed_kmh) {
    int free_lanes[16];
    int n_free = 0;
    for (int l = 0; l < road.lanes; ++l) {
        const auto& ln = state.lanes[l];
        if (ln.empty() || ln.front().cell > 0) free_lanes[n_free++] = l;
    }
    if (n_free == 0) return false;
    int lane = free_lanes[state.rng.below(static_cast<std::uint32_t>(n_free))];
    int vel = std::clamp(kmh_to_cells(speed_kmh), 1, road.speed_limit_cells[lane]);
    Vehicle v{0, vel, 0, state.next_id++};
    state.lanes[lane].insert(state.lanes[lane].begin(), v);
    state.injected += 1;
    return true;
}

// Queued arrivals retry FIFO before this step's scheduled ones enter;
// arrivals that cannot enter join the back of the queue.
inline void process_arrivals(SimState& state, const RoadConfig& road) {
    while (!state.pending_injections.empty()) {
        double speed = state.pending_injections.front();
        if (!try_enter(state, road, speed)) break;
        state.pending_injections.pop_front();
    }
    int due = state.arrivals_per_step[state.time_step % kStepsPerMinute];
    for (int k = 0; k < due; ++k) {
        if (!state.pending_injections.empty() ||
            !try_enter(state, road, state.arrival_speed_kmh))
            state.pending_injections.push_back(state.arrival_speed_kmh);
    }
}

}  // namespace detail

// Lateral moves, resolved before the longitudinal update. A vehicle moves to
// an adjacent lane (probability kLaneChangeProb) when the achievable velocity
// there strictly exceeds the current lane's, the target cell is empty, and
// the backward gap covers the trailing vehicle's current velocity. Scan is
// front-to-back across lanes; the right lane is evaluated before the left.
inline void plan_lane_changes(SimState& state, const RoadConfig& road, const ModelParams&,
                              double change_prob = kLaneChangeProb) {
    if (road.lanes < 2) return;

    struct Entry {
        int cell;
        int lane;
    };
    std::vector<Entry> scan;
    scan.reserve(state.vehicles_present());
    for (int l = 0; l < road.lanes; ++l)
        for (const Vehicle& v : state.lanes[l]) scan.push_back({v.cell, l});
    std::sort(scan.begin(), scan.end(), [](const Entry& a, const Entry& b) {
        if (a.cell != b.cell) return a.cell > b.cell;
        return a.lane < b.lane;
    });

    for (const Entry& e : scan) {
        auto& cur = state.lanes[e.lane];
        auto it = std::lower_bound(cur.begin(), cur.end(), e.cell,
                                   [](const Vehicle& v, int c) { return v.cell < c; });
        std::size_t i = static_cast<std::size_t>(it - cur.begin());
        const Vehicle veh = cur[i];

        int a_cur = detail::achievable_velocity(cur, road.speed_limit_cells[e.lane],
                                                veh.cell, veh.velocity);

        int best_lane = -1;
        int best_a = a_cur;
        const int candidates[2] = {e.lane + 1, e.lane - 1};  // right first
        for (int t : candidates) {
            if (t < 0 || t >= road.lanes) continue;
            const auto& adj = state.lanes[t];
            if (detail::cell_occupied(adj, veh.cell)) continue;
            std::size_t fi = detail::leader_index(adj, veh.cell);
            if (fi > 0) {
                const Vehicle& trailer = adj[fi - 1];
                int back_gap = veh.cell - trailer.cell - 1;
                if (back_gap < trailer.velocity) continue;
            }
            int a_t = detail::achievable_velocity(adj, road.speed_limit_cells[t],
                                                  veh.cell, veh.velocity);
            if (a_t > best_a) {  // strict; ties keep the earlier (right) candidate
                best_a = a_t;
                best_lane = t;
            }
        }
        if (best_lane < 0) continue;
        if (!state.rng.bernoulli(change_prob)) continue;

        cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(i));
        auto& dst = state.lanes[best_lane];
        auto pos = std::lower_bound(dst.begin(), dst.end(), veh.cell,
                                    [](const Vehicle& v, int c) { return v.cell < c; });
        dst.insert(pos, veh);
    }
}

// One longitudinal S-NFS update. Velocities finalize front-to-back per lane
// so collision avoidance can use the leader's final velocity; positions then
// advance synchronously and vehicles past the last cell exit.
//
// Per vehicle (s-th leader gap G(t,s) = leader cell - own cell - s):
//   draws     s = 2 with probability r else 1; brake with p_bn inside the
//             bottleneck span, p outside; slow-to-start flag with q
//   R1        v <- min(V_lane, v+1)
//   R2        if slow flag: v <- min(v, G(t-1,s)) on prev_cell positions
//   R3        v <- min(v, G(t,s))
//   R4        if brake and v >= 1: v <- v-1
//   R5        v <- min(v, gap to leader + leader's final velocity)
inline void step(SimState& state, const RoadConfig& road, const ModelParams& params) {
    for (int l = 0; l < road.lanes; ++l) {
        auto& ln = state.lanes[l];
        const int limit = road.speed_limit_cells[l];
        const std::size_t n = ln.size();
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t i = n - 1 - k;  // front to back
            Vehicle& veh = ln[i];

            int s = state.rng.bernoulli(params.r) ? 2 : 1;
            double p_eff = road.in_bottleneck(veh.cell) ? params.p_bn : params.p;
            bool brake = state.rng.bernoulli(p_eff);
            bool slow = state.rng.bernoulli(params.q);

            int v = std::min(limit, veh.velocity + 1);
            if (slow && i + s < n) {
                int g = ln[i + s].prev_cell - veh.prev_cell - s;
                v = std::min(v, std::max(0, g));
            }
            if (i + s < n) {
                int g = ln[i + s].cell - veh.cell - s;
                v = std::min(v, std::max(0, g));
            }
            if (brake && v >= 1) v -= 1;
            if (i + 1 < n) v = std::min(v, ln[i + 1].cell - veh.cell - 1 + ln[i + 1].velocity);
            veh.velocity = v;
        }
        for (Vehicle& veh : ln) {
            veh.prev_cell = veh.cell;
            veh.cell += veh.velocity;
        }
        while (!ln.empty() && ln.back().cell >= road.length_cells) {
            state.exit_log.push_back({state.time_step, ln.back().id});
            ln.pop_back();
        }
    }
    state.time_step += 1;
}

// One full time step as composed by run_scenario: arrivals, lateral moves,
// longitudinal update.
inline void advance_step(SimState& state, const RoadConfig& road, const ModelParams& params) {
    detail::process_arrivals(state, road);
    plan_lane_changes(state, road, params);
    step(state, road, params);
}

// Visits every vehicle after each step: fn(time_step, lane, cell, velocity).
template <typename Fn>
inline void run_scenario_visit(SimState& state, const RoadConfig& road, const ModelParams& params,
                               const InflowSchedule& inflow, int minutes, Fn&& fn) {
    for (int m = 0; m < minutes; ++m) {
        const InflowRecord& rec =
            m < inflow.size() ? inflow.at(m) : InflowRecord{};
        inject_vehicles(state, rec);
        for (int k = 0; k < kStepsPerMinute; ++k) {
            int executed = state.time_step;
            advance_step(state, road, params);
            for (int l = 0; l < road.lanes; ++l)
                for (const Vehicle& v : state.lanes[l]) fn(executed, l, v.cell, v.velocity);
        }
        if (rec.count > 0 &&
            state.pending_injections.size() > 10u * static_cast<unsigned>(rec.count))
            state.saturation_events += 1;
    }
}

// Deterministic given (road, params, inflow, minutes, seed).
inline SampleLog run_scenario(const RoadConfig& road, const ModelParams& params,
                              const InflowSchedule& inflow, int minutes, std::uint64_t seed) {
    SimState state(road, seed);
    SampleLog log;
    run_scenario_visit(state, road, params, inflow, minutes,
                       [&](int t, int lane, int cell, int velocity) {
                           log.samples.push_back({t, lane, cell, velocity});
                       });
    return log;
}

}  // namespace tse
