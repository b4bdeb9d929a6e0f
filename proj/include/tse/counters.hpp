#pragma once

// Fixed point sensors reporting per-minute vehicle counts and mean speeds.
// The counter at 0 km doubles as the inflow boundary condition.

#include <cmath>
#include <optional>
#include <vector>

#include "tse/errors.hpp"
#include "tse/field.hpp"
#include "tse/model.hpp"

namespace tse {

struct CounterReading {
    int count = 0;
    double speed_kmh = 0.0;
};

struct CounterTable {
    std::vector<double> positions_km;
    std::vector<std::vector<std::optional<CounterReading>>> readings;  // [counter][minute]

    int counter_at(double position_km, double tol_km = 1e-6) const {
        for (size_t c = 0; c < positions_km.size(); ++c)
            if (std::abs(positions_km[c] - position_km) <= tol_km) return static_cast<int>(c);
        return -1;
    }

    int minutes() const {
        size_t m = 0;
        for (const auto& series : readings) m = std::max(m, series.size());
        return static_cast<int>(m);
    }

    CounterVelocities velocities(int exclude_counter = -1) const {
        CounterVelocities v;
        for (size_t c = 0; c < positions_km.size(); ++c) {
            if (static_cast<int>(c) == exclude_counter) continue;
            v.positions_km.push_back(positions_km[c]);
            std::vector<std::optional<double>> speeds(readings[c].size());
            for (size_t t = 0; t < readings[c].size(); ++t)
                if (readings[c][t].has_value()) speeds[t] = readings[c][t]->speed_kmh;
            v.speed_kmh.push_back(std::move(speeds));
        }
        return v;
    }
};

// Boundary condition for the simulation: the 0 km counter must report every
// minute of the stream.
inline InflowSchedule inflow_from_counters(const CounterTable& counters, int minutes) {
    int c0 = counters.counter_at(0.0);
    if (c0 < 0) throw ValidationError("no counter at 0 km; inflow boundary unavailable");
    InflowSchedule inflow;
    inflow.minutes.resize(minutes);
    for (int t = 0; t < minutes; ++t) {
        if (t >= static_cast<int>(counters.readings[c0].size()) ||
            !counters.readings[c0][t].has_value())
            throw ValidationError("inflow minute " + std::to_string(t) +
                                  " missing from the 0 km counter");
        const CounterReading& r = *counters.readings[c0][t];
        inflow.minutes[t] = {r.count, r.speed_kmh};
    }
    inflow.validate();
    return inflow;
}

}  // namespace tse
