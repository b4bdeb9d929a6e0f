#pragma once

#include <string>
#include <vector>

#include "tse/errors.hpp"
#include "tse/units.hpp"

namespace tse {

// S-NFS scenario parameter set: bottleneck braking, base braking,
// slow-to-start, and anticipation probabilities.
struct ModelParams {
    double p_bn = 0.0;
    double p = 0.0;
    double q = 0.0;
    double r = 0.0;

    void validate() const {
        auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in_unit(p_bn) || !in_unit(p) || !in_unit(q) || !in_unit(r))
            throw ValidationError("model parameters must lie in [0,1]");
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) = default;
};

// Road geometry. Lane indices increase to the right; the rightmost lane is
// the fast lane. The bottleneck span is half-open in cells.
struct RoadConfig {
    int length_cells = 0;
    int lanes = 0;
    std::vector<int> speed_limit_cells;  // per lane, cells/step
    int bottleneck_begin = 0;
    int bottleneck_end = 0;  // [begin, end)
    std::vector<double> counter_positions_km;

    int segments() const { return length_cells / kCellsPerSegment; }

    bool in_bottleneck(int cell) const {
        return cell >= bottleneck_begin && cell < bottleneck_end;
    }

    int max_limit_cells() const {
        int m = 1;
        for (int v : speed_limit_cells) m = std::max(m, v);
        return m;
    }

    void validate() const {
        if (lanes < 1) throw ValidationError("road must have at least one lane");
        if (length_cells < kCellsPerSegment)
            throw ValidationError("road shorter than one segment");
        if (static_cast<int>(speed_limit_cells.size()) != lanes)
            throw ValidationError("need one speed limit per lane");
        for (int v : speed_limit_cells)
            if (v < 1) throw ValidationError("lane speed limit below 1 cell/step");
        if (bottleneck_begin < 0 || bottleneck_end > length_cells ||
            bottleneck_begin > bottleneck_end)
            throw ValidationError("bottleneck span outside road extent");
        for (double km : counter_positions_km) {
            int c = cell_of_km(km);
            if (c < 0 || c >= length_cells)
                throw ValidationError("counter position outside road extent");
        }
    }
};

// Per-minute inflow boundary condition at the road origin.
struct InflowRecord {
    int count = 0;
    double speed_kmh = 0.0;
};

struct InflowSchedule {
    std::vector<InflowRecord> minutes;

    int size() const { return static_cast<int>(minutes.size()); }
    const InflowRecord& at(int minute) const { return minutes.at(minute); }

    void validate() const {
        for (size_t i = 0; i < minutes.size(); ++i) {
            const auto& rec = minutes[i];
            if (rec.count < 0)
                throw ValidationError("inflow count negative at minute " + std::to_string(i));
            if (rec.count > 0 && rec.speed_kmh <= 0.0)
                throw ValidationError("inflow speed must be positive when count > 0 (minute " +
                                      std::to_string(i) + ")");
        }
    }
};

}  // namespace tse
