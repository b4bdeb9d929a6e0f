#pragma once

#include <algorithm>
#include <cmath>

namespace tse {

// Cell automaton resolution: 10 m cells, 1.8 s steps, so one cell per step
// equals exactly 20 km/h. Patches are 500 m x 1 minute (50 cells, 33 steps).
inline constexpr double kCellLengthM = 10.0;
inline constexpr double kStepSeconds = 1.8;
inline constexpr double kKmhPerCellStep = 20.0;
inline constexpr int kStepsPerMinute = 33;
inline constexpr int kCellsPerSegment = 50;

inline int kmh_to_cells(double v_kmh) {
    long c = std::lround(v_kmh / kKmhPerCellStep);
    return static_cast<int>(std::max(0L, c));
}

inline double cells_to_kmh(int cells_per_step) {
    return kKmhPerCellStep * cells_per_step;
}

inline int cell_of_km(double km) {
    return static_cast<int>(std::llround(km * 1000.0 / kCellLengthM));
}

inline int segment_of_cell(int cell) { return cell / kCellsPerSegment; }

inline int minute_of_step(int time_step) { return time_step / kStepsPerMinute; }

}  // namespace tse
