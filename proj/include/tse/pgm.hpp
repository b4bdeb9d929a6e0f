#pragma once

// Plain-text PGM (P2) heatmaps: one pixel per patch, rows are segments, columns
// are minutes. Velocity scales linearly to 0-255 over [0, vmax]; missing
// patches render as 0, with a sidecar mask (255 present, 0 missing).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "tse/errors.hpp"
#include "tse/field.hpp"

namespace tse {

inline void write_pgm(const std::string& path, const PatchGrid& grid, double vmax_kmh) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << "P2\n" << grid.minutes << ' ' << grid.segments << "\n255\n";
    for (int m = 0; m < grid.segments; ++m) {
        for (int t = 0; t < grid.minutes; ++t) {
            int pix = 0;
            if (grid.at(m, t).has_value()) {
                double scaled = std::clamp(*grid.at(m, t), 0.0, vmax_kmh) / vmax_kmh * 255.0;
                pix = static_cast<int>(std::lround(scaled));
            }
            out << pix << (t + 1 == grid.minutes ? '\n' : ' ');
        }
    }
}

inline void write_mask_pgm(const std::string& path, const PatchGrid& grid) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << "P2\n" << grid.minutes << ' ' << grid.segments << "\n255\n";
    for (int m = 0; m < grid.segments; ++m)
        for (int t = 0; t < grid.minutes; ++t)
            out << (grid.at(m, t).has_value() ? 255 : 0)
                << (t + 1 == grid.minutes ? '\n' : ' ');
}

}  // namespace tse
