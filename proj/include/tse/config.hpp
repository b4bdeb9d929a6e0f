#pragma once

// INI-style run configuration: `key = value` under bracketed sections,
// km/kmh-suffixed keys, '#' or ';' comments.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tse/errors.hpp"
#include "tse/field.hpp"
#include "tse/model.hpp"
#include "tse/pipeline.hpp"
#include "tse/units.hpp"

namespace tse {

class IniFile {
public:
    static IniFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot read config " + path);
        IniFile ini;
        ini.path_ = path;
        std::string line, section;
        size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            std::string s = trim(line);
            if (s.empty() || s[0] == '#' || s[0] == ';') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ValidationError(path + ":" + std::to_string(row) + ": bad section");
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ValidationError(path + ":" + std::to_string(row) + ": expected key = value");
            ini.values_[section + "." + trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
        }
        return ini;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }

    std::string get(const std::string& section, const std::string& key) const {
        auto it = values_.find(section + "." + key);
        if (it == values_.end())
            throw ValidationError(path_ + ": missing [" + section + "] " + key);
        return it->second;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return parse_double(get(section, key), section, key);
    }
    double get_double(const std::string& section, const std::string& key, double dflt) const {
        return has(section, key) ? get_double(section, key) : dflt;
    }
    long get_int(const std::string& section, const std::string& key) const {
        return std::llround(get_double(section, key));
    }
    long get_int(const std::string& section, const std::string& key, long dflt) const {
        return has(section, key) ? get_int(section, key) : dflt;
    }

    std::vector<double> get_list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(get(section, key));
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_double(trim(item), section, key));
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        size_t a = s.find_first_not_of(" \t");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t");
        return s.substr(a, b - a + 1);
    }

    double parse_double(const std::string& s, const std::string& section,
                        const std::string& key) const {
        try {
            size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ValidationError(path_ + ": [" + section + "] " + key + " is not a number: '" +
                                  s + "'");
        }
    }

    std::string path_;
    std::map<std::string, std::string> values_;
};

struct TwinConfig {
    ModelParams theta;
    int minutes = 60;
    double demand_low_per_min = 8.0;
    double demand_high_per_min = 30.0;
    int ramp_start_min = 5;
    int ramp_end_min = 15;
    double inflow_speed_kmh = 90.0;
    MaskSpec mask;
};

struct RunConfig {
    RoadConfig road;
    GridSpec grid;
    PipelineConfig pipeline;
    TwinConfig twin;
};

namespace detail {

inline GridSpec::Dim parse_grid_dim(const IniFile& ini, const std::string& key) {
    auto v = ini.get_list("grid", key);
    if (v.size() != 3)
        throw ValidationError("[grid] " + key + " needs 'lower, upper, step'");
    return {v[0], v[1], v[2]};
}

}  // namespace detail

inline RunConfig load_run_config(const std::string& path) {
    IniFile ini = IniFile::load(path);
    RunConfig cfg;

    double length_km = ini.get_double("road", "length_km");
    cfg.road.length_cells = static_cast<int>(std::llround(length_km * 1000.0 / kCellLengthM));
    if (cfg.road.length_cells % kCellsPerSegment != 0)
        throw ValidationError("[road] length_km must be a whole number of 0.5 km segments");
    cfg.road.lanes = static_cast<int>(ini.get_int("road", "lanes"));
    int fast = kmh_to_cells(ini.get_double("road", "fast_limit_kmh"));
    int slow = kmh_to_cells(ini.get_double("road", "slow_limit_kmh"));
    cfg.road.speed_limit_cells.assign(cfg.road.lanes, slow);
    if (!cfg.road.speed_limit_cells.empty()) cfg.road.speed_limit_cells.back() = fast;
    cfg.road.bottleneck_begin = cell_of_km(ini.get_double("road", "bottleneck_start_km"));
    cfg.road.bottleneck_end = cell_of_km(ini.get_double("road", "bottleneck_end_km"));
    cfg.road.counter_positions_km = ini.get_list("road", "counters_km");
    cfg.road.validate();

    cfg.grid.p_bn = detail::parse_grid_dim(ini, "p_bn");
    cfg.grid.p = detail::parse_grid_dim(ini, "p");
    cfg.grid.q = detail::parse_grid_dim(ini, "q");
    cfg.grid.r = detail::parse_grid_dim(ini, "r");

    cfg.pipeline.window_minutes = static_cast<int>(ini.get_int("pipeline", "window_minutes", 30));
    cfg.pipeline.warmup_minutes = static_cast<int>(ini.get_int("pipeline", "warmup_minutes", 10));
    cfg.pipeline.cadence_minutes = static_cast<int>(ini.get_int("pipeline", "cadence_minutes", 1));
    cfg.pipeline.seed = static_cast<std::uint64_t>(ini.get_int("pipeline", "seed", 1));
    cfg.pipeline.particles_per_scenario =
        ini.get_int("pipeline", "particles_per_scenario", 1);
    if (cfg.pipeline.window_minutes < 1 || cfg.pipeline.warmup_minutes < 0 ||
        cfg.pipeline.cadence_minutes < 1 || cfg.pipeline.particles_per_scenario < 1)
        throw ValidationError("[pipeline] window/cadence must be >= 1, warmup >= 0, "
                              "particles >= 1");

    cfg.twin.theta = {ini.get_double("twin", "theta_p_bn"), ini.get_double("twin", "theta_p"),
                      ini.get_double("twin", "theta_q"), ini.get_double("twin", "theta_r")};
    cfg.twin.theta.validate();
    cfg.twin.minutes = static_cast<int>(ini.get_int("twin", "minutes", 60));
    cfg.twin.demand_low_per_min = ini.get_double("twin", "demand_low_per_min", 8.0);
    cfg.twin.demand_high_per_min = ini.get_double("twin", "demand_high_per_min", 30.0);
    cfg.twin.ramp_start_min = static_cast<int>(ini.get_int("twin", "ramp_start_min", 5));
    cfg.twin.ramp_end_min = static_cast<int>(ini.get_int("twin", "ramp_end_min", 15));
    cfg.twin.inflow_speed_kmh = ini.get_double("twin", "inflow_speed_kmh", 90.0);
    cfg.twin.mask.threshold_kmh = ini.get_double("twin", "mask_threshold_kmh", 20.0);
    cfg.twin.mask.mask_prob_below = ini.get_double("twin", "mask_prob_below", 0.0);
    cfg.twin.mask.mask_prob_above = ini.get_double("twin", "mask_prob_above", 0.0);
    cfg.twin.mask.noise_sigma_kmh = ini.get_double("twin", "noise_sigma_kmh", 0.0);
    cfg.twin.mask.validate();
    if (cfg.twin.minutes < 1 || cfg.twin.ramp_start_min > cfg.twin.ramp_end_min)
        throw ValidationError("[twin] minutes >= 1 and ramp_start <= ramp_end required");

    return cfg;
}

// Piecewise-linear demand ramp between the low and high rates.
inline InflowSchedule demand_schedule(const TwinConfig& twin) {
    InflowSchedule inflow;
    inflow.minutes.resize(twin.minutes);
    for (int t = 0; t < twin.minutes; ++t) {
        double rate;
        if (t <= twin.ramp_start_min) {
            rate = twin.demand_low_per_min;
        } else if (t >= twin.ramp_end_min) {
            rate = twin.demand_high_per_min;
        } else {
            double w = static_cast<double>(t - twin.ramp_start_min) /
                       static_cast<double>(twin.ramp_end_min - twin.ramp_start_min);
            rate = twin.demand_low_per_min + w * (twin.demand_high_per_min - twin.demand_low_per_min);
        }
        inflow.minutes[t] = {static_cast<int>(std::lround(rate)), twin.inflow_speed_kmh};
    }
    inflow.validate();
    return inflow;
}

}  // namespace tse
