#pragma once

// CSV schemas. Comma separated, mandatory header row, '.' decimal point,
// '\n' newlines. Readers reject malformed rows with a row/column diagnostic.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tse/counters.hpp"
#include "tse/errors.hpp"
#include "tse/field.hpp"
#include "tse/model.hpp"
#include "tse/pipeline.hpp"

namespace tse {
namespace csv {

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string where(const std::string& path, size_t row) {
    return path + ":" + std::to_string(row);
}

inline double parse_double(const std::string& s, const std::string& path, size_t row,
                           const char* col) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(where(path, row) + ": column '" + col + "' is not a number: '" +
                              s + "'");
    }
}

inline long parse_int(const std::string& s, const std::string& path, size_t row,
                      const char* col) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(where(path, row) + ": column '" + col + "' is not an integer: '" +
                              s + "'");
    }
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    return out;
}

inline void expect_header(const std::string& got, const char* want, const std::string& path) {
    std::string g = got;
    if (!g.empty() && g.back() == '\r') g.pop_back();
    if (g != want)
        throw ValidationError(path + ": expected header '" + std::string(want) + "', got '" + g +
                              "'");
}

}  // namespace detail

// --- patches: minute,segment,mean_velocity_kmh (empty value = missing) ----

inline void write_patches(const std::string& path, const PatchGrid& grid) {
    auto out = detail::open_out(path);
    out << "minute,segment,mean_velocity_kmh\n";
    for (int t = 0; t < grid.minutes; ++t)
        for (int m = 0; m < grid.segments; ++m) {
            out << t << ',' << m << ',';
            if (grid.at(m, t).has_value()) out << fmt(*grid.at(m, t));
            out << '\n';
        }
}

inline PatchGrid read_patches(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    detail::expect_header(line, "minute,segment,mean_velocity_kmh", path);

    struct Entry {
        int t, m;
        std::optional<double> v;
    };
    std::vector<Entry> entries;
    int max_t = -1, max_m = -1;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = detail::split(line);
        if (f.size() != 3)
            throw ValidationError(detail::where(path, row) + ": expected 3 columns");
        int t = static_cast<int>(detail::parse_int(f[0], path, row, "minute"));
        int m = static_cast<int>(detail::parse_int(f[1], path, row, "segment"));
        if (t < 0 || m < 0)
            throw ValidationError(detail::where(path, row) + ": negative index");
        std::optional<double> v;
        if (!f[2].empty()) {
            double x = detail::parse_double(f[2], path, row, "mean_velocity_kmh");
            if (!(x >= 0.0))
                throw ValidationError(detail::where(path, row) +
                                      ": mean_velocity_kmh must be non-negative");
            v = x;
        }
        entries.push_back({t, m, v});
        max_t = std::max(max_t, t);
        max_m = std::max(max_m, m);
    }
    if (entries.empty()) throw ValidationError(path + ": no patch rows");
    PatchGrid grid(max_m + 1, max_t + 1);
    std::vector<bool> seen(grid.values.size(), false);
    for (const Entry& e : entries) {
        size_t idx = static_cast<size_t>(e.m) * grid.minutes + e.t;
        if (seen[idx])
            throw ValidationError(path + ": duplicate patch (minute " + std::to_string(e.t) +
                                  ", segment " + std::to_string(e.m) + ")");
        seen[idx] = true;
        grid.at(e.m, e.t) = e.v;
    }
    for (bool s : seen)
        if (!s) throw ValidationError(path + ": patch rows do not cover the full grid");
    return grid;
}

// --- counters: minute,position_km,count,speed_kmh --------------------------

inline void write_counters(const std::string& path, const CounterTable& table) {
    auto out = detail::open_out(path);
    out << "minute,position_km,count,speed_kmh\n";
    int minutes = table.minutes();
    for (int t = 0; t < minutes; ++t)
        for (size_t c = 0; c < table.positions_km.size(); ++c) {
            if (t >= static_cast<int>(table.readings[c].size()) ||
                !table.readings[c][t].has_value())
                continue;
            const CounterReading& r = *table.readings[c][t];
            out << t << ',' << fmt(table.positions_km[c]) << ',' << r.count << ','
                << fmt(r.speed_kmh) << '\n';
        }
}

inline CounterTable read_counters(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    detail::expect_header(line, "minute,position_km,count,speed_kmh", path);

    std::map<double, std::map<int, CounterReading>> by_position;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = detail::split(line);
        if (f.size() != 4)
            throw ValidationError(detail::where(path, row) + ": expected 4 columns");
        int t = static_cast<int>(detail::parse_int(f[0], path, row, "minute"));
        double pos = detail::parse_double(f[1], path, row, "position_km");
        int count = static_cast<int>(detail::parse_int(f[2], path, row, "count"));
        double speed = detail::parse_double(f[3], path, row, "speed_kmh");
        if (t < 0) throw ValidationError(detail::where(path, row) + ": negative minute");
        if (count < 0) throw ValidationError(detail::where(path, row) + ": negative count");
        if (speed < 0.0)
            throw ValidationError(detail::where(path, row) + ": negative speed_kmh");
        if (count > 0 && speed == 0.0)
            throw ValidationError(detail::where(path, row) +
                                  ": speed_kmh must be positive when count > 0");
        if (by_position[pos].count(t))
            throw ValidationError(detail::where(path, row) + ": duplicate reading");
        by_position[pos][t] = {count, speed};
    }
    CounterTable table;
    for (const auto& [pos, series] : by_position) {
        table.positions_km.push_back(pos);
        int minutes = series.rbegin()->first + 1;
        std::vector<std::optional<CounterReading>> col(minutes);
        for (const auto& [t, r] : series) col[t] = r;
        table.readings.push_back(std::move(col));
    }
    return table;
}

// --- inflow: minute,count,speed_kmh ----------------------------------------

inline void write_inflow(const std::string& path, const InflowSchedule& inflow) {
    auto out = detail::open_out(path);
    out << "minute,count,speed_kmh\n";
    for (int t = 0; t < inflow.size(); ++t)
        out << t << ',' << inflow.at(t).count << ',' << fmt(inflow.at(t).speed_kmh) << '\n';
}

inline InflowSchedule read_inflow(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    detail::expect_header(line, "minute,count,speed_kmh", path);
    std::map<int, InflowRecord> rows;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = detail::split(line);
        if (f.size() != 3)
            throw ValidationError(detail::where(path, row) + ": expected 3 columns");
        int t = static_cast<int>(detail::parse_int(f[0], path, row, "minute"));
        int count = static_cast<int>(detail::parse_int(f[1], path, row, "count"));
        double speed = detail::parse_double(f[2], path, row, "speed_kmh");
        if (t < 0) throw ValidationError(detail::where(path, row) + ": negative minute");
        if (rows.count(t))
            throw ValidationError(detail::where(path, row) + ": duplicate minute");
        rows[t] = {count, speed};
    }
    InflowSchedule inflow;
    if (!rows.empty()) {
        inflow.minutes.resize(rows.rbegin()->first + 1);
        for (const auto& [t, rec] : rows) inflow.minutes[t] = rec;
    }
    inflow.validate();
    return inflow;
}

// --- posterior: minute,p_bn,p,q,r,particle_count ---------------------------
// Count rows carry integers; each minute's summary row carries the literal
// `map` in the particle_count column.

inline void write_posterior(const std::string& path, const std::vector<PosteriorRow>& rows) {
    auto out = detail::open_out(path);
    out << "minute,p_bn,p,q,r,particle_count\n";
    for (const PosteriorRow& r : rows) {
        out << r.minute << ',' << fmt(r.params.p_bn) << ',' << fmt(r.params.p) << ','
            << fmt(r.params.q) << ',' << fmt(r.params.r) << ',';
        if (r.is_map)
            out << "map";
        else
            out << r.count;
        out << '\n';
    }
}

inline std::vector<PosteriorRow> read_posterior(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    detail::expect_header(line, "minute,p_bn,p,q,r,particle_count", path);
    std::vector<PosteriorRow> rows;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto f = detail::split(line);
        if (f.size() != 6)
            throw ValidationError(detail::where(path, row) + ": expected 6 columns");
        PosteriorRow r;
        r.minute = static_cast<int>(detail::parse_int(f[0], path, row, "minute"));
        r.params.p_bn = detail::parse_double(f[1], path, row, "p_bn");
        r.params.p = detail::parse_double(f[2], path, row, "p");
        r.params.q = detail::parse_double(f[3], path, row, "q");
        r.params.r = detail::parse_double(f[4], path, row, "r");
        if (f[5] == "map") {
            r.is_map = true;
        } else {
            r.count = detail::parse_int(f[5], path, row, "particle_count");
            if (r.count < 0)
                throw ValidationError(detail::where(path, row) + ": negative particle_count");
        }
        rows.push_back(r);
    }
    return rows;
}

// --- eval report ------------------------------------------------------------

inline void write_eval(const std::string& path, const EvalReport& rep) {
    auto out = detail::open_out(path);
    out << "mae_missing_kmh,mae_observed_kmh,n_missing,n_observed,skipped\n";
    out << fmt(rep.mae_missing) << ',' << fmt(rep.mae_observed) << ',' << rep.n_missing << ','
        << rep.n_observed << ',' << rep.skipped << '\n';
}

inline EvalReport read_eval(const std::string& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    detail::expect_header(line, "mae_missing_kmh,mae_observed_kmh,n_missing,n_observed,skipped",
                          path);
    if (!std::getline(in, line)) throw ValidationError(path + ": missing report row");
    auto f = detail::split(line);
    if (f.size() != 5) throw ValidationError(path + ":2: expected 5 columns");
    EvalReport rep;
    rep.mae_missing = detail::parse_double(f[0], path, 2, "mae_missing_kmh");
    rep.mae_observed = detail::parse_double(f[1], path, 2, "mae_observed_kmh");
    rep.n_missing = detail::parse_int(f[2], path, 2, "n_missing");
    rep.n_observed = detail::parse_int(f[3], path, 2, "n_observed");
    rep.skipped = detail::parse_int(f[4], path, 2, "skipped");
    return rep;
}

}  // namespace csv
}  // namespace tse
