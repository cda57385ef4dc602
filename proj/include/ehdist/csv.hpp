// CSV serialization helpers. Numbers carry 9 significant digits.
#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "ehdist/sim.hpp"

namespace ehdist {

inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void write_csv_row(std::ostream &out, const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

/// Trace export: slot, arrival, battery_before, theta, power, distortion.
inline void write_trace_csv(std::ostream &out, const std::vector<TraceRecord> &trace) {
    write_csv_row(out, {"slot", "arrival", "battery_before", "theta", "power", "distortion"});
    for (const auto &rec : trace) {
        write_csv_row(out, {std::to_string(rec.slot), fmt9(rec.arrival),
                            fmt9(rec.battery_before), fmt9(rec.decision.theta),
                            fmt9(rec.decision.power), fmt9(rec.distortion)});
    }
}

} // namespace ehdist
