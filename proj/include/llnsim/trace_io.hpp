#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llnsim/mobility.hpp"

namespace llnsim {

struct TraceParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Up to 9 significant digits; integral values keep a trailing ".0" so every
// number reads as a decimal.
inline std::string format_movement_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    std::string s(buf);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

}  // namespace detail

// BonnMotion-compatible movements layout: one line per node, repeating
// whitespace-separated triples "t x y" (seconds, meters, meters), node order
// equal to node id order. Lines starting with '#' are comments.
inline void write_traces(const std::vector<MobilityTrace>& traces, std::ostream& out) {
    for (const auto& tr : traces) {
        bool first = true;
        for (const auto& wp : tr.waypoints) {
            if (!first) out << ' ';
            first = false;
            out << detail::format_movement_number(wp.t.seconds()) << ' '
                << detail::format_movement_number(wp.pos.x) << ' '
                << detail::format_movement_number(wp.pos.y);
        }
        out << '\n';
    }
}

inline std::string write_traces_string(const std::vector<MobilityTrace>& traces) {
    std::ostringstream os;
    write_traces(traces, os);
    return os.str();
}

// Parses the movements layout above. Node ids are assigned in line order.
// Toroidal wrap annotations are not representable in the file format, so
// parsed traces carry none.
inline std::vector<MobilityTrace> parse_traces(std::istream& in) {
    std::vector<MobilityTrace> traces;
    std::string line;
    std::uint32_t node = 0;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t i = line.find_first_not_of(" \t\r");
        if (i == std::string::npos) continue;
        if (line[i] == '#') continue;

        std::istringstream ls(line);
        std::vector<double> nums;
        double v;
        while (ls >> v) nums.push_back(v);
        if (!ls.eof())
            throw TraceParseError("trace line " + std::to_string(line_no) + ": malformed number");
        if (nums.empty() || nums.size() % 3 != 0)
            throw TraceParseError("trace line " + std::to_string(line_no) +
                                  ": expected repeating 't x y' triples");
        MobilityTrace tr;
        tr.node_id = node++;
        for (std::size_t k = 0; k < nums.size(); k += 3) {
            const SimTime t = SimTime::from_seconds(nums[k]);
            if (!tr.waypoints.empty() && t <= tr.waypoints.back().t)
                throw TraceParseError("trace line " + std::to_string(line_no) +
                                      ": waypoint times must be strictly increasing");
            tr.waypoints.push_back({t, Vec2{nums[k + 1], nums[k + 2]}});
        }
        traces.push_back(std::move(tr));
    }
    return traces;
}

inline std::vector<MobilityTrace> parse_traces_string(const std::string& text) {
    std::istringstream is(text);
    return parse_traces(is);
}

}  // namespace llnsim
