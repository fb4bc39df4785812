#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "llnsim/mobility_models.hpp"
#include "llnsim/trace_io.hpp"

using namespace llnsim;

TEST_CASE("movements line format") {
    MobilityTrace tr;
    tr.node_id = 0;
    tr.waypoints = {{SimTime{0}, {1, 2}}, {SimTime::from_seconds(10), {3, 4}}};
    REQUIRE(write_traces_string({tr}) == "0.0 1.0 2.0 10.0 3.0 4.0\n");
}

TEST_CASE("comments and blank lines are ignored") {
    const auto traces = parse_traces_string("# a comment\n\n0.0 1.0 2.0 10.0 3.0 4.0\n");
    REQUIRE(traces.size() == 1);
    REQUIRE(traces[0].node_id == 0);
    REQUIRE(traces[0].waypoints.size() == 2);
    REQUIRE(traces[0].waypoints[1].pos == Vec2{3, 4});
}

TEST_CASE("round trip preserves a 50-node rwp trace set") {
    const AreaBounds area{200, 200};
    const SimTime dur = SimTime::from_seconds(3600);
    std::vector<MobilityTrace> traces;
    for (std::uint32_t n = 0; n < 50; ++n) {
        RngStream place(42, StreamPurpose::Placement, n);
        RngStream rng(42, StreamPurpose::Mobility, n);
        const Vec2 start{place.uniform(0, area.width), place.uniform(0, area.height)};
        auto tr = gen_rwp(RwpConfig{}, area, dur, start, rng);
        tr.node_id = n;
        traces.push_back(std::move(tr));
    }
    const auto parsed = parse_traces_string(write_traces_string(traces));
    REQUIRE(parsed.size() == traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        REQUIRE(parsed[i].waypoints.size() == traces[i].waypoints.size());
        for (std::size_t k = 0; k < traces[i].waypoints.size(); ++k) {
            const auto& a = traces[i].waypoints[k];
            const auto& b = parsed[i].waypoints[k];
            REQUIRE(a.t == b.t);  // tick-exact for durations in this range
            // 9 significant digits of text give at worst 5e-9 relative error
            REQUIRE(std::abs(a.pos.x - b.pos.x) <= 5e-9 * std::max(1.0, std::abs(a.pos.x)));
            REQUIRE(std::abs(a.pos.y - b.pos.y) <= 5e-9 * std::max(1.0, std::abs(a.pos.y)));
        }
    }
}

TEST_CASE("decreasing times are rejected with the line number") {
    REQUIRE_THROWS_WITH(parse_traces_string("0.0 1.0 2.0 10.0 3.0 4.0\n5.0 0.0 0.0 5.0 1.0 1.0\n"),
                        Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("malformed lines are rejected with the line number") {
    REQUIRE_THROWS_WITH(parse_traces_string("0.0 1.0\n"),
                        Catch::Matchers::ContainsSubstring("line 1"));
    REQUIRE_THROWS_WITH(parse_traces_string("0.0 1.0 abc\n"),
                        Catch::Matchers::ContainsSubstring("line 1"));
}
