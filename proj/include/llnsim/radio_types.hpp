#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "llnsim/geometry.hpp"
#include "llnsim/messages.hpp"
#include "llnsim/sim_time.hpp"

namespace llnsim {

enum class FrameKind : std::uint8_t {
    Dio, Dao, Dis, Rs, Ra, Ns, Na,
    Data,
    AckStrobe,  // link-layer acknowledgment strobe
    Probe,      // low-power-transmit wakeup probe
};

inline const char* to_string(FrameKind k) {
    switch (k) {
        case FrameKind::Dio: return "dio";
        case FrameKind::Dao: return "dao";
        case FrameKind::Dis: return "dis";
        case FrameKind::Rs: return "rs";
        case FrameKind::Ra: return "ra";
        case FrameKind::Ns: return "ns";
        case FrameKind::Na: return "na";
        case FrameKind::Data: return "data";
        case FrameKind::AckStrobe: return "ack";
        case FrameKind::Probe: return "probe";
    }
    return "?";
}

inline bool is_rpl_control(FrameKind k) {
    switch (k) {
        case FrameKind::Dio: case FrameKind::Dao: case FrameKind::Dis:
        case FrameKind::Rs: case FrameKind::Ra: case FrameKind::Ns: case FrameKind::Na:
            return true;
        default:
            return false;
    }
}

// On-air time of a frame: ceil(bits / bitrate) in clock ticks.
inline SimTime airtime(std::uint32_t size_bytes, std::int64_t bitrate_bps) {
    const std::int64_t bits = static_cast<std::int64_t>(size_bytes) * 8;
    const std::int64_t num = bits * kTicksPerSecond;
    return SimTime{(num + bitrate_bps - 1) / bitrate_bps};
}

struct Frame {
    NodeId src = 0;
    NodeId dst = kBroadcast;
    FrameKind kind = FrameKind::Data;
    std::uint32_t size_bytes = 0;
    std::uint32_t mac_seq = 0;  // per-sender datagram counter, for duplicate suppression
    std::variant<std::monostate, ControlMsg, DataHeader> body;

    bool broadcast() const { return dst == kBroadcast; }
    const ControlMsg& control() const { return std::get<ControlMsg>(body); }
    const DataHeader& data() const { return std::get<DataHeader>(body); }
};

// Unit Disk Graph Medium: delivery possible exactly within tx_range,
// interference within interference_range.
struct UdgmConfig {
    double tx_range = 100.0;
    double interference_range = 100.0;
    double success_ratio = 1.0;

    void validate() const {
        if (!(tx_range > 0.0) || interference_range < tx_range)
            throw std::invalid_argument("UdgmConfig: need 0 < tx_range <= interference_range");
        if (success_ratio < 0.0 || success_ratio > 1.0)
            throw std::invalid_argument("UdgmConfig: success_ratio must be in [0,1]");
    }
};

enum class RdcMode : std::uint8_t { Lpl, Lpt, AlwaysOn, Off };

struct RdcConfig {
    RdcMode mode = RdcMode::Lpl;
    double channel_check_rate_hz = 8.0;
    SimTime wake_sample = SimTime::from_ms(4.0);
    SimTime strobe_gap = SimTime::from_ms(0.4);
    SimTime rx_guard = SimTime::from_ms(2.0);       // listen-on after carrier loss
    SimTime probe_window = SimTime::from_ms(4.0);   // LPT: listen-on after own probe
    int max_mac_transmissions = 3;                  // strobe trains per unicast send
    int max_cca_backoffs = 3;

    SimTime wake_interval() const {
        return SimTime{static_cast<std::int64_t>(
            static_cast<double>(kTicksPerSecond) / channel_check_rate_hz + 0.5)};
    }
    void validate() const {
        if (!(channel_check_rate_hz > 0.0))
            throw std::invalid_argument("RdcConfig: channel_check_rate must be > 0");
        if (mode == RdcMode::Lpl && wake_sample >= wake_interval())
            throw std::invalid_argument("RdcConfig: wake_sample_duration must be < wake interval");
    }
};

// Frame sizes in bytes; 802.15.4-class defaults, overridable in config.
struct FrameSizes {
    std::uint32_t dio = 76;
    std::uint32_t dao = 44;
    std::uint32_t dis = 6;
    std::uint32_t data = 60;
    std::uint32_t strobe = 12;  // ack strobes and LPT probes
    std::uint32_t nd = 40;      // RS/RA/NS/NA

    std::uint32_t of(FrameKind k) const {
        switch (k) {
            case FrameKind::Dio: return dio;
            case FrameKind::Dao: return dao;
            case FrameKind::Dis: return dis;
            case FrameKind::Data: return data;
            case FrameKind::AckStrobe: case FrameKind::Probe: return strobe;
            default: return nd;
        }
    }
};

struct RadioConfig {
    UdgmConfig udgm;
    RdcConfig rdc;
    FrameSizes sizes;
    std::int64_t bitrate_bps = 250000;

    SimTime frame_airtime(FrameKind k) const { return airtime(sizes.of(k), bitrate_bps); }
    void validate() const {
        udgm.validate();
        rdc.validate();
        if (bitrate_bps <= 0) throw std::invalid_argument("RadioConfig: bitrate must be > 0");
    }
};

enum class RadioState : std::uint8_t { Off, Listen, Transmit };

// Unit-disk adjacency: unordered pair (i,j) is connected iff their Euclidean
// distance is within tx_range (boundary inclusive).
inline std::vector<std::pair<NodeId, NodeId>> neighbors_in_range(const std::vector<Vec2>& positions,
                                                                 const UdgmConfig& cfg) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < positions.size(); ++i)
        for (std::size_t j = i + 1; j < positions.size(); ++j)
            if (distance(positions[i], positions[j]) <= cfg.tx_range)
                edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    return edges;
}

inline const char* to_string(RadioState s) {
    switch (s) {
        case RadioState::Off: return "off";
        case RadioState::Listen: return "listen";
        case RadioState::Transmit: return "transmit";
    }
    return "?";
}

}  // namespace llnsim
