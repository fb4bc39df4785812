#pragma once

#include <cstdint>
#include <stdexcept>

#include "llnsim/radio_types.hpp"
#include "llnsim/sim_time.hpp"

namespace llnsim {

// Sky-class current draws. Energy of a bucket is
// ticks * current_mA * voltage / ticks_per_second, in millijoules.
struct PowerModel {
    double i_tx_ma = 19.5;
    double i_listen_ma = 21.5;
    double i_cpu_ma = 1.8;
    double i_lpm_ma = 0.0545;
    double voltage = 3.0;

    void validate() const {
        if (i_tx_ma <= 0 || i_listen_ma <= 0 || i_cpu_ma <= 0 || i_lpm_ma <= 0 || voltage <= 0)
            throw std::invalid_argument("PowerModel: currents and voltage must be > 0");
        if (!(i_listen_ma > i_cpu_ma && i_cpu_ma > i_lpm_ma))
            throw std::invalid_argument("PowerModel: expected i_listen > i_cpu > i_lpm");
    }
};

enum class McuState : std::uint8_t { Cpu, Lpm };

// Tick counters per node. The MCU buckets partition elapsed time, as do the
// radio buckets; both partitions are checked exactly at run end.
struct PowerLedger {
    std::int64_t cpu_ticks = 0;
    std::int64_t lpm_ticks = 0;
    std::int64_t tx_ticks = 0;
    std::int64_t listen_ticks = 0;
    std::int64_t off_ticks = 0;

    void account_mcu(McuState s, std::int64_t ticks) {
        if (ticks < 0) throw std::logic_error("PowerLedger: negative duration");
        (s == McuState::Cpu ? cpu_ticks : lpm_ticks) += ticks;
    }

    void account_radio(RadioState s, std::int64_t ticks) {
        if (ticks < 0) throw std::logic_error("PowerLedger: negative duration");
        switch (s) {
            case RadioState::Transmit: tx_ticks += ticks; break;
            case RadioState::Listen: listen_ticks += ticks; break;
            case RadioState::Off: off_ticks += ticks; break;
        }
    }

    // Derives the LPM remainder once a run of `elapsed` ticks ends.
    void finalize_mcu(std::int64_t elapsed) {
        if (cpu_ticks > elapsed)
            throw std::logic_error("PowerLedger: cpu ticks exceed elapsed time");
        lpm_ticks = elapsed - cpu_ticks;
    }

    bool mcu_partition_ok(std::int64_t elapsed) const { return cpu_ticks + lpm_ticks == elapsed; }
    bool radio_partition_ok(std::int64_t elapsed) const {
        return tx_ticks + listen_ticks + off_ticks == elapsed;
    }
};

struct EnergyBreakdown {
    double cpu_mj = 0.0;
    double lpm_mj = 0.0;
    double tx_mj = 0.0;
    double listen_mj = 0.0;
    double total_mj = 0.0;
};

inline double bucket_energy_mj(std::int64_t ticks, double current_ma, double voltage) {
    return static_cast<double>(ticks) * current_ma * voltage / static_cast<double>(kTicksPerSecond);
}

// Off ticks draw nothing on the radio side; the MCU's LPM bucket covers them.
inline EnergyBreakdown energy_mj(const PowerLedger& l, const PowerModel& m) {
    EnergyBreakdown e;
    e.cpu_mj = bucket_energy_mj(l.cpu_ticks, m.i_cpu_ma, m.voltage);
    e.lpm_mj = bucket_energy_mj(l.lpm_ticks, m.i_lpm_ma, m.voltage);
    e.tx_mj = bucket_energy_mj(l.tx_ticks, m.i_tx_ma, m.voltage);
    e.listen_mj = bucket_energy_mj(l.listen_ticks, m.i_listen_ma, m.voltage);
    e.total_mj = e.cpu_mj + e.lpm_mj + e.tx_mj + e.listen_mj;
    return e;
}

inline double avg_power_mw(const PowerLedger& l, const PowerModel& m, std::int64_t elapsed_ticks) {
    if (elapsed_ticks <= 0) throw std::invalid_argument("avg_power_mw: elapsed must be > 0");
    return energy_mj(l, m).total_mj /
           (static_cast<double>(elapsed_ticks) / static_cast<double>(kTicksPerSecond));
}

// delivered/sent; vacuously 1.0 for nodes that sent nothing.
inline double pdr(std::uint64_t sent, std::uint64_t received) {
    if (received > sent) throw std::logic_error("pdr: received exceeds sent");
    if (sent == 0) return 1.0;
    return static_cast<double>(received) / static_cast<double>(sent);
}

}  // namespace llnsim
