#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "llnsim/power.hpp"

using namespace llnsim;

TEST_CASE("energy formula matches hand-computed values") {
    const PowerModel m;
    PowerLedger l;

    SECTION("empty ledger is 0 mJ") {
        REQUIRE(energy_mj(l, m).total_mj == 0.0);
    }
    SECTION("one second of transmit is 58.5 mJ") {
        l.tx_ticks = kTicksPerSecond;
        const auto e = energy_mj(l, m);
        REQUIRE(std::abs(e.tx_mj - 58.5) <= 1e-9 * 58.5);
        REQUIRE(std::abs(e.total_mj - 58.5) <= 1e-9 * 58.5);
    }
    SECTION("one second of lpm is 0.16350 mJ") {
        l.lpm_ticks = kTicksPerSecond;
        const auto e = energy_mj(l, m);
        REQUIRE(std::abs(e.lpm_mj - 0.16350) <= 1e-9 * 0.16350);
    }
    SECTION("buckets sum to the total") {
        l.cpu_ticks = 1000;
        l.lpm_ticks = 2500;
        l.tx_ticks = 300;
        l.listen_ticks = 12345;
        const auto e = energy_mj(l, m);
        REQUIRE(std::abs(e.cpu_mj + e.lpm_mj + e.tx_mj + e.listen_mj - e.total_mj) <=
                1e-9 * e.total_mj);
    }
    SECTION("energy is linear in every bucket") {
        l.cpu_ticks = 100;
        l.tx_ticks = 200;
        l.listen_ticks = 300;
        l.lpm_ticks = 400;
        const double base = energy_mj(l, m).total_mj;
        PowerLedger dbl = l;
        dbl.cpu_ticks *= 2;
        dbl.tx_ticks *= 2;
        dbl.listen_ticks *= 2;
        dbl.lpm_ticks *= 2;
        REQUIRE(std::abs(energy_mj(dbl, m).total_mj - 2 * base) <= 1e-9 * base);
    }
    SECTION("listen dominates cpu for equal ticks") {
        PowerLedger a, b;
        a.listen_ticks = 5000;
        b.cpu_ticks = 5000;
        REQUIRE(energy_mj(a, m).total_mj > energy_mj(b, m).total_mj);
    }
}

TEST_CASE("average power is total energy over elapsed seconds") {
    const PowerModel m;
    PowerLedger l;
    l.tx_ticks = kTicksPerSecond;  // 58.5 mJ
    REQUIRE(std::abs(avg_power_mw(l, m, 10 * kTicksPerSecond) - 5.85) < 1e-9);
    PowerLedger zero;
    REQUIRE(avg_power_mw(zero, m, kTicksPerSecond) == 0.0);
}

TEST_CASE("ledger accounting is additive and partitions hold") {
    PowerLedger l;
    l.account_radio(RadioState::Transmit, 100);
    l.account_radio(RadioState::Transmit, 100);
    REQUIRE(l.tx_ticks == 200);
    l.account_radio(RadioState::Listen, 55);
    l.account_radio(RadioState::Off, 45);
    REQUIRE(l.radio_partition_ok(300));

    l.account_mcu(McuState::Cpu, 70);
    l.finalize_mcu(300);
    REQUIRE(l.mcu_partition_ok(300));
    REQUIRE(l.lpm_ticks == 230);

    PowerLedger bad;
    bad.account_mcu(McuState::Cpu, 500);
    REQUIRE_THROWS_AS(bad.finalize_mcu(300), std::logic_error);
    REQUIRE_THROWS_AS(l.account_radio(RadioState::Off, -1), std::logic_error);
}

TEST_CASE("pdr definition and edge cases") {
    REQUIRE(pdr(10, 9) == 0.9);
    REQUIRE(pdr(0, 0) == 1.0);
    REQUIRE(pdr(4, 4) == 1.0);
    REQUIRE_THROWS_AS(pdr(3, 4), std::logic_error);
}

TEST_CASE("power model sanity ordering is enforced") {
    PowerModel m;
    m.validate();
    m.i_cpu_ma = 30.0;  // would exceed listen draw
    REQUIRE_THROWS_AS(m.validate(), std::invalid_argument);
}
