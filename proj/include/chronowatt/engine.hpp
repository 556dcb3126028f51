#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chronowatt/scenario.hpp"

namespace chronowatt {

/// Log-linear histogram of non-negative nanosecond values: 128 sub-buckets
/// per power of two, so quantiles carry under 1% relative error. The maximum
/// is kept exactly.
class DelayHistogram {
  public:
    void add(Nanos v);
    std::uint64_t count() const { return count_; }
    Nanos max() const { return max_; }
    double mean() const { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }
    /// Representative value of the q-quantile, q in [0, 1].
    Nanos quantile(double q) const;
    void merge(const DelayHistogram& other);

  private:
    static constexpr int kSubBits = 7;
    static std::size_t bucket_of(Nanos v);
    static Nanos bucket_low(std::size_t b);

    std::vector<std::uint64_t> buckets_;
    std::uint64_t count_ = 0;
    Nanos max_ = 0;
    double sum_ = 0;
};

/// Ledger columns. Work is rate-proportional energy while Active; Transition
/// holds mid-transition draw plus transition energies.
enum class LedgerColumn : std::uint8_t {
    Active,
    Work,
    LowPowerIdle,
    Off,
    Transition,
    LpiSleep,
    LpiQuiet,
    LpiRefresh,
    LpiWake,
};

inline constexpr int kLedgerColumns = 9;

std::string_view to_string(LedgerColumn c);

struct ComponentLedger {
    std::string id;
    /// nullopt for the chassis common draw.
    std::optional<ComponentKind> kind;
    std::array<double, kLedgerColumns> joules{};

    double total() const;
    double operator[](LedgerColumn c) const { return joules[static_cast<std::size_t>(c)]; }
};

struct DropCounts {
    std::uint64_t buffer_overflow = 0;
    std::uint64_t port_inactive = 0;
    std::uint64_t total() const { return buffer_overflow + port_inactive; }
};

struct ClassStats {
    std::uint64_t delivered = 0;
    std::uint64_t violations = 0;
    Nanos max_added_delay = 0;
};

struct CommandRecord {
    Nanos at = 0;
    std::string action;
    std::string target;
    std::string result;
};

struct SimResult {
    std::string device;
    std::string scenario;
    PolicyMode mode = PolicyMode::PeakOnly;
    double offered_load = 0;
    std::uint32_t packet_size = 0;
    int populated_linecards = 0;
    double capacity_bps = 0;
    Nanos duration = 0;

    double total_energy_j = 0;
    std::vector<ComponentLedger> ledger; // components, then "chassis.common"

    std::uint64_t offered_packets = 0;
    std::uint64_t delivered_packets = 0;
    std::uint64_t residual_packets = 0;
    double offered_bits = 0;
    double delivered_bits = 0;
    DropCounts drops;

    DelayHistogram delay;       // departure - arrival
    DelayHistogram added_delay; // policy-added part
    std::array<ClassStats, kAppClassCount> classes{};
    std::vector<Nanos> delay_samples;       // record_delays only
    std::vector<Nanos> added_delay_samples; // record_delays only
    Nanos min_delay_margin = kMaxNanos;     // min(delay - serialization) over delivered packets

    std::uint64_t events = 0;
    std::uint64_t digest = 0;
    std::uint64_t sleep_requests = 0;
    std::uint64_t wakes = 0;
    std::vector<CommandRecord> commands;

    /// Independent integral of instantaneous_power; energy_audit only.
    std::optional<double> audit_energy_j;

    double average_power_w() const;
    const ComponentLedger* find(std::string_view id) const;
};

enum class Disposition : std::uint8_t { Forwarded, Buffered, Dropped };

std::string_view to_string(Disposition d);

class Simulator {
  public:
    explicit Simulator(const Scenario& scenario);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Dispatches every event strictly before `t` and moves the clock to t.
    void run_until(Nanos t);
    /// Offers one packet at its timestamp (which must not precede the clock).
    Disposition offer_packet(const PacketArrival& packet, int port);
    /// Runs to the scenario duration and closes the books.
    SimResult finish();

    Nanos now() const;
    /// Current LPI phase of a port's PHY (Active when LPI is off).
    LpiPhase lpi_phase(int port) const;
    bool port_functional(int port) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Validates and runs a scenario to completion.
SimResult run(const Scenario& scenario);

} // namespace chronowatt
