#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chronowatt/lpi.hpp"
#include "chronowatt/policy.hpp"
#include "chronowatt/power_model.hpp"
#include "chronowatt/sla.hpp"
#include "chronowatt/traffic.hpp"

namespace chronowatt {

struct ClassShare {
    AppClass app_class = AppClass::BestEffort;
    double weight = 1;
};

struct TrafficSpec {
    enum class Kind : std::uint8_t { None, Cbr, Poisson, OnOff, Trace, Explicit };

    Kind kind = Kind::None;
    /// Offered load as a fraction of each loaded port's line rate.
    double load = 0;
    std::uint32_t packet_size = 1500;
    /// Per-port class mix; each class gets weight / sum(weights) of the load.
    std::vector<ClassShare> classes{{AppClass::BestEffort, 1}};
    /// ON/OFF shape and sojourn scales. Peak rate is derived from the load
    /// unless `onoff_peak_from_load` is false.
    OnOffSourceParams onoff;
    bool onoff_peak_from_load = true;
    int sources_per_port = 8;
    std::filesystem::path trace;
    int trace_port = 0;
    std::vector<std::pair<int, PacketArrival>> arrivals; // Explicit
    /// Loaded ports; empty means every port of the populated linecards.
    std::vector<int> ports;
    std::uint32_t mtu = kDefaultMtuBytes;
};

std::string_view to_string(TrafficSpec::Kind k);

struct LpiConfig {
    bool enabled = false;
    LpiEndpoint local;
    LpiEndpoint peer;
    RefreshSource refresh_source = RefreshSource::Local;
    /// Per-port (local, peer) overrides.
    std::map<int, std::pair<LpiEndpoint, LpiEndpoint>> per_port;

    std::optional<LpiParams> resolve(int port) const;
};

struct EngineConfig {
    /// Accounting epoch: work energy is integrated over epochs of this length.
    Nanos epoch = kNanosPerMilli;
    Nanos pipeline_latency = 5 * kNanosPerMicro;
    std::uint64_t buffer_bytes = 1'000'000;
    /// Recomputes energy a second way (instantaneous_power over every state
    /// segment) so the ledger can be checked against it.
    bool energy_audit = false;
    /// Keep per-packet delay samples in the result.
    bool record_delays = false;
    std::filesystem::path event_log;
};

struct Scenario {
    std::string name;
    std::string device_ref;
    DeviceModel device;
    TrafficSpec traffic;
    PolicyConfig policy;
    LpiConfig lpi;
    SlaTable sla = default_sla_table();
    EngineConfig engine;
    Nanos duration = 0;
    std::uint64_t seed = 1;
    std::vector<std::string> outputs{"summary"};

    /// Configured idle threshold, or 10 * t_s of the local LPI parameters.
    Nanos idle_threshold() const;
    /// Throws ScenarioError naming the offending field.
    void validate() const;
};

/// Parses a scenario document. Relative paths (device model, trace, SLA
/// policy) resolve against `base_dir`.
Scenario load_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario_file(const std::filesystem::path& path);

/// Minimal scenario on a shipped model: CBR at `load`, peak mode.
Scenario make_scenario(DeviceModel device, double load, Nanos duration, std::uint32_t packet_size = 1500);

} // namespace chronowatt
