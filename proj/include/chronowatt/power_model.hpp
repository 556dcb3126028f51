#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronowatt/common.hpp"

namespace chronowatt {

enum class PowerStateName : std::uint8_t { Active, LowPowerIdle, Off };

enum class ComponentKind : std::uint8_t {
    PHY_Link,
    Serdes,
    NPU_Core,
    SRAM_Bank,
    EmbeddedCPU,
    CentralCPU,
    FabricPlane,
    PowerSupply,
    LookupEngine,
    Buffer_Memory,
};

inline constexpr int kComponentKindCount = 10;

std::string_view to_string(PowerStateName s);
std::string_view to_string(ComponentKind k);
std::optional<ComponentKind> parse_component_kind(std::string_view s);

struct PowerStateSpec {
    PowerStateName name = PowerStateName::Active;
    double static_draw_w = 0;
    double per_bit_energy_j = 0;    // Active only
    double per_packet_energy_j = 0; // Active only
    bool functional = false;
};

struct TransitionSpec {
    PowerStateName from = PowerStateName::Active;
    PowerStateName to = PowerStateName::Active;
    Nanos duration = 0;
    double energy_j = 0;
};

/// Which traffic a component sees: its own port, its whole linecard, or the
/// whole chassis split evenly over the active instances of its kind.
enum class TrafficScope : std::uint8_t { Port, Linecard, Chassis };

struct ComponentSpec {
    std::string name;
    ComponentKind kind = ComponentKind::NPU_Core;
    std::vector<PowerStateSpec> states;
    std::vector<TransitionSpec> transitions;
    double budget_share = 0;

    // Calibration inputs. LowPowerIdle draw is either a fraction of the
    // calibrated Active static draw or an absolute floor in watts.
    std::optional<double> low_power_fraction;
    std::optional<double> low_power_draw_w;
    double off_draw_w = 0;

    TrafficScope scope = TrafficScope::Linecard;
    int port = -1; // linecard-local port index for PHY_Link components
    double scope_capacity_bps = 0;

    const PowerStateSpec* state(PowerStateName name) const;
    PowerStateSpec* state(PowerStateName name);
    const TransitionSpec* transition(PowerStateName from, PowerStateName to) const;
    bool supports(PowerStateName name) const { return state(name) != nullptr; }
    const PowerStateSpec& active() const;
    void validate() const;
};

struct LinecardSpec {
    std::string name;
    int ports = 0;
    double port_rate_bps = 0;
    std::vector<ComponentSpec> components;

    double capacity_bps() const { return ports * port_rate_bps; }
    /// Off -> Active bringup: kinds come up in sequence, instances of one kind
    /// in parallel, so the chain is the sum over kinds of the slowest instance.
    Nanos bringup_chain() const;
};

struct ChassisSpec {
    int linecard_slots = 0;
    std::vector<LinecardSpec> populated;
    std::vector<ComponentSpec> fabric_planes;
    std::vector<ComponentSpec> power_supplies;
    double psu_efficiency = 1.0;
    double common_draw_w = 0;

    double capacity_bps() const;
    void validate() const;
};

/// Device-level load elasticity: piecewise-linear (load, watts) anchors.
struct ElasticityCalibration {
    std::vector<std::pair<double, double>> anchors;
    double capacity_bps = 0;

    void validate() const;
};

double device_power(const ElasticityCalibration& cal, double load);

/// Per-packet calibration: full-rate power with small_bytes packets exceeds
/// full-rate power with reference_bytes packets by `uplift` of full-load power.
struct PacketSizeCalibration {
    std::uint32_t reference_bytes = 1500;
    std::uint32_t small_bytes = 64;
    double uplift = 0.05;
};

using KindShares = std::map<ComponentKind, double>;

/// Default linecard budget split. Only the 10% PHY figure is anchored in
/// published measurements; the rest is an editable engineering estimate.
KindShares default_kind_shares();

/// Piecewise-linear shaping of the bit-rate term, g(0) = 0, g(1) = 1.
/// Identity for a device whose elasticity is linear in load.
struct WorkCurve {
    std::vector<std::pair<double, double>> points{{0.0, 0.0}, {1.0, 1.0}};
    double operator()(double utilization) const;
};

struct ComponentCoefficients {
    std::string name;
    ComponentKind kind{};
    double static_draw_w = 0; // DC side (PSUs: wall side)
    double per_bit_energy_j = 0;
    double per_packet_energy_j = 0;
};

struct CalibrationResult {
    std::vector<ComponentCoefficients> coefficients; // chassis iteration order
    WorkCurve work_curve;
};

/// Distributes device-level power over components so that, at the wall,
/// (a) zero-load draw equals device_power(cal, 0), (b) full load with
/// reference packets equals device_power(cal, 1), and (c) each kind's share
/// of full-load power equals its budget share. Writes the coefficients into
/// `chassis` and returns them. The chassis must be fully populated.
CalibrationResult calibrate_components(ChassisSpec& chassis, const ElasticityCalibration& cal,
                                       const KindShares& shares, const PacketSizeCalibration& packets = {});

// --- runtime view ----------------------------------------------------------

/// Instantaneous condition of one component. When `transition_to` is set the
/// component is mid-transition and draws the larger endpoint static draw.
/// `active_fraction`, when set, overrides the draw with that fraction of the
/// Active static draw (LPI phases of a PHY).
struct ComponentStatus {
    PowerStateName state = PowerStateName::Active;
    std::optional<PowerStateName> transition_to;
    std::optional<double> active_fraction;
    double bitrate_bps = 0;
    double packet_rate = 0;
};

struct FlatComponent {
    const ComponentSpec* spec = nullptr;
    int linecard = -1;    // -1 for chassis-level components
    int global_port = -1; // PHYs only
    std::string id;       // "lc3.npu0", "fabric1", "psu0"
};

/// Immutable, calibrated device: chassis hierarchy plus a flat component index.
class DeviceModel {
  public:
    DeviceModel() = default;
    DeviceModel(std::string name, ChassisSpec chassis, ElasticityCalibration cal, KindShares shares,
                PacketSizeCalibration packets);

    DeviceModel(const DeviceModel& other);
    DeviceModel& operator=(const DeviceModel& other);
    DeviceModel(DeviceModel&&) noexcept = default;
    DeviceModel& operator=(DeviceModel&&) noexcept = default;

    const std::string& name() const { return name_; }
    const ChassisSpec& chassis() const { return chassis_; }
    const ElasticityCalibration& calibration() const { return cal_; }
    const KindShares& shares() const { return shares_; }
    const PacketSizeCalibration& packet_calibration() const { return packets_; }
    const WorkCurve& work_curve() const { return curve_; }
    std::span<const FlatComponent> components() const { return flat_; }
    std::optional<std::size_t> find(std::string_view id) const;

    int port_count() const { return static_cast<int>(port_linecard_.size()); }
    int port_linecard(int port) const { return port_linecard_[port]; }
    double port_rate_bps(int port) const;
    double capacity_bps() const { return chassis_.capacity_bps(); }

    /// Keeps the first `count` linecards. Calibration is unchanged, so common
    /// infrastructure keeps its full-chassis draw.
    DeviceModel with_populated(int count) const;

    /// 1 / PSU efficiency for converter-fed components, 1 for PSUs.
    double wall_factor(std::size_t component) const;
    /// Wall-referred static draw of a component in a state.
    double state_draw_w(std::size_t component, PowerStateName state) const;
    /// Wall-referred rate-proportional power of an Active component.
    double work_power_w(std::size_t component, double bitrate_bps, double packet_rate) const;
    /// Wall-referred draw of one component given its status.
    double component_power_w(std::size_t component, const ComponentStatus& status) const;

  private:
    void index();

    std::string name_;
    ChassisSpec chassis_;
    ElasticityCalibration cal_;
    KindShares shares_;
    PacketSizeCalibration packets_;
    WorkCurve curve_;
    std::vector<FlatComponent> flat_;
    std::vector<int> port_linecard_;
};

/// Device wall power: sum of component draws (converter-fed ones divided by
/// PSU efficiency) plus the chassis common draw.
double instantaneous_power(const DeviceModel& model, std::span<const ComponentStatus> status);

/// Recomputes each kind's share of full-load wall power from calibrated
/// coefficients (common draw is attributed to PowerSupply).
KindShares recompute_shares(const DeviceModel& model);

// --- model files -----------------------------------------------------------

/// Builds and calibrates a model from its JSON document.
DeviceModel load_device_model(const nlohmann::json& doc);
DeviceModel load_device_model_file(const std::filesystem::path& path);

/// Resolves a shipped model name ("t1600-like") against CHRONOWATT_MODEL_DIR,
/// then the build-time model directory.
std::filesystem::path resolve_model_path(const std::string& name_or_path);

} // namespace chronowatt
