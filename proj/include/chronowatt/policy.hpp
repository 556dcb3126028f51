#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronowatt/common.hpp"
#include "chronowatt/power_model.hpp"
#include "chronowatt/sla.hpp"

namespace chronowatt {

enum class PolicyMode : std::uint8_t { PeakOnly, DelayVariable, IdleManagement, Combined };

std::string_view to_string(PolicyMode m);
std::optional<PolicyMode> parse_policy_mode(std::string_view s);

enum class ActionKind : std::uint8_t {
    DeactivateLinecard,
    ActivateLinecard,
    DeactivateFabricPlane,
    ActivateFabricPlane,
    DeactivatePsu,
    ActivatePsu,
    CapacityUpgrade,
};

std::string_view to_string(ActionKind a);
std::optional<ActionKind> parse_action_kind(std::string_view s);
bool is_activation(ActionKind a);

/// Timescale classes of slow network processes.
enum class DurationClass : std::uint8_t {
    Unspecified,
    DynamicCapacityIncrease, // seconds .. minutes
    PlannedCapacityUpgrade,  // minutes .. hours
    PlannedNonOperation,     // minutes .. unbounded
    ShortTermPattern,        // minutes .. hours (day/night)
    LongTermPattern,         // days .. months (weekend/holiday)
};

struct DurationRange {
    Nanos min = 0;
    std::optional<Nanos> max; // nullopt: no limit
};

std::string_view to_string(DurationClass d);
std::optional<DurationClass> parse_duration_class(std::string_view s);
/// Order-of-magnitude bounds for each class: "seconds" = 1 s, "minutes" =
/// 60 s, "hours" = 3600 s, "days" = 86400 s, "months" = 30 days.
DurationRange duration_range(DurationClass d);

struct ScheduledAction {
    Nanos at = 0;
    ActionKind action = ActionKind::DeactivateLinecard;
    std::string target;
    DurationClass expected_duration_class = DurationClass::Unspecified;
};

/// External wake request (wake-on-LAN style) for a linecard or component.
struct Summons {
    Nanos at = 0;
    std::string target;
};

struct PolicyConfig {
    PolicyMode mode = PolicyMode::PeakOnly;
    /// Observed idleness before a sleep request; nullopt means 10 * t_s of
    /// the scenario's LPI parameters.
    std::optional<Nanos> idle_threshold;
    MarginalPolicy marginal_policy = MarginalPolicy::TreatAsNo;
    /// Table-based SLA gating of sleep requests. Disabling it is only useful
    /// as a negative control.
    bool sla_gating = true;
    /// Sliding window over which observed traffic classes count as present.
    Nanos class_window = kNanosPerSecond;
    std::vector<ScheduledAction> schedule;
    /// Targets that start the run Off (idle management only).
    std::vector<std::string> initially_off;
    /// At t=0, switch off fabric planes and PSUs beyond what the populated
    /// fraction of the chassis needs (idle management only).
    bool scale_common_to_fill = false;
    /// Component kinds the delay-variable policy may put to sleep; empty
    /// means every kind that has a LowPowerIdle state.
    std::vector<ComponentKind> sleep_kinds;
    bool summons_enabled = false;
    std::vector<Summons> summons;

    bool delay_variable() const { return mode == PolicyMode::DelayVariable || mode == PolicyMode::Combined; }
    bool idle_management() const { return mode == PolicyMode::IdleManagement || mode == PolicyMode::Combined; }
    bool may_sleep_kind(ComponentKind k) const;
    void validate() const;
};

PolicyConfig policy_from_json(const nlohmann::json& j);

/// What the delay-variable policy can see about one component.
struct ComponentIdleView {
    ComponentKind kind{};
    bool supports_low_power = false;
    /// Active, functional, not transitioning and not under idle management.
    bool eligible = false;
    Nanos last_activity = 0;
    Nanos sleep_duration = 0;
    Nanos wake_duration = 0;
    std::span<const AppClass> classes_present;
};

struct SleepRequest {
    /// Worst-case added delay the sleep can cause: sleep sequence plus wake.
    Nanos wake_chain = 0;
};

/// Requests sleep iff the component has been idle for at least the threshold
/// and every present class tolerates the wake chain (when gating is on).
std::optional<SleepRequest> delay_variable_tick(const ComponentIdleView& view, const PolicyConfig& config,
                                                Nanos idle_threshold, const SlaTable& sla, Nanos now);

struct StateCommand {
    Nanos at = 0;
    ActionKind action{};
    std::string target;
    PowerStateName to = PowerStateName::Off;
};

/// Returns commands for every scheduled action with at <= now, starting at
/// *cursor (the schedule must be sorted by time), and advances the cursor.
std::vector<StateCommand> idle_management_apply(std::span<const ScheduledAction> schedule, std::size_t& cursor,
                                                Nanos now);

enum class TargetCondition : std::uint8_t { Active, LowPowerIdle, Off, BringingUp, Transitioning };

enum class SummonsResult : std::uint8_t { Activation, NoOp, Merged, Rejected };

std::string_view to_string(SummonsResult r);

SummonsResult wake_on_demand(TargetCondition target, const PolicyConfig& config);

} // namespace chronowatt
