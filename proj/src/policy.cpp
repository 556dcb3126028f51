#include "chronowatt/policy.hpp"

#include <algorithm>

namespace chronowatt {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<std::string_view, E>, N>& table, std::string_view s)
{
    for (const auto& [name, value] : table)
        if (name == s)
            return value;
    return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& table, E v)
{
    for (const auto& [name, value] : table)
        if (value == v)
            return name;
    return "?";
}

constexpr std::array<std::pair<std::string_view, PolicyMode>, 4> kModes{{
    {"peak_only", PolicyMode::PeakOnly},
    {"delay_variable", PolicyMode::DelayVariable},
    {"idle_management", PolicyMode::IdleManagement},
    {"combined", PolicyMode::Combined},
}};

constexpr std::array<std::pair<std::string_view, ActionKind>, 7> kActions{{
    {"deactivate_linecard", ActionKind::DeactivateLinecard},
    {"activate_linecard", ActionKind::ActivateLinecard},
    {"deactivate_fabric_plane", ActionKind::DeactivateFabricPlane},
    {"activate_fabric_plane", ActionKind::ActivateFabricPlane},
    {"deactivate_psu", ActionKind::DeactivatePsu},
    {"activate_psu", ActionKind::ActivatePsu},
    {"capacity_upgrade", ActionKind::CapacityUpgrade},
}};

constexpr std::array<std::pair<std::string_view, DurationClass>, 6> kDurationClasses{{
    {"unspecified", DurationClass::Unspecified},
    {"dynamic_capacity_increase", DurationClass::DynamicCapacityIncrease},
    {"planned_capacity_upgrade", DurationClass::PlannedCapacityUpgrade},
    {"planned_non_operation", DurationClass::PlannedNonOperation},
    {"short_term_pattern", DurationClass::ShortTermPattern},
    {"long_term_pattern", DurationClass::LongTermPattern},
}};

constexpr std::array<std::pair<std::string_view, SummonsResult>, 4> kSummons{{
    {"activation", SummonsResult::Activation},
    {"noop", SummonsResult::NoOp},
    {"merged", SummonsResult::Merged},
    {"rejected", SummonsResult::Rejected},
}};

constexpr Nanos kMinute = 60 * kNanosPerSecond;
constexpr Nanos kHour = 60 * kMinute;
constexpr Nanos kDay = 24 * kHour;

Nanos offset_from_json(const json& v, const std::string& field)
{
    if (v.is_number_integer())
        return v.get<Nanos>();
    if (v.is_string()) {
        try {
            return parse_iso_duration(v.get<std::string>());
        } catch (const Error& e) {
            throw ScenarioError(field, e.what());
        }
    }
    throw ScenarioError(field, "expected nanoseconds or an ISO-8601 duration");
}

} // namespace

std::string_view to_string(PolicyMode m) { return name_of(kModes, m); }
std::optional<PolicyMode> parse_policy_mode(std::string_view s) { return lookup(kModes, s); }
std::string_view to_string(ActionKind a) { return name_of(kActions, a); }
std::optional<ActionKind> parse_action_kind(std::string_view s) { return lookup(kActions, s); }
std::string_view to_string(DurationClass d) { return name_of(kDurationClasses, d); }
std::optional<DurationClass> parse_duration_class(std::string_view s) { return lookup(kDurationClasses, s); }
std::string_view to_string(SummonsResult r) { return name_of(kSummons, r); }

bool is_activation(ActionKind a)
{
    return a == ActionKind::ActivateLinecard || a == ActionKind::ActivateFabricPlane || a == ActionKind::ActivatePsu ||
           a == ActionKind::CapacityUpgrade;
}

DurationRange duration_range(DurationClass d)
{
    switch (d) {
    case DurationClass::DynamicCapacityIncrease:
        return {kNanosPerSecond, 60 * kMinute};
    case DurationClass::PlannedCapacityUpgrade:
        return {kMinute, 60 * kHour};
    case DurationClass::PlannedNonOperation:
        return {kMinute, std::nullopt};
    case DurationClass::ShortTermPattern:
        return {kMinute, 60 * kHour};
    case DurationClass::LongTermPattern:
        return {kDay, 365 * kDay};
    case DurationClass::Unspecified:
        break;
    }
    return {0, std::nullopt};
}

bool PolicyConfig::may_sleep_kind(ComponentKind k) const
{
    return sleep_kinds.empty() || std::find(sleep_kinds.begin(), sleep_kinds.end(), k) != sleep_kinds.end();
}

void PolicyConfig::validate() const
{
    if (idle_threshold && *idle_threshold <= 0)
        throw ScenarioError("policy.idle_threshold_ns", "must be positive");
    if (class_window <= 0)
        throw ScenarioError("policy.class_window_ns", "must be positive");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i].at < 0)
            throw ScenarioError("policy.schedule[" + std::to_string(i) + "].at", "must not be negative");
        if (i > 0 && schedule[i].at < schedule[i - 1].at)
            throw ScenarioError("policy.schedule[" + std::to_string(i) + "].at", "schedule must be sorted by time");
    }
    for (std::size_t i = 0; i < summons.size(); ++i)
        if (summons[i].at < 0)
            throw ScenarioError("policy.summons[" + std::to_string(i) + "].at", "must not be negative");
}

PolicyConfig policy_from_json(const json& j)
{
    PolicyConfig c;
    if (j.contains("mode")) {
        auto m = parse_policy_mode(j.at("mode").get<std::string>());
        if (!m)
            throw ScenarioError("policy.mode", "unknown mode '" + j.at("mode").get<std::string>() + "'");
        c.mode = *m;
    }
    if (j.contains("idle_threshold_ns"))
        c.idle_threshold = offset_from_json(j.at("idle_threshold_ns"), "policy.idle_threshold_ns");
    if (j.contains("marginal_policy")) {
        auto m = parse_marginal_policy(j.at("marginal_policy").get<std::string>());
        if (!m)
            throw ScenarioError("policy.marginal_policy", "expected treat_as_yes or treat_as_no");
        c.marginal_policy = *m;
    }
    c.sla_gating = j.value("sla_gating", true);
    if (j.contains("class_window_ns"))
        c.class_window = offset_from_json(j.at("class_window_ns"), "policy.class_window_ns");
    if (j.contains("sleep_kinds")) {
        for (const auto& k : j.at("sleep_kinds")) {
            auto kind = parse_component_kind(k.get<std::string>());
            if (!kind)
                throw ScenarioError("policy.sleep_kinds", "unknown component kind '" + k.get<std::string>() + "'");
            c.sleep_kinds.push_back(*kind);
        }
    }
    if (j.contains("schedule")) {
        std::size_t i = 0;
        for (const auto& e : j.at("schedule")) {
            const std::string field = "policy.schedule[" + std::to_string(i++) + "]";
            ScheduledAction a;
            a.at = offset_from_json(e.at("at"), field + ".at");
            auto kind = parse_action_kind(e.at("action").get<std::string>());
            if (!kind)
                throw ScenarioError(field + ".action", "unknown action '" + e.at("action").get<std::string>() + "'");
            a.action = *kind;
            a.target = e.at("target").get<std::string>();
            if (e.contains("duration_class")) {
                auto d = parse_duration_class(e.at("duration_class").get<std::string>());
                if (!d)
                    throw ScenarioError(field + ".duration_class", "unknown duration class");
                a.expected_duration_class = *d;
            }
            c.schedule.push_back(std::move(a));
        }
    }
    if (j.contains("initially_off"))
        c.initially_off = j.at("initially_off").get<std::vector<std::string>>();
    c.scale_common_to_fill = j.value("scale_common_to_fill", false);
    c.summons_enabled = j.value("summons_enabled", false);
    if (j.contains("summons")) {
        std::size_t i = 0;
        for (const auto& e : j.at("summons")) {
            const std::string field = "policy.summons[" + std::to_string(i++) + "]";
            c.summons.push_back({offset_from_json(e.at("at"), field + ".at"), e.at("target").get<std::string>()});
        }
    }
    c.validate();
    return c;
}

std::optional<SleepRequest> delay_variable_tick(const ComponentIdleView& view, const PolicyConfig& config,
                                                Nanos idle_threshold, const SlaTable& sla, Nanos now)
{
    if (!config.delay_variable() || !view.supports_low_power || !view.eligible || !config.may_sleep_kind(view.kind))
        return std::nullopt;
    if (now - view.last_activity < idle_threshold)
        return std::nullopt;
    const Nanos chain = checked_add(view.sleep_duration, view.wake_duration);
    if (config.sla_gating) {
        const ComponentWake listed{view.kind, view.wake_duration, {}};
        for (AppClass c : view.classes_present)
            if (!may_sleep(sla, listed, chain, c, config.marginal_policy))
                return std::nullopt;
    }
    return SleepRequest{chain};
}

std::vector<StateCommand> idle_management_apply(std::span<const ScheduledAction> schedule, std::size_t& cursor,
                                                Nanos now)
{
    std::vector<StateCommand> out;
    while (cursor < schedule.size() && schedule[cursor].at <= now) {
        const auto& a = schedule[cursor++];
        out.push_back({a.at, a.action, a.target, is_activation(a.action) ? PowerStateName::Active : PowerStateName::Off});
    }
    return out;
}

SummonsResult wake_on_demand(TargetCondition target, const PolicyConfig& config)
{
    if (!config.summons_enabled)
        return SummonsResult::Rejected;
    switch (target) {
    case TargetCondition::Active:
        return SummonsResult::NoOp;
    case TargetCondition::BringingUp:
        return SummonsResult::Merged;
    case TargetCondition::Off:
    case TargetCondition::LowPowerIdle:
    case TargetCondition::Transitioning:
        return SummonsResult::Activation;
    }
    return SummonsResult::Rejected;
}

} // namespace chronowatt
