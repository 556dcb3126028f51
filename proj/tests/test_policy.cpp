#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "chronowatt/policy.hpp"

using namespace chronowatt;
using nlohmann::json;

namespace {

PolicyConfig dv()
{
    PolicyConfig c;
    c.mode = PolicyMode::DelayVariable;
    return c;
}

ComponentIdleView view(ComponentKind kind, Nanos sleep, Nanos wake, Nanos last, std::span<const AppClass> classes)
{
    ComponentIdleView v;
    v.kind = kind;
    v.supports_low_power = true;
    v.eligible = true;
    v.last_activity = last;
    v.sleep_duration = sleep;
    v.wake_duration = wake;
    v.classes_present = classes;
    return v;
}

} // namespace

TEST_CASE("name round trips")
{
    for (auto m : {PolicyMode::PeakOnly, PolicyMode::DelayVariable, PolicyMode::IdleManagement, PolicyMode::Combined})
        CHECK(parse_policy_mode(to_string(m)) == m);
    for (int i = 0; i <= static_cast<int>(ActionKind::CapacityUpgrade); ++i) {
        const auto a = static_cast<ActionKind>(i);
        CHECK(parse_action_kind(to_string(a)) == a);
    }
    CHECK(is_activation(ActionKind::CapacityUpgrade));
    CHECK(is_activation(ActionKind::ActivatePsu));
    CHECK_FALSE(is_activation(ActionKind::DeactivateFabricPlane));
    CHECK_FALSE(parse_policy_mode("turbo"));
}

TEST_CASE("mode predicates")
{
    PolicyConfig c;
    CHECK_FALSE(c.delay_variable());
    CHECK_FALSE(c.idle_management());
    c.mode = PolicyMode::Combined;
    CHECK(c.delay_variable());
    CHECK(c.idle_management());
    CHECK(c.may_sleep_kind(ComponentKind::SRAM_Bank));
    c.sleep_kinds = {ComponentKind::PHY_Link};
    CHECK(c.may_sleep_kind(ComponentKind::PHY_Link));
    CHECK_FALSE(c.may_sleep_kind(ComponentKind::SRAM_Bank));
}

TEST_CASE("duration classes")
{
    const auto dyn = duration_range(DurationClass::DynamicCapacityIncrease);
    CHECK(dyn.min == kNanosPerSecond);
    REQUIRE(dyn.max);
    CHECK(*dyn.max == 3600 * kNanosPerSecond);
    CHECK_FALSE(duration_range(DurationClass::PlannedNonOperation).max);
    CHECK(duration_range(DurationClass::LongTermPattern).min == 86400 * kNanosPerSecond);
}

TEST_CASE("delay-variable tick")
{
    const auto sla = default_sla_table();
    const auto cfg = dv();
    const AppClass voice[] = {AppClass::Voice};
    const Nanos thr = 100 * kNanosPerMicro;

    // PHY idle 500 us under Voice: requested.
    auto req = delay_variable_tick(view(ComponentKind::PHY_Link, kNanosPerMicro, 10 * kNanosPerMicro, 0, voice), cfg,
                                   thr, sla, 500 * kNanosPerMicro);
    REQUIRE(req);
    CHECK(req->wake_chain == 11 * kNanosPerMicro);

    // Idle 50 us: below threshold.
    CHECK_FALSE(delay_variable_tick(view(ComponentKind::PHY_Link, kNanosPerMicro, 10 * kNanosPerMicro, 0, voice), cfg,
                                    thr, sla, 50 * kNanosPerMicro));

    // SRAM under Voice: never, however long idle.
    const Nanos hour = 3600 * kNanosPerSecond;
    CHECK_FALSE(delay_variable_tick(view(ComponentKind::SRAM_Bank, 0, 30 * kNanosPerMilli, 0, voice), cfg, thr, sla,
                                    hour));

    // Gating off lets it through; peak mode never requests.
    auto ungated = cfg;
    ungated.sla_gating = false;
    CHECK(delay_variable_tick(view(ComponentKind::SRAM_Bank, 0, 30 * kNanosPerMilli, 0, voice), ungated, thr, sla,
                              hour));
    CHECK_FALSE(delay_variable_tick(view(ComponentKind::PHY_Link, 0, 10 * kNanosPerMicro, 0, voice), PolicyConfig{},
                                    thr, sla, hour));

    // One intolerant class vetoes.
    const AppClass mixed[] = {AppClass::BestEffort, AppClass::MC};
    CHECK_FALSE(delay_variable_tick(view(ComponentKind::NPU_Core, 0, 90, 0, mixed), cfg, thr, sla, hour));
    const AppClass be[] = {AppClass::BestEffort};
    CHECK(delay_variable_tick(view(ComponentKind::NPU_Core, 0, 90, 0, be), cfg, thr, sla, hour));

    // Ineligible or excluded kinds.
    auto v = view(ComponentKind::PHY_Link, 0, 10 * kNanosPerMicro, 0, voice);
    v.eligible = false;
    CHECK_FALSE(delay_variable_tick(v, cfg, thr, sla, hour));
    auto only_sram = cfg;
    only_sram.sleep_kinds = {ComponentKind::SRAM_Bank};
    CHECK_FALSE(delay_variable_tick(view(ComponentKind::PHY_Link, 0, 10 * kNanosPerMicro, 0, voice), only_sram, thr,
                                    sla, hour));
}

TEST_CASE("schedule application")
{
    std::size_t cursor = 0;
    CHECK(idle_management_apply({}, cursor, kNanosPerSecond).empty());

    const std::vector<ScheduledAction> sched{{0, ActionKind::DeactivateLinecard, "lc1", DurationClass::Unspecified},
                                             {10, ActionKind::ActivateFabricPlane, "fabric2", DurationClass::Unspecified},
                                             {10, ActionKind::DeactivatePsu, "psu3", DurationClass::Unspecified},
                                             {20, ActionKind::CapacityUpgrade, "lc1", DurationClass::Unspecified}};
    auto first = idle_management_apply(sched, cursor, 5);
    REQUIRE(first.size() == 1);
    CHECK(first[0].to == PowerStateName::Off);
    CHECK(cursor == 1);
    auto second = idle_management_apply(sched, cursor, 10);
    REQUIRE(second.size() == 2);
    CHECK(second[0].target == "fabric2");
    CHECK(second[0].to == PowerStateName::Active);
    CHECK(second[1].to == PowerStateName::Off);
    CHECK(idle_management_apply(sched, cursor, 19).empty());
    CHECK(idle_management_apply(sched, cursor, 20).size() == 1);
    CHECK(cursor == sched.size());
}

TEST_CASE("summons")
{
    PolicyConfig c;
    CHECK(wake_on_demand(TargetCondition::Off, c) == SummonsResult::Rejected);
    c.summons_enabled = true;
    CHECK(wake_on_demand(TargetCondition::Off, c) == SummonsResult::Activation);
    CHECK(wake_on_demand(TargetCondition::Active, c) == SummonsResult::NoOp);
    CHECK(wake_on_demand(TargetCondition::BringingUp, c) == SummonsResult::Merged);
    CHECK(to_string(SummonsResult::Merged) == "merged");
}

TEST_CASE("policy json")
{
    const auto c = policy_from_json(json::parse(R"({
      "mode": "combined",
      "idle_threshold_ns": 5000,
      "marginal_policy": "treat_as_yes",
      "sla_gating": false,
      "class_window_ns": "PT0.5S",
      "sleep_kinds": ["PHY_Link", "Serdes"],
      "schedule": [{"at": "PT1S", "action": "deactivate_linecard", "target": "lc2",
                    "duration_class": "planned_non_operation"}],
      "initially_off": ["fabric3"],
      "scale_common_to_fill": true,
      "summons_enabled": true,
      "summons": [{"at": 7, "target": "lc2"}]
    })"));
    CHECK(c.mode == PolicyMode::Combined);
    CHECK(c.idle_threshold == 5000);
    CHECK(c.marginal_policy == MarginalPolicy::TreatAsYes);
    CHECK_FALSE(c.sla_gating);
    CHECK(c.class_window == kNanosPerSecond / 2);
    CHECK(c.sleep_kinds.size() == 2);
    REQUIRE(c.schedule.size() == 1);
    CHECK(c.schedule[0].at == kNanosPerSecond);
    CHECK(c.schedule[0].expected_duration_class == DurationClass::PlannedNonOperation);
    CHECK(c.initially_off == std::vector<std::string>{"fabric3"});
    CHECK(c.scale_common_to_fill);
    REQUIRE(c.summons.size() == 1);
    CHECK(c.summons[0].at == 7);

    auto field_of = [](const char* text) {
        try {
            policy_from_json(json::parse(text)).validate();
        } catch (const ScenarioError& e) {
            return e.field();
        }
        return std::string();
    };
    CHECK(field_of(R"({"mode": "turbo"})") == "policy.mode");
    CHECK(field_of(R"({"schedule": [{"at": 5, "action": "explode", "target": "lc0"}]})") ==
          "policy.schedule[0].action");
    CHECK(field_of(R"({"schedule": [{"at": 5, "action": "activate_psu", "target": "psu0"},
                                     {"at": 1, "action": "activate_psu", "target": "psu1"}]})") ==
          "policy.schedule[1].at");
    CHECK(field_of(R"({"idle_threshold_ns": 0})") == "policy.idle_threshold_ns");
}
