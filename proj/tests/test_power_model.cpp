#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "chronowatt/power_model.hpp"

using namespace chronowatt;
using nlohmann::json;

namespace {

const DeviceModel& t1600()
{
    static const DeviceModel m = load_device_model_file(resolve_model_path("t1600-like"));
    return m;
}

const DeviceModel& mx960()
{
    static const DeviceModel m = load_device_model_file(resolve_model_path("mx960-like"));
    return m;
}

// Every component Active, carrying `load` of its scope capacity in packets
// of `bytes`.
std::vector<ComponentStatus> loaded(const DeviceModel& m, double load, double bytes = 1500)
{
    std::vector<ComponentStatus> st(m.components().size());
    for (std::size_t i = 0; i < st.size(); ++i) {
        const double cap = m.components()[i].spec->scope_capacity_bps;
        st[i].bitrate_bps = load * cap;
        st[i].packet_rate = load * cap / (8.0 * bytes);
    }
    return st;
}

json tiny_model()
{
    return json::parse(R"({
      "format_version": 1,
      "name": "tiny",
      "calibration": {"capacity_bps": 2e10, "anchors": [[0, 100], [1, 150]]},
      "budget_shares": {"PHY_Link": 0.1, "NPU_Core": 0.6, "FabricPlane": 0.1, "PowerSupply": 0.2},
      "chassis": {
        "linecard_slots": 1, "psu_efficiency": 0.8, "common_draw_w": 0,
        "fabric_planes": {"count": 1, "component": {"name": "fabric", "kind": "FabricPlane"}},
        "power_supplies": {"count": 2, "component": {"name": "psu", "kind": "PowerSupply"}}
      },
      "linecard": {
        "ports": 2, "port_rate_bps": 1e10,
        "components": [
          {"name": "phy", "kind": "PHY_Link", "count": "per_port", "low_power_fraction": 0.1},
          {"name": "npu", "kind": "NPU_Core", "count": 1, "bringup_ns": 5000}
        ]
      }
    })");
}

} // namespace

TEST_CASE("elasticity interpolation")
{
    const auto& cal = t1600().calibration();
    CHECK(device_power(cal, 0.0) == doctest::Approx(5376));
    CHECK(device_power(cal, 1.0) == doctest::Approx(5856));
    CHECK(device_power(cal, 0.375) == doctest::Approx((5423 + 5616) / 2.0));
    CHECK_THROWS_AS(device_power(cal, 1.5), RangeError);
    CHECK_THROWS_AS(device_power(cal, -0.1), RangeError);
}

TEST_CASE("calibration validation")
{
    ElasticityCalibration cal;
    cal.capacity_bps = 1e9;
    cal.anchors = {{0.0, 10}, {0.5, 20}};
    CHECK_THROWS_AS(cal.validate(), CalibrationError);
    cal.anchors = {{0.0, 10}, {0.6, 20}, {0.5, 25}, {1.0, 30}};
    CHECK_THROWS_AS(cal.validate(), CalibrationError);

    auto doc = tiny_model();
    doc["budget_shares"]["NPU_Core"] = 0.5;
    CHECK_THROWS_AS(load_device_model(doc), CalibrationError);
    doc = tiny_model();
    doc["linecard"]["components"][1]["kind"] = "Flux";
    CHECK_THROWS_AS(load_device_model(doc), ParameterError);
    doc = tiny_model();
    doc["calibration"]["capacity_bps"] = 4e10;
    CHECK_THROWS_AS(load_device_model(doc), CalibrationError);
}

TEST_CASE("zero-load and full-load anchors reproduce at the wall")
{
    for (const auto* m : {&t1600(), &mx960()}) {
        const auto& a = m->calibration().anchors;
        CHECK(instantaneous_power(*m, loaded(*m, 0.0)) == doctest::Approx(a.front().second).epsilon(1e-9));
        CHECK(instantaneous_power(*m, loaded(*m, 1.0)) == doctest::Approx(a.back().second).epsilon(1e-9));
        for (const auto& [load, watts] : a)
            CHECK(instantaneous_power(*m, loaded(*m, load)) == doctest::Approx(watts).epsilon(1e-9));
    }
    double static_sum = t1600().chassis().common_draw_w;
    for (std::size_t i = 0; i < t1600().components().size(); ++i)
        static_sum += t1600().state_draw_w(i, PowerStateName::Active);
    CHECK(std::abs(static_sum - 5376.0) < 1e-3);
}

TEST_CASE("small packets cost the calibrated uplift")
{
    const auto& m = t1600();
    const double big = instantaneous_power(m, loaded(m, 1.0, 1500));
    const double small = instantaneous_power(m, loaded(m, 1.0, 64));
    CHECK(small - big == doctest::Approx(0.05 * 5856).epsilon(1e-6));
}

TEST_CASE("budget shares hold at full load")
{
    for (const auto* m : {&t1600(), &mx960()}) {
        const auto st = loaded(*m, 1.0);
        double phy = 0;
        for (std::size_t i = 0; i < st.size(); ++i)
            if (m->components()[i].spec->kind == ComponentKind::PHY_Link)
                phy += m->component_power_w(i, st[i]);
        CHECK(std::abs(phy / m->calibration().anchors.back().second - 0.10) < 1e-4);
        const auto shares = recompute_shares(*m);
        for (const auto& [kind, share] : m->shares())
            CHECK(shares.at(kind) == doctest::Approx(share).epsilon(1e-9));
    }
}

TEST_CASE("wall referral")
{
    const auto m = load_device_model(tiny_model());
    for (std::size_t i = 0; i < m.components().size(); ++i) {
        const bool psu = m.components()[i].spec->kind == ComponentKind::PowerSupply;
        CHECK(m.wall_factor(i) == doctest::Approx(psu ? 1.0 : 1.0 / 0.8));
    }
    // Zero load: 100 W at the wall; full: 150 W.
    CHECK(instantaneous_power(m, loaded(m, 0.0)) == doctest::Approx(100));
    CHECK(instantaneous_power(m, loaded(m, 1.0)) == doctest::Approx(150));
}

TEST_CASE("all off draws nothing without common draw")
{
    const auto m = load_device_model(tiny_model());
    std::vector<ComponentStatus> st(m.components().size());
    for (auto& s : st)
        s.state = PowerStateName::Off;
    CHECK(instantaneous_power(m, st) == 0.0);
    CHECK_THROWS_AS(instantaneous_power(m, std::vector<ComponentStatus>(1)), ParameterError);
}

TEST_CASE("component draw follows status")
{
    const auto m = load_device_model(tiny_model());
    const auto phy = *m.find("lc0.phy0");
    const double active = m.state_draw_w(phy, PowerStateName::Active);
    CHECK(m.state_draw_w(phy, PowerStateName::LowPowerIdle) == doctest::Approx(0.1 * active));
    ComponentStatus lpi;
    lpi.active_fraction = 0.25;
    CHECK(m.component_power_w(phy, lpi) == doctest::Approx(0.25 * active));
    ComponentStatus moving;
    moving.state = PowerStateName::LowPowerIdle;
    moving.transition_to = PowerStateName::Active;
    CHECK(m.component_power_w(phy, moving) == doctest::Approx(active));
    const auto npu = *m.find("lc0.npu0");
    CHECK_THROWS_AS(m.state_draw_w(npu, PowerStateName::LowPowerIdle), ParameterError);
}

TEST_CASE("flat index and ports")
{
    const auto& m = mx960();
    CHECK(m.port_count() == 48);
    CHECK(m.port_linecard(47) == 11);
    CHECK(m.port_rate_bps(3) == 1e10);
    CHECK(m.capacity_bps() == 480e9);
    CHECK(m.find("lc3.npu0").has_value());
    CHECK(m.find("fabric1").has_value());
    CHECK(m.find("psu3").has_value());
    CHECK_FALSE(m.find("lc12.npu0").has_value());
}

TEST_CASE("bringup chain sums the slowest instance per kind")
{
    const auto& lc = mx960().chassis().populated.front();
    Nanos expect = 0;
    std::map<ComponentKind, Nanos> slowest;
    for (const auto& c : lc.components) {
        const auto* t = c.transition(PowerStateName::Off, PowerStateName::Active);
        REQUIRE(t != nullptr);
        slowest[c.kind] = std::max(slowest[c.kind], t->duration);
    }
    for (const auto& [k, d] : slowest)
        expect += d;
    CHECK(lc.bringup_chain() == expect);
    CHECK(lc.bringup_chain() >= 2 * kNanosPerSecond);
}

TEST_CASE("partial population keeps calibration")
{
    const auto one = mx960().with_populated(1);
    CHECK(one.chassis().populated.size() == 1);
    CHECK(one.capacity_bps() == 40e9);
    CHECK(one.port_count() == 4);
    CHECK(one.chassis().fabric_planes.size() == 4);
    const auto full_fabric = *mx960().find("fabric0");
    const auto part_fabric = *one.find("fabric0");
    CHECK(one.state_draw_w(part_fabric, PowerStateName::Active) ==
          mx960().state_draw_w(full_fabric, PowerStateName::Active));
    CHECK_THROWS_AS(mx960().with_populated(13), ParameterError);
}

TEST_CASE("model path resolution")
{
    CHECK_THROWS_AS(resolve_model_path("no-such-model"), InputError);
    CHECK_THROWS_AS(load_device_model_file("/nonexistent/model.json"), InputError);
}
