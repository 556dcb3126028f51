#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "chronowatt/metrics.hpp"

using namespace chronowatt;

namespace {

SimResult synthetic(const std::string& device, double load, double watts, double gbps, Nanos duration = kNanosPerSecond)
{
    SimResult r;
    r.device = device;
    r.offered_load = load;
    r.duration = duration;
    r.total_energy_j = watts * to_seconds(duration);
    r.delivered_bits = gbps * 1e9 * to_seconds(duration);
    return r;
}

const DeviceModel& t1600()
{
    static const DeviceModel m = load_device_model_file(resolve_model_path("t1600-like"));
    return m;
}

} // namespace

TEST_CASE("energy consumption rating")
{
    CHECK(*ecr(synthetic("t1600-like", 1.0, 5856, 640)) == doctest::Approx(5856.0 / 640.0));
    CHECK(*ecr(synthetic("t1600-like", 0.5, 5616, 320, kNanosPerSecond / 2)) == doctest::Approx(17.55));
    CHECK_FALSE(ecr(synthetic("t1600-like", 0.0, 5376, 0)));
    CHECK(delivered_gbps(synthetic("x", 0.5, 1, 7)) == doctest::Approx(7));
}

TEST_CASE("efficiency curve")
{
    const std::vector<SimResult> t{synthetic("t1600-like", 1.0, 5856, 640), synthetic("t1600-like", 0.25, 5423, 160),
                                   synthetic("t1600-like", 0.5, 5616, 320)};
    const auto c = efficiency_curve(t);
    REQUIRE(c.size() == 3);
    CHECK(c[0].x == 0.25);
    CHECK(*c[0].ecr == doctest::Approx(5423.0 / 160));
    CHECK(*c[1].ecr == doctest::Approx(5616.0 / 320));
    CHECK(*c[2].ecr == doctest::Approx(5856.0 / 640));
    CHECK(*c[0].ecr > *c[1].ecr);
    CHECK(*c[1].ecr > *c[2].ecr);

    const std::vector<SimResult> mx{synthetic("mx960-like", 0.5, 3209, 240), synthetic("mx960-like", 1.0, 3289, 480)};
    const auto cm = efficiency_curve(mx);
    CHECK(*cm[0].ecr == doctest::Approx(3209.0 / 240));
    CHECK(*cm[1].ecr == doctest::Approx(3289.0 / 480));

    CHECK_THROWS_AS(efficiency_curve(std::vector<SimResult>{t[0]}), InputError);
    CHECK_THROWS_AS(efficiency_curve(std::vector<SimResult>{t[0], mx[0]}), InputError);
}

TEST_CASE("packet size and fill curves")
{
    auto a = synthetic("d", 1.0, 120, 10);
    a.packet_size = 1500;
    auto b = synthetic("d", 1.0, 130, 10);
    b.packet_size = 64;
    const auto ps = packet_size_curve(std::vector<SimResult>{a, b});
    CHECK(ps[0].x == 64);
    CHECK(ps[0].watts == doctest::Approx(130));

    auto one = synthetic("d", 0.5, 100, 10);
    one.populated_linecards = 1;
    auto four = synthetic("d", 0.5, 160, 40);
    four.populated_linecards = 4;
    const auto fill = chassis_fill_curve(std::vector<SimResult>{four, one});
    CHECK(fill[0].x == 1);
    CHECK(*fill[0].ecr > *fill[1].ecr);
    auto odd = four;
    odd.offered_load = 0.7;
    CHECK_THROWS_AS(chassis_fill_curve(std::vector<SimResult>{one, odd}), InputError);
}

TEST_CASE("energy breakdown")
{
    const auto full = run(make_scenario(t1600(), 1.0, 20 * kNanosPerMilli));
    const auto b = breakdown_report(full);
    CHECK(b.at("PHY_Link") == doctest::Approx(0.10).epsilon(0.02));
    double sum = 0;
    for (const auto& [k, v] : b)
        sum += v;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(b.contains("Common"));

    CHECK(breakdown_report(SimResult{}).empty());

    auto idle = make_scenario(t1600(), 0, 20 * kNanosPerMilli);
    const auto active_share = breakdown_report(run(idle)).at("PHY_Link");
    idle.policy.mode = PolicyMode::DelayVariable;
    idle.policy.sleep_kinds = {ComponentKind::PHY_Link};
    idle.policy.idle_threshold = 100 * kNanosPerMicro;
    idle.lpi.enabled = true;
    CHECK(breakdown_report(run(idle)).at("PHY_Link") < active_share);
}

TEST_CASE("delay summary")
{
    CHECK_FALSE(delay_summary(SimResult{}));
    auto r = run(make_scenario(t1600(), 0.1, 5 * kNanosPerMilli));
    const auto d = delay_summary(r);
    REQUIRE(d);
    CHECK(d->p50 <= d->p95);
    CHECK(d->p95 <= d->p99);
    CHECK(d->p99 <= d->max);
    CHECK(d->jitter_max == 0);
    CHECK(d->violations.at("Voice") == 0);
}

TEST_CASE("report formats")
{
    const std::vector<EfficiencyPoint> pts{{0, 5376, 0, std::nullopt}, {1, 5856, 640, 9.15}};
    std::ostringstream out;
    write_curve_csv(out, pts);
    CHECK(out.str() == "# format_version: 1\nx,watts,gbps,ecr\n0,5376,0,undefined\n1,5856,640,9.15\n");
    CHECK(to_json(pts[0]).at("ecr") == "undefined");

    const auto r = run(make_scenario(t1600(), 0.5, 2 * kNanosPerMilli));
    const auto j = summary_json(r);
    CHECK(j.at("format_version") == kReportFormatVersion);
    CHECK(j.at("device") == "t1600-like");
    CHECK(j.at("event_log_digest").get<std::string>().size() == 16);
    CHECK(j.at("total_energy_j").get<double>() == doctest::Approx(r.total_energy_j));

    std::ostringstream ledger;
    write_ledger_csv(ledger, r);
    std::istringstream lines(ledger.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "# format_version: 1");
    std::getline(lines, header);
    CHECK(header.starts_with("id,kind,"));
    CHECK(header.ends_with(",total"));
    std::size_t rows = 0;
    for (std::string line; std::getline(lines, line);)
        ++rows;
    CHECK(rows == r.ledger.size());
}
