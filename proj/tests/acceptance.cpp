// Acceptance run: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chronowatt/cli.hpp"
#include "chronowatt/engine.hpp"
#include "chronowatt/metrics.hpp"

using namespace chronowatt;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const DeviceModel& model(const std::string& name)
{
    static const DeviceModel t = load_device_model_file(resolve_model_path("t1600-like"));
    static const DeviceModel m = load_device_model_file(resolve_model_path("mx960-like"));
    return name == "t1600-like" ? t : m;
}

// Every result produced below is checked for conservation in criterion 11.
std::vector<SimResult> g_results;

SimResult keep(SimResult r)
{
    g_results.push_back(r);
    return r;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Published average power (W) at 0, 25, 50, 100 % load.
struct Anchors {
    const char* model;
    double watts[4];
};
constexpr Anchors kTable2[] = {{"t1600-like", {5376, 5423, 5616, 5856}}, {"mx960-like", {2925, 3110, 3209, 3289}}};
constexpr double kLoads[] = {0.0, 0.25, 0.5, 1.0};

SimResult t1600_full;

Outcome c1()
{
    Outcome v{true, ""};
    double worst = 0, slowest = 0;
    for (const auto& a : kTable2) {
        for (int i = 0; i < 4; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto r = keep(run(make_scenario(model(a.model), kLoads[i], kNanosPerSecond)));
            const double wall = seconds_since(t0);
            slowest = std::max(slowest, wall);
            const double err = std::abs(r.average_power_w() / a.watts[i] - 1);
            worst = std::max(worst, err);
            v.detail += fmt("%s@%g=%.1fW ", a.model, kLoads[i], r.average_power_w());
            if (err > 0.01 || wall >= 60)
                v.pass = false;
            if (std::string(a.model) == "t1600-like" && kLoads[i] == 1.0)
                t1600_full = r;
        }
    }
    v.detail += fmt("max error %.3f%%, slowest run %.1fs", worst * 100, slowest);
    return v;
}

Outcome c2()
{
    const auto e = ecr(t1600_full);
    if (!e)
        return {false, "no throughput"};
    const double quotient = 5856.0 / 640.0;
    const bool ok = std::abs(*e / 9.0 - 1) <= 0.05 && std::abs(*e / quotient - 1) <= 0.01;
    return {ok, fmt("ECR %.3f W/Gbps (anchor quotient %.3f, generation figure 9)", *e, quotient)};
}

Outcome c3()
{
    // Published matrix; "?" is marginal.
    const char* const published[6][4] = {{"yes", "yes", "yes", "yes"}, {"yes", "yes", "yes", "yes"},
                                         {"?", "yes", "yes", "yes"},    {"no", "?", "?", "no"},
                                         {"no", "no", "no", "no"},      {"no", "no", "no", "no"}};
    const char* argv[] = {"chronowatt", "tolerance-matrix", "--format", "csv"};
    std::ostringstream out, err;
    if (cli_main(4, argv, out, err) != kExitOk)
        return {false, "command failed: " + err.str()};
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    int rows = 0, matched = 0;
    while (std::getline(in, line)) {
        if (rows >= 6)
            return {false, "extra row"};
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');)
            cells.push_back(c);
        if (cells.size() < 4)
            return {false, "short row"};
        for (int c = 0; c < 4; ++c) {
            const std::string want = std::string(published[rows][c]) == "?" ? "marginal" : published[rows][c];
            matched += cells[cells.size() - 4 + c] == want;
        }
        ++rows;
    }
    return {rows == 6 && matched == 24, fmt("%d/24 cells match", matched)};
}

Outcome c4()
{
    Outcome v{true, ""};
    const std::vector<double> loads{0.05, 0.1, 0.25, 0.5, 0.75, 1.0};
    for (const char* name : {"t1600-like", "mx960-like"}) {
        const auto base = make_scenario(model(name), 0, 100 * kNanosPerMilli);
        auto results = run_sweep(base, SweepAxis::Load, loads, 1);
        for (auto& r : results)
            keep(r);
        const auto curve = efficiency_curve(results);
        v.detail += std::string(name) + " ECR";
        for (std::size_t i = 0; i < curve.size(); ++i) {
            v.detail += fmt(" %.2f", *curve[i].ecr);
            if (i > 0 && *curve[i].ecr > *curve[i - 1].ecr)
                v.pass = false;
        }
        v.detail += "; ";
    }
    return v;
}

Outcome c5()
{
    Outcome v{true, ""};
    for (const char* name : {"t1600-like", "mx960-like"}) {
        const auto small = keep(run(make_scenario(model(name), 1.0, 5 * kNanosPerMilli, 64)));
        const auto large = keep(run(make_scenario(model(name), 1.0, 5 * kNanosPerMilli, 1500)));
        v.pass = v.pass && small.average_power_w() >= large.average_power_w() && small.drops.total() == 0;
        v.detail += fmt("%s 64B %.1fW vs 1500B %.1fW; ", name, small.average_power_w(), large.average_power_w());
    }
    return v;
}

Outcome c6()
{
    const auto four = model("mx960-like").with_populated(4);
    const auto base = make_scenario(four, 0.5, 100 * kNanosPerMilli);
    auto results = run_sweep(base, SweepAxis::Fill, {1, 2, 3, 4}, 1);
    for (auto& r : results)
        keep(r);
    const auto curve = chassis_fill_curve(results);
    Outcome v{true, "ECR by fill"};
    for (std::size_t i = 0; i < curve.size(); ++i) {
        v.detail += fmt(" %g:%.2f", curve[i].x, *curve[i].ecr);
        if (i > 0 && !(*curve[i].ecr < *curve[i - 1].ecr))
            v.pass = false;
    }
    auto one = make_scenario(four.with_populated(1), 0.5, 100 * kNanosPerMilli);
    const auto off = keep(run(one));
    one.policy.mode = PolicyMode::IdleManagement;
    one.policy.scale_common_to_fill = true;
    const auto on = keep(run(one));
    v.pass = v.pass && *ecr(on) < *ecr(off);
    v.detail += fmt("; 1 card idle management off %.2f, on %.2f", *ecr(off), *ecr(on));
    return v;
}

Outcome c7()
{
    auto s = make_scenario(model("mx960-like"), 0, kNanosPerSecond);
    s.policy.mode = PolicyMode::DelayVariable;
    s.policy.sleep_kinds = {ComponentKind::PHY_Link};
    s.policy.idle_threshold = 100 * kNanosPerMicro;
    s.lpi.enabled = true;
    s.traffic.kind = TrafficSpec::Kind::Explicit;
    Rng rng(20100101, 0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const Nanos t = static_cast<Nanos>(rng.uniform() * 0.999e9);
        s.traffic.arrivals.push_back({static_cast<int>(rng.next_u64() % 48), {t, 64, AppClass::BestEffort}});
    }
    std::stable_sort(s.traffic.arrivals.begin(), s.traffic.arrivals.end(),
                     [](const auto& a, const auto& b) { return a.second.timestamp < b.second.timestamp; });
    s.engine.record_delays = true;
    const auto r = keep(run(s));
    const auto p = *s.lpi.resolve(0);
    const Nanos bound = added_delay_bound(p);
    std::size_t delayed = 0;
    for (Nanos a : r.added_delay_samples)
        delayed += a > 0;
    const bool ok = r.delivered_packets == static_cast<std::uint64_t>(n) && r.added_delay.max() <= bound &&
                    r.added_delay.max() <= 230 * kNanosPerMicro && delayed > 0;
    return {ok, fmt("%d arrivals, %zu delayed by LPI, max added %lld ns, bound t_s+t_w %lld ns", n, delayed,
                    static_cast<long long>(r.added_delay.max()), static_cast<long long>(bound))};
}

Outcome c8()
{
    const auto& m = model("mx960-like");
    auto s = make_scenario(m, 0, kNanosPerSecond);
    s.policy.mode = PolicyMode::DelayVariable;
    s.policy.sleep_kinds = {ComponentKind::PHY_Link};
    s.policy.idle_threshold = 100 * kNanosPerMicro;
    s.lpi.enabled = true;
    s.lpi.local.params.t_q = 40 * kNanosPerMicro;
    s.lpi.local.params.t_r = kNanosPerMicro;
    s.lpi.local.params.quiet_power_fraction = 0.1;
    s.lpi.local.params.refresh_power_fraction = 1.0;
    s.lpi.peer = s.lpi.local;
    const auto r = keep(run(s));
    double phy = 0, active = 0;
    for (std::size_t i = 0; i < m.components().size(); ++i)
        if (m.components()[i].spec->kind == ComponentKind::PHY_Link) {
            phy += r.ledger[i].total();
            active += m.state_draw_w(i, PowerStateName::Active) * to_seconds(s.duration);
        }
    const double expect = duty_cycle_power(s.lpi.local.params);
    const double got = phy / active;
    return {std::abs(got / expect - 1) <= 0.01,
            fmt("PHY power fraction %.5f vs closed form %.5f (%.2f%%)", got, expect, 100 * (got / expect - 1))};
}

Outcome c9()
{
    Outcome v{true, "saving"};
    double worst = 0;
    struct Case {
        const char* model;
        TrafficSpec::Kind kind;
        double load;
    };
    const Case cases[] = {{"mx960-like", TrafficSpec::Kind::None, 0},     {"t1600-like", TrafficSpec::Kind::None, 0},
                          {"mx960-like", TrafficSpec::Kind::OnOff, 0.01}, {"mx960-like", TrafficSpec::Kind::Poisson, 0.1},
                          {"mx960-like", TrafficSpec::Kind::Cbr, 0.5},    {"mx960-like", TrafficSpec::Kind::Cbr, 1.0}};
    for (const auto& c : cases) {
        auto peak = make_scenario(model(c.model), c.load, 200 * kNanosPerMilli);
        peak.traffic.kind = c.kind;
        auto lpi = peak;
        lpi.policy.mode = PolicyMode::DelayVariable;
        lpi.policy.sleep_kinds = {ComponentKind::PHY_Link};
        lpi.policy.idle_threshold = 10 * kNanosPerMicro;
        lpi.lpi.enabled = true;
        const auto rp = keep(run(peak));
        const auto rl = keep(run(lpi));
        const double saving = 1 - rl.total_energy_j / rp.total_energy_j;
        worst = std::max(worst, saving);
        v.detail += fmt(" %s/%s@%g=%.2f%%", c.model, std::string(to_string(c.kind)).c_str(), c.load, 100 * saving);
        if (saving > 0.12)
            v.pass = false;
    }
    v.detail += fmt("; largest %.2f%% (limit 12%%)", 100 * worst);
    return v;
}

Outcome c10()
{
    OnOffSourceParams p;
    p.shape_on = p.shape_off = 1.4;
    p.min_on = p.min_off = 10 * kNanosPerMilli;
    p.peak_rate_bps = 1e7;
    const std::vector<OnOffSourceParams> params{p};
    const Nanos horizon = 1000 * kNanosPerSecond;
    auto src = make_aggregate_source(params, 32, horizon, 1);
    UtilizationAccumulator acc(10 * kNanosPerMilli, 1e9);
    for (PacketArrival a; src->next(a);)
        acc.add(a);
    const auto series = acc.finish(horizon);
    const auto h = estimate_hurst(series, 10, 10000);

    PoissonSource poisson(32 * p.mean_rate_bps(), 1500, AppClass::BestEffort, 1, 0, horizon);
    UtilizationAccumulator pacc(10 * kNanosPerMilli, 1e9);
    for (PacketArrival a; poisson.next(a);)
        pacc.add(a);
    const auto hp = estimate_hurst(pacc.finish(horizon), 10, 10000);
    const bool ok = series.values.size() >= 100000 && std::abs(h.hurst - 0.8) <= 0.1 && std::abs(hp.hurst - 0.5) <= 0.1;
    return {ok, fmt("%zu bins: ON/OFF H=%.3f (oracle (3-1.4)/2=0.8), Poisson H=%.3f", series.values.size(), h.hurst,
                    hp.hurst)};
}

Outcome c11()
{
    std::vector<Scenario> twice;
    twice.push_back(make_scenario(model("mx960-like"), 0.3, 50 * kNanosPerMilli));
    auto onoff = make_scenario(model("mx960-like"), 0.05, 500 * kNanosPerMilli);
    onoff.traffic.kind = TrafficSpec::Kind::OnOff;
    onoff.policy.mode = PolicyMode::Combined;
    onoff.lpi.enabled = true;
    twice.push_back(onoff);
    auto poisson = make_scenario(model("t1600-like").with_populated(3), 0.8, 20 * kNanosPerMilli);
    poisson.traffic.kind = TrafficSpec::Kind::Poisson;
    poisson.policy.mode = PolicyMode::IdleManagement;
    poisson.policy.scale_common_to_fill = true;
    poisson.policy.schedule = {{5 * kNanosPerMilli, ActionKind::DeactivateLinecard, "lc1", DurationClass::Unspecified}};
    twice.push_back(poisson);
    int same = 0;
    for (const auto& s : twice) {
        const auto a = keep(run(s));
        const auto b = keep(run(s));
        same += a.digest == b.digest && a.total_energy_j == b.total_energy_j;
    }
    std::size_t conserved = 0;
    for (const auto& r : g_results)
        conserved += r.offered_packets == r.delivered_packets + r.drops.total() + r.residual_packets;
    return {same == static_cast<int>(twice.size()) && conserved == g_results.size(),
            fmt("%d/%zu repeat digests identical; conservation exact on %zu/%zu runs", same, twice.size(), conserved,
                g_results.size())};
}

Outcome c12()
{
    auto s = make_scenario(model("mx960-like"), 0.01, 10 * kNanosPerSecond);
    s.traffic.kind = TrafficSpec::Kind::OnOff;
    s.traffic.classes = {{AppClass::MC, 1}, {AppClass::BFD, 1}, {AppClass::Video, 1}, {AppClass::Voice, 1},
                         {AppClass::BestEffort, 4}};
    s.traffic.sources_per_port = 2;
    s.policy.mode = PolicyMode::DelayVariable;
    s.policy.idle_threshold = 200 * kNanosPerMicro;
    s.lpi.enabled = true;
    const auto r = keep(run(s));
    std::uint64_t violations = 0, delivered = 0;
    for (const auto& c : r.classes) {
        violations += c.violations;
        delivered += c.delivered;
    }

    auto neg = make_scenario(model("mx960-like"), 2.4e-5, 10 * kNanosPerSecond);
    neg.traffic.classes = {{AppClass::Voice, 1}};
    neg.traffic.ports = {0};
    neg.policy.mode = PolicyMode::DelayVariable;
    neg.policy.sla_gating = false;
    neg.policy.sleep_kinds = {ComponentKind::SRAM_Bank};
    neg.policy.idle_threshold = kNanosPerMilli;
    const auto rn = keep(run(neg));
    const auto nv = rn.classes[static_cast<int>(AppClass::Voice)].violations;
    return {violations == 0 && r.sleep_requests > 0 && nv >= 1,
            fmt("gated: %llu violations over %llu packets (%llu sleeps); ungated SRAM under Voice: %llu violations",
                static_cast<unsigned long long>(violations), static_cast<unsigned long long>(delivered),
                static_cast<unsigned long long>(r.sleep_requests), static_cast<unsigned long long>(nv))};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"C1 elasticity table reproduction", c1},
        {"C2 ECR cross-check", c2},
        {"C3 tolerance matrix", c3},
        {"C4 ECR non-increasing with load", c4},
        {"C5 small packets cost more", c5},
        {"C6 chassis fill and idle management", c6},
        {"C7 LPI added-delay bound", c7},
        {"C8 LPI idle power", c8},
        {"C9 device-level LPI ceiling", c9},
        {"C10 self-similarity", c10},
        {"C11 determinism and conservation", c11},
        {"C12 SLA safety", c12},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << fmt(" [%.1fs]", seconds_since(t0))
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
