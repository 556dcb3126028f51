#include "chronowatt/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>

namespace chronowatt {

using nlohmann::json;

double delivered_gbps(const SimResult& result)
{
    if (result.duration <= 0)
        return 0;
    return result.delivered_bits / to_seconds(result.duration) / 1e9;
}

std::optional<double> ecr(const SimResult& result)
{
    const double gbps = delivered_gbps(result);
    if (gbps <= 0)
        return std::nullopt;
    return result.average_power_w() / gbps;
}

EfficiencyPoint efficiency_point(const SimResult& result, double x)
{
    return {x, result.average_power_w(), delivered_gbps(result), ecr(result)};
}

namespace {

template <typename X>
std::vector<EfficiencyPoint> curve(std::span<const SimResult> results, X x_of)
{
    if (results.size() < 2)
        throw InputError("a curve needs at least two results");
    for (const auto& r : results)
        if (r.device != results.front().device)
            throw InputError("results come from different device models ('" + results.front().device + "', '" +
                             r.device + "')");
    std::vector<EfficiencyPoint> out;
    for (const auto& r : results)
        out.push_back(efficiency_point(r, x_of(r)));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    return out;
}

} // namespace

std::vector<EfficiencyPoint> efficiency_curve(std::span<const SimResult> results)
{
    return curve(results, [](const SimResult& r) { return r.offered_load; });
}

std::vector<EfficiencyPoint> packet_size_curve(std::span<const SimResult> results)
{
    return curve(results, [](const SimResult& r) { return static_cast<double>(r.packet_size); });
}

std::vector<EfficiencyPoint> chassis_fill_curve(std::span<const SimResult> results)
{
    for (const auto& r : results)
        if (!results.empty() && r.offered_load != results.front().offered_load)
            throw InputError("chassis fill curve needs a fixed per-card load");
    return curve(results, [](const SimResult& r) { return static_cast<double>(r.populated_linecards); });
}

std::map<std::string, double> breakdown_report(const SimResult& result)
{
    std::map<std::string, double> out;
    if (result.total_energy_j <= 0)
        return out;
    double sum = 0;
    for (const auto& l : result.ledger) {
        const std::string key = l.kind ? std::string(to_string(*l.kind)) : "Common";
        const double j = l.total();
        out[key] += j;
        sum += j;
    }
    for (auto it = out.begin(); it != out.end();) {
        if (it->second <= 0) {
            it = out.erase(it);
        } else {
            it->second /= sum;
            ++it;
        }
    }
    return out;
}

std::optional<DelaySummary> delay_summary(const SimResult& result)
{
    if (result.delivered_packets == 0)
        return std::nullopt;
    DelaySummary d;
    d.p50 = result.delay.quantile(0.50);
    d.p95 = result.delay.quantile(0.95);
    d.p99 = result.delay.quantile(0.99);
    d.max = result.delay.max();
    d.jitter_p99 = result.added_delay.quantile(0.99);
    d.jitter_max = result.added_delay.max();
    for (int k = 0; k < kAppClassCount; ++k)
        d.violations[std::string(to_string(static_cast<AppClass>(k)))] = result.classes[k].violations;
    return d;
}

void write_curve_csv(std::ostream& out, std::span<const EfficiencyPoint> points)
{
    out << "# format_version: " << kReportFormatVersion << '\n';
    out << "x,watts,gbps,ecr\n";
    out << std::setprecision(10);
    for (const auto& p : points) {
        out << p.x << ',' << p.watts << ',' << p.gbps << ',';
        if (p.ecr)
            out << *p.ecr;
        else
            out << "undefined";
        out << '\n';
    }
}

json to_json(const EfficiencyPoint& p)
{
    return {{"x", p.x}, {"watts", p.watts}, {"gbps", p.gbps}, {"ecr", p.ecr ? json(*p.ecr) : json("undefined")}};
}

json summary_json(const SimResult& r)
{
    json j;
    j["format_version"] = kReportFormatVersion;
    j["scenario"] = r.scenario;
    j["device"] = r.device;
    j["mode"] = std::string(to_string(r.mode));
    j["duration_ns"] = r.duration;
    j["offered_load"] = r.offered_load;
    j["packet_size"] = r.packet_size;
    j["populated_linecards"] = r.populated_linecards;
    j["total_energy_j"] = r.total_energy_j;
    j["average_power_w"] = r.average_power_w();
    j["delivered_gbps"] = delivered_gbps(r);
    const auto e = ecr(r);
    j["ecr_w_per_gbps"] = e ? json(*e) : json("undefined");
    j["packets"] = {{"offered", r.offered_packets},
                    {"delivered", r.delivered_packets},
                    {"residual", r.residual_packets},
                    {"dropped_buffer_overflow", r.drops.buffer_overflow},
                    {"dropped_port_inactive", r.drops.port_inactive}};
    j["breakdown"] = breakdown_report(r);
    if (auto d = delay_summary(r)) {
        j["delay_ns"] = {{"p50", d->p50}, {"p95", d->p95}, {"p99", d->p99}, {"max", d->max},
                         {"jitter_p99", d->jitter_p99}, {"jitter_max", d->jitter_max}};
        j["sla_violations"] = d->violations;
    } else {
        j["delay_ns"] = json::object();
        j["sla_violations"] = json::object();
    }
    json cmds = json::array();
    for (const auto& c : r.commands)
        cmds.push_back({{"at_ns", c.at}, {"action", c.action}, {"target", c.target}, {"result", c.result}});
    j["commands"] = cmds;
    j["sleep_requests"] = r.sleep_requests;
    j["events"] = r.events;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(r.digest));
    j["event_log_digest"] = buf;
    return j;
}

void write_ledger_csv(std::ostream& out, const SimResult& result)
{
    out << "# format_version: " << kReportFormatVersion << '\n';
    out << "id,kind";
    for (int c = 0; c < kLedgerColumns; ++c)
        out << ',' << to_string(static_cast<LedgerColumn>(c));
    out << ",total\n";
    out << std::setprecision(10);
    for (const auto& l : result.ledger) {
        out << l.id << ',' << (l.kind ? to_string(*l.kind) : std::string_view("Common"));
        for (double j : l.joules)
            out << ',' << j;
        out << ',' << l.total() << '\n';
    }
}

} // namespace chronowatt
