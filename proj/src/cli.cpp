#include "chronowatt/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "chronowatt/metrics.hpp"

namespace chronowatt {

using nlohmann::json;

std::optional<SweepAxis> parse_sweep_axis(std::string_view s)
{
    if (s == "load")
        return SweepAxis::Load;
    if (s == "packet_size")
        return SweepAxis::PacketSize;
    if (s == "fill")
        return SweepAxis::Fill;
    return std::nullopt;
}

Scenario apply_axis(const Scenario& base, SweepAxis axis, double value)
{
    Scenario s = base;
    switch (axis) {
    case SweepAxis::Load:
        if (value < 0)
            throw ScenarioError("sweep.load", "load must not be negative");
        s.traffic.load = value;
        if (s.traffic.kind == TrafficSpec::Kind::None && value > 0)
            s.traffic.kind = TrafficSpec::Kind::Cbr;
        break;
    case SweepAxis::PacketSize:
        if (value < kMinPacketBytes || value > s.traffic.mtu)
            throw ScenarioError("sweep.packet_size", "packet size must lie in [64, mtu]");
        s.traffic.packet_size = static_cast<std::uint32_t>(value);
        break;
    case SweepAxis::Fill: {
        const int n = static_cast<int>(value);
        if (n != value || n < 1 || n > static_cast<int>(base.device.chassis().populated.size()))
            throw ScenarioError("sweep.fill", "fill must be an integer in [1, populated linecards]");
        s.device = base.device.with_populated(n);
        break;
    }
    }
    s.validate();
    return s;
}

std::vector<SimResult> run_sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                                 unsigned jobs)
{
    if (values.empty())
        throw InputError("sweep needs at least one value");
    std::vector<Scenario> scenarios;
    scenarios.reserve(values.size());
    for (double v : values)
        scenarios.push_back(apply_axis(base, axis, v));
    std::vector<SimResult> results(values.size());
    std::vector<std::exception_ptr> errors(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                results[i] = run(scenarios[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return results;
}

namespace {

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep))
        if (!item.empty())
            out.push_back(item);
    return out;
}

double parse_number(const std::string& s)
{
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError("not a number: '" + s + "'");
    }
    if (used != s.size())
        throw InputError("not a number: '" + s + "'");
    return v;
}

Nanos parse_duration_arg(const std::string& s)
{
    if (!s.empty() && s.front() == 'P')
        return parse_iso_duration(s);
    Nanos v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw InputError("bad duration '" + s + "'");
    return v;
}

struct EmitSet {
    bool json = false;
    bool csv = false;
};

EmitSet parse_emit(const std::string& s)
{
    EmitSet e;
    for (const auto& part : split(s, ',')) {
        if (part == "json")
            e.json = true;
        else if (part == "csv")
            e.csv = true;
        else
            throw InputError("--emit accepts csv and json");
    }
    return e;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream f(path);
    if (!f)
        throw InputError("cannot write " + path.string());
    f << content;
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            const std::string& emit, const std::string& log_path, std::ostream& out)
{
    const EmitSet e = parse_emit(emit);
    Scenario s = load_scenario_file(scenario_path);
    if (seed)
        s.seed = *seed;
    if (!log_path.empty())
        s.engine.event_log = log_path;
    const SimResult r = run(s);
    const json summary = summary_json(r);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        if (e.json)
            write_file(std::filesystem::path(out_dir) / "summary.json", summary.dump(2) + "\n");
        if (e.csv) {
            std::ostringstream ledger;
            write_ledger_csv(ledger, r);
            write_file(std::filesystem::path(out_dir) / "ledger.csv", ledger.str());
        }
    } else if (e.json) {
        out << summary.dump(2) << '\n';
    } else if (e.csv) {
        write_ledger_csv(out, r);
    }
    const auto ratio = ecr(r);
    out << "energy_j=" << r.total_energy_j << " average_w=" << r.average_power_w()
        << " ecr=" << (ratio ? std::to_string(*ratio) : std::string("undefined")) << " delivered=" << r.delivered_packets
        << " dropped=" << r.drops.total() << " residual=" << r.residual_packets << '\n';
    out << "event_log_digest=" << hex64(r.digest) << '\n';
    return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& axis_text, const std::vector<std::string>& raw,
              unsigned jobs, std::optional<std::uint64_t> seed, const std::string& out_dir, const std::string& emit,
              std::ostream& out)
{
    const EmitSet e = parse_emit(emit);
    const auto axis = parse_sweep_axis(axis_text);
    if (!axis)
        throw InputError("--axis must be load, packet_size or fill");
    std::vector<double> values;
    for (const auto& chunk : raw)
        for (const auto& v : split(chunk, ','))
            values.push_back(parse_number(v));
    if (values.empty())
        throw InputError("sweep needs at least one value");
    Scenario s = load_scenario_file(scenario_path);
    if (seed)
        s.seed = *seed;
    const auto results = run_sweep(s, *axis, values, jobs);
    std::vector<EfficiencyPoint> points;
    switch (*axis) {
    case SweepAxis::Load:
        points = efficiency_curve(results);
        break;
    case SweepAxis::PacketSize:
        points = packet_size_curve(results);
        break;
    case SweepAxis::Fill:
        points = chassis_fill_curve(results);
        break;
    }
    std::ostringstream csv;
    write_curve_csv(csv, points);
    json doc = {{"format_version", kReportFormatVersion}, {"axis", axis_text}};
    doc["points"] = json::array();
    for (const auto& p : points)
        doc["points"].push_back(to_json(p));
    doc["runs"] = json::array();
    for (const auto& r : results)
        doc["runs"].push_back(summary_json(r));
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        if (e.csv)
            write_file(std::filesystem::path(out_dir) / "curve.csv", csv.str());
        if (e.json)
            write_file(std::filesystem::path(out_dir) / "sweep.json", doc.dump(2) + "\n");
    } else {
        if (e.csv)
            out << csv.str();
        if (e.json)
            out << doc.dump(2) << '\n';
    }
    return kExitOk;
}

int cmd_tolerance(const std::string& sla_path, const std::string& format, std::ostream& out)
{
    const SlaTable table = sla_path.empty() ? default_sla_table() : load_sla_table_file(sla_path);
    const auto comps = shipped_components(table);
    const std::vector<AppClass> classes(kMatrixClasses.begin(), kMatrixClasses.end());
    const auto m = tolerance_matrix(table, comps, classes);
    if (format != "text" && format != "csv" && format != "both")
        throw InputError("--format must be text, csv or both");
    if (format != "csv")
        print_matrix_text(out, comps, classes, m);
    if (format == "both")
        out << '\n';
    if (format != "text")
        print_matrix_csv(out, comps, classes, m);
    return kExitOk;
}

struct GenOptions {
    std::string out;
    std::size_t sources = 32;
    double shape_on = 1.4;
    double shape_off = 1.4;
    std::string min_on = "10000000";
    std::string min_off = "10000000";
    double peak_rate = 1e7;
    std::uint32_t packet_size = 1500;
    std::string duration;
    std::uint64_t seed = 1;
    std::string app_class = "BestEffort";
    double poisson_rate = 0;
};

int cmd_gen_traffic(const GenOptions& o, std::ostream& out)
{
    auto cls = parse_app_class(o.app_class);
    if (!cls)
        throw InputError("unknown application class '" + o.app_class + "'");
    const Nanos duration = parse_duration_arg(o.duration);
    if (o.packet_size < kMinPacketBytes || o.packet_size > kDefaultMtuBytes)
        throw ParameterError("packet size must lie in [64, 9216]");
    std::ofstream f(o.out);
    if (!f)
        throw InputError("cannot write " + o.out);
    std::size_t count = 0;
    std::unique_ptr<ArrivalSource> src;
    if (o.poisson_rate > 0) {
        if (duration < 0)
            throw DurationError("duration must not be negative");
        src = std::make_unique<PoissonSource>(o.poisson_rate, o.packet_size, *cls, o.seed, 0, duration);
    } else {
        OnOffSourceParams p;
        p.shape_on = o.shape_on;
        p.shape_off = o.shape_off;
        p.min_on = parse_duration_arg(o.min_on);
        p.min_off = parse_duration_arg(o.min_off);
        p.peak_rate_bps = o.peak_rate;
        p.packet_size = o.packet_size;
        p.app_class = *cls;
        const std::vector<OnOffSourceParams> params{p};
        src = make_aggregate_source(params, o.sources, duration, o.seed);
    }
    f << "timestamp_ns,size_bytes,app_class\n";
    PacketArrival a;
    while (src->next(a)) {
        f << a.timestamp << ',' << a.size << ',' << to_string(a.app_class) << '\n';
        ++count;
    }
    out << "wrote " << count << " arrivals to " << o.out << '\n';
    return kExitOk;
}

int cmd_estimate_hurst(const std::string& trace, const std::string& bin, double capacity, std::size_t min_agg,
                       std::size_t max_agg, bool as_json, std::ostream& out)
{
    const auto stream = load_trace(trace);
    if (stream.empty())
        throw InputError("trace " + trace + " is empty");
    const Nanos bin_width = parse_duration_arg(bin);
    const auto series = utilization_series(stream, bin_width, capacity, stream.back().timestamp + 1);
    if (max_agg == 0)
        max_agg = std::min<std::size_t>(10000, series.values.size() / 10);
    const auto h = estimate_hurst(series, min_agg, max_agg);
    if (as_json) {
        out << json{{"format_version", kReportFormatVersion},
                    {"hurst", h.hurst},
                    {"slope", h.slope},
                    {"residual", h.residual},
                    {"bins", series.values.size()},
                    {"mean_utilization", series.mean()}}
                   .dump(2)
            << '\n';
    } else {
        out << "H=" << h.hurst << " slope=" << h.slope << " residual=" << h.residual << " bins=" << series.values.size()
            << " mean_utilization=" << series.mean() << '\n';
    }
    return kExitOk;
}

bool is_validation_error(const std::exception& e)
{
    return dynamic_cast<const ScenarioError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
           dynamic_cast<const ParseError*>(&e) || dynamic_cast<const OrderingError*>(&e) ||
           dynamic_cast<const InputError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
           dynamic_cast<const CalibrationError*>(&e) || dynamic_cast<const DegenerateSeriesError*>(&e);
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"chronowatt: energy simulator for high-performance network elements"};
    app.require_subcommand(1);

    std::string scenario, out_dir, emit_run = "json", emit_sweep = "csv", log_events, axis, sla, format = "both";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> values;
    unsigned jobs = 1;

    auto* run_cmd = app.add_subcommand("run", "Run one scenario");
    run_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
    run_cmd->add_option("--seed", seed, "Override the scenario seed");
    run_cmd->add_option("--out", out_dir, "Output directory");
    run_cmd->add_option("--emit", emit_run, "Reports to write: csv,json");
    run_cmd->add_option("--log-events", log_events, "Write the NDJSON event log here");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run one scenario per axis value and emit the curve");
    sweep_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
    sweep_cmd->add_option("--axis", axis, "load, packet_size or fill")->required();
    sweep_cmd->add_option("--values,values", values, "Comma-separated axis values");
    sweep_cmd->add_option("--jobs", jobs, "Parallel simulations");
    sweep_cmd->add_option("--seed", seed, "Override the scenario seed");
    sweep_cmd->add_option("--out", out_dir, "Output directory");
    sweep_cmd->add_option("--emit", emit_sweep, "Reports to write: csv,json");

    auto* tol_cmd = app.add_subcommand("tolerance-matrix", "Print the component wake tolerance matrix");
    tol_cmd->add_option("--sla", sla, "SLA policy JSON (default: shipped table)");
    tol_cmd->add_option("--format", format, "text, csv or both");

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-traffic", "Write a self-similar (or Poisson) trace");
    gen_cmd->add_option("--out", gen.out, "Trace CSV to write")->required();
    gen_cmd->add_option("--duration", gen.duration, "Horizon, ns or ISO-8601")->required();
    gen_cmd->add_option("--sources", gen.sources, "Number of ON/OFF sources");
    gen_cmd->add_option("--shape-on", gen.shape_on, "Pareto shape of ON periods");
    gen_cmd->add_option("--shape-off", gen.shape_off, "Pareto shape of OFF periods");
    gen_cmd->add_option("--min-on", gen.min_on, "Minimum ON period, ns or ISO-8601");
    gen_cmd->add_option("--min-off", gen.min_off, "Minimum OFF period, ns or ISO-8601");
    gen_cmd->add_option("--peak-rate-bps", gen.peak_rate, "Rate while ON");
    gen_cmd->add_option("--packet-size", gen.packet_size, "Bytes per packet");
    gen_cmd->add_option("--seed", gen.seed, "PRNG seed");
    gen_cmd->add_option("--class", gen.app_class, "Application class");
    gen_cmd->add_option("--poisson-rate-bps", gen.poisson_rate, "Emit a Poisson control stream instead");

    std::string trace, bin = "10000000";
    double capacity = 1e9;
    std::size_t min_agg = 10, max_agg = 0;
    bool as_json = false;
    auto* hurst_cmd = app.add_subcommand("estimate-hurst", "Variance-time Hurst estimate of a trace");
    hurst_cmd->add_option("trace", trace, "Trace CSV")->required();
    hurst_cmd->add_option("--bin", bin, "Bin width, ns or ISO-8601");
    hurst_cmd->add_option("--capacity-bps", capacity, "Link capacity for utilization");
    hurst_cmd->add_option("--min-agg", min_agg, "Smallest aggregation level");
    hurst_cmd->add_option("--max-agg", max_agg, "Largest aggregation level (default min(10000, bins/10))");
    hurst_cmd->add_flag("--json", as_json, "Print JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (*run_cmd)
            return cmd_run(scenario, seed, out_dir, emit_run, log_events, out);
        if (*sweep_cmd)
            return cmd_sweep(scenario, axis, values, jobs, seed, out_dir, emit_sweep, out);
        if (*tol_cmd)
            return cmd_tolerance(sla, format, out);
        if (*gen_cmd)
            return cmd_gen_traffic(gen, out);
        if (*hurst_cmd)
            return cmd_estimate_hurst(trace, bin, capacity, min_agg, max_agg, as_json, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return is_validation_error(e) ? kExitValidation : kExitRuntime;
    }
    return kExitValidation;
}

} // namespace chronowatt
