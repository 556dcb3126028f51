#include "chronowatt/scenario.hpp"

#include <fstream>

namespace chronowatt {

using nlohmann::json;

std::string_view to_string(TrafficSpec::Kind k)
{
    switch (k) {
    case TrafficSpec::Kind::None:
        return "none";
    case TrafficSpec::Kind::Cbr:
        return "cbr";
    case TrafficSpec::Kind::Poisson:
        return "poisson";
    case TrafficSpec::Kind::OnOff:
        return "onoff";
    case TrafficSpec::Kind::Trace:
        return "trace";
    case TrafficSpec::Kind::Explicit:
        return "explicit";
    }
    return "?";
}

std::optional<LpiParams> LpiConfig::resolve(int port) const
{
    if (!enabled)
        return std::nullopt;
    if (auto it = per_port.find(port); it != per_port.end())
        return negotiate(it->second.first, it->second.second, refresh_source);
    return negotiate(local, peer, refresh_source);
}

Nanos Scenario::idle_threshold() const
{
    if (policy.idle_threshold)
        return *policy.idle_threshold;
    const Nanos t = 10 * lpi.local.params.t_s;
    return t > 0 ? t : 10 * kNanosPerMicro;
}

namespace {

bool is_linecard(const DeviceModel& m, const std::string& target)
{
    for (const auto& lc : m.chassis().populated)
        if (lc.name == target)
            return true;
    return false;
}

void check_target(const DeviceModel& m, const std::string& target, std::optional<ActionKind> action,
                  const std::string& field)
{
    const bool lc = is_linecard(m, target);
    const auto comp = m.find(target);
    if (!lc && !comp)
        throw ScenarioError(field, "unknown target '" + target + "'");
    if (!action)
        return;
    switch (*action) {
    case ActionKind::DeactivateLinecard:
    case ActionKind::ActivateLinecard:
    case ActionKind::CapacityUpgrade:
        if (!lc)
            throw ScenarioError(field, "'" + target + "' is not a linecard");
        break;
    case ActionKind::DeactivateFabricPlane:
    case ActionKind::ActivateFabricPlane:
        if (!comp || m.components()[*comp].spec->kind != ComponentKind::FabricPlane)
            throw ScenarioError(field, "'" + target + "' is not a fabric plane");
        break;
    case ActionKind::DeactivatePsu:
    case ActionKind::ActivatePsu:
        if (!comp || m.components()[*comp].spec->kind != ComponentKind::PowerSupply)
            throw ScenarioError(field, "'" + target + "' is not a power supply");
        break;
    }
}

} // namespace

void Scenario::validate() const
{
    if (duration < 0)
        throw ScenarioError("duration", "must not be negative");
    if (device.components().empty())
        throw ScenarioError("device", "model has no components");
    const int nports = device.port_count();
    const auto& t = traffic;
    if (t.load < 0)
        throw ScenarioError("traffic.load", "must not be negative");
    if (t.packet_size < kMinPacketBytes || t.packet_size > t.mtu)
        throw ScenarioError("traffic.packet_size", "must lie in [64, mtu]");
    for (int p : t.ports)
        if (p < 0 || p >= nports)
            throw ScenarioError("traffic.ports", "port " + std::to_string(p) + " does not exist");
    if (t.kind == TrafficSpec::Kind::Cbr || t.kind == TrafficSpec::Kind::Poisson ||
        t.kind == TrafficSpec::Kind::OnOff) {
        double w = 0;
        for (const auto& c : t.classes) {
            if (c.weight < 0)
                throw ScenarioError("traffic.classes", "weights must not be negative");
            w += c.weight;
        }
        if (w <= 0)
            throw ScenarioError("traffic.classes", "needs at least one class with positive weight");
    }
    if (t.kind == TrafficSpec::Kind::OnOff) {
        if (t.sources_per_port < 1)
            throw ScenarioError("traffic.sources_per_port", "must be at least 1");
        try {
            OnOffSourceParams p = t.onoff;
            if (t.onoff_peak_from_load)
                p.peak_rate_bps = 1;
            p.validate();
        } catch (const ParameterError& e) {
            throw ScenarioError("traffic.onoff", e.what());
        }
    }
    if (t.kind == TrafficSpec::Kind::Trace) {
        if (t.trace.empty())
            throw ScenarioError("traffic.trace", "path required for trace traffic");
        if (!std::filesystem::exists(t.trace))
            throw ScenarioError("traffic.trace", "file not found: " + t.trace.string());
        if (t.trace_port < 0 || t.trace_port >= nports)
            throw ScenarioError("traffic.trace_port", "port does not exist");
    }
    for (const auto& [p, a] : t.arrivals) {
        if (p < 0 || p >= nports)
            throw ScenarioError("traffic.arrivals", "port " + std::to_string(p) + " does not exist");
        if (a.size < kMinPacketBytes || a.size > t.mtu)
            throw ScenarioError("traffic.arrivals", "packet size out of range");
        if (a.timestamp < 0)
            throw ScenarioError("traffic.arrivals", "negative timestamp");
    }
    policy.validate();
    for (std::size_t i = 0; i < policy.schedule.size(); ++i)
        check_target(device, policy.schedule[i].target, policy.schedule[i].action,
                     "policy.schedule[" + std::to_string(i) + "].target");
    for (std::size_t i = 0; i < policy.summons.size(); ++i)
        check_target(device, policy.summons[i].target, std::nullopt,
                     "policy.summons[" + std::to_string(i) + "].target");
    for (const auto& target : policy.initially_off)
        check_target(device, target, std::nullopt, "policy.initially_off");
    if (idle_threshold() <= 0)
        throw ScenarioError("policy.idle_threshold_ns", "must be positive");
    try {
        lpi.local.params.validate();
        lpi.peer.params.validate();
        for (const auto& [p, pair] : lpi.per_port) {
            if (p < 0 || p >= nports)
                throw ScenarioError("lpi.per_port", "port " + std::to_string(p) + " does not exist");
            pair.first.params.validate();
            pair.second.params.validate();
        }
    } catch (const ParameterError& e) {
        throw ScenarioError("lpi", e.what());
    }
    if (engine.epoch <= 0)
        throw ScenarioError("engine.epoch_ns", "must be positive");
    if (engine.pipeline_latency < 0)
        throw ScenarioError("engine.pipeline_latency_ns", "must not be negative");
    if (engine.buffer_bytes == 0)
        throw ScenarioError("engine.buffer_bytes", "must be positive");
}

namespace {

Nanos duration_field(const json& v, const std::string& field)
{
    try {
        if (v.is_number_integer())
            return v.get<Nanos>();
        if (v.is_number())
            return static_cast<Nanos>(v.get<double>());
        if (v.is_string())
            return parse_iso_duration(v.get<std::string>());
    } catch (const Error& e) {
        throw ScenarioError(field, e.what());
    }
    throw ScenarioError(field, "expected nanoseconds or an ISO-8601 duration");
}

std::filesystem::path resolve_relative(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty())
        return base / path;
    return path;
}

AppClass class_field(const std::string& name, const std::string& field)
{
    auto c = parse_app_class(name);
    if (!c)
        throw ScenarioError(field, "unknown application class '" + name + "'");
    return *c;
}

DeviceModel load_device(const json& j, const std::filesystem::path& base, std::string& ref)
{
    DeviceModel m;
    try {
        if (j.contains("inline")) {
            ref = "inline";
            m = load_device_model(j.at("inline"));
        } else if (j.contains("path")) {
            ref = j.at("path").get<std::string>();
            auto p = resolve_relative(base, ref);
            if (!std::filesystem::exists(p))
                throw ScenarioError("device.path", "model file not found: " + p.string());
            m = load_device_model_file(p);
        } else if (j.contains("model")) {
            ref = j.at("model").get<std::string>();
            std::filesystem::path p;
            try {
                p = resolve_model_path(ref);
                if (!std::filesystem::exists(p))
                    p = resolve_relative(base, ref);
                if (!std::filesystem::exists(p))
                    throw InputError("not found");
            } catch (const InputError&) {
                throw ScenarioError("device.model", "device model '" + ref + "' not found");
            }
            m = load_device_model_file(p);
        } else {
            throw ScenarioError("device", "needs one of model, path or inline");
        }
    } catch (const ScenarioError&) {
        throw;
    } catch (const Error& e) {
        throw ScenarioError("device", e.what());
    }
    if (j.contains("populated")) {
        const int n = j.at("populated").get<int>();
        if (n < 1 || n > m.chassis().linecard_slots)
            throw ScenarioError("device.populated", "must lie in [1, linecard_slots]");
        if (n != static_cast<int>(m.chassis().populated.size()))
            m = m.with_populated(n);
    }
    return m;
}

LpiEndpoint endpoint(const json& j, const std::string& field)
{
    LpiEndpoint e;
    try {
        e.params = lpi_params_from_json(j);
    } catch (const Error& err) {
        throw ScenarioError(field, err.what());
    }
    e.supported = j.value("supported", true);
    return e;
}

TrafficSpec load_traffic(const json& j, const std::filesystem::path& base)
{
    TrafficSpec t;
    const std::string kind = j.value("kind", std::string("none"));
    if (kind == "none")
        t.kind = TrafficSpec::Kind::None;
    else if (kind == "cbr")
        t.kind = TrafficSpec::Kind::Cbr;
    else if (kind == "poisson")
        t.kind = TrafficSpec::Kind::Poisson;
    else if (kind == "onoff")
        t.kind = TrafficSpec::Kind::OnOff;
    else if (kind == "trace")
        t.kind = TrafficSpec::Kind::Trace;
    else if (kind == "explicit")
        t.kind = TrafficSpec::Kind::Explicit;
    else
        throw ScenarioError("traffic.kind", "unknown traffic kind '" + kind + "'");
    t.load = j.value("load", 0.0);
    t.packet_size = j.value("packet_size", 1500u);
    t.mtu = j.value("mtu", kDefaultMtuBytes);
    if (j.contains("classes")) {
        t.classes.clear();
        const auto& jc = j.at("classes");
        if (jc.is_object()) {
            for (const auto& [name, w] : jc.items())
                t.classes.push_back({class_field(name, "traffic.classes"), w.get<double>()});
        } else {
            for (const auto& e : jc)
                t.classes.push_back(
                    {class_field(e.at("class").get<std::string>(), "traffic.classes"), e.value("weight", 1.0)});
        }
    }
    if (j.contains("onoff")) {
        const auto& o = j.at("onoff");
        t.onoff.shape_on = o.value("shape_on", t.onoff.shape_on);
        t.onoff.shape_off = o.value("shape_off", t.onoff.shape_off);
        if (o.contains("min_on_ns"))
            t.onoff.min_on = duration_field(o.at("min_on_ns"), "traffic.onoff.min_on_ns");
        if (o.contains("min_off_ns"))
            t.onoff.min_off = duration_field(o.at("min_off_ns"), "traffic.onoff.min_off_ns");
        if (o.contains("peak_rate_bps")) {
            t.onoff.peak_rate_bps = o.at("peak_rate_bps").get<double>();
            t.onoff_peak_from_load = false;
        }
    }
    t.sources_per_port = j.value("sources_per_port", t.sources_per_port);
    if (j.contains("trace"))
        t.trace = resolve_relative(base, j.at("trace").get<std::string>());
    t.trace_port = j.value("trace_port", 0);
    if (j.contains("ports"))
        t.ports = j.at("ports").get<std::vector<int>>();
    if (j.contains("arrivals")) {
        for (const auto& a : j.at("arrivals")) {
            PacketArrival p;
            p.timestamp = a.at("timestamp_ns").get<Nanos>();
            p.size = a.at("size_bytes").get<std::uint32_t>();
            p.app_class = class_field(a.value("app_class", std::string("BestEffort")), "traffic.arrivals");
            t.arrivals.emplace_back(a.value("port", 0), p);
        }
    }
    return t;
}

} // namespace

Scenario load_scenario(const json& doc, const std::filesystem::path& base_dir)
{
    Scenario s;
    try {
        if (doc.value("format_version", 1) != 1)
            throw ScenarioError("format_version", "must be 1");
        s.name = doc.value("name", std::string("scenario"));
        if (!doc.contains("device"))
            throw ScenarioError("device", "missing");
        s.device = load_device(doc.at("device"), base_dir, s.device_ref);
        if (doc.contains("traffic"))
            s.traffic = load_traffic(doc.at("traffic"), base_dir);
        if (doc.contains("policy"))
            s.policy = policy_from_json(doc.at("policy"));
        if (doc.contains("lpi")) {
            const auto& jl = doc.at("lpi");
            s.lpi.enabled = jl.value("enabled", false);
            if (jl.contains("local"))
                s.lpi.local = endpoint(jl.at("local"), "lpi.local");
            if (jl.contains("peer"))
                s.lpi.peer = endpoint(jl.at("peer"), "lpi.peer");
            else
                s.lpi.peer = s.lpi.local;
            const std::string src = jl.value("refresh_source", std::string("local"));
            if (src == "local")
                s.lpi.refresh_source = RefreshSource::Local;
            else if (src == "peer")
                s.lpi.refresh_source = RefreshSource::Peer;
            else
                throw ScenarioError("lpi.refresh_source", "expected local or peer");
            if (jl.contains("per_port")) {
                for (const auto& [key, v] : jl.at("per_port").items()) {
                    const std::string field = "lpi.per_port." + key;
                    int port = 0;
                    try {
                        port = std::stoi(key);
                    } catch (const std::exception&) {
                        throw ScenarioError(field, "key must be a port number");
                    }
                    auto local = v.contains("local") ? endpoint(v.at("local"), field + ".local") : s.lpi.local;
                    auto peer = v.contains("peer") ? endpoint(v.at("peer"), field + ".peer") : s.lpi.peer;
                    s.lpi.per_port[port] = {local, peer};
                }
            }
        }
        if (doc.contains("sla_policy")) {
            auto p = resolve_relative(base_dir, doc.at("sla_policy").get<std::string>());
            try {
                s.sla = load_sla_table_file(p);
            } catch (const Error& e) {
                throw ScenarioError("sla_policy", e.what());
            }
        }
        if (doc.contains("engine")) {
            const auto& je = doc.at("engine");
            if (je.contains("epoch_ns"))
                s.engine.epoch = duration_field(je.at("epoch_ns"), "engine.epoch_ns");
            if (je.contains("pipeline_latency_ns"))
                s.engine.pipeline_latency = duration_field(je.at("pipeline_latency_ns"), "engine.pipeline_latency_ns");
            s.engine.buffer_bytes = je.value("buffer_bytes", s.engine.buffer_bytes);
            s.engine.energy_audit = je.value("energy_audit", false);
            s.engine.record_delays = je.value("record_delays", false);
        }
        if (!doc.contains("duration"))
            throw ScenarioError("duration", "missing");
        s.duration = duration_field(doc.at("duration"), "duration");
        s.seed = doc.value("seed", std::uint64_t{1});
        if (doc.contains("outputs"))
            s.outputs = doc.at("outputs").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ScenarioError("scenario", e.what());
    }
    s.validate();
    return s;
}

Scenario load_scenario_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ScenarioError("scenario", "cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ScenarioError("scenario", path.string() + ": " + e.what());
    }
    return load_scenario(doc, path.parent_path());
}

Scenario make_scenario(DeviceModel device, double load, Nanos duration, std::uint32_t packet_size)
{
    Scenario s;
    s.name = device.name();
    s.device_ref = device.name();
    s.device = std::move(device);
    s.traffic.kind = load > 0 ? TrafficSpec::Kind::Cbr : TrafficSpec::Kind::None;
    s.traffic.load = load;
    s.traffic.packet_size = packet_size;
    s.duration = duration;
    return s;
}

} // namespace chronowatt
