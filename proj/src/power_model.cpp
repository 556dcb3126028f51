#include "chronowatt/power_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <queue>

namespace chronowatt {

using nlohmann::json;

std::string_view to_string(PowerStateName s)
{
    switch (s) {
    case PowerStateName::Active:
        return "Active";
    case PowerStateName::LowPowerIdle:
        return "LowPowerIdle";
    case PowerStateName::Off:
        return "Off";
    }
    return "?";
}

namespace {

constexpr std::array<std::string_view, kComponentKindCount> kKindNames = {
    "PHY_Link",   "Serdes",      "NPU_Core",    "SRAM_Bank",    "EmbeddedCPU",
    "CentralCPU", "FabricPlane", "PowerSupply", "LookupEngine", "Buffer_Memory",
};

} // namespace

std::string_view to_string(ComponentKind k)
{
    return kKindNames[static_cast<std::size_t>(k)];
}

std::optional<ComponentKind> parse_component_kind(std::string_view s)
{
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s)
            return static_cast<ComponentKind>(i);
    return std::nullopt;
}

// --- ComponentSpec ---------------------------------------------------------

const PowerStateSpec* ComponentSpec::state(PowerStateName name) const
{
    for (const auto& s : states)
        if (s.name == name)
            return &s;
    return nullptr;
}

PowerStateSpec* ComponentSpec::state(PowerStateName name)
{
    for (auto& s : states)
        if (s.name == name)
            return &s;
    return nullptr;
}

const TransitionSpec* ComponentSpec::transition(PowerStateName from, PowerStateName to) const
{
    for (const auto& t : transitions)
        if (t.from == from && t.to == to)
            return &t;
    return nullptr;
}

const PowerStateSpec& ComponentSpec::active() const
{
    const auto* a = state(PowerStateName::Active);
    if (!a)
        throw ParameterError("component " + name + " has no Active state");
    return *a;
}

void ComponentSpec::validate() const
{
    auto fail = [&](const std::string& why) { throw ParameterError("component " + name + ": " + why); };
    int actives = 0;
    for (const auto& s : states) {
        if (s.name == PowerStateName::Active)
            ++actives;
        if (s.static_draw_w < 0)
            fail("negative static draw");
        if (s.name != PowerStateName::Active && (s.per_bit_energy_j != 0 || s.per_packet_energy_j != 0))
            fail("work energy declared on a non-Active state");
    }
    if (actives != 1)
        fail("exactly one Active state required");
    const auto* lpi = state(PowerStateName::LowPowerIdle);
    if (lpi && active().static_draw_w > 0 && !(lpi->static_draw_w < active().static_draw_w))
        fail("LowPowerIdle draw must be below Active draw");
    for (const auto& t : transitions) {
        if (t.duration < 0 || t.energy_j < 0)
            fail("negative transition duration or energy");
        if (!supports(t.from) || !supports(t.to))
            fail("transition references an undeclared state");
    }
    // Undirected connectivity over declared states.
    std::vector<PowerStateName> seen{PowerStateName::Active};
    std::queue<PowerStateName> work;
    work.push(PowerStateName::Active);
    while (!work.empty()) {
        auto cur = work.front();
        work.pop();
        for (const auto& t : transitions) {
            for (auto [a, b] : {std::pair{t.from, t.to}, std::pair{t.to, t.from}}) {
                if (a == cur && std::find(seen.begin(), seen.end(), b) == seen.end()) {
                    seen.push_back(b);
                    work.push(b);
                }
            }
        }
    }
    if (seen.size() != states.size())
        fail("transitions do not connect every declared state");
}

// --- chassis ---------------------------------------------------------------

Nanos LinecardSpec::bringup_chain() const
{
    std::array<Nanos, kComponentKindCount> slowest{};
    for (const auto& c : components)
        if (const auto* t = c.transition(PowerStateName::Off, PowerStateName::Active))
            slowest[static_cast<std::size_t>(c.kind)] = std::max(slowest[static_cast<std::size_t>(c.kind)], t->duration);
    Nanos total = 0;
    for (Nanos d : slowest)
        total = checked_add(total, d);
    return total;
}

double ChassisSpec::capacity_bps() const
{
    double c = 0;
    for (const auto& lc : populated)
        c += lc.capacity_bps();
    return c;
}

void ChassisSpec::validate() const
{
    if (linecard_slots < 0 || static_cast<int>(populated.size()) > linecard_slots)
        throw ParameterError("populated linecards exceed slot count");
    if (!(psu_efficiency > 0 && psu_efficiency <= 1))
        throw ParameterError("PSU efficiency must lie in (0, 1]");
    if (common_draw_w < 0)
        throw ParameterError("negative common draw");
    for (const auto& lc : populated) {
        if (lc.ports <= 0 || !(lc.port_rate_bps > 0))
            throw ParameterError("linecard " + lc.name + " needs ports and a positive port rate");
        for (const auto& c : lc.components)
            c.validate();
    }
    for (const auto& c : fabric_planes)
        c.validate();
    for (const auto& c : power_supplies)
        c.validate();
}

// --- elasticity ------------------------------------------------------------

void ElasticityCalibration::validate() const
{
    if (anchors.size() < 2)
        throw CalibrationError("calibration needs at least two anchors");
    if (anchors.front().first != 0.0 || anchors.back().first != 1.0)
        throw CalibrationError("calibration anchors must include load 0 and load 1");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (anchors[i].second < 0)
            throw CalibrationError("negative anchor power");
        if (i > 0 && !(anchors[i].first > anchors[i - 1].first))
            throw CalibrationError("calibration anchors must be sorted by strictly increasing load");
    }
    if (!(capacity_bps > 0))
        throw CalibrationError("calibration capacity must be positive");
}

double device_power(const ElasticityCalibration& cal, double load)
{
    if (!(load >= 0.0 && load <= 1.0))
        throw RangeError("load " + std::to_string(load) + " outside [0, 1]");
    const auto& a = cal.anchors;
    for (std::size_t i = 1; i < a.size(); ++i) {
        if (load <= a[i].first) {
            double t = (load - a[i - 1].first) / (a[i].first - a[i - 1].first);
            return a[i - 1].second + t * (a[i].second - a[i - 1].second);
        }
    }
    return a.back().second;
}

KindShares default_kind_shares()
{
    // Fabric interface (12%) is split between linecard serdes and the chassis
    // fabric planes; buffer memory (15%) between packet buffers and SRAM banks.
    return {
        {ComponentKind::PHY_Link, 0.10},      {ComponentKind::NPU_Core, 0.35},
        {ComponentKind::LookupEngine, 0.10},  {ComponentKind::Buffer_Memory, 0.10},
        {ComponentKind::SRAM_Bank, 0.05},     {ComponentKind::Serdes, 0.06},
        {ComponentKind::FabricPlane, 0.06},   {ComponentKind::EmbeddedCPU, 0.08},
        {ComponentKind::PowerSupply, 0.10},
    };
}

double WorkCurve::operator()(double u) const
{
    u = std::clamp(u, 0.0, 1.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (u <= points[i].first) {
            double t = (u - points[i - 1].first) / (points[i].first - points[i - 1].first);
            return points[i - 1].second + t * (points[i].second - points[i - 1].second);
        }
    }
    return points.back().second;
}

// --- calibration -----------------------------------------------------------

namespace {

template <class F>
void for_each_component(ChassisSpec& chassis, F&& f)
{
    for (auto& lc : chassis.populated)
        for (auto& c : lc.components)
            f(c, &lc);
    for (auto& c : chassis.fabric_planes)
        f(c, nullptr);
    for (auto& c : chassis.power_supplies)
        f(c, nullptr);
}

} // namespace

CalibrationResult calibrate_components(ChassisSpec& chassis, const ElasticityCalibration& cal,
                                       const KindShares& shares, const PacketSizeCalibration& packets)
{
    cal.validate();
    if (static_cast<int>(chassis.populated.size()) != chassis.linecard_slots)
        throw CalibrationError("calibration requires a fully populated chassis");
    if (!(chassis.psu_efficiency > 0 && chassis.psu_efficiency <= 1))
        throw CalibrationError("PSU efficiency must lie in (0, 1]");
    if (std::abs(chassis.capacity_bps() - cal.capacity_bps) > 1e-6 * cal.capacity_bps)
        throw CalibrationError("chassis port capacity does not match calibration capacity");
    if (packets.small_bytes < kMinPacketBytes || packets.reference_bytes <= packets.small_bytes)
        throw CalibrationError("packet-size calibration needs 64 <= small < reference bytes");
    if (packets.uplift < 0)
        throw CalibrationError("negative small-packet uplift");

    double share_sum = 0;
    for (auto [kind, s] : shares) {
        if (s < 0)
            throw CalibrationError("negative budget share for " + std::string(to_string(kind)));
        share_sum += s;
    }
    if (std::abs(share_sum - 1.0) > 1e-9)
        throw CalibrationError("budget shares sum to " + std::to_string(share_sum) + ", not 1");

    std::array<int, kComponentKindCount> instances{};
    for_each_component(chassis, [&](ComponentSpec& c, LinecardSpec*) { ++instances[static_cast<std::size_t>(c.kind)]; });
    for (auto [kind, s] : shares)
        if (s > 0 && instances[static_cast<std::size_t>(kind)] == 0)
            throw CalibrationError("budget share for " + std::string(to_string(kind)) + " but no such component");

    const double p0 = device_power(cal, 0.0);
    const double p1 = device_power(cal, 1.0);
    const double delta = p1 - p0;
    const double ratio = static_cast<double>(packets.reference_bytes) / packets.small_bytes;
    // Per-packet power at full load with reference-size packets.
    const double packet_full = packets.uplift * p1 / (ratio - 1.0);
    const double bit_full = delta - packet_full;
    if (delta < 0)
        throw CalibrationError("full-load power below zero-load power");
    if (bit_full < 0 || (bit_full == 0 && packet_full > 0))
        throw CalibrationError("small-packet uplift exceeds the device's load elasticity");

    auto share_of = [&](ComponentKind k) {
        auto it = shares.find(k);
        return it == shares.end() ? 0.0 : it->second;
    };
    const double psu_share = share_of(ComponentKind::PowerSupply);
    if (chassis.common_draw_w > psu_share * p0 + 1e-9)
        throw CalibrationError("common draw exceeds the PowerSupply budget share at zero load");

    CalibrationResult result;
    if (bit_full > 0) {
        result.work_curve.points.clear();
        for (auto [u, w] : cal.anchors) {
            double g = ((w - p0) - packet_full * u) / bit_full;
            if (g < -1e-12)
                throw CalibrationError("load elasticity too small for the per-packet term at load " + std::to_string(u));
            result.work_curve.points.emplace_back(u, std::max(0.0, g));
        }
    }

    const double eff = chassis.psu_efficiency;
    const double capacity = chassis.capacity_bps();
    std::array<int, kComponentKindCount> chassis_instances{};
    for (auto& c : chassis.fabric_planes)
        ++chassis_instances[static_cast<std::size_t>(c.kind)];
    for (auto& c : chassis.power_supplies)
        ++chassis_instances[static_cast<std::size_t>(c.kind)];

    for_each_component(chassis, [&](ComponentSpec& c, LinecardSpec* lc) {
        const auto k = static_cast<std::size_t>(c.kind);
        const double n = instances[k];
        const double s = share_of(c.kind) / n;
        c.budget_share = s;

        if (lc == nullptr) {
            c.scope = TrafficScope::Chassis;
            c.scope_capacity_bps = capacity / chassis_instances[k];
        } else if (c.kind == ComponentKind::PHY_Link && c.port >= 0) {
            c.scope = TrafficScope::Port;
            c.scope_capacity_bps = lc->port_rate_bps;
        } else {
            c.scope = TrafficScope::Linecard;
            c.scope_capacity_bps = lc->capacity_bps();
        }

        const bool is_psu = c.kind == ComponentKind::PowerSupply;
        // Converter-fed components are specified on the DC side.
        const double to_dc = is_psu ? 1.0 : eff;
        double static_wall = s * p0;
        if (is_psu)
            static_wall -= chassis.common_draw_w / n;
        const double full_packet_rate = c.scope_capacity_bps / (8.0 * packets.reference_bytes);

        auto* active = c.state(PowerStateName::Active);
        if (!active)
            throw CalibrationError("component " + c.name + " has no Active state");
        active->static_draw_w = std::max(0.0, static_wall) * to_dc;
        active->per_bit_energy_j = s * bit_full / c.scope_capacity_bps * to_dc;
        active->per_packet_energy_j = s * packet_full / full_packet_rate * to_dc;
        active->functional = true;

        if (auto* lpi = c.state(PowerStateName::LowPowerIdle)) {
            if (c.low_power_draw_w) {
                lpi->static_draw_w = *c.low_power_draw_w;
                if (active->static_draw_w > 0 && !(lpi->static_draw_w < active->static_draw_w))
                    throw CalibrationError("component " + c.name + ": LowPowerIdle floor " +
                                           std::to_string(lpi->static_draw_w) + " W exceeds its budget share (" +
                                           std::to_string(active->static_draw_w) + " W Active)");
            } else {
                lpi->static_draw_w = c.low_power_fraction.value_or(0.0) * active->static_draw_w;
            }
            lpi->functional = false;
        }
        if (auto* off = c.state(PowerStateName::Off)) {
            off->static_draw_w = c.off_draw_w;
            off->functional = false;
        }
        result.coefficients.push_back(ComponentCoefficients{c.name, c.kind, active->static_draw_w,
                                                            active->per_bit_energy_j, active->per_packet_energy_j});
    });
    return result;
}

// --- DeviceModel -----------------------------------------------------------

DeviceModel::DeviceModel(std::string name, ChassisSpec chassis, ElasticityCalibration cal, KindShares shares,
                         PacketSizeCalibration packets)
    : name_(std::move(name)), chassis_(std::move(chassis)), cal_(std::move(cal)), shares_(std::move(shares)),
      packets_(packets)
{
    auto result = calibrate_components(chassis_, cal_, shares_, packets_);
    curve_ = result.work_curve;
    chassis_.validate();
    index();
}

DeviceModel::DeviceModel(const DeviceModel& other)
    : name_(other.name_), chassis_(other.chassis_), cal_(other.cal_), shares_(other.shares_),
      packets_(other.packets_), curve_(other.curve_)
{
    index();
}

DeviceModel& DeviceModel::operator=(const DeviceModel& other)
{
    if (this != &other) {
        DeviceModel copy(other);
        *this = std::move(copy);
    }
    return *this;
}

void DeviceModel::index()
{
    flat_.clear();
    port_linecard_.clear();
    int port_base = 0;
    for (std::size_t l = 0; l < chassis_.populated.size(); ++l) {
        const auto& lc = chassis_.populated[l];
        for (const auto& c : lc.components) {
            int gp = c.port >= 0 ? port_base + c.port : -1;
            flat_.push_back(FlatComponent{&c, static_cast<int>(l), gp, lc.name + "." + c.name});
        }
        for (int p = 0; p < lc.ports; ++p)
            port_linecard_.push_back(static_cast<int>(l));
        port_base += lc.ports;
    }
    for (const auto& c : chassis_.fabric_planes)
        flat_.push_back(FlatComponent{&c, -1, -1, c.name});
    for (const auto& c : chassis_.power_supplies)
        flat_.push_back(FlatComponent{&c, -1, -1, c.name});
}

std::optional<std::size_t> DeviceModel::find(std::string_view id) const
{
    for (std::size_t i = 0; i < flat_.size(); ++i)
        if (flat_[i].id == id)
            return i;
    return std::nullopt;
}

double DeviceModel::port_rate_bps(int port) const
{
    return chassis_.populated[port_linecard_[port]].port_rate_bps;
}

DeviceModel DeviceModel::with_populated(int count) const
{
    if (count < 0 || count > chassis_.linecard_slots)
        throw ParameterError("populated count " + std::to_string(count) + " outside [0, " +
                             std::to_string(chassis_.linecard_slots) + "]");
    DeviceModel copy(*this);
    copy.chassis_.populated.resize(std::min<std::size_t>(count, copy.chassis_.populated.size()));
    copy.index();
    return copy;
}

double DeviceModel::wall_factor(std::size_t i) const
{
    return flat_[i].spec->kind == ComponentKind::PowerSupply ? 1.0 : 1.0 / chassis_.psu_efficiency;
}

double DeviceModel::state_draw_w(std::size_t i, PowerStateName s) const
{
    const auto* st = flat_[i].spec->state(s);
    if (!st)
        throw ParameterError("component " + flat_[i].id + " has no " + std::string(to_string(s)) + " state");
    return st->static_draw_w * wall_factor(i);
}

double DeviceModel::work_power_w(std::size_t i, double bitrate_bps, double packet_rate) const
{
    const auto& spec = *flat_[i].spec;
    const auto& a = spec.active();
    double cap = spec.scope_capacity_bps;
    double bits = cap > 0 ? a.per_bit_energy_j * cap * curve_(bitrate_bps / cap) : 0.0;
    return (bits + a.per_packet_energy_j * packet_rate) * wall_factor(i);
}

double DeviceModel::component_power_w(std::size_t i, const ComponentStatus& st) const
{
    if (st.active_fraction)
        return *st.active_fraction * state_draw_w(i, PowerStateName::Active);
    if (st.transition_to)
        return std::max(state_draw_w(i, st.state), state_draw_w(i, *st.transition_to));
    double w = state_draw_w(i, st.state);
    if (st.state == PowerStateName::Active)
        w += work_power_w(i, st.bitrate_bps, st.packet_rate);
    return w;
}

double instantaneous_power(const DeviceModel& model, std::span<const ComponentStatus> status)
{
    if (status.size() != model.components().size())
        throw ParameterError("status vector does not match the device's component count");
    double total = model.chassis().common_draw_w;
    for (std::size_t i = 0; i < status.size(); ++i)
        total += model.component_power_w(i, status[i]);
    return total;
}

KindShares recompute_shares(const DeviceModel& model)
{
    std::map<ComponentKind, double> watts;
    double total = model.chassis().common_draw_w;
    watts[ComponentKind::PowerSupply] += model.chassis().common_draw_w;
    const double ref_bits = 8.0 * model.packet_calibration().reference_bytes;
    for (std::size_t i = 0; i < model.components().size(); ++i) {
        const auto& spec = *model.components()[i].spec;
        double cap = spec.scope_capacity_bps;
        double w = model.state_draw_w(i, PowerStateName::Active) + model.work_power_w(i, cap, cap / ref_bits);
        watts[spec.kind] += w;
        total += w;
    }
    KindShares out;
    for (auto [k, w] : watts)
        out[k] = total > 0 ? w / total : 0.0;
    return out;
}

// --- model files -----------------------------------------------------------

namespace {

ComponentSpec component_from_json(const json& j, const std::string& name, ComponentKind kind)
{
    ComponentSpec c;
    c.name = name;
    c.kind = kind;
    c.states.push_back(PowerStateSpec{PowerStateName::Active, 0, 0, 0, true});
    if (j.contains("low_power_fraction"))
        c.low_power_fraction = j.at("low_power_fraction").get<double>();
    if (j.contains("low_power_draw_w"))
        c.low_power_draw_w = j.at("low_power_draw_w").get<double>();
    if (c.low_power_fraction && (*c.low_power_fraction < 0 || *c.low_power_fraction >= 1))
        throw ParameterError("component " + name + ": low_power_fraction must lie in [0, 1)");
    const bool has_lpi = c.low_power_fraction || c.low_power_draw_w;
    c.off_draw_w = j.value("off_draw_w", 0.0);
    if (has_lpi)
        c.states.push_back(PowerStateSpec{PowerStateName::LowPowerIdle, 0, 0, 0, false});
    c.states.push_back(PowerStateSpec{PowerStateName::Off, c.off_draw_w, 0, 0, false});

    auto ns = [&](const char* key) { return j.value(key, Nanos{0}); };
    auto joules = [&](const char* key) { return j.value(key, 0.0); };
    using S = PowerStateName;
    c.transitions.push_back({S::Active, S::Off, ns("shutdown_ns"), joules("shutdown_energy_j")});
    c.transitions.push_back({S::Off, S::Active, ns("bringup_ns"), joules("bringup_energy_j")});
    if (has_lpi) {
        c.transitions.push_back({S::Active, S::LowPowerIdle, ns("sleep_ns"), joules("sleep_energy_j")});
        c.transitions.push_back({S::LowPowerIdle, S::Active, ns("wake_ns"), joules("wake_energy_j")});
        c.transitions.push_back({S::LowPowerIdle, S::Off, ns("shutdown_ns"), joules("shutdown_energy_j")});
    }
    return c;
}

ComponentKind kind_from_json(const json& j)
{
    auto text = j.at("kind").get<std::string>();
    auto kind = parse_component_kind(text);
    if (!kind)
        throw ParameterError("unknown component kind '" + text + "'");
    return *kind;
}

} // namespace

DeviceModel load_device_model(const json& doc)
{
    try {
        if (doc.value("format_version", 0) != 1)
            throw ParameterError("device model format_version must be 1");
        const auto& jc = doc.at("calibration");
        ElasticityCalibration cal;
        cal.capacity_bps = jc.at("capacity_bps").get<double>();
        for (const auto& a : jc.at("anchors"))
            cal.anchors.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
        PacketSizeCalibration packets;
        packets.reference_bytes = jc.value("reference_packet_bytes", 1500u);
        packets.small_bytes = jc.value("small_packet_bytes", 64u);
        packets.uplift = jc.value("small_packet_uplift", 0.05);

        KindShares shares;
        if (doc.contains("budget_shares")) {
            for (const auto& [k, v] : doc.at("budget_shares").items()) {
                auto kind = parse_component_kind(k);
                if (!kind)
                    throw ParameterError("unknown component kind '" + k + "' in budget_shares");
                shares[*kind] = v.get<double>();
            }
        } else {
            shares = default_kind_shares();
        }

        const auto& jch = doc.at("chassis");
        ChassisSpec chassis;
        chassis.linecard_slots = jch.at("linecard_slots").get<int>();
        chassis.psu_efficiency = jch.value("psu_efficiency", 0.9);
        chassis.common_draw_w = jch.value("common_draw_w", 0.0);

        const auto& jl = doc.at("linecard");
        LinecardSpec tmpl;
        tmpl.ports = jl.at("ports").get<int>();
        tmpl.port_rate_bps = jl.at("port_rate_bps").get<double>();
        for (const auto& jcomp : jl.at("components")) {
            auto base = jcomp.at("name").get<std::string>();
            auto kind = kind_from_json(jcomp);
            const auto& count = jcomp.at("count");
            if (count.is_string()) {
                if (count.get<std::string>() != "per_port")
                    throw ParameterError("component count must be an integer or \"per_port\"");
                for (int p = 0; p < tmpl.ports; ++p) {
                    auto c = component_from_json(jcomp, base + std::to_string(p), kind);
                    c.port = p;
                    tmpl.components.push_back(std::move(c));
                }
            } else {
                int n = count.get<int>();
                for (int i = 0; i < n; ++i)
                    tmpl.components.push_back(component_from_json(jcomp, base + std::to_string(i), kind));
            }
        }
        for (int s = 0; s < chassis.linecard_slots; ++s) {
            LinecardSpec lc = tmpl;
            lc.name = "lc" + std::to_string(s);
            chassis.populated.push_back(std::move(lc));
        }
        auto chassis_group = [&](const char* key, std::vector<ComponentSpec>& out) {
            if (!jch.contains(key))
                return;
            const auto& g = jch.at(key);
            const auto& jcomp = g.at("component");
            auto base = jcomp.at("name").get<std::string>();
            auto kind = kind_from_json(jcomp);
            for (int i = 0; i < g.at("count").get<int>(); ++i)
                out.push_back(component_from_json(jcomp, base + std::to_string(i), kind));
        };
        chassis_group("fabric_planes", chassis.fabric_planes);
        chassis_group("power_supplies", chassis.power_supplies);

        DeviceModel model(doc.at("name").get<std::string>(), std::move(chassis), std::move(cal), std::move(shares),
                          packets);
        int populated = jch.value("populated", model.chassis().linecard_slots);
        if (populated != model.chassis().linecard_slots)
            return model.with_populated(populated);
        return model;
    } catch (const json::exception& e) {
        throw ParameterError(std::string("device model: ") + e.what());
    }
}

DeviceModel load_device_model_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open device model " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParameterError("device model " + path.string() + ": " + e.what());
    }
    return load_device_model(doc);
}

std::filesystem::path resolve_model_path(const std::string& name_or_path)
{
    namespace fs = std::filesystem;
    fs::path direct(name_or_path);
    if (name_or_path.find('/') != std::string::npos || direct.extension() == ".json")
        return direct;
    std::vector<fs::path> dirs;
    if (const char* env = std::getenv("CHRONOWATT_MODEL_DIR"))
        dirs.emplace_back(env);
#ifdef CHRONOWATT_DEFAULT_MODEL_DIR
    dirs.emplace_back(CHRONOWATT_DEFAULT_MODEL_DIR);
#endif
    for (const auto& d : dirs) {
        auto p = d / (name_or_path + ".json");
        if (fs::exists(p))
            return p;
    }
    throw InputError("device model '" + name_or_path + "' not found (set CHRONOWATT_MODEL_DIR)");
}

} // namespace chronowatt
