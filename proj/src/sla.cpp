#include "chronowatt/sla.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace chronowatt {

using nlohmann::json;

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Yes:
        return "yes";
    case Verdict::No:
        return "no";
    case Verdict::Marginal:
        return "marginal";
    }
    return "?";
}

std::optional<MarginalPolicy> parse_marginal_policy(std::string_view s)
{
    if (s == "treat_as_yes")
        return MarginalPolicy::TreatAsYes;
    if (s == "treat_as_no")
        return MarginalPolicy::TreatAsNo;
    return std::nullopt;
}

SlaTable::SlaTable(std::vector<AppClassSpec> classes, std::vector<ToleranceRow> rows)
    : classes_(std::move(classes)), rows_(std::move(rows))
{
    for (const auto& c : classes_)
        if (c.jitter_budget && *c.jitter_budget <= 0)
            throw ParameterError("jitter budget for " + std::string(to_string(c.name)) + " must be positive");
}

AppClassSpec SlaTable::spec(AppClass c) const
{
    for (const auto& s : classes_)
        if (s.name == c)
            return s;
    return AppClassSpec{c, std::nullopt};
}

std::optional<Verdict> SlaTable::listed(ComponentKind kind, Nanos wake_time, AppClass c) const
{
    auto col = std::find(kMatrixClasses.begin(), kMatrixClasses.end(), c);
    if (col == kMatrixClasses.end())
        return std::nullopt;
    for (const auto& r : rows_)
        if (r.kind == kind && r.wake_time == wake_time)
            return r.verdicts[static_cast<std::size_t>(col - kMatrixClasses.begin())];
    return std::nullopt;
}

json SlaTable::to_json() const
{
    json budgets = json::object();
    for (const auto& c : classes_)
        budgets[std::string(to_string(c.name))] = c.jitter_budget ? json(*c.jitter_budget) : json(nullptr);
    json rows = json::array();
    for (const auto& r : rows_) {
        json cells = json::object();
        for (std::size_t i = 0; i < kMatrixClasses.size(); ++i)
            cells[std::string(to_string(kMatrixClasses[i]))] = std::string(to_string(r.verdicts[i]));
        rows.push_back({{"label", r.label},
                        {"kind", std::string(to_string(r.kind))},
                        {"wake_ns", r.wake_time},
                        {"verdicts", cells}});
    }
    return {{"format_version", 1}, {"jitter_budgets_ns", budgets}, {"tolerance_matrix", rows}};
}

SlaTable default_sla_table()
{
    using K = ComponentKind;
    constexpr auto Y = Verdict::Yes;
    constexpr auto N = Verdict::No;
    constexpr auto M = Verdict::Marginal;
    std::vector<AppClassSpec> classes = {
        {AppClass::MC, 1 * kNanosPerMilli},
        {AppClass::BFD, 50 * kNanosPerMilli},
        {AppClass::Video, 10 * kNanosPerMilli},
        {AppClass::Voice, 30 * kNanosPerMilli},
        {AppClass::BestEffort, std::nullopt},
    };
    std::vector<ToleranceRow> rows = {
        {"Pre-synchronized link into active state", K::PHY_Link, 10 * kNanosPerMicro, {Y, Y, Y, Y}},
        {"Serdes bringup and frequency lock", K::Serdes, 100 * kNanosPerMicro, {Y, Y, Y, Y}},
        {"NPU core context switching/memory barrier", K::NPU_Core, 90, {M, Y, Y, Y}},
        {"SRAM bank bringup and programming", K::SRAM_Bank, 30 * kNanosPerMilli, {N, M, M, N}},
        {"Embedded CPU bringup/uOS start", K::EmbeddedCPU, 2 * kNanosPerSecond, {N, N, N, N}},
        {"Central CPU bringup/FRU start", K::CentralCPU, 100 * kNanosPerSecond, {N, N, N, N}},
    };
    return SlaTable(std::move(classes), std::move(rows));
}

namespace {

Verdict parse_verdict(const std::string& s)
{
    if (s == "yes")
        return Verdict::Yes;
    if (s == "no")
        return Verdict::No;
    if (s == "marginal" || s == "?")
        return Verdict::Marginal;
    throw ParameterError("unknown verdict '" + s + "'");
}

} // namespace

SlaTable load_sla_table(const json& doc)
{
    try {
        if (doc.value("format_version", 0) != 1)
            throw ParameterError("SLA policy format_version must be 1");
        std::vector<AppClassSpec> classes;
        for (const auto& [name, v] : doc.at("jitter_budgets_ns").items()) {
            auto c = parse_app_class(name);
            if (!c)
                throw ParameterError("unknown application class '" + name + "'");
            classes.push_back({*c, v.is_null() ? std::nullopt : std::optional<Nanos>(v.get<Nanos>())});
        }
        std::vector<ToleranceRow> rows;
        for (const auto& jr : doc.at("tolerance_matrix")) {
            ToleranceRow r;
            r.label = jr.at("label").get<std::string>();
            auto kind = parse_component_kind(jr.at("kind").get<std::string>());
            if (!kind)
                throw ParameterError("unknown component kind in tolerance matrix");
            r.kind = *kind;
            r.wake_time = jr.at("wake_ns").get<Nanos>();
            for (std::size_t i = 0; i < kMatrixClasses.size(); ++i)
                r.verdicts[i] = parse_verdict(jr.at("verdicts").at(std::string(to_string(kMatrixClasses[i]))));
            rows.push_back(std::move(r));
        }
        return SlaTable(std::move(classes), std::move(rows));
    } catch (const json::exception& e) {
        throw ParameterError(std::string("SLA policy: ") + e.what());
    }
}

SlaTable load_sla_table_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open SLA policy " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParameterError("SLA policy " + path.string() + ": " + e.what());
    }
    return load_sla_table(doc);
}

Verdict threshold_verdict(Nanos wake_delay, const AppClassSpec& cls)
{
    if (!cls.jitter_budget)
        return Verdict::Yes;
    const long double b = static_cast<long double>(*cls.jitter_budget);
    const long double d = static_cast<long double>(wake_delay);
    if (d < b / 3)
        return Verdict::Yes;
    if (d <= 3 * b)
        return Verdict::Marginal;
    return Verdict::No;
}

bool may_sleep(const SlaTable& table, std::optional<ComponentWake> listed_as, Nanos total_wake_delay, AppClass cls,
               MarginalPolicy marginal)
{
    if (listed_as) {
        if (auto v = table.listed(listed_as->kind, listed_as->wake_time, cls)) {
            if (*v == Verdict::Marginal)
                return marginal == MarginalPolicy::TreatAsYes;
            return *v == Verdict::Yes;
        }
    }
    const auto spec = table.spec(cls);
    switch (threshold_verdict(total_wake_delay, spec)) {
    case Verdict::Yes:
        return true;
    case Verdict::No:
        return false;
    case Verdict::Marginal:
        return marginal == MarginalPolicy::TreatAsYes && total_wake_delay < *spec.jitter_budget;
    }
    return false;
}

VerdictMatrix tolerance_matrix(const SlaTable& table, std::span<const ComponentWake> components,
                               std::span<const AppClass> classes)
{
    if (components.empty() || classes.empty())
        throw InputError("tolerance matrix needs at least one component and one class");
    VerdictMatrix m;
    for (const auto& c : components) {
        std::vector<Verdict> row;
        for (AppClass cls : classes) {
            auto listed = table.listed(c.kind, c.wake_time, cls);
            row.push_back(listed ? *listed : threshold_verdict(c.wake_time, table.spec(cls)));
        }
        m.push_back(std::move(row));
    }
    return m;
}

std::vector<ComponentWake> shipped_components(const SlaTable& table)
{
    std::vector<ComponentWake> out;
    for (const auto& r : table.rows())
        out.push_back({r.kind, r.wake_time, r.label});
    return out;
}

namespace {

std::string format_wake(Nanos ns)
{
    auto fmt = [](Nanos v, Nanos unit, const char* suffix) {
        std::ostringstream s;
        s << static_cast<double>(v) / static_cast<double>(unit) << ' ' << suffix;
        return s.str();
    };
    if (ns >= kNanosPerSecond)
        return fmt(ns, kNanosPerSecond, "s");
    if (ns >= kNanosPerMilli)
        return fmt(ns, kNanosPerMilli, "ms");
    if (ns >= kNanosPerMicro)
        return fmt(ns, kNanosPerMicro, "us");
    return fmt(ns, 1, "ns");
}

std::string row_title(const ComponentWake& c)
{
    std::string base = c.label.empty() ? std::string(to_string(c.kind)) : c.label;
    return base + " - " + format_wake(c.wake_time);
}

} // namespace

void print_matrix_text(std::ostream& out, std::span<const ComponentWake> components, std::span<const AppClass> classes,
                       const VerdictMatrix& m)
{
    std::size_t width = 9;
    for (const auto& c : components)
        width = std::max(width, row_title(c).size());
    out << std::left << std::setw(static_cast<int>(width)) << "Component";
    for (AppClass c : classes)
        out << "  " << std::setw(8) << to_string(c);
    out << '\n';
    for (std::size_t i = 0; i < components.size(); ++i) {
        out << std::setw(static_cast<int>(width)) << row_title(components[i]);
        for (Verdict v : m[i])
            out << "  " << std::setw(8) << to_string(v);
        out << '\n';
    }
    out << std::right;
}

void print_matrix_csv(std::ostream& out, std::span<const ComponentWake> components, std::span<const AppClass> classes,
                      const VerdictMatrix& m)
{
    out << "component,kind,wake_ns";
    for (AppClass c : classes)
        out << ',' << to_string(c);
    out << '\n';
    for (std::size_t i = 0; i < components.size(); ++i) {
        const auto& c = components[i];
        out << '"' << (c.label.empty() ? std::string(to_string(c.kind)) : c.label) << "\"," << to_string(c.kind) << ','
            << c.wake_time;
        for (Verdict v : m[i])
            out << ',' << to_string(v);
        out << '\n';
    }
}

} // namespace chronowatt
