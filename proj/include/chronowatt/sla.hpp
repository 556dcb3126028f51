#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronowatt/common.hpp"
#include "chronowatt/power_model.hpp"

namespace chronowatt {

/// Jitter budget of an application class; nullopt means the class imposes
/// no bound (BestEffort).
struct AppClassSpec {
    AppClass name = AppClass::BestEffort;
    std::optional<Nanos> jitter_budget;
};

enum class Verdict : std::uint8_t { Yes, No, Marginal };
enum class MarginalPolicy : std::uint8_t { TreatAsYes, TreatAsNo };

std::string_view to_string(Verdict v);
std::optional<MarginalPolicy> parse_marginal_policy(std::string_view s);

/// Classes that have a column in the tolerance matrix, in column order.
inline constexpr std::array<AppClass, 4> kMatrixClasses = {AppClass::MC, AppClass::BFD, AppClass::Video,
                                                           AppClass::Voice};

struct ToleranceRow {
    std::string label;
    ComponentKind kind{};
    Nanos wake_time = 0;
    std::array<Verdict, 4> verdicts{}; // kMatrixClasses order
};

/// A (component kind, wake time) pair as it appears in the matrix.
struct ComponentWake {
    ComponentKind kind{};
    Nanos wake_time = 0;
    std::string label;
};

class SlaTable {
  public:
    SlaTable() = default;
    SlaTable(std::vector<AppClassSpec> classes, std::vector<ToleranceRow> rows);

    AppClassSpec spec(AppClass c) const;
    std::optional<Nanos> budget(AppClass c) const { return spec(c).jitter_budget; }
    std::span<const ToleranceRow> rows() const { return rows_; }
    std::span<const AppClassSpec> classes() const { return classes_; }

    /// Matrix cell for an exact (kind, wake time) row, if present.
    std::optional<Verdict> listed(ComponentKind kind, Nanos wake_time, AppClass c) const;

    nlohmann::json to_json() const;

  private:
    std::vector<AppClassSpec> classes_;
    std::vector<ToleranceRow> rows_;
};

/// Budgets Video 10 ms, Voice 30 ms, BFD 50 ms, MC 1 ms (configurable) and
/// the published six-row tolerance matrix with "?" cells as Marginal.
SlaTable default_sla_table();
SlaTable load_sla_table(const nlohmann::json& doc);
SlaTable load_sla_table_file(const std::filesystem::path& path);

/// Verdict for a component not in the matrix: Yes below budget/3, Marginal
/// within [budget/3, 3*budget], No above. Unbudgeted classes always Yes.
Verdict threshold_verdict(Nanos wake_delay, const AppClassSpec& cls);

/// Sleep gate. A listed (kind, wake time) row overrides the threshold; a
/// threshold-derived Marginal resolves to yes only under TreatAsYes and only
/// when the delay is strictly below the budget.
bool may_sleep(const SlaTable& table, std::optional<ComponentWake> listed_as, Nanos total_wake_delay,
               AppClass cls, MarginalPolicy marginal = MarginalPolicy::TreatAsNo);

using VerdictMatrix = std::vector<std::vector<Verdict>>;

VerdictMatrix tolerance_matrix(const SlaTable& table, std::span<const ComponentWake> components,
                               std::span<const AppClass> classes);

/// The six published component rows.
std::vector<ComponentWake> shipped_components(const SlaTable& table);

void print_matrix_text(std::ostream& out, std::span<const ComponentWake> components,
                       std::span<const AppClass> classes, const VerdictMatrix& m);
void print_matrix_csv(std::ostream& out, std::span<const ComponentWake> components,
                      std::span<const AppClass> classes, const VerdictMatrix& m);

} // namespace chronowatt
