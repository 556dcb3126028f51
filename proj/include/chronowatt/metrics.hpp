#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronowatt/engine.hpp"

namespace chronowatt {

inline constexpr int kReportFormatVersion = 1;

struct EfficiencyPoint {
    double x = 0;
    double watts = 0;
    double gbps = 0;
    std::optional<double> ecr; // nullopt when nothing was delivered
};

/// Average watts per delivered Gbps; nullopt when delivered throughput is zero.
std::optional<double> ecr(const SimResult& result);

double delivered_gbps(const SimResult& result);

EfficiencyPoint efficiency_point(const SimResult& result, double x);

/// ECR against offered load, sorted by load. Needs at least two results from
/// the same device model.
std::vector<EfficiencyPoint> efficiency_curve(std::span<const SimResult> results);

/// ECR against packet size, sorted by size.
std::vector<EfficiencyPoint> packet_size_curve(std::span<const SimResult> results);

/// ECR against populated linecards. Same model and per-card load required.
std::vector<EfficiencyPoint> chassis_fill_curve(std::span<const SimResult> results);

/// Energy share per component kind ("Common" for the chassis common draw).
/// Empty for a zero-energy run.
std::map<std::string, double> breakdown_report(const SimResult& result);

struct DelaySummary {
    Nanos p50 = 0;
    Nanos p95 = 0;
    Nanos p99 = 0;
    Nanos max = 0;
    /// Policy-added delay relative to the peak-mode path.
    Nanos jitter_p99 = 0;
    Nanos jitter_max = 0;
    std::map<std::string, std::uint64_t> violations;
};

/// nullopt when no packet was delivered.
std::optional<DelaySummary> delay_summary(const SimResult& result);

/// `x,watts,gbps,ecr` rows after a `# format_version` comment; a missing ECR
/// is written as "undefined".
void write_curve_csv(std::ostream& out, std::span<const EfficiencyPoint> points);

nlohmann::json to_json(const EfficiencyPoint& p);
nlohmann::json summary_json(const SimResult& result);

/// Per-component ledger as CSV: id,kind,<columns...>,total.
void write_ledger_csv(std::ostream& out, const SimResult& result);

} // namespace chronowatt
