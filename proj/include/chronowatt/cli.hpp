#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chronowatt/engine.hpp"

namespace chronowatt {

enum class SweepAxis : std::uint8_t { Load, PacketSize, Fill };

std::optional<SweepAxis> parse_sweep_axis(std::string_view s);

/// Scenario copy with one axis set to `value`.
Scenario apply_axis(const Scenario& base, SweepAxis axis, double value);

/// One simulation per value on up to `jobs` worker threads. Results come back
/// in value order regardless of completion order.
std::vector<SimResult> run_sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                                 unsigned jobs);

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point of the chronowatt command-line tool.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace chronowatt
