#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chronowatt {

/// Simulation clock: integer nanoseconds since the start of a run.
using Nanos = std::int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;
inline constexpr Nanos kNanosPerMilli = 1'000'000;
inline constexpr Nanos kNanosPerMicro = 1'000;
inline constexpr Nanos kMaxNanos = std::numeric_limits<Nanos>::max();

inline constexpr std::uint32_t kMinPacketBytes = 64;

inline constexpr double to_seconds(Nanos t) { return static_cast<double>(t) * 1e-9; }

// Application classes carried by packets. BestEffort has no jitter budget.
enum class AppClass : std::uint8_t { MC, BFD, Video, Voice, BestEffort };

inline constexpr int kAppClassCount = 5;

std::string_view to_string(AppClass c);
std::optional<AppClass> parse_app_class(std::string_view s);

// Error hierarchy. Each subclass maps to one failure category of the tool;
// the CLI turns validation-type errors into exit code 2 and the rest into 3.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
  public:
    using Error::Error;
};

class DurationError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class OrderingError : public Error {
  public:
    OrderingError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class RangeError : public Error {
  public:
    using Error::Error;
};

class DegenerateSeriesError : public Error {
  public:
    using Error::Error;
};

class CalibrationError : public Error {
  public:
    using Error::Error;
};

/// Raised when the LPI state machine receives a stimulus its current phase
/// cannot accept. Always a simulator bug, never a modeled condition.
class ProtocolError : public Error {
  public:
    using Error::Error;
};

class ScenarioError : public Error {
  public:
    ScenarioError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

class InputError : public Error {
  public:
    using Error::Error;
};

/// a + b on the simulation clock, throwing DurationError instead of wrapping.
Nanos checked_add(Nanos a, Nanos b);

/// Parses ISO-8601-style relative offsets ("PT1.5S", "PT10M", "P1DT2H",
/// "PT0.00003S") into nanoseconds.
Nanos parse_iso_duration(std::string_view text);

} // namespace chronowatt
