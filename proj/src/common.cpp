#include "chronowatt/common.hpp"

#include <cctype>
#include <cmath>
#include <string>

namespace chronowatt {

std::string_view to_string(AppClass c)
{
    switch (c) {
    case AppClass::MC:
        return "MC";
    case AppClass::BFD:
        return "BFD";
    case AppClass::Video:
        return "Video";
    case AppClass::Voice:
        return "Voice";
    case AppClass::BestEffort:
        return "BestEffort";
    }
    return "?";
}

std::optional<AppClass> parse_app_class(std::string_view s)
{
    if (s == "MC")
        return AppClass::MC;
    if (s == "BFD")
        return AppClass::BFD;
    if (s == "Video")
        return AppClass::Video;
    if (s == "Voice")
        return AppClass::Voice;
    if (s == "BestEffort")
        return AppClass::BestEffort;
    return std::nullopt;
}

Nanos checked_add(Nanos a, Nanos b)
{
    Nanos out = 0;
    if (__builtin_add_overflow(a, b, &out))
        throw DurationError("64-bit nanosecond clock overflow");
    return out;
}

Nanos parse_iso_duration(std::string_view text)
{
    auto fail = [&](const char* why) -> Nanos {
        throw ParameterError("bad duration '" + std::string(text) + "': " + why);
    };
    if (text.empty() || text.front() != 'P')
        return fail("must start with 'P'");

    long double total_ns = 0;
    bool in_time = false;
    bool any = false;
    std::size_t i = 1;
    while (i < text.size()) {
        if (text[i] == 'T') {
            if (in_time)
                return fail("repeated 'T'");
            in_time = true;
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.'))
            ++i;
        if (start == i || i >= text.size())
            return fail("expected number followed by a unit");
        long double value = 0;
        try {
            value = std::stold(std::string(text.substr(start, i - start)));
        } catch (const std::exception&) {
            return fail("unparseable number");
        }
        char unit = text[i++];
        long double scale = 0;
        if (!in_time && unit == 'D')
            scale = 86400.0L * 1e9L;
        else if (!in_time && unit == 'W')
            scale = 7 * 86400.0L * 1e9L;
        else if (in_time && unit == 'H')
            scale = 3600.0L * 1e9L;
        else if (in_time && unit == 'M')
            scale = 60.0L * 1e9L;
        else if (in_time && unit == 'S')
            scale = 1e9L;
        else
            return fail("unknown or misplaced unit");
        total_ns += value * scale;
        any = true;
    }
    if (!any)
        return fail("no components");
    if (total_ns > static_cast<long double>(kMaxNanos))
        throw DurationError("duration '" + std::string(text) + "' exceeds the 64-bit nanosecond clock");
    return static_cast<Nanos>(std::llround(static_cast<double>(total_ns)));
}

} // namespace chronowatt
