#pragma once

#include <optional>

#include <json.hpp>

#include "chronowatt/common.hpp"

namespace chronowatt {

/// 802.3az low-power-idle timing. Durations in nanoseconds; power fractions
/// are relative to the owning PHY's Active draw.
struct LpiParams {
    Nanos t_s = 200 * kNanosPerMicro;  // Active -> Quiet sleep sequence
    Nanos t_q = 40 * kNanosPerMicro;   // quiet interval between refreshes
    Nanos t_r = 1300;                  // refresh duration
    Nanos t_w = 30 * kNanosPerMicro;   // wake duration
    double quiet_power_fraction = 0.1;
    double refresh_power_fraction = 1.0;

    void validate() const;
    bool operator==(const LpiParams&) const = default;
};

/// Shipped defaults. t_w sits at the 30 us wake bound.
LpiParams default_lpi_params();

inline constexpr Nanos kLpiWakeBound = 30 * kNanosPerMicro;

enum class LpiPhase : std::uint8_t { Active, Sleep, Quiet, Refresh, Wake };

std::string_view to_string(LpiPhase p);

struct LpiState {
    LpiPhase phase = LpiPhase::Active;
    Nanos phase_entered_at = 0;
    bool pending_wake = false;
};

enum class LpiStimulus : std::uint8_t { IdleDetected, TrafficPending, Timer };

struct LpiStep {
    LpiState state;
    /// Absolute time of the next timer, or none (Active).
    std::optional<Nanos> deadline;
    /// Fraction of Active PHY power drawn during the phase just left.
    double elapsed_power_fraction = 1.0;
};

/// Fraction of Active PHY power drawn while in `phase`. Sleep and Wake draw
/// full power.
double lpi_phase_power_fraction(LpiPhase phase, const LpiParams& params);

/// Advances the state machine:
///   Active  --idle_detected-->  Sleep   (timer +t_s)
///   Sleep   --timer-->          Quiet   (timer +t_q), or Wake if pending_wake
///   Quiet   --timer-->          Refresh (timer +t_r)
///   Refresh --timer-->          Quiet   (timer +t_q)
///   Quiet/Refresh --traffic_pending--> Wake (timer +t_w)
///   Wake    --timer-->          Active
/// traffic_pending in Sleep only latches pending_wake; in Wake it is a no-op.
/// Any other pair throws ProtocolError.
LpiStep lpi_advance(const LpiState& state, const LpiParams& params, Nanos now, LpiStimulus stimulus);

/// True if `from -> to` is an edge of the link-state graph. Sleep -> Wake is
/// the edge taken when traffic arrived during the sleep sequence.
bool lpi_edge_allowed(LpiPhase from, LpiPhase to);

struct LpiEndpoint {
    LpiParams params;
    bool supported = true;
};

enum class RefreshSource : std::uint8_t { Local, Peer };

/// Capability negotiation: disabled (nullopt) unless both sides support LPI.
/// The slower waker governs t_w; t_q/t_r come from `refresh_from`.
std::optional<LpiParams> negotiate(const LpiEndpoint& local, const LpiEndpoint& peer,
                                   RefreshSource refresh_from = RefreshSource::Local);

/// Worst-case added delay: an arrival just after sleep initiation waits the
/// whole sleep sequence and then the wake.
Nanos added_delay_bound(const LpiParams& params);

/// Average power fraction over a sustained idle period.
double duty_cycle_power(const LpiParams& params);

LpiParams lpi_params_from_json(const nlohmann::json& j, const LpiParams& base = default_lpi_params());
nlohmann::json to_json(const LpiParams& p);

} // namespace chronowatt
