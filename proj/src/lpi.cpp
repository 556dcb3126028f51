#include "chronowatt/lpi.hpp"

#include <algorithm>

namespace chronowatt {

void LpiParams::validate() const
{
    if (t_s < 0)
        throw ParameterError("LPI t_s must be non-negative");
    if (t_q <= 0 || t_r <= 0 || t_w <= 0)
        throw ParameterError("LPI t_q, t_r and t_w must be positive");
    if (!(quiet_power_fraction >= 0 && quiet_power_fraction < refresh_power_fraction && refresh_power_fraction <= 1))
        throw ParameterError("LPI power fractions need 0 <= quiet < refresh <= 1");
}

LpiParams default_lpi_params()
{
    return LpiParams{};
}

std::string_view to_string(LpiPhase p)
{
    switch (p) {
    case LpiPhase::Active:
        return "Active";
    case LpiPhase::Sleep:
        return "Sleep";
    case LpiPhase::Quiet:
        return "Quiet";
    case LpiPhase::Refresh:
        return "Refresh";
    case LpiPhase::Wake:
        return "Wake";
    }
    return "?";
}

double lpi_phase_power_fraction(LpiPhase phase, const LpiParams& params)
{
    switch (phase) {
    case LpiPhase::Quiet:
        return params.quiet_power_fraction;
    case LpiPhase::Refresh:
        return params.refresh_power_fraction;
    default:
        return 1.0;
    }
}

bool lpi_edge_allowed(LpiPhase from, LpiPhase to)
{
    using P = LpiPhase;
    switch (from) {
    case P::Active:
        return to == P::Sleep;
    case P::Sleep:
        return to == P::Quiet || to == P::Wake;
    case P::Quiet:
        return to == P::Refresh || to == P::Wake;
    case P::Refresh:
        return to == P::Quiet || to == P::Wake;
    case P::Wake:
        return to == P::Active;
    }
    return false;
}

LpiStep lpi_advance(const LpiState& state, const LpiParams& params, Nanos now, LpiStimulus stimulus)
{
    if (now < state.phase_entered_at)
        throw ProtocolError("LPI advance moves time backwards");
    using P = LpiPhase;
    using S = LpiStimulus;
    const double elapsed = lpi_phase_power_fraction(state.phase, params);
    auto enter = [&](P phase, std::optional<Nanos> duration) {
        LpiStep step;
        step.state = LpiState{phase, now, false};
        if (duration)
            step.deadline = checked_add(now, *duration);
        step.elapsed_power_fraction = elapsed;
        return step;
    };
    auto illegal = [&]() -> LpiStep {
        throw ProtocolError("stimulus " + std::to_string(static_cast<int>(stimulus)) + " illegal in phase " +
                            std::string(to_string(state.phase)));
    };

    switch (state.phase) {
    case P::Active:
        if (stimulus == S::IdleDetected)
            return enter(P::Sleep, params.t_s);
        return illegal();
    case P::Sleep:
        if (stimulus == S::Timer)
            return state.pending_wake ? enter(P::Wake, params.t_w) : enter(P::Quiet, params.t_q);
        if (stimulus == S::TrafficPending) {
            LpiStep step;
            step.state = state;
            step.state.pending_wake = true;
            step.deadline = checked_add(state.phase_entered_at, params.t_s);
            step.elapsed_power_fraction = elapsed;
            return step;
        }
        return illegal();
    case P::Quiet:
        if (stimulus == S::Timer)
            return enter(P::Refresh, params.t_r);
        if (stimulus == S::TrafficPending)
            return enter(P::Wake, params.t_w);
        return illegal();
    case P::Refresh:
        if (stimulus == S::Timer)
            return enter(P::Quiet, params.t_q);
        if (stimulus == S::TrafficPending)
            return enter(P::Wake, params.t_w);
        return illegal();
    case P::Wake:
        if (stimulus == S::Timer)
            return enter(P::Active, std::nullopt);
        if (stimulus == S::TrafficPending) {
            LpiStep step;
            step.state = state;
            step.deadline = checked_add(state.phase_entered_at, params.t_w);
            step.elapsed_power_fraction = elapsed;
            return step;
        }
        return illegal();
    }
    return illegal();
}

std::optional<LpiParams> negotiate(const LpiEndpoint& local, const LpiEndpoint& peer, RefreshSource refresh_from)
{
    if (!local.supported || !peer.supported)
        return std::nullopt;
    LpiParams out = local.params;
    if (refresh_from == RefreshSource::Peer) {
        out.t_q = peer.params.t_q;
        out.t_r = peer.params.t_r;
    }
    out.t_w = std::max(local.params.t_w, peer.params.t_w);
    return out;
}

Nanos added_delay_bound(const LpiParams& params)
{
    return checked_add(params.t_s, params.t_w);
}

double duty_cycle_power(const LpiParams& params)
{
    const double q = static_cast<double>(params.t_q);
    const double r = static_cast<double>(params.t_r);
    return (q * params.quiet_power_fraction + r * params.refresh_power_fraction) / (q + r);
}

LpiParams lpi_params_from_json(const nlohmann::json& j, const LpiParams& base)
{
    LpiParams p = base;
    p.t_s = j.value("t_s_ns", p.t_s);
    p.t_q = j.value("t_q_ns", p.t_q);
    p.t_r = j.value("t_r_ns", p.t_r);
    p.t_w = j.value("t_w_ns", p.t_w);
    p.quiet_power_fraction = j.value("quiet_power_fraction", p.quiet_power_fraction);
    p.refresh_power_fraction = j.value("refresh_power_fraction", p.refresh_power_fraction);
    p.validate();
    return p;
}

nlohmann::json to_json(const LpiParams& p)
{
    return {{"t_s_ns", p.t_s},
            {"t_q_ns", p.t_q},
            {"t_r_ns", p.t_r},
            {"t_w_ns", p.t_w},
            {"quiet_power_fraction", p.quiet_power_fraction},
            {"refresh_power_fraction", p.refresh_power_fraction}};
}

} // namespace chronowatt
