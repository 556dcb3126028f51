#include "chronowatt/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>

namespace chronowatt {

// --- histogram ---------------------------------------------------------------

std::size_t DelayHistogram::bucket_of(Nanos v)
{
    const auto u = static_cast<std::uint64_t>(std::max<Nanos>(v, 0));
    constexpr std::uint64_t sub = 1u << kSubBits;
    if (u < sub)
        return static_cast<std::size_t>(u);
    const int e = std::bit_width(u) - 1;
    const int shift = e - kSubBits;
    return static_cast<std::size_t>(sub + static_cast<std::uint64_t>(shift) * sub + ((u >> shift) - sub));
}

Nanos DelayHistogram::bucket_low(std::size_t b)
{
    constexpr std::size_t sub = 1u << kSubBits;
    if (b < sub)
        return static_cast<Nanos>(b);
    const std::size_t k = (b - sub) / sub;
    const std::size_t s = (b - sub) % sub;
    return static_cast<Nanos>((sub + s) << k);
}

void DelayHistogram::add(Nanos v)
{
    const std::size_t b = bucket_of(v);
    if (b >= buckets_.size())
        buckets_.resize(b + 1, 0);
    ++buckets_[b];
    ++count_;
    max_ = std::max(max_, v);
    sum_ += static_cast<double>(v);
}

Nanos DelayHistogram::quantile(double q) const
{
    if (count_ == 0)
        return 0;
    q = std::clamp(q, 0.0, 1.0);
    const auto rank = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(count_))));
    std::uint64_t seen = 0;
    for (std::size_t b = 0; b < buckets_.size(); ++b) {
        seen += buckets_[b];
        if (seen >= rank) {
            const Nanos lo = bucket_low(b);
            const Nanos hi = bucket_low(b + 1);
            return std::min(max_, lo + (hi - lo - 1) / 2);
        }
    }
    return max_;
}

void DelayHistogram::merge(const DelayHistogram& other)
{
    if (other.buckets_.size() > buckets_.size())
        buckets_.resize(other.buckets_.size(), 0);
    for (std::size_t b = 0; b < other.buckets_.size(); ++b)
        buckets_[b] += other.buckets_[b];
    count_ += other.count_;
    max_ = std::max(max_, other.max_);
    sum_ += other.sum_;
}

// --- result helpers --------------------------------------------------------------

std::string_view to_string(LedgerColumn c)
{
    static constexpr std::array<std::string_view, kLedgerColumns> names = {
        "Active", "Work", "LowPowerIdle", "Off", "Transition", "LpiSleep", "LpiQuiet", "LpiRefresh", "LpiWake"};
    return names[static_cast<std::size_t>(c)];
}

std::string_view to_string(Disposition d)
{
    switch (d) {
    case Disposition::Forwarded:
        return "forwarded";
    case Disposition::Buffered:
        return "buffered";
    case Disposition::Dropped:
        return "dropped";
    }
    return "?";
}

double ComponentLedger::total() const
{
    double s = 0;
    for (double j : joules)
        s += j;
    return s;
}

double SimResult::average_power_w() const
{
    return duration > 0 ? total_energy_j / to_seconds(duration) : 0.0;
}

const ComponentLedger* SimResult::find(std::string_view id) const
{
    for (const auto& l : ledger)
        if (l.id == id)
            return &l;
    return nullptr;
}

// --- simulator -----------------------------------------------------------------

namespace {

enum class EventKind : std::uint8_t { PacketArrival, TransitionComplete, LpiTimer, PolicyTick, ScheduledAction };

constexpr std::string_view kEventNames[] = {"PacketArrival", "TransitionComplete", "LpiTimer", "PolicyTick",
                                             "ScheduledAction"};

constexpr std::uint32_t kEpochTick = 0xffffffffu;

struct Event {
    Nanos time;
    std::uint64_t seq;
    EventKind kind;
    std::uint32_t a;
    std::uint64_t b;
};

struct Later {
    bool operator()(const Event& x, const Event& y) const
    {
        return x.time != y.time ? x.time > y.time : x.seq > y.seq;
    }
};

enum class PathStatus : std::uint8_t { Functional, Sleepy, OffLike };

enum class Scope : std::uint8_t { Port, Linecard, Fabric, Psu };

struct Comp {
    ComponentKind kind{};
    Scope scope = Scope::Linecard;
    int lc = -1;
    int port = -1;

    PowerStateName state = PowerStateName::Active;
    std::optional<PowerStateName> target;
    bool wake_pending = false;
    bool im_off = false;
    Nanos guard_until = 0;
    Nanos activation_length = 0;
    std::uint64_t token = 0;
    std::uint64_t check_token = 0;
    bool check_pending = false;

    std::optional<LpiParams> lpi;
    LpiState lpi_state;

    bool sleep_capable = false;
    Nanos sleep_duration = 0;
    Nanos wake_duration = 0;

    PathStatus status = PathStatus::Functional;

    Nanos seg_start = 0;
    double draw_w = 0;
    LedgerColumn column = LedgerColumn::Active;
    std::array<double, kLedgerColumns> ledger{};

    Nanos active_since = 0;
    Nanos active_ns = 0;
    double pending_bits = 0;
    double pending_pkts = 0;
};

struct Waiting {
    double start;
    std::uint32_t size;
};

struct Port {
    int lc = 0;
    std::size_t phy = static_cast<std::size_t>(-1);
    double rate_bps = 0;
    std::deque<std::pair<PacketArrival, int>> blocked;
    std::deque<Waiting> waiting;
    std::uint64_t waiting_bytes = 0;
    double server_free = 0;
    double shadow_free = 0;
    Nanos last_activity = 0;
    double epoch_bits = 0;
    double epoch_pkts = 0;
    std::array<Nanos, kAppClassCount> last_seen;
    std::array<bool, kAppClassCount> declared{};
};

struct Linecard {
    std::vector<std::size_t> comps; // non-PHY components
    std::vector<int> ports;
    int sleepy = 0;
    int offlike = 0;
    std::uint64_t blocked = 0;
    Nanos last_activity = 0;
    double epoch_bits = 0;
    double epoch_pkts = 0;
    std::array<Nanos, kAppClassCount> last_seen;
    std::array<bool, kAppClassCount> declared{};
};

struct Group {
    std::vector<std::size_t> members;
    int functional = 0;
    int sleepy = 0;
    double pending_bits = 0;
    double pending_pkts = 0;

    bool dead() const { return !members.empty() && functional == 0 && sleepy == 0; }
    bool ok() const { return members.empty() || functional > 0; }
};

struct Source {
    std::unique_ptr<ArrivalSource> source;
    int port = 0;
    PacketArrival pending;
};

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

} // namespace

struct Simulator::Impl {
    const Scenario& sc;
    const DeviceModel& model;
    Nanos end;
    Nanos threshold;

    Nanos now = 0;
    std::uint64_t seq = 0;
    std::priority_queue<Event, std::vector<Event>, Later> queue;
    std::uint64_t digest = kFnvOffset;
    std::ofstream log;

    std::vector<Comp> comps;
    std::vector<Port> ports;
    std::vector<Linecard> lcs;
    Group fabric;
    Group psu;
    std::uint64_t chassis_blocked = 0;
    Nanos chassis_last_activity = 0;
    double chassis_epoch_bits = 0;
    double chassis_epoch_pkts = 0;
    std::array<Nanos, kAppClassCount> chassis_last_seen;
    std::array<bool, kAppClassCount> chassis_declared{};

    std::vector<Source> sources;
    std::vector<ScheduledAction> schedule;
    std::size_t schedule_cursor = 0;

    Nanos epoch_start = 0;
    double common_j = 0;
    double transition_impulses_j = 0;

    // energy audit
    std::vector<ComponentStatus> audit_status;
    std::vector<std::pair<Nanos, std::pair<std::size_t, ComponentStatus>>> audit_changes;
    double audit_j = 0;

    SimResult result;
    bool finished = false;

    explicit Impl(const Scenario& s);

    // bookkeeping
    void push(Nanos t, EventKind k, std::uint32_t a, std::uint64_t b = 0)
    {
        queue.push(Event{t, seq++, k, a, b});
    }
    void hash(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            digest ^= (v >> (8 * i)) & 0xff;
            digest *= kFnvPrime;
        }
    }
    void record(EventKind kind, std::uint32_t a, std::uint64_t code, const std::string& component,
                std::string_view detail)
    {
        hash(static_cast<std::uint64_t>(now));
        hash(static_cast<std::uint64_t>(kind));
        hash(a);
        hash(code);
        if (log.is_open()) {
            nlohmann::json j = {{"time", now},
                                {"kind", kEventNames[static_cast<int>(kind)]},
                                {"component", component},
                                {"detail", detail}};
            log << j.dump() << '\n';
        }
    }
    const std::string& cid(std::size_t i) const { return model.components()[i].id; }

    ComponentStatus status_of(const Comp& c) const
    {
        ComponentStatus s;
        s.state = c.state;
        s.transition_to = c.target;
        if (c.lpi && c.lpi_state.phase != LpiPhase::Active && !c.target)
            s.active_fraction = lpi_phase_power_fraction(c.lpi_state.phase, *c.lpi);
        return s;
    }
    static LedgerColumn column_of(const Comp& c)
    {
        if (c.target)
            return LedgerColumn::Transition;
        if (c.lpi && c.state == PowerStateName::Active) {
            switch (c.lpi_state.phase) {
            case LpiPhase::Sleep:
                return LedgerColumn::LpiSleep;
            case LpiPhase::Quiet:
                return LedgerColumn::LpiQuiet;
            case LpiPhase::Refresh:
                return LedgerColumn::LpiRefresh;
            case LpiPhase::Wake:
                return LedgerColumn::LpiWake;
            case LpiPhase::Active:
                break;
            }
        }
        switch (c.state) {
        case PowerStateName::Active:
            return LedgerColumn::Active;
        case PowerStateName::LowPowerIdle:
            return LedgerColumn::LowPowerIdle;
        case PowerStateName::Off:
            return LedgerColumn::Off;
        }
        return LedgerColumn::Active;
    }
    static PathStatus classify(const Comp& c)
    {
        if (c.target) {
            if (*c.target == PowerStateName::Off || c.state == PowerStateName::Off)
                return PathStatus::OffLike;
            return PathStatus::Sleepy;
        }
        switch (c.state) {
        case PowerStateName::Active:
            return c.lpi && c.lpi_state.phase != LpiPhase::Active ? PathStatus::Sleepy : PathStatus::Functional;
        case PowerStateName::LowPowerIdle:
            return PathStatus::Sleepy;
        case PowerStateName::Off:
            return PathStatus::OffLike;
        }
        return PathStatus::OffLike;
    }

    void accrue(Comp& c)
    {
        c.ledger[static_cast<std::size_t>(c.column)] += c.draw_w * to_seconds(now - c.seg_start);
        c.seg_start = now;
    }

    /// Call after any change of c's state fields (accrue() first).
    void refresh(std::size_t i)
    {
        Comp& c = comps[i];
        const ComponentStatus s = status_of(c);
        c.draw_w = model.component_power_w(i, s);
        c.column = column_of(c);
        if (sc.engine.energy_audit)
            audit_changes.push_back({now, {i, s}});
        update_status(i);
    }

    void count(Comp& c, PathStatus st, int delta)
    {
        switch (c.scope) {
        case Scope::Port:
            break;
        case Scope::Linecard:
            if (st == PathStatus::Sleepy)
                lcs[c.lc].sleepy += delta;
            else if (st == PathStatus::OffLike)
                lcs[c.lc].offlike += delta;
            break;
        case Scope::Fabric:
        case Scope::Psu: {
            Group& g = c.scope == Scope::Fabric ? fabric : psu;
            if (st == PathStatus::Functional)
                g.functional += delta;
            else if (st == PathStatus::Sleepy)
                g.sleepy += delta;
            break;
        }
        }
    }

    template <typename F>
    void for_scope_ports(const Comp& c, F&& f)
    {
        if (c.scope == Scope::Port) {
            f(c.port);
        } else if (c.scope == Scope::Linecard) {
            for (int p : lcs[c.lc].ports)
                f(p);
        } else {
            for (int p = 0; p < static_cast<int>(ports.size()); ++p)
                f(p);
        }
    }

    void update_status(std::size_t i)
    {
        Comp& c = comps[i];
        const PathStatus next = classify(c);
        if (next == c.status)
            return;
        if (c.status == PathStatus::Functional)
            c.active_ns += now - c.active_since;
        count(c, c.status, -1);
        count(c, next, +1);
        c.status = next;
        if (next == PathStatus::Functional) {
            c.active_since = now;
            for_scope_ports(c, [&](int p) {
                if (!ports[p].blocked.empty())
                    drain(p);
            });
            arm_idle_check(i, std::max(now, last_activity(c)));
        } else if (next == PathStatus::OffLike) {
            for_scope_ports(c, [&](int p) {
                if (!ports[p].blocked.empty() && path_status(p) == PathStatus::OffLike)
                    drop_blocked(p);
            });
        }
    }

    PathStatus path_status(int p) const
    {
        const Port& port = ports[p];
        const Linecard& lc = lcs[port.lc];
        const PathStatus phy = port.phy == static_cast<std::size_t>(-1) ? PathStatus::Functional : comps[port.phy].status;
        if (phy == PathStatus::OffLike || lc.offlike > 0 || fabric.dead() || psu.dead())
            return PathStatus::OffLike;
        if (phy == PathStatus::Functional && lc.sleepy == 0 && fabric.ok() && psu.ok())
            return PathStatus::Functional;
        return PathStatus::Sleepy;
    }

    Nanos last_activity(const Comp& c) const
    {
        switch (c.scope) {
        case Scope::Port:
            return ports[c.port].last_activity;
        case Scope::Linecard:
            return lcs[c.lc].last_activity;
        default:
            return chassis_last_activity;
        }
    }
    bool scope_blocked(const Comp& c) const
    {
        switch (c.scope) {
        case Scope::Port:
            return !ports[c.port].blocked.empty();
        case Scope::Linecard:
            return lcs[c.lc].blocked > 0;
        default:
            return chassis_blocked > 0;
        }
    }
    std::vector<AppClass> classes_present(const Comp& c) const
    {
        const std::array<Nanos, kAppClassCount>* seen = &chassis_last_seen;
        const std::array<bool, kAppClassCount>* declared = &chassis_declared;
        if (c.scope == Scope::Port) {
            seen = &ports[c.port].last_seen;
            declared = &ports[c.port].declared;
        } else if (c.scope == Scope::Linecard) {
            seen = &lcs[c.lc].last_seen;
            declared = &lcs[c.lc].declared;
        }
        std::vector<AppClass> out;
        for (int k = 0; k < kAppClassCount; ++k) {
            const Nanos t = (*seen)[k];
            if ((*declared)[k] || (t >= 0 && now - t <= sc.policy.class_window))
                out.push_back(static_cast<AppClass>(k));
        }
        return out;
    }

    // --- component actions -------------------------------------------------

    void begin_transition(std::size_t i, PowerStateName to, std::optional<Nanos> duration = std::nullopt)
    {
        Comp& c = comps[i];
        const ComponentSpec& spec = *model.components()[i].spec;
        const TransitionSpec* t = spec.transition(c.state, to);
        if (!t)
            throw ProtocolError("component " + cid(i) + " has no transition " + std::string(to_string(c.state)) +
                                " -> " + std::string(to_string(to)));
        accrue(c);
        const Nanos d = duration.value_or(t->duration);
        const double impulse = t->energy_j * model.wall_factor(i);
        c.ledger[static_cast<std::size_t>(LedgerColumn::Transition)] += impulse;
        transition_impulses_j += impulse;
        c.target = to;
        ++c.token;
        push(checked_add(now, d), EventKind::TransitionComplete, static_cast<std::uint32_t>(i), c.token);
        refresh(i);
    }

    void complete_transition(std::size_t i)
    {
        Comp& c = comps[i];
        accrue(c);
        c.state = *c.target;
        c.target.reset();
        if (c.state == PowerStateName::Active && c.activation_length > 0) {
            c.guard_until = now + c.activation_length;
            c.activation_length = 0;
        }
        if (c.state == PowerStateName::Active)
            ++result.wakes;
        record(EventKind::TransitionComplete, static_cast<std::uint32_t>(i), static_cast<std::uint64_t>(c.state), cid(i),
               to_string(c.state));
        refresh(i);
        if (c.state == PowerStateName::LowPowerIdle && c.wake_pending) {
            c.wake_pending = false;
            begin_transition(i, PowerStateName::Active);
        }
    }

    void lpi_step(std::size_t i, LpiStimulus stimulus)
    {
        Comp& c = comps[i];
        accrue(c);
        const LpiPhase before = c.lpi_state.phase;
        const LpiStep step = lpi_advance(c.lpi_state, *c.lpi, now, stimulus);
        c.lpi_state = step.state;
        if (step.state.phase != before && step.deadline) {
            ++c.token;
            push(*step.deadline, EventKind::LpiTimer, static_cast<std::uint32_t>(i), c.token);
        }
        if (step.state.phase != before) {
            if (step.state.phase == LpiPhase::Active)
                ++result.wakes;
            record(EventKind::LpiTimer, static_cast<std::uint32_t>(i), static_cast<std::uint64_t>(step.state.phase),
                   cid(i), to_string(step.state.phase));
        }
        refresh(i);
    }

    void go_sleep(std::size_t i)
    {
        Comp& c = comps[i];
        ++result.sleep_requests;
        if (c.lpi)
            lpi_step(i, LpiStimulus::IdleDetected);
        else
            begin_transition(i, PowerStateName::LowPowerIdle);
    }

    void wake(std::size_t i)
    {
        Comp& c = comps[i];
        if (c.status != PathStatus::Sleepy || c.im_off)
            return;
        if (c.lpi && !c.target && c.state == PowerStateName::Active) {
            const LpiPhase ph = c.lpi_state.phase;
            if ((ph == LpiPhase::Sleep && !c.lpi_state.pending_wake) || ph == LpiPhase::Quiet ||
                ph == LpiPhase::Refresh)
                lpi_step(i, LpiStimulus::TrafficPending);
            return;
        }
        if (c.target == PowerStateName::LowPowerIdle)
            c.wake_pending = true;
        else if (!c.target && c.state == PowerStateName::LowPowerIdle)
            begin_transition(i, PowerStateName::Active);
    }

    void request_wake(int p)
    {
        Port& port = ports[p];
        if (port.phy != static_cast<std::size_t>(-1))
            wake(port.phy);
        const Linecard& lc = lcs[port.lc];
        if (lc.sleepy > 0)
            for (std::size_t i : lc.comps)
                wake(i);
        for (Group* g : {&fabric, &psu})
            if (!g->members.empty() && g->functional == 0)
                for (std::size_t i : g->members)
                    wake(i);
    }

    void force_off(std::size_t i)
    {
        Comp& c = comps[i];
        c.im_off = true;
        c.wake_pending = false;
        if (c.state == PowerStateName::Off && (!c.target || *c.target == PowerStateName::Off)) {
            if (c.target) {
                accrue(c);
                c.target.reset();
                ++c.token;
                refresh(i);
            }
            return;
        }
        if (c.target) {
            // Abandon the in-flight transition from its origin state.
            accrue(c);
            c.target.reset();
            ++c.token;
            if (c.state == PowerStateName::Off) {
                refresh(i);
                return;
            }
        }
        if (c.lpi && c.lpi_state.phase != LpiPhase::Active) {
            accrue(c);
            c.lpi_state = LpiState{LpiPhase::Active, now, false};
            ++c.token;
        }
        begin_transition(i, PowerStateName::Off);
    }

    void activate(std::size_t i, Nanos duration)
    {
        Comp& c = comps[i];
        c.im_off = false;
        if (c.state == PowerStateName::Active && !c.target)
            return;
        if (c.target == PowerStateName::Active)
            return;
        accrue(c);
        if (c.target) {
            c.target.reset();
            ++c.token;
        }
        if (c.state == PowerStateName::LowPowerIdle) {
            begin_transition(i, PowerStateName::Active);
            return;
        }
        c.state = PowerStateName::Off;
        c.activation_length = duration;
        begin_transition(i, PowerStateName::Active, duration);
    }

    void arm_idle_check(std::size_t i, Nanos from)
    {
        Comp& c = comps[i];
        if (!sc.policy.delay_variable() || !c.sleep_capable || !sc.policy.may_sleep_kind(c.kind) || c.check_pending)
            return;
        const Nanos at = checked_add(from, threshold);
        if (at >= end)
            return;
        c.check_pending = true;
        push(at, EventKind::PolicyTick, static_cast<std::uint32_t>(i), ++c.check_token);
    }

    void idle_check(std::size_t i)
    {
        Comp& c = comps[i];
        c.check_pending = false;
        if (c.status != PathStatus::Functional || c.im_off)
            return;
        if (now < c.guard_until) {
            arm_idle_check(i, c.guard_until - threshold);
            return;
        }
        if (scope_blocked(c)) {
            arm_idle_check(i, now);
            return;
        }
        const Nanos la = last_activity(c);
        if (now - la < threshold) {
            arm_idle_check(i, la);
            return;
        }
        const auto present = classes_present(c);
        ComponentIdleView view;
        view.kind = c.kind;
        view.supports_low_power = c.sleep_capable;
        view.eligible = true;
        view.last_activity = la;
        view.sleep_duration = c.sleep_duration;
        view.wake_duration = c.wake_duration;
        view.classes_present = present;
        if (delay_variable_tick(view, sc.policy, threshold, sc.sla, now)) {
            record(EventKind::PolicyTick, static_cast<std::uint32_t>(i), 1, cid(i), "sleep");
            go_sleep(i);
        } else {
            arm_idle_check(i, now - threshold + std::max(threshold, sc.policy.class_window / 8));
        }
    }

    // --- packets -------------------------------------------------------------

    void schedule_packet(int p, const PacketArrival& pkt)
    {
        Port& port = ports[p];
        Linecard& lc = lcs[port.lc];
        const double tnow = static_cast<double>(now);
        const double ser = static_cast<double>(pkt.size) * 8e9 / port.rate_bps;
        const double start = std::max(tnow, port.server_free);
        port.server_free = start + ser;
        const double pipe = static_cast<double>(sc.engine.pipeline_latency);
        const auto departure = static_cast<Nanos>(std::ceil(port.server_free + pipe));
        const double sstart = std::max(static_cast<double>(pkt.timestamp), port.shadow_free);
        port.shadow_free = sstart + ser;
        const auto shadow_departure = static_cast<Nanos>(std::ceil(port.shadow_free + pipe));
        const Nanos added = std::max<Nanos>(0, departure - shadow_departure);
        if (start > tnow) {
            port.waiting.push_back({start, pkt.size});
            port.waiting_bytes += pkt.size;
        }
        port.last_activity = std::max(port.last_activity, departure);
        lc.last_activity = std::max(lc.last_activity, departure);
        chassis_last_activity = std::max(chassis_last_activity, departure);
        const double bits = static_cast<double>(pkt.size) * 8.0;
        port.epoch_bits += bits;
        port.epoch_pkts += 1;
        lc.epoch_bits += bits;
        lc.epoch_pkts += 1;
        chassis_epoch_bits += bits;
        chassis_epoch_pkts += 1;

        if (departure <= end) {
            ++result.delivered_packets;
            result.delivered_bits += bits;
            const Nanos delay = departure - pkt.timestamp;
            result.delay.add(delay);
            result.added_delay.add(added);
            auto& cs = result.classes[static_cast<std::size_t>(pkt.app_class)];
            ++cs.delivered;
            cs.max_added_delay = std::max(cs.max_added_delay, added);
            if (auto b = sc.sla.budget(pkt.app_class); b && added >= *b)
                ++cs.violations;
            result.min_delay_margin =
                std::min(result.min_delay_margin, delay - static_cast<Nanos>(std::ceil(ser)));
            if (sc.engine.record_delays) {
                result.delay_samples.push_back(delay);
                result.added_delay_samples.push_back(added);
            }
        } else {
            ++result.residual_packets;
        }
    }

    void release(Port& port)
    {
        const double tnow = static_cast<double>(now);
        while (!port.waiting.empty() && port.waiting.front().start <= tnow) {
            port.waiting_bytes -= port.waiting.front().size;
            port.waiting.pop_front();
        }
    }

    void unblock_one(Port& port)
    {
        const auto size = port.blocked.front().first.size;
        port.blocked.pop_front();
        port.waiting_bytes -= size;
        --lcs[port.lc].blocked;
        --chassis_blocked;
    }

    void drain(int p)
    {
        Port& port = ports[p];
        const PathStatus st = path_status(p);
        if (st == PathStatus::OffLike) {
            drop_blocked(p);
            return;
        }
        if (st != PathStatus::Functional) {
            request_wake(p);
            return;
        }
        release(port);
        while (!port.blocked.empty()) {
            const PacketArrival pkt = port.blocked.front().first;
            unblock_one(port);
            schedule_packet(p, pkt);
        }
    }

    void drop_blocked(int p)
    {
        Port& port = ports[p];
        while (!port.blocked.empty()) {
            unblock_one(port);
            ++result.drops.port_inactive;
        }
    }

    Disposition offer(const PacketArrival& pkt, int p)
    {
        if (p < 0 || p >= static_cast<int>(ports.size()))
            throw InputError("packet offered to nonexistent port " + std::to_string(p));
        Port& port = ports[p];
        ++result.offered_packets;
        result.offered_bits += static_cast<double>(pkt.size) * 8.0;
        const auto k = static_cast<std::size_t>(pkt.app_class);
        port.last_seen[k] = now;
        lcs[port.lc].last_seen[k] = now;
        chassis_last_seen[k] = now;
        release(port);

        Disposition d;
        const PathStatus st = path_status(p);
        if (st == PathStatus::OffLike) {
            ++result.drops.port_inactive;
            d = Disposition::Dropped;
        } else if (st == PathStatus::Functional && port.blocked.empty()) {
            const bool must_wait = port.server_free > static_cast<double>(now);
            if (must_wait && port.waiting_bytes + pkt.size > sc.engine.buffer_bytes) {
                ++result.drops.buffer_overflow;
                d = Disposition::Dropped;
            } else {
                schedule_packet(p, pkt);
                d = must_wait ? Disposition::Buffered : Disposition::Forwarded;
            }
        } else if (port.waiting_bytes + pkt.size > sc.engine.buffer_bytes) {
            ++result.drops.buffer_overflow;
            d = Disposition::Dropped;
        } else {
            port.blocked.push_back({pkt, p});
            port.waiting_bytes += pkt.size;
            ++lcs[port.lc].blocked;
            ++chassis_blocked;
            d = Disposition::Buffered;
            request_wake(p);
        }
        hash(pkt.size);
        hash(k);
        if (log.is_open())
            record(EventKind::PacketArrival, static_cast<std::uint32_t>(p), static_cast<std::uint64_t>(d),
                   "port" + std::to_string(p), to_string(d));
        else
            record(EventKind::PacketArrival, static_cast<std::uint32_t>(p), static_cast<std::uint64_t>(d), {}, {});
        return d;
    }

    // --- idle management ------------------------------------------------------

    std::vector<std::size_t> target_components(const std::string& target) const
    {
        for (std::size_t l = 0; l < lcs.size(); ++l) {
            if (model.chassis().populated[l].name == target) {
                std::vector<std::size_t> out = lcs[l].comps;
                for (int p : lcs[l].ports)
                    if (ports[p].phy != static_cast<std::size_t>(-1))
                        out.push_back(ports[p].phy);
                std::sort(out.begin(), out.end());
                return out;
            }
        }
        if (auto i = model.find(target))
            return {*i};
        return {};
    }

    Nanos activation_duration(const std::string& target) const
    {
        for (const auto& lc : model.chassis().populated)
            if (lc.name == target)
                return lc.bringup_chain();
        if (auto i = model.find(target)) {
            const auto* t = model.components()[*i].spec->transition(PowerStateName::Off, PowerStateName::Active);
            return t ? t->duration : 0;
        }
        return 0;
    }

    TargetCondition condition(const std::vector<std::size_t>& members) const
    {
        bool any_bringup = false, any_off = false, any_lpi = false, all_active = true;
        for (std::size_t i : members) {
            const Comp& c = comps[i];
            if (c.target == PowerStateName::Active && c.state == PowerStateName::Off)
                any_bringup = true;
            else if (c.state == PowerStateName::Off || c.target == PowerStateName::Off)
                any_off = true;
            else if (c.status == PathStatus::Sleepy)
                any_lpi = true;
            if (c.status != PathStatus::Functional)
                all_active = false;
        }
        if (all_active)
            return TargetCondition::Active;
        if (any_bringup)
            return TargetCondition::BringingUp;
        if (any_off)
            return TargetCondition::Off;
        return any_lpi ? TargetCondition::LowPowerIdle : TargetCondition::Transitioning;
    }

    void execute(const StateCommand& cmd)
    {
        const auto members = target_components(cmd.target);
        if (cmd.to == PowerStateName::Off) {
            for (std::size_t i : members)
                force_off(i);
        } else {
            const Nanos d = activation_duration(cmd.target);
            for (std::size_t i : members)
                activate(i, d);
        }
        result.commands.push_back({now, std::string(to_string(cmd.action)), cmd.target, "applied"});
        record(EventKind::ScheduledAction, static_cast<std::uint32_t>(cmd.action), 0, cmd.target,
               to_string(cmd.action));
    }

    void summon(const Summons& s)
    {
        const auto members = target_components(s.target);
        const SummonsResult r = wake_on_demand(condition(members), sc.policy);
        if (r == SummonsResult::Activation) {
            const Nanos d = activation_duration(s.target);
            for (std::size_t i : members)
                activate(i, d);
        }
        result.commands.push_back({now, "summon", s.target, std::string(to_string(r))});
        record(EventKind::ScheduledAction, 0xfffe, static_cast<std::uint64_t>(r), s.target, to_string(r));
    }

    // --- accounting -------------------------------------------------------------

    void close_epoch()
    {
        const double dt = to_seconds(now - epoch_start);
        std::vector<std::pair<double, double>> rates(comps.size(), {0.0, 0.0});
        for (Group* g : {&fabric, &psu}) {
            g->pending_bits += chassis_epoch_bits;
            g->pending_pkts += chassis_epoch_pkts;
        }
        for (auto& port : ports)
            if (port.phy != static_cast<std::size_t>(-1)) {
                comps[port.phy].pending_bits += port.epoch_bits;
                comps[port.phy].pending_pkts += port.epoch_pkts;
            }
        for (auto& lc : lcs)
            for (std::size_t i : lc.comps) {
                comps[i].pending_bits += lc.epoch_bits;
                comps[i].pending_pkts += lc.epoch_pkts;
            }
        for (auto& c : comps)
            if (c.status == PathStatus::Functional) {
                c.active_ns += now - c.active_since;
                c.active_since = now;
            }
        for (Group* g : {&fabric, &psu}) {
            Nanos total = 0;
            for (std::size_t i : g->members)
                total += comps[i].active_ns;
            if (total > 0) {
                for (std::size_t i : g->members) {
                    const double share = static_cast<double>(comps[i].active_ns) / static_cast<double>(total);
                    comps[i].pending_bits = g->pending_bits * share;
                    comps[i].pending_pkts = g->pending_pkts * share;
                }
                g->pending_bits = g->pending_pkts = 0;
            }
        }
        for (std::size_t i = 0; i < comps.size(); ++i) {
            Comp& c = comps[i];
            if (c.active_ns > 0) {
                const double secs = to_seconds(c.active_ns);
                const double br = c.pending_bits / secs;
                const double pr = c.pending_pkts / secs;
                if (br > 0 || pr > 0) {
                    c.ledger[static_cast<std::size_t>(LedgerColumn::Work)] += model.work_power_w(i, br, pr) * secs;
                    rates[i] = {br, pr};
                }
                c.pending_bits = c.pending_pkts = 0;
            }
            c.active_ns = 0;
        }
        for (auto& port : ports)
            port.epoch_bits = port.epoch_pkts = 0;
        for (auto& lc : lcs)
            lc.epoch_bits = lc.epoch_pkts = 0;
        chassis_epoch_bits = chassis_epoch_pkts = 0;
        common_j += model.chassis().common_draw_w * dt;

        if (sc.engine.energy_audit)
            audit_epoch(rates);
        epoch_start = now;
    }

    void audit_epoch(const std::vector<std::pair<double, double>>& rates)
    {
        auto power = [&]() {
            std::vector<ComponentStatus> s = audit_status;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s[i].state == PowerStateName::Active && !s[i].transition_to && !s[i].active_fraction) {
                    s[i].bitrate_bps = rates[i].first;
                    s[i].packet_rate = rates[i].second;
                }
            }
            return instantaneous_power(model, s);
        };
        Nanos t = epoch_start;
        std::size_t k = 0;
        while (true) {
            const Nanos next = k < audit_changes.size() ? audit_changes[k].first : now;
            if (next > t) {
                audit_j += power() * to_seconds(next - t);
                t = next;
            }
            if (k >= audit_changes.size())
                break;
            audit_status[audit_changes[k].second.first] = audit_changes[k].second.second;
            ++k;
        }
        audit_changes.clear();
    }

    void dispatch(const Event& e)
    {
        ++result.events;
        switch (e.kind) {
        case EventKind::PacketArrival: {
            Source& s = sources[e.a];
            const PacketArrival pkt = s.pending;
            offer(pkt, s.port);
            if (s.source->next(s.pending) && s.pending.timestamp < end) {
                if (s.pending.timestamp < pkt.timestamp)
                    throw ProtocolError("arrival source went backwards in time");
                push(s.pending.timestamp, EventKind::PacketArrival, e.a);
            }
            break;
        }
        case EventKind::TransitionComplete:
            if (comps[e.a].token == e.b && comps[e.a].target)
                complete_transition(e.a);
            break;
        case EventKind::LpiTimer:
            if (comps[e.a].token == e.b)
                lpi_step(e.a, LpiStimulus::Timer);
            break;
        case EventKind::PolicyTick:
            if (e.a == kEpochTick) {
                close_epoch();
                const Nanos next = checked_add(now, sc.engine.epoch);
                if (next < end)
                    push(next, EventKind::PolicyTick, kEpochTick);
            } else if (comps[e.a].check_token == e.b && comps[e.a].check_pending) {
                idle_check(e.a);
            }
            break;
        case EventKind::ScheduledAction:
            if (e.b == 0) {
                for (const auto& cmd : idle_management_apply(schedule, schedule_cursor, now))
                    execute(cmd);
            } else {
                summon(sc.policy.summons[e.a]);
            }
            break;
        }
    }

    void run_until(Nanos t)
    {
        if (finished)
            throw Error("simulation already finished");
        while (!queue.empty() && queue.top().time < t) {
            const Event e = queue.top();
            queue.pop();
            now = e.time;
            dispatch(e);
        }
        now = std::max(now, std::min(t, end));
    }

    void build_sources();
    SimResult finish();
};

Simulator::Impl::Impl(const Scenario& s)
    : sc(s), model(s.device), end(s.duration), threshold(s.idle_threshold())
{
    s.validate();
    chassis_last_seen.fill(-1);
    const auto flat = model.components();
    comps.resize(flat.size());
    ports.resize(static_cast<std::size_t>(model.port_count()));
    lcs.resize(model.chassis().populated.size());
    for (int p = 0; p < model.port_count(); ++p) {
        ports[p].lc = model.port_linecard(p);
        ports[p].rate_bps = model.port_rate_bps(p);
        ports[p].last_seen.fill(-1);
        lcs[ports[p].lc].ports.push_back(p);
    }
    for (auto& lc : lcs)
        lc.last_seen.fill(-1);

    for (std::size_t i = 0; i < flat.size(); ++i) {
        Comp& c = comps[i];
        const ComponentSpec& spec = *flat[i].spec;
        c.kind = spec.kind;
        c.lc = flat[i].linecard;
        if (spec.kind == ComponentKind::PHY_Link && flat[i].global_port >= 0) {
            c.scope = Scope::Port;
            c.port = flat[i].global_port;
            ports[c.port].phy = i;
            if (sc.lpi.enabled)
                c.lpi = sc.lpi.resolve(c.port);
        } else if (c.lc >= 0) {
            c.scope = Scope::Linecard;
            lcs[c.lc].comps.push_back(i);
        } else if (spec.kind == ComponentKind::PowerSupply) {
            c.scope = Scope::Psu;
            psu.members.push_back(i);
        } else {
            c.scope = Scope::Fabric;
            fabric.members.push_back(i);
        }
        if (c.lpi) {
            c.sleep_capable = true;
            c.sleep_duration = c.lpi->t_s;
            c.wake_duration = c.lpi->t_w;
        } else if (spec.supports(PowerStateName::LowPowerIdle)) {
            c.sleep_capable = true;
            if (auto* t = spec.transition(PowerStateName::Active, PowerStateName::LowPowerIdle))
                c.sleep_duration = t->duration;
            if (auto* t = spec.transition(PowerStateName::LowPowerIdle, PowerStateName::Active))
                c.wake_duration = t->duration;
        }
        c.draw_w = model.component_power_w(i, status_of(c));
        c.column = column_of(c);
        count(c, PathStatus::Functional, +1);
    }

    if (sc.policy.idle_management()) {
        auto off = [&](std::size_t i) {
            Comp& c = comps[i];
            c.state = PowerStateName::Off;
            c.im_off = true;
            count(c, c.status, -1);
            c.status = classify(c);
            count(c, c.status, +1);
            c.draw_w = model.component_power_w(i, status_of(c));
            c.column = column_of(c);
        };
        for (const auto& t : sc.policy.initially_off)
            for (std::size_t i : target_components(t))
                off(i);
        if (sc.policy.scale_common_to_fill) {
            const double fill = static_cast<double>(lcs.size()) / std::max(1, model.chassis().linecard_slots);
            for (Group* g : {&fabric, &psu}) {
                const auto n = g->members.size();
                const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fill * static_cast<double>(n) - 1e-9)));
                for (std::size_t k = keep; k < n; ++k)
                    off(g->members[k]);
            }
        }
        schedule = sc.policy.schedule;
        for (const auto& a : schedule)
            if (a.at < end)
                push(a.at, EventKind::ScheduledAction, 0, 0);
    }
    for (std::size_t k = 0; k < sc.policy.summons.size(); ++k)
        if (sc.policy.summons[k].at < end)
            push(sc.policy.summons[k].at, EventKind::ScheduledAction, static_cast<std::uint32_t>(k), 1);

    if (sc.engine.energy_audit) {
        audit_status.reserve(comps.size());
        for (const auto& c : comps)
            audit_status.push_back(status_of(c));
    }
    if (!sc.engine.event_log.empty()) {
        log.open(sc.engine.event_log);
        if (!log)
            throw InputError("cannot open event log " + sc.engine.event_log.string());
    }

    build_sources();
    if (sc.engine.epoch < end)
        push(sc.engine.epoch, EventKind::PolicyTick, kEpochTick);
    for (std::size_t i = 0; i < comps.size(); ++i)
        if (comps[i].status == PathStatus::Functional)
            arm_idle_check(i, 0);

    result.device = model.name();
    result.scenario = sc.name;
    result.mode = sc.policy.mode;
    result.offered_load = sc.traffic.load;
    result.packet_size = sc.traffic.packet_size;
    result.populated_linecards = static_cast<int>(lcs.size());
    result.capacity_bps = model.capacity_bps();
    result.duration = end;
}

void Simulator::Impl::build_sources()
{
    const TrafficSpec& t = sc.traffic;
    std::vector<int> loaded = t.ports;
    if (loaded.empty())
        for (int p = 0; p < model.port_count(); ++p)
            loaded.push_back(p);
    double weight_sum = 0;
    for (const auto& c : t.classes)
        weight_sum += c.weight;

    auto declare = [&](int p, AppClass c) {
        const auto k = static_cast<std::size_t>(c);
        ports[p].declared[k] = true;
        lcs[ports[p].lc].declared[k] = true;
        chassis_declared[k] = true;
    };
    auto add = [&](std::unique_ptr<ArrivalSource> src, int p) { sources.push_back({std::move(src), p, {}}); };

    switch (t.kind) {
    case TrafficSpec::Kind::None:
        break;
    case TrafficSpec::Kind::Cbr:
    case TrafficSpec::Kind::Poisson:
    case TrafficSpec::Kind::OnOff:
        if (t.load <= 0)
            break;
        for (int p : loaded) {
            const double port_rate = t.load * ports[p].rate_bps;
            for (std::size_t ci = 0; ci < t.classes.size(); ++ci) {
                const auto& cls = t.classes[ci];
                if (cls.weight <= 0)
                    continue;
                declare(p, cls.app_class);
                const double rate = port_rate * cls.weight / weight_sum;
                const auto stream = (static_cast<std::uint64_t>(p) << 8) | ci;
                if (t.kind == TrafficSpec::Kind::Cbr) {
                    const double interval = static_cast<double>(t.packet_size) * 8e9 / rate;
                    const auto phase = static_cast<Nanos>(interval * static_cast<double>(ci) /
                                                          static_cast<double>(t.classes.size()));
                    add(std::make_unique<CbrSource>(rate, t.packet_size, cls.app_class, phase, end), p);
                } else if (t.kind == TrafficSpec::Kind::Poisson) {
                    add(std::make_unique<PoissonSource>(rate, t.packet_size, cls.app_class, sc.seed,
                                                        stream | (1ull << 63), end),
                        p);
                } else {
                    OnOffSourceParams op = t.onoff;
                    op.packet_size = t.packet_size;
                    op.app_class = cls.app_class;
                    if (t.onoff_peak_from_load)
                        op.peak_rate_bps = rate / t.sources_per_port / op.on_probability();
                    for (int j = 0; j < t.sources_per_port; ++j)
                        add(std::make_unique<OnOffSource>(op, sc.seed, onoff_stream_id(stream, j), end), p);
                }
            }
        }
        break;
    case TrafficSpec::Kind::Trace:
        add(std::make_unique<VectorSource>(load_trace(t.trace, t.mtu), end), t.trace_port);
        break;
    case TrafficSpec::Kind::Explicit: {
        std::vector<ArrivalStream> per_port(ports.size());
        for (const auto& [p, a] : t.arrivals)
            per_port.at(static_cast<std::size_t>(p)).push_back(a);
        for (std::size_t p = 0; p < per_port.size(); ++p) {
            if (per_port[p].empty())
                continue;
            std::stable_sort(per_port[p].begin(), per_port[p].end(),
                             [](const PacketArrival& x, const PacketArrival& y) { return x.timestamp < y.timestamp; });
            add(std::make_unique<VectorSource>(std::move(per_port[p]), end), static_cast<int>(p));
        }
        break;
    }
    }
    for (std::size_t s = 0; s < sources.size(); ++s)
        if (sources[s].source->next(sources[s].pending) && sources[s].pending.timestamp < end)
            push(sources[s].pending.timestamp, EventKind::PacketArrival, static_cast<std::uint32_t>(s));
}

SimResult Simulator::Impl::finish()
{
    run_until(end);
    now = end;
    finished = true;
    close_epoch();
    for (std::size_t i = 0; i < comps.size(); ++i)
        accrue(comps[i]);
    for (const auto& port : ports)
        result.residual_packets += port.blocked.size();

    const auto flat = model.components();
    result.ledger.reserve(comps.size() + 1);
    result.total_energy_j = 0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        ComponentLedger l{flat[i].id, comps[i].kind, comps[i].ledger};
        result.total_energy_j += l.total();
        result.ledger.push_back(std::move(l));
    }
    ComponentLedger common{"chassis.common", std::nullopt, {}};
    common.joules[static_cast<std::size_t>(LedgerColumn::Active)] = common_j;
    result.total_energy_j += common_j;
    result.ledger.push_back(std::move(common));
    if (sc.engine.energy_audit)
        result.audit_energy_j = audit_j + transition_impulses_j;
    result.digest = digest;
    if (result.delivered_packets == 0)
        result.min_delay_margin = 0;
    return std::move(result);
}

Simulator::Simulator(const Scenario& scenario) : impl_(std::make_unique<Impl>(scenario)) {}
Simulator::~Simulator() = default;

void Simulator::run_until(Nanos t) { impl_->run_until(t); }

Disposition Simulator::offer_packet(const PacketArrival& packet, int port)
{
    if (packet.timestamp < impl_->now)
        throw OrderingError(0, "packet offered before the simulation clock");
    if (packet.timestamp >= impl_->end)
        throw DurationError("packet offered at or after the end of the run");
    impl_->run_until(packet.timestamp);
    impl_->now = packet.timestamp;
    return impl_->offer(packet, port);
}

SimResult Simulator::finish() { return impl_->finish(); }

Nanos Simulator::now() const { return impl_->now; }

LpiPhase Simulator::lpi_phase(int port) const
{
    const auto& p = impl_->ports.at(static_cast<std::size_t>(port));
    if (p.phy == static_cast<std::size_t>(-1))
        return LpiPhase::Active;
    const auto& c = impl_->comps[p.phy];
    return c.lpi ? c.lpi_state.phase : LpiPhase::Active;
}

bool Simulator::port_functional(int port) const
{
    return impl_->path_status(port) == PathStatus::Functional;
}

SimResult run(const Scenario& scenario)
{
    Simulator sim(scenario);
    return sim.finish();
}

} // namespace chronowatt
