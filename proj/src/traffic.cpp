#include "chronowatt/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace chronowatt {

namespace {

Nanos saturating_add(Nanos a, Nanos b)
{
    return b > kMaxNanos - a ? kMaxNanos : a + b;
}

void require_horizon(Nanos horizon)
{
    if (horizon < 0)
        throw DurationError("duration must be non-negative, got " + std::to_string(horizon));
}

} // namespace

void OnOffSourceParams::validate() const
{
    auto heavy_tailed = [](double a) { return a > 1.0 && a < 2.0; };
    if (!heavy_tailed(shape_on) || !heavy_tailed(shape_off))
        throw ParameterError("Pareto shapes must lie in (1, 2); got on=" + std::to_string(shape_on) +
                             " off=" + std::to_string(shape_off));
    if (min_on <= 0 || min_off <= 0)
        throw ParameterError("Pareto scale (min_on/min_off) must be positive");
    if (!(peak_rate_bps > 0))
        throw ParameterError("peak_rate must be positive");
    if (packet_size < kMinPacketBytes)
        throw ParameterError("packet_size below 64 bytes");
}

double OnOffSourceParams::mean_on_ns() const
{
    return static_cast<double>(min_on) * shape_on / (shape_on - 1.0);
}

double OnOffSourceParams::mean_off_ns() const
{
    return static_cast<double>(min_off) * shape_off / (shape_off - 1.0);
}

double OnOffSourceParams::on_probability() const
{
    return mean_on_ns() / (mean_on_ns() + mean_off_ns());
}

double OnOffSourceParams::mean_rate_bps() const
{
    return peak_rate_bps * on_probability();
}

// --- OnOffSource -----------------------------------------------------------

OnOffSource::OnOffSource(const OnOffSourceParams& params, std::uint64_t seed, std::uint64_t stream_id,
                         Nanos horizon)
    : params_(params), rng_(seed, stream_id), horizon_(horizon)
{
    params_.validate();
    require_horizon(horizon);
    packet_interval_ns_ = static_cast<double>(params_.packet_size) * 8.0 / params_.peak_rate_bps * 1e9;
}

Nanos OnOffSource::draw_period(Nanos scale, double shape)
{
    double x = static_cast<double>(scale) * std::pow(rng_.uniform_open0(), -1.0 / shape);
    if (!(x < 4e18))
        return Nanos{4'000'000'000'000'000'000};
    return std::max<Nanos>(scale, static_cast<Nanos>(x));
}

bool OnOffSource::start_next_on_period()
{
    if (first_) {
        first_ = false;
        // Start in OFF with the stationary probability of being OFF.
        if (rng_.uniform() >= params_.on_probability())
            cursor_ = draw_period(params_.min_off, params_.shape_off);
    }
    if (cursor_ >= horizon_)
        return false;
    Nanos on_len = draw_period(params_.min_on, params_.shape_on);
    Nanos off_len = draw_period(params_.min_off, params_.shape_off);
    period_start_ = cursor_;
    // Partial packets at the end of an ON period are not generated.
    packets_in_period_ = static_cast<std::int64_t>(std::floor(static_cast<double>(on_len) / packet_interval_ns_));
    emitted_in_period_ = 0;
    cursor_ = saturating_add(saturating_add(cursor_, on_len), off_len);
    return true;
}

bool OnOffSource::next(PacketArrival& out)
{
    while (emitted_in_period_ >= packets_in_period_) {
        if (!start_next_on_period())
            return false;
    }
    double offset = std::floor(static_cast<double>(emitted_in_period_) * packet_interval_ns_);
    Nanos ts = saturating_add(period_start_, static_cast<Nanos>(offset));
    if (ts >= horizon_) {
        packets_in_period_ = emitted_in_period_;
        cursor_ = horizon_;
        return false;
    }
    ++emitted_in_period_;
    out = PacketArrival{ts, params_.packet_size, params_.app_class};
    return true;
}

// --- PoissonSource ---------------------------------------------------------

PoissonSource::PoissonSource(double rate_bps, std::uint32_t packet_size, AppClass app_class, std::uint64_t seed,
                             std::uint64_t stream_id, Nanos horizon)
    : rng_(seed, stream_id), size_(packet_size), app_class_(app_class), horizon_(horizon)
{
    require_horizon(horizon);
    if (rate_bps < 0)
        throw ParameterError("Poisson rate must be non-negative");
    if (packet_size < kMinPacketBytes)
        throw ParameterError("packet_size below 64 bytes");
    mean_gap_ns_ = rate_bps > 0 ? static_cast<double>(packet_size) * 8.0 / rate_bps * 1e9 : -1.0;
}

bool PoissonSource::next(PacketArrival& out)
{
    if (mean_gap_ns_ <= 0)
        return false;
    clock_ += -std::log(rng_.uniform_open0()) * mean_gap_ns_;
    if (!(clock_ < static_cast<double>(horizon_)))
        return false;
    out = PacketArrival{static_cast<Nanos>(clock_), size_, app_class_};
    return true;
}

// --- CbrSource -------------------------------------------------------------

CbrSource::CbrSource(double rate_bps, std::uint32_t packet_size, AppClass app_class, Nanos phase, Nanos horizon)
    : size_(packet_size), app_class_(app_class), phase_(phase), horizon_(horizon)
{
    require_horizon(horizon);
    if (rate_bps < 0)
        throw ParameterError("CBR rate must be non-negative");
    interval_ns_ = rate_bps > 0 ? static_cast<double>(packet_size) * 8.0 / rate_bps * 1e9 : -1.0;
}

bool CbrSource::next(PacketArrival& out)
{
    if (interval_ns_ <= 0)
        return false;
    Nanos ts = phase_ + static_cast<Nanos>(std::floor(static_cast<double>(index_) * interval_ns_));
    if (ts >= horizon_)
        return false;
    ++index_;
    out = PacketArrival{ts, size_, app_class_};
    return true;
}

// --- VectorSource ----------------------------------------------------------

VectorSource::VectorSource(ArrivalStream stream, Nanos horizon) : stream_(std::move(stream)), horizon_(horizon) {}

bool VectorSource::next(PacketArrival& out)
{
    if (pos_ >= stream_.size() || stream_[pos_].timestamp >= horizon_)
        return false;
    out = stream_[pos_++];
    return true;
}

// --- MergedSource ----------------------------------------------------------

namespace {

struct HeadAfter {
    template <class H>
    bool operator()(const H& a, const H& b) const
    {
        if (a.arrival.timestamp != b.arrival.timestamp)
            return a.arrival.timestamp > b.arrival.timestamp;
        return a.source > b.source;
    }
};

} // namespace

MergedSource::MergedSource(std::vector<std::unique_ptr<ArrivalSource>> sources) : sources_(std::move(sources))
{
    heap_.reserve(sources_.size());
    for (std::size_t i = 0; i < sources_.size(); ++i) {
        PacketArrival a;
        if (sources_[i]->next(a))
            heap_.push_back(Head{a, i});
    }
    std::make_heap(heap_.begin(), heap_.end(), HeadAfter{});
}

bool MergedSource::next(PacketArrival& out)
{
    if (heap_.empty())
        return false;
    std::pop_heap(heap_.begin(), heap_.end(), HeadAfter{});
    Head& h = heap_.back();
    out = h.arrival;
    last_source_ = h.source;
    if (sources_[h.source]->next(h.arrival))
        std::push_heap(heap_.begin(), heap_.end(), HeadAfter{});
    else
        heap_.pop_back();
    return true;
}

// --- generators ------------------------------------------------------------

std::unique_ptr<MergedSource> make_aggregate_source(std::span<const OnOffSourceParams> sources,
                                                    std::size_t count_per_params, Nanos duration,
                                                    std::uint64_t seed)
{
    require_horizon(duration);
    for (const auto& p : sources)
        p.validate();
    std::vector<std::unique_ptr<ArrivalSource>> parts;
    parts.reserve(sources.size() * count_per_params);
    for (std::size_t p = 0; p < sources.size(); ++p)
        for (std::size_t k = 0; k < count_per_params; ++k)
            parts.push_back(std::make_unique<OnOffSource>(sources[p], seed, onoff_stream_id(p, k), duration));
    return std::make_unique<MergedSource>(std::move(parts));
}

ArrivalStream generate_aggregate(std::span<const OnOffSourceParams> sources, std::size_t count_per_params,
                                 Nanos duration, std::uint64_t seed)
{
    auto merged = make_aggregate_source(sources, count_per_params, duration, seed);
    ArrivalStream out;
    PacketArrival a;
    while (merged->next(a))
        out.push_back(a);
    return out;
}

ArrivalStream generate_poisson(double rate_bps, std::uint32_t packet_size, AppClass app_class, Nanos duration,
                               std::uint64_t seed)
{
    PoissonSource src(rate_bps, packet_size, app_class, seed, 0, duration);
    ArrivalStream out;
    PacketArrival a;
    while (src.next(a))
        out.push_back(a);
    return out;
}

// --- trace files -----------------------------------------------------------

namespace {

constexpr std::string_view kTraceHeader = "timestamp_ns,size_bytes,app_class";

template <class T>
bool parse_int(std::string_view s, T& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace

ArrivalStream read_trace(std::istream& in, std::uint32_t mtu)
{
    ArrivalStream out;
    std::string line;
    std::size_t lineno = 0;
    Nanos previous = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (lineno == 1) {
            if (line != kTraceHeader)
                throw ParseError(lineno, "expected header '" + std::string(kTraceHeader) + "'");
            continue;
        }
        std::string_view view(line);
        auto c1 = view.find(',');
        auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
        if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos)
            throw ParseError(lineno, "expected three comma-separated fields");
        Nanos ts = 0;
        std::uint32_t size = 0;
        if (!parse_int(view.substr(0, c1), ts) || ts < 0)
            throw ParseError(lineno, "bad timestamp_ns");
        if (!parse_int(view.substr(c1 + 1, c2 - c1 - 1), size))
            throw ParseError(lineno, "bad size_bytes");
        if (size < kMinPacketBytes || size > mtu)
            throw ParseError(lineno, "size_bytes " + std::to_string(size) + " outside [64, " +
                                         std::to_string(mtu) + "]");
        auto cls = parse_app_class(view.substr(c2 + 1));
        if (!cls)
            throw ParseError(lineno, "unknown app_class '" + std::string(view.substr(c2 + 1)) + "'");
        if (!out.empty() && ts < previous)
            throw OrderingError(lineno, "timestamp " + std::to_string(ts) + " precedes previous " +
                                            std::to_string(previous));
        previous = ts;
        out.push_back(PacketArrival{ts, size, *cls});
    }
    return out;
}

ArrivalStream load_trace(const std::filesystem::path& path, std::uint32_t mtu)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open trace file " + path.string());
    return read_trace(in, mtu);
}

void write_trace(std::ostream& out, std::span<const PacketArrival> stream)
{
    out << kTraceHeader << '\n';
    for (const auto& a : stream)
        out << a.timestamp << ',' << a.size << ',' << to_string(a.app_class) << '\n';
}

void save_trace(const std::filesystem::path& path, std::span<const PacketArrival> stream)
{
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write trace file " + path.string());
    write_trace(out, stream);
}

// --- utilization -----------------------------------------------------------

double UtilizationSeries::mean() const
{
    if (values.empty())
        return 0.0;
    double s = 0;
    for (double v : values)
        s += v;
    return s / static_cast<double>(values.size());
}

double UtilizationSeries::max() const
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

UtilizationAccumulator::UtilizationAccumulator(Nanos bin_width, double capacity_bps)
    : bin_width_(bin_width), capacity_bps_(capacity_bps)
{
    if (bin_width <= 0)
        throw ParameterError("bin_width must be positive");
    if (!(capacity_bps > 0))
        throw ParameterError("capacity must be positive");
}

void UtilizationAccumulator::add(const PacketArrival& arrival)
{
    auto idx = static_cast<std::size_t>(arrival.timestamp / bin_width_);
    if (idx >= bits_.size())
        bits_.resize(idx + 1, 0.0);
    bits_[idx] += static_cast<double>(arrival.size) * 8.0;
    last_timestamp_ = std::max(last_timestamp_, arrival.timestamp);
}

UtilizationSeries UtilizationAccumulator::finish(Nanos duration) const
{
    UtilizationSeries s;
    s.bin_width = bin_width_;
    s.capacity_bps = capacity_bps_;
    auto n = static_cast<std::size_t>(duration / bin_width_ + (duration % bin_width_ != 0 ? 1 : 0));
    s.values.assign(n, 0.0);
    double bin_capacity_bits = capacity_bps_ * to_seconds(bin_width_);
    for (std::size_t i = 0; i < n && i < bits_.size(); ++i) {
        double u = bits_[i] / bin_capacity_bits;
        if (u > 1.0) {
            s.overloaded = true;
            ++s.overloaded_bins;
            u = 1.0;
        }
        s.values[i] = u;
    }
    return s;
}

UtilizationSeries utilization_series(std::span<const PacketArrival> stream, Nanos bin_width, double capacity_bps,
                                     std::optional<Nanos> duration)
{
    UtilizationAccumulator acc(bin_width, capacity_bps);
    for (const auto& a : stream)
        acc.add(a);
    Nanos horizon = 0;
    if (duration)
        horizon = *duration;
    else if (!stream.empty())
        horizon = (stream.back().timestamp / bin_width + 1) * bin_width;
    return acc.finish(horizon);
}

// --- Hurst -----------------------------------------------------------------

HurstEstimate estimate_hurst(std::span<const double> series, std::size_t min_agg, std::size_t max_agg)
{
    if (min_agg < 1 || min_agg >= max_agg)
        throw ParameterError("need 1 <= min_agg < max_agg");
    if (max_agg < 2 * min_agg)
        throw ParameterError("aggregation ladder needs at least two levels");
    if (series.size() < 10 * max_agg)
        throw ParameterError("series length " + std::to_string(series.size()) + " below 10 * max_agg");

    HurstEstimate est;
    std::vector<double> block_means;
    for (std::size_t m = min_agg; m <= max_agg; m *= 2) {
        std::size_t blocks = series.size() / m;
        block_means.assign(blocks, 0.0);
        double grand = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            double s = 0;
            for (std::size_t i = 0; i < m; ++i)
                s += series[b * m + i];
            block_means[b] = s / static_cast<double>(m);
            grand += block_means[b];
        }
        grand /= static_cast<double>(blocks);
        double var = 0;
        for (double v : block_means)
            var += (v - grand) * (v - grand);
        var /= static_cast<double>(blocks - 1);
        if (!(var > 0))
            throw DegenerateSeriesError("zero variance at aggregation level " + std::to_string(m));
        est.variance_time.emplace_back(m, var);
    }

    double sx = 0, sy = 0;
    const auto n = static_cast<double>(est.variance_time.size());
    for (auto [m, v] : est.variance_time) {
        sx += std::log10(static_cast<double>(m));
        sy += std::log10(v);
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
    for (auto [m, v] : est.variance_time) {
        double dx = std::log10(static_cast<double>(m)) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log10(v) - my);
    }
    est.slope = sxy / sxx;
    double rss = 0;
    for (auto [m, v] : est.variance_time) {
        double fit = my + est.slope * (std::log10(static_cast<double>(m)) - mx);
        rss += (std::log10(v) - fit) * (std::log10(v) - fit);
    }
    est.residual = std::sqrt(rss / n);
    est.hurst = std::clamp(1.0 + est.slope / 2.0, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    return est;
}

HurstEstimate estimate_hurst(const UtilizationSeries& series, std::size_t min_agg, std::size_t max_agg)
{
    return estimate_hurst(std::span<const double>(series.values), min_agg, max_agg);
}

} // namespace chronowatt
