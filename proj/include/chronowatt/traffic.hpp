#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "chronowatt/common.hpp"
#include "chronowatt/rng.hpp"

namespace chronowatt {

inline constexpr std::uint32_t kDefaultMtuBytes = 9216;

struct PacketArrival {
    Nanos timestamp = 0;
    std::uint32_t size = 0;
    AppClass app_class = AppClass::BestEffort;

    bool operator==(const PacketArrival&) const = default;
};

using ArrivalStream = std::vector<PacketArrival>;

/// Heavy-tailed ON/OFF source. Sojourns are Pareto(min, shape) with
/// mean = min * shape / (shape - 1); both shapes must lie in (1, 2).
struct OnOffSourceParams {
    double shape_on = 1.4;
    double shape_off = 1.4;
    Nanos min_on = kNanosPerMilli;
    Nanos min_off = kNanosPerMilli;
    double peak_rate_bps = 1e7;
    std::uint32_t packet_size = 1500;
    AppClass app_class = AppClass::BestEffort;

    void validate() const;
    double mean_on_ns() const;
    double mean_off_ns() const;
    double on_probability() const;
    double mean_rate_bps() const;
};

/// Lazily produced arrival stream. next() returns false when exhausted.
class ArrivalSource {
  public:
    virtual ~ArrivalSource() = default;
    virtual bool next(PacketArrival& out) = 0;
};

class OnOffSource final : public ArrivalSource {
  public:
    OnOffSource(const OnOffSourceParams& params, std::uint64_t seed, std::uint64_t stream_id, Nanos horizon);
    bool next(PacketArrival& out) override;

  private:
    bool start_next_on_period();
    Nanos draw_period(Nanos scale, double shape);

    OnOffSourceParams params_;
    Rng rng_;
    Nanos horizon_;
    double packet_interval_ns_;
    Nanos period_start_ = 0;
    std::int64_t packets_in_period_ = 0;
    std::int64_t emitted_in_period_ = 0;
    Nanos cursor_ = 0;
    bool first_ = true;
};

/// Poisson arrivals of fixed-size packets; the short-range-dependent control.
class PoissonSource final : public ArrivalSource {
  public:
    PoissonSource(double rate_bps, std::uint32_t packet_size, AppClass app_class, std::uint64_t seed,
                  std::uint64_t stream_id, Nanos horizon);
    bool next(PacketArrival& out) override;

  private:
    Rng rng_;
    double mean_gap_ns_;
    std::uint32_t size_;
    AppClass app_class_;
    Nanos horizon_;
    double clock_ = 0;
};

/// Constant bit rate: packet k at phase + floor(k * size * 8 / rate).
class CbrSource final : public ArrivalSource {
  public:
    CbrSource(double rate_bps, std::uint32_t packet_size, AppClass app_class, Nanos phase, Nanos horizon);
    bool next(PacketArrival& out) override;

  private:
    double interval_ns_;
    std::uint32_t size_;
    AppClass app_class_;
    Nanos phase_;
    Nanos horizon_;
    std::int64_t index_ = 0;
};

class VectorSource final : public ArrivalSource {
  public:
    explicit VectorSource(ArrivalStream stream, Nanos horizon = kMaxNanos);
    bool next(PacketArrival& out) override;

  private:
    ArrivalStream stream_;
    std::size_t pos_ = 0;
    Nanos horizon_;
};

/// Stable time-ordered merge: equal timestamps come out in source order.
class MergedSource final : public ArrivalSource {
  public:
    explicit MergedSource(std::vector<std::unique_ptr<ArrivalSource>> sources);
    bool next(PacketArrival& out) override;

    /// Index of the source that produced the last arrival returned by next().
    std::size_t last_source() const { return last_source_; }

  private:
    struct Head {
        PacketArrival arrival;
        std::size_t source;
    };
    std::vector<std::unique_ptr<ArrivalSource>> sources_;
    std::vector<Head> heap_;
    std::size_t last_source_ = 0;
};

/// Substream id for copy `copy` of parameter set `param_index`.
constexpr std::uint64_t onoff_stream_id(std::size_t param_index, std::size_t copy)
{
    return (static_cast<std::uint64_t>(param_index) << 32) | static_cast<std::uint64_t>(copy);
}

/// Builds the lazy superposition used by generate_aggregate.
std::unique_ptr<MergedSource> make_aggregate_source(std::span<const OnOffSourceParams> sources,
                                                    std::size_t count_per_params, Nanos duration,
                                                    std::uint64_t seed);

/// Superposes count_per_params independent copies of every parameter set over
/// [0, duration). Deterministic in (params, seed).
ArrivalStream generate_aggregate(std::span<const OnOffSourceParams> sources, std::size_t count_per_params,
                                 Nanos duration, std::uint64_t seed);

ArrivalStream generate_poisson(double rate_bps, std::uint32_t packet_size, AppClass app_class, Nanos duration,
                               std::uint64_t seed);

// Trace files: CSV with a "timestamp_ns,size_bytes,app_class" header.
ArrivalStream read_trace(std::istream& in, std::uint32_t mtu = kDefaultMtuBytes);
ArrivalStream load_trace(const std::filesystem::path& path, std::uint32_t mtu = kDefaultMtuBytes);
void write_trace(std::ostream& out, std::span<const PacketArrival> stream);
void save_trace(const std::filesystem::path& path, std::span<const PacketArrival> stream);

struct UtilizationSeries {
    Nanos bin_width = 0;
    double capacity_bps = 0;
    std::vector<double> values;
    /// Set when at least one bin's raw utilization exceeded 1 and was clamped.
    bool overloaded = false;
    std::size_t overloaded_bins = 0;

    double mean() const;
    double max() const;
};

/// Bins arrivals by timestamp. Use it directly for streams too long to hold.
class UtilizationAccumulator {
  public:
    UtilizationAccumulator(Nanos bin_width, double capacity_bps);
    void add(const PacketArrival& arrival);
    UtilizationSeries finish(Nanos duration) const;

  private:
    Nanos bin_width_;
    double capacity_bps_;
    std::vector<double> bits_;
    Nanos last_timestamp_ = -1;
};

/// `duration` fixes the series length at ceil(duration / bin_width); when
/// omitted the series ends with the bin holding the last arrival.
UtilizationSeries utilization_series(std::span<const PacketArrival> stream, Nanos bin_width, double capacity_bps,
                                     std::optional<Nanos> duration = std::nullopt);

struct HurstEstimate {
    double hurst = 0;
    double slope = 0;
    /// RMS residual of the log10-log10 least-squares fit.
    double residual = 0;
    /// (aggregation level, variance of block means) for every ladder rung.
    std::vector<std::pair<std::size_t, double>> variance_time;
};

/// Variance-time estimator over the ladder min_agg, 2*min_agg, 4*min_agg ...
/// not exceeding max_agg.
HurstEstimate estimate_hurst(std::span<const double> series, std::size_t min_agg, std::size_t max_agg);
HurstEstimate estimate_hurst(const UtilizationSeries& series, std::size_t min_agg, std::size_t max_agg);

} // namespace chronowatt
