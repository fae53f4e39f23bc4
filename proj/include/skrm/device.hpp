#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skrm {

enum class Primitive : std::uint8_t { Detect = 0, Shift = 1, Remove = 2, Inject = 3 };

constexpr std::uint8_t mask_of(Primitive p) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p));
}

std::string_view to_string(Primitive p);

/// Per-primitive unit costs. Defaults are the published SK-RM parameters.
struct CostModel {
    double detect_energy_fj = 2.0;
    double shift_energy_fj = 20.0;
    double remove_energy_fj = 20.0;
    double inject_energy_fj = 200.0;
    double detect_latency_ns = 0.1;
    double shift_latency_ns = 0.5;
    double remove_latency_ns = 0.8;
    double inject_latency_ns = 1.0;

    double energy(Primitive p) const;
    double latency(Primitive p) const;
    /// Latency of one parallel step that issued the primitives in `mask`.
    double step_latency(std::uint8_t mask) const;
    void validate() const;
};

/// Exact primitive counts plus the latency step record.
///
/// `latency_steps[m]` is the number of parallel steps whose set of issued
/// primitive kinds equals mask `m`. Parallel width never enters latency, so the
/// histogram is a lossless summary of the (kind, width) step sequence for cost
/// purposes; widths are already folded into the four counts.
struct OpCounters {
    std::uint64_t shift_count = 0;
    std::uint64_t detect_count = 0;
    std::uint64_t remove_count = 0;
    std::uint64_t inject_count = 0;
    std::array<std::uint64_t, 16> latency_steps{};

    std::uint64_t count(Primitive p) const;
    std::uint64_t total_steps() const;
    std::uint64_t steps_with(Primitive p) const;

    OpCounters& operator+=(const OpCounters& o);
    friend OpCounters operator-(const OpCounters& a, const OpCounters& b);
    friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

struct Cost {
    double energy_fj = 0.0;
    double latency_ns = 0.0;
};

/// Energy is linear in the counts; latency sums the unit latency of each step.
Cost accumulate_cost(const OpCounters& counters, const CostModel& model);

/// Flat JSON object: the four counts, energy_fJ and latency_ns.
std::string counters_json(const OpCounters& counters, const CostModel& model);

enum class ShiftPolicy : std::uint8_t { Lazy, Eager };

std::string_view to_string(ShiftPolicy p);
ShiftPolicy parse_shift_policy(std::string_view s);

struct Geometry {
    std::uint32_t word_bits = 64;
    std::uint32_t ports_per_track = 32;
    std::uint32_t interport_bits = 64;

    std::uint32_t length_bits() const { return ports_per_track * interport_bits; }
    std::uint32_t words_per_segment() const { return interport_bits / word_bits; }
    void validate() const;
};

struct DeviceConfig {
    Geometry geometry;
    ShiftPolicy shift_policy = ShiftPolicy::Lazy;
    CostModel cost;

    /// Parses `key = value` lines; `#` starts a comment. Unknown keys are
    /// rejected so typos do not silently fall back to defaults.
    static DeviceConfig parse(std::istream& in);
    static DeviceConfig load(const std::string& path);
    /// Applies one `key = value` setting; returns false if the key is unknown.
    bool apply(std::string_view key, std::string_view value);
    void validate() const;
};

using TrackId = std::uint32_t;

enum class Direction : std::uint8_t {
    Left,   ///< offset decreases
    Right,  ///< offset increases
};

/// One racetrack: data cells in home coordinates plus one overflow region of
/// `interport_bits` at each end. The cell under port k is
/// `port_position(k) + offset()`.
class TrackState {
public:
    TrackState(std::uint32_t ports, std::uint32_t interport_bits);

    std::uint32_t ports() const { return ports_; }
    std::uint32_t interport_bits() const { return interport_; }
    std::uint32_t length_bits() const { return ports_ * interport_; }
    std::int64_t offset() const { return offset_; }
    std::uint32_t port_position(std::uint32_t k) const { return k * interport_; }

    /// Cell in home coordinates, valid for [-interport, length + interport).
    bool cell(std::int64_t data_index) const;
    std::uint64_t population() const;

private:
    friend class Device;

    std::size_t physical(std::int64_t data_index) const;
    void set_cell(std::int64_t data_index, bool on);

    std::uint32_t ports_;
    std::uint32_t interport_;
    std::int64_t offset_ = 0;
    std::vector<std::uint64_t> cells_;
};

/// A simulated SK-RM device: a pool of tracks, the four primitives and exact
/// operation accounting. Not thread-safe; use one instance per thread.
class Device {
public:
    explicit Device(DeviceConfig config = {});

    const DeviceConfig& config() const { return config_; }
    const Geometry& geometry() const { return config_.geometry; }

    TrackId add_track();
    TrackId add_track(std::uint32_t ports);
    /// Allocates `count` consecutive tracks and returns the first id.
    TrackId add_tracks(std::uint32_t count, std::uint32_t ports);
    std::size_t track_count() const { return tracks_.size(); }
    const TrackState& track(TrackId id) const;

    void shift(std::span<const TrackId> tracks, Direction dir, std::uint32_t steps);
    void shift(TrackId id, Direction dir, std::uint32_t steps);
    void shift_range(TrackId first, std::uint32_t count, Direction dir, std::uint32_t steps);

    bool detect(TrackId id, std::uint32_t port);
    void inject(TrackId id, std::uint32_t port);
    /// Returns true if a skyrmion was removed. Squeezing out a 0 is a free
    /// non-event and leaves the counters untouched.
    bool remove(TrackId id, std::uint32_t port);

    /// Minimal shifts so that every track in the set sits at `target` offset.
    /// All tracks must share the same current offset. Returns steps issued.
    std::uint32_t align(std::span<const TrackId> tracks, std::int64_t target);
    std::uint32_t align(TrackId id, std::int64_t target);
    std::uint32_t align_range(TrackId first, std::uint32_t count, std::int64_t target);

    /// Under the eager policy, returns the tracks to offset 0; no-op when lazy.
    void settle(TrackId id);
    void settle_range(TrackId first, std::uint32_t count);

    /// Charges shift steps that leave the track where it is (skyrmion
    /// repositioning inside a permutation buffer).
    void charge_reposition(TrackId id, std::uint32_t steps);
    /// Moves skyrmions from `from[i]` to `to[i]` without touching the counters
    /// (the moves are paid for by charge_reposition). Sources must all hold a
    /// skyrmion and targets must be free once the sources are vacated.
    void permute(TrackId id, std::span<const std::int64_t> from, std::span<const std::int64_t> to);

    bool peek(TrackId id, std::int64_t data_index) const;
    /// Cell currently aligned under `port` (no detect charged).
    bool peek_port(TrackId id, std::uint32_t port) const;

    /// Groups primitives issued while alive into one latency step.
    class ParallelStep {
    public:
        explicit ParallelStep(Device& d) : device_(d) { device_.open_step(); }
        ~ParallelStep() { device_.close_step(); }
        ParallelStep(const ParallelStep&) = delete;
        ParallelStep& operator=(const ParallelStep&) = delete;

    private:
        Device& device_;
    };

    const OpCounters& counters() const { return counters_; }
    Cost cost() const { return accumulate_cost(counters_, config_.cost); }

private:
    TrackState& mutable_track(TrackId id);
    std::int64_t port_cell(const TrackState& t, std::uint32_t port) const;
    void record(Primitive p, std::uint64_t n);
    void open_step();
    void close_step();
    void move(TrackState& t, TrackId id, Direction dir, std::uint32_t steps);

    DeviceConfig config_;
    std::vector<TrackState> tracks_;
    OpCounters counters_;
    int step_depth_ = 0;
    std::uint8_t step_mask_ = 0;
};

} // namespace skrm
