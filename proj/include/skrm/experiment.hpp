#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <skrm/device.hpp>
#include <skrm/layout.hpp>
#include <skrm/write_strategy.hpp>

namespace skrm {

struct ExperimentConfig {
    char workload = 'a';
    Mapping mapping = Mapping::WordBased;
    Strategy strategy = Strategy::Bcw;
    bool encoding = true;
    bool parallel_ports = true;
    std::uint32_t word_bytes = 8;
    /// Load-phase inserts.
    std::uint64_t entries = 10000;
    /// Run-phase operations; defaults to `entries`.
    std::optional<std::uint64_t> ops;
    std::uint64_t seed = 1;
    std::uint32_t node_slots = 16;
    std::uint32_t pivot_slots = 4;
    /// 0 picks the next power of two >= entries.
    std::uint32_t arena_capacity = 0;
    /// Bit-interleaved nodes per group; 0 means interport_bits.
    std::uint32_t group_capacity = 0;
    bool count_new_detect = false;
    /// Overrides of the derived geometry (ports = 2 x node_slots, interport =
    /// word size).
    std::optional<std::uint32_t> ports_per_track;
    std::optional<std::uint32_t> interport_bits;
    ShiftPolicy shift_policy = ShiftPolicy::Lazy;
    CostModel cost;

    std::uint32_t word_bits() const { return 8 * word_bytes; }
    std::uint64_t op_count() const { return ops.value_or(entries); }
    std::uint32_t effective_arena_capacity() const;
    DeviceConfig device_config() const;
    void validate() const;

    /// Naive writes, no encoding, no parallel ports, same mapping and sizes.
    ExperimentConfig baseline() const;
    ExperimentConfig with_toggles(Strategy s, bool encoding, bool parallel) const;
    bool is_baseline() const;

    /// Applies one `key = value` setting; returns false for unknown keys.
    bool apply(std::string_view key, std::string_view value);
    /// Reads `key = value` lines (device keys included); `#` starts a comment.
    static ExperimentConfig parse(std::istream& in, ExperimentConfig base);
    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig load(const std::string& path, ExperimentConfig base);
    static ExperimentConfig load(const std::string& path);
};

struct MetricsReport {
    std::string workload;
    Mapping mapping = Mapping::WordBased;
    Strategy strategy = Strategy::Naive;
    bool encoding = false;
    bool parallel_updates = false;
    std::uint32_t word_bytes = 8;
    std::uint64_t entries = 0;
    OpCounters counters;
    double energy_fj = 0.0;
    double latency_ns = 0.0;
    double latency_reduction_pct = 0.0;
    double energy_reduction_pct = 0.0;

    // Run details, carried in JSON only.
    std::uint64_t ops = 0;
    std::uint64_t reads = 0;
    std::uint64_t read_mismatches = 0;
    std::uint64_t probe_mismatches = 0;
    std::uint64_t kv_writes = 0;
    std::uint32_t tree_height = 0;
    std::uint32_t index_bits = 0;
    std::uint32_t arena_high_water = 0;
    std::size_t tracks = 0;
};

/// One configuration, load plus run phase, every read checked against a map.
MetricsReport run_single(const ExperimentConfig& config);

/// The naive baseline of the same mapping first, then `config` (unless it is
/// the baseline itself), with reductions filled in.
std::vector<MetricsReport> run_experiment(const ExperimentConfig& config);

/// Baseline, parallel-ports only, encoding only and both, for one mapping.
std::vector<MetricsReport> run_ablation(const ExperimentConfig& config);

/// Fills the reduction columns relative to reports[0].
void normalize(std::vector<MetricsReport>& reports);
double reduction_pct(double baseline, double value);

struct SweepOptions {
    std::vector<std::uint64_t> entries{1000, 10000, 100000, 1000000};
    std::vector<std::uint32_t> word_bytes{4, 8, 16, 32};
    std::vector<char> workloads{'a'};
    unsigned threads = 0;  // 0 = hardware concurrency
};

/// run_experiment at every grid point, on worker threads; output order is
/// deterministic (workload, entries, word bytes).
std::vector<MetricsReport> run_sweep(const ExperimentConfig& config, const SweepOptions& opts);

const std::vector<std::string>& csv_columns();
std::string to_csv(const std::vector<MetricsReport>& reports);
std::string to_json(const std::vector<MetricsReport>& reports, int indent = 2);
std::vector<MetricsReport> parse_csv(const std::string& text);
std::vector<MetricsReport> parse_json(const std::string& text);
/// Writes CSV or JSON ("csv" | "json"); throws IoError.
void emit(const std::vector<MetricsReport>& reports, std::string_view format, const std::string& path);

} // namespace skrm
