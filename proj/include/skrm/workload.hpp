#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <skrm/word.hpp>

namespace skrm {

enum class OpType : std::uint8_t { Read, Update, Insert };
enum class Distribution : std::uint8_t { Zipfian, Latest };

std::string_view to_string(OpType t);
std::string_view to_string(Distribution d);

struct Op {
    OpType type = OpType::Read;
    /// Sequence number of the key; see key_for().
    std::uint64_t key_seq = 0;
    /// Seed of the written value; see value_for().
    std::uint64_t value_seed = 0;
};

struct WorkloadSpec {
    char id = 'a';
    std::uint32_t read_pct = 50;
    std::uint32_t update_pct = 50;
    std::uint32_t insert_pct = 0;
    Distribution distribution = Distribution::Zipfian;
    std::uint64_t op_count = 10000;
    std::uint64_t load_count = 10000;
    std::uint64_t seed = 1;
    double zipf_theta = 0.99;

    /// The standard mix for workload `id` (a..f).
    static WorkloadSpec preset(char id, std::uint64_t load_count, std::uint64_t op_count,
                               std::uint64_t seed);
    void validate() const;
};

struct OpStream {
    std::vector<Op> load;
    std::vector<Op> run;
};

/// Deterministic under spec.seed: the load phase inserts key sequence numbers
/// 0..load_count-1, then the run phase draws op_count operations.
OpStream generate(const WorkloadSpec& spec);

/// Key of sequence number `seq`: a bijective scramble of seq+1 modulo 2^bits,
/// so distinct sequence numbers always give distinct, well-populated keys.
Word key_for(std::uint64_t seq, std::uint32_t bits);
/// Pseudo-random value of `bits` bits derived from `seed`.
Word value_for(std::uint64_t seed, std::uint32_t bits);

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a64(std::uint64_t v);

/// Zipfian ranks over [0, items) with P(rank r) proportional to 1/(r+1)^theta.
/// The item count can grow without recomputing the normalisation from scratch.
class ZipfianGenerator {
public:
    explicit ZipfianGenerator(std::uint64_t items, double theta = 0.99);

    std::uint64_t items() const { return items_; }
    double theta() const { return theta_; }
    double zeta() const { return zetan_; }
    /// Probability of rank r under the exact distribution.
    double probability(std::uint64_t rank) const;

    void grow(std::uint64_t items);
    /// Rank for a uniform variate u in [0, 1).
    std::uint64_t rank_for(double u) const;
    template <class Rng>
    std::uint64_t next(Rng& rng) {
        return rank_for(static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }

    static double zeta(std::uint64_t n, double theta);

private:
    void refresh();

    std::uint64_t items_;
    double theta_;
    double alpha_;
    double zeta2_;
    double zetan_;
    double eta_ = 0.0;
};

} // namespace skrm
