#include <skrm/workload.hpp>

#include <algorithm>
#include <cmath>
#include <string>

#include <skrm/error.hpp>

namespace skrm {

std::string_view to_string(OpType t) {
    switch (t) {
        case OpType::Read:   return "read";
        case OpType::Update: return "update";
        case OpType::Insert: return "insert";
    }
    return "unknown";
}

std::string_view to_string(Distribution d) {
    return d == Distribution::Zipfian ? "zipfian" : "latest";
}

WorkloadSpec WorkloadSpec::preset(char id, std::uint64_t load_count, std::uint64_t op_count,
                                  std::uint64_t seed) {
    WorkloadSpec s;
    s.id = id;
    s.load_count = load_count;
    s.op_count = op_count;
    s.seed = seed;
    switch (id) {
        case 'a':
        case 'f':
            s.read_pct = 50, s.update_pct = 50, s.insert_pct = 0;
            break;
        case 'b':
        case 'e':
            s.read_pct = 95, s.update_pct = 0, s.insert_pct = 5;
            break;
        case 'c':
            s.read_pct = 100, s.update_pct = 0, s.insert_pct = 0;
            break;
        case 'd':
            s.read_pct = 5, s.update_pct = 95, s.insert_pct = 0;
            s.distribution = Distribution::Latest;
            break;
        default:
            throw ConfigError(std::string("unknown workload '") + id + "'");
    }
    return s;
}

void WorkloadSpec::validate() const {
    if (read_pct + update_pct + insert_pct != 100) {
        throw ConfigError("workload mix must sum to 100%");
    }
    if (load_count == 0 && (read_pct > 0 || update_pct > 0) && op_count > 0) {
        throw ConfigError("reads and updates need a non-empty load phase");
    }
    if (!(zipf_theta > 0.0) || zipf_theta == 1.0) {
        throw ConfigError("zipfian theta must be positive and not 1");
    }
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::uint64_t v) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ull;
    }
    return h;
}

namespace {

// Bijection on the low `bits` bits: xorshifts and odd multipliers are both
// invertible modulo 2^bits.
std::uint64_t scramble(std::uint64_t x, std::uint32_t bits) {
    const std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
    const std::uint32_t h = std::max(1u, (std::min(bits, 64u) + 1) / 2);
    x &= mask;
    x ^= x >> h;
    x = (x * 0x9E3779B97F4A7C15ull) & mask;
    x ^= x >> h;
    x = (x * 0xBF58476D1CE4E5B9ull) & mask;
    x ^= x >> h;
    return x;
}

} // namespace

Word key_for(std::uint64_t seq, std::uint32_t bits) {
    Word w(bits);
    w.set_limb(0, scramble(seq + 1, bits));
    std::uint64_t state = seq ^ 0xA0761D6478BD642Full;
    for (std::uint32_t l = 1; l * 64 < bits; ++l) {
        w.set_limb(l, splitmix64(state));
    }
    return w;
}

Word value_for(std::uint64_t seed, std::uint32_t bits) {
    Word w(bits);
    std::uint64_t state = seed;
    for (std::uint32_t l = 0; l * 64 < bits; ++l) {
        w.set_limb(l, splitmix64(state));
    }
    return w;
}

OpStream generate(const WorkloadSpec& spec) {
    spec.validate();
    OpStream out;
    std::mt19937_64 rng(spec.seed);
    out.load.reserve(spec.load_count);
    for (std::uint64_t i = 0; i < spec.load_count; ++i) {
        out.load.push_back(Op{OpType::Insert, i, rng()});
    }

    std::uint64_t inserted = spec.load_count;
    ZipfianGenerator zipf(std::max<std::uint64_t>(inserted, 1), spec.zipf_theta);
    out.run.reserve(spec.op_count);
    for (std::uint64_t i = 0; i < spec.op_count; ++i) {
        const auto roll = rng() % 100;
        Op op;
        if (roll < spec.read_pct) {
            op.type = OpType::Read;
        } else if (roll < spec.read_pct + spec.update_pct) {
            op.type = OpType::Update;
        } else {
            op.type = OpType::Insert;
        }
        if (op.type == OpType::Insert) {
            op.key_seq = inserted++;
            zipf.grow(inserted);
        } else {
            const auto rank = zipf.next(rng);
            op.key_seq = spec.distribution == Distribution::Latest
                             ? inserted - 1 - rank
                             : fnv1a64(rank) % inserted;
        }
        op.value_seed = rng();
        out.run.push_back(op);
    }
    return out;
}

// ---------------------------------------------------------------------------

double ZipfianGenerator::zeta(std::uint64_t n, double theta) {
    double sum = 0.0;
    for (std::uint64_t i = 1; i <= n; ++i) {
        sum += 1.0 / std::pow(static_cast<double>(i), theta);
    }
    return sum;
}

ZipfianGenerator::ZipfianGenerator(std::uint64_t items, double theta)
    : items_(items), theta_(theta), alpha_(1.0 / (1.0 - theta)), zeta2_(zeta(2, theta)),
      zetan_(zeta(items, theta)) {
    if (items == 0) {
        throw ConfigError("zipfian generator needs at least one item");
    }
    refresh();
}

void ZipfianGenerator::refresh() {
    const double n = static_cast<double>(items_);
    const double denom = 1.0 - zeta2_ / zetan_;
    eta_ = denom != 0.0 ? (1.0 - std::pow(2.0 / n, 1.0 - theta_)) / denom : 0.0;
}

void ZipfianGenerator::grow(std::uint64_t items) {
    for (std::uint64_t i = items_ + 1; i <= items; ++i) {
        zetan_ += 1.0 / std::pow(static_cast<double>(i), theta_);
    }
    items_ = std::max(items_, items);
    refresh();
}

double ZipfianGenerator::probability(std::uint64_t rank) const {
    if (rank >= items_) {
        return 0.0;
    }
    return 1.0 / std::pow(static_cast<double>(rank + 1), theta_) / zetan_;
}

std::uint64_t ZipfianGenerator::rank_for(double u) const {
    const double uz = u * zetan_;
    if (uz < 1.0) {
        return 0;
    }
    if (uz < 1.0 + std::pow(0.5, theta_)) {
        return std::min<std::uint64_t>(1, items_ - 1);
    }
    const double r = static_cast<double>(items_) * std::pow(eta_ * u - eta_ + 1.0, alpha_);
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(r), items_ - 1);
}

} // namespace skrm
