#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace skrm {

/// Fixed-width bit pattern stored in one key, value or index slot.
///
/// Bit `i` has numeric weight 2^i. The textual form lists bit 0 first, so
/// "1100" has bits 0 and 1 set.
class Word {
public:
    static constexpr std::uint32_t kMaxBits = 256;
    static constexpr std::uint32_t kLimbs = kMaxBits / 64;

    Word() = default;
    explicit Word(std::uint32_t width);

    static Word from_u64(std::uint64_t value, std::uint32_t width);
    static Word from_string(std::string_view bits);

    std::uint32_t width() const { return width_; }
    bool bit(std::uint32_t i) const { return (limbs_[i / 64] >> (i % 64)) & 1u; }
    void set_bit(std::uint32_t i, bool on);
    std::uint32_t popcount() const;
    std::uint64_t limb(std::uint32_t i) const { return limbs_[i]; }
    void set_limb(std::uint32_t i, std::uint64_t v);

    /// Low 64 bits; exact when width() <= 64.
    std::uint64_t to_u64() const { return limbs_[0]; }
    bool is_zero() const;
    std::string to_string() const;

    /// Number of positions where the two patterns differ (widths must match).
    friend std::uint32_t hamming(const Word& a, const Word& b);

    friend bool operator==(const Word& a, const Word& b) = default;
    /// Numeric order; width only breaks ties.
    friend std::strong_ordering operator<=>(const Word& a, const Word& b);

private:
    void mask_tail();

    std::array<std::uint64_t, kLimbs> limbs_{};
    std::uint32_t width_ = 0;
};

using WordPattern = Word;

} // namespace skrm
