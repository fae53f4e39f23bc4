#include <skrm/word.hpp>

#include <bit>

#include <skrm/error.hpp>

namespace skrm {

Word::Word(std::uint32_t width) : width_(width) {
    if (width > kMaxBits) {
        throw ConfigError("word width " + std::to_string(width) + " exceeds " +
                          std::to_string(kMaxBits) + " bits");
    }
}

Word Word::from_u64(std::uint64_t value, std::uint32_t width) {
    Word w(width);
    w.limbs_[0] = value;
    w.mask_tail();
    return w;
}

Word Word::from_string(std::string_view bits) {
    Word w(static_cast<std::uint32_t>(bits.size()));
    for (std::uint32_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1') {
            throw ConfigError("bit string may only contain 0 and 1");
        }
        w.set_bit(i, bits[i] == '1');
    }
    return w;
}

void Word::set_bit(std::uint32_t i, bool on) {
    const std::uint64_t m = std::uint64_t{1} << (i % 64);
    if (on) {
        limbs_[i / 64] |= m;
    } else {
        limbs_[i / 64] &= ~m;
    }
}

void Word::set_limb(std::uint32_t i, std::uint64_t v) {
    limbs_[i] = v;
    mask_tail();
}

std::uint32_t Word::popcount() const {
    std::uint32_t n = 0;
    for (auto l : limbs_) {
        n += static_cast<std::uint32_t>(std::popcount(l));
    }
    return n;
}

bool Word::is_zero() const {
    for (auto l : limbs_) {
        if (l != 0) {
            return false;
        }
    }
    return true;
}

std::string Word::to_string() const {
    std::string s(width_, '0');
    for (std::uint32_t i = 0; i < width_; ++i) {
        if (bit(i)) {
            s[i] = '1';
        }
    }
    return s;
}

void Word::mask_tail() {
    for (std::uint32_t l = 0; l < kLimbs; ++l) {
        const std::uint32_t lo = l * 64;
        if (width_ <= lo) {
            limbs_[l] = 0;
        } else if (width_ < lo + 64) {
            limbs_[l] &= (std::uint64_t{1} << (width_ - lo)) - 1;
        }
    }
}

std::uint32_t hamming(const Word& a, const Word& b) {
    std::uint32_t n = 0;
    for (std::uint32_t l = 0; l < Word::kLimbs; ++l) {
        n += static_cast<std::uint32_t>(std::popcount(a.limbs_[l] ^ b.limbs_[l]));
    }
    return n;
}

std::strong_ordering operator<=>(const Word& a, const Word& b) {
    for (std::uint32_t l = Word::kLimbs; l-- > 0;) {
        if (a.limbs_[l] != b.limbs_[l]) {
            return a.limbs_[l] <=> b.limbs_[l];
        }
    }
    return a.width_ <=> b.width_;
}

} // namespace skrm
