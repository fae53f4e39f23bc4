#include <skrm/write_strategy.hpp>

#include <algorithm>
#include <cstdlib>
#include <string>

#include <skrm/error.hpp>

namespace skrm {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Naive: return "naive";
        case Strategy::Dcw:   return "dcw";
        case Strategy::Pw:    return "pw";
        case Strategy::Bcw:   return "bcw";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view s) {
    if (s == "naive") return Strategy::Naive;
    if (s == "dcw") return Strategy::Dcw;
    if (s == "pw") return Strategy::Pw;
    if (s == "bcw") return Strategy::Bcw;
    throw ConfigError("unknown write strategy '" + std::string(s) + "'");
}

namespace {

void check_sizes(std::size_t slots, std::size_t words) {
    if (slots != words) {
        throw std::invalid_argument("every slot needs exactly one word");
    }
}

void check_fits(const Device& device, const TrackSlot& slot, const Word& word) {
    const auto& t = device.track(slot.track);
    if (slot.base + word.width() > t.interport_bits()) {
        throw BoundaryViolation("word of " + std::to_string(word.width()) + " bits at base " +
                                std::to_string(slot.base) + " does not fit one interport segment");
    }
    if (slot.port >= t.ports()) {
        throw PortOutOfRange("port " + std::to_string(slot.port) + " out of range");
    }
}

void check_same_alignment(std::span<const TrackSlot> slots) {
    const auto& first = slots.front();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].track != first.track || slots[i].base != first.base) {
            throw AlignmentError("batch words must share one track and one port alignment");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (slots[j].port == slots[i].port) {
                throw AlignmentError("two batch words share port " +
                                     std::to_string(slots[i].port));
            }
        }
    }
}

OpCounters write_shared_impl(Device& device, Strategy strategy, std::span<const TrackSlot> slots,
                             std::span<const Word> words, const WriteOptions& opts,
                             std::vector<Word>* detected) {
    check_sizes(slots.size(), words.size());
    if (slots.empty()) {
        return {};
    }
    if (strategy == Strategy::Pw) {
        return pw_write(device, slots, words);
    }
    check_same_alignment(slots);
    std::uint32_t widest = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        check_fits(device, slots[i], words[i]);
        widest = std::max(widest, words[i].width());
    }
    if (detected != nullptr) {
        detected->clear();
        for (const auto& w : words) {
            detected->emplace_back(w.width());
        }
    }

    const auto before = device.counters();
    const TrackId track = slots.front().track;
    device.align(track, slots.front().base);
    device.shift(track, Direction::Right, widest);

    const std::size_t n = slots.size();
    std::vector<char> old_bits(n, 0);
    for (std::uint32_t col = widest; col-- > 0;) {
        device.shift(track, Direction::Left, 1);
        if (strategy == Strategy::Naive) {
            {
                Device::ParallelStep step(device);
                for (std::size_t i = 0; i < n; ++i) {
                    if (col < words[i].width()) {
                        device.remove(track, slots[i].port);
                    }
                }
            }
            Device::ParallelStep step(device);
            for (std::size_t i = 0; i < n; ++i) {
                if (col < words[i].width() && words[i].bit(col)) {
                    device.inject(track, slots[i].port);
                }
            }
            continue;
        }
        {
            Device::ParallelStep step(device);
            for (std::size_t i = 0; i < n; ++i) {
                if (col < words[i].width()) {
                    old_bits[i] = device.detect(track, slots[i].port);
                    if (opts.count_new_detect) {
                        device.detect(track, slots[i].port);
                    }
                    if (detected != nullptr) {
                        (*detected)[i].set_bit(col, old_bits[i] != 0);
                    }
                }
            }
        }
        Device::ParallelStep step(device);
        for (std::size_t i = 0; i < n; ++i) {
            if (col >= words[i].width()) {
                continue;
            }
            const bool want = words[i].bit(col);
            if (!old_bits[i] && want) {
                device.inject(track, slots[i].port);
            } else if (old_bits[i] && !want) {
                device.remove(track, slots[i].port);
            }
        }
    }
    device.settle(track);
    return device.counters() - before;
}

} // namespace

OpCounters write_shared(Device& device, Strategy strategy, std::span<const TrackSlot> slots,
                        std::span<const Word> words, const WriteOptions& opts) {
    return write_shared_impl(device, strategy, slots, words, opts, nullptr);
}

OpCounters naive_write(Device& device, const TrackSlot& slot, const Word& word) {
    return write_shared(device, Strategy::Naive, std::span(&slot, 1), std::span(&word, 1));
}

OpCounters dcw_write(Device& device, const TrackSlot& slot, const Word& word,
                     const WriteOptions& opts) {
    return write_shared(device, Strategy::Dcw, std::span(&slot, 1), std::span(&word, 1), opts);
}

OpCounters pw_write(Device& device, std::span<const TrackSlot> slots, std::span<const Word> words) {
    check_sizes(slots.size(), words.size());
    if (slots.size() > 1) {
        throw UnsupportedParallelPw(
            "permutation write cannot update several words under one shift set");
    }
    if (slots.empty()) {
        return {};
    }
    return pw_write(device, slots.front(), words.front());
}

OpCounters pw_write(Device& device, const TrackSlot& slot, const Word& word) {
    check_fits(device, slot, word);
    const std::uint32_t w = word.width();
    if (w == 0) {
        return {};
    }
    const auto before = device.counters();
    const TrackId track = slot.track;
    const std::int64_t origin =
        static_cast<std::int64_t>(device.track(track).port_position(slot.port)) + slot.base;

    // Pass the old word through the port, reading where its skyrmions are.
    device.align(track, slot.base);
    std::vector<std::int64_t> old_ones;
    for (std::uint32_t b = 0; b < w; ++b) {
        if (device.detect(track, slot.port)) {
            old_ones.push_back(origin + b);
        }
        device.shift(track, Direction::Right, 1);
    }

    // Reuse skyrmions in order; repositioning costs one shift per cell moved.
    std::vector<std::int64_t> new_ones;
    for (std::uint32_t b = 0; b < w; ++b) {
        if (word.bit(b)) {
            new_ones.push_back(origin + b);
        }
    }
    // Surplus skyrmions stay put and are removed on the way back; drop ones
    // that do not sit on a target cell first so the reused set never collides.
    if (old_ones.size() > new_ones.size()) {
        auto surplus = old_ones.size() - new_ones.size();
        std::vector<std::int64_t> kept;
        for (auto pos : old_ones) {
            if (surplus > 0 && !word.bit(static_cast<std::uint32_t>(pos - origin))) {
                --surplus;
                continue;
            }
            kept.push_back(pos);
        }
        old_ones = std::move(kept);
    }
    const std::size_t reused = std::min(old_ones.size(), new_ones.size());
    std::vector<std::int64_t> from(old_ones.begin(), old_ones.begin() + reused);
    std::vector<std::int64_t> to(new_ones.begin(), new_ones.begin() + reused);
    std::uint32_t displacement = 0;
    for (std::size_t i = 0; i < reused; ++i) {
        displacement += static_cast<std::uint32_t>(std::llabs(from[i] - to[i]));
    }
    device.charge_reposition(track, displacement);
    device.permute(track, from, to);

    // Shift back, removing leftovers and injecting what reuse could not cover.
    for (std::uint32_t b = w; b-- > 0;) {
        device.shift(track, Direction::Left, 1);
        const bool have = device.peek_port(track, slot.port);
        const bool want = word.bit(b);
        if (have && !want) {
            device.remove(track, slot.port);
        } else if (!have && want) {
            device.inject(track, slot.port);
        }
    }
    device.settle(track);
    return device.counters() - before;
}

OpCounters bcw_parallel_write(Device& device, const BatchUpdate& batch, const WriteOptions& opts) {
    check_sizes(batch.slots.size(), batch.new_patterns.size());
    if (batch.old_patterns.empty()) {
        return write_shared_impl(device, Strategy::Bcw, batch.slots, batch.new_patterns, opts,
                                 nullptr);
    }
    check_sizes(batch.slots.size(), batch.old_patterns.size());
    std::vector<Word> seen;
    auto delta = write_shared_impl(device, Strategy::Bcw, batch.slots, batch.new_patterns, opts,
                                   &seen);
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] != batch.old_patterns[i]) {
            throw StructuralCorruption("word " + std::to_string(i) +
                                       " did not hold the expected previous pattern");
        }
    }
    return delta;
}

OpCounters write_one_by_one(Device& device, Strategy strategy, std::span<const TrackSlot> slots,
                            std::span<const Word> words, const WriteOptions& opts) {
    check_sizes(slots.size(), words.size());
    OpCounters total;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (strategy == Strategy::Pw) {
            total += pw_write(device, slots[i], words[i]);
        } else {
            total += write_shared(device, strategy, slots.subspan(i, 1), words.subspan(i, 1), opts);
        }
    }
    return total;
}

Word read_word(Device& device, const TrackSlot& slot, std::uint32_t width) {
    Word out(width);
    if (width == 0) {
        return out;
    }
    const auto& t = device.track(slot.track);
    if (slot.base + width > t.interport_bits()) {
        throw BoundaryViolation("read past the end of an interport segment");
    }
    const std::int64_t lo = slot.base;
    const std::int64_t hi = slot.base + width - 1;
    const std::int64_t at = t.offset();
    if (std::llabs(at - lo) <= std::llabs(at - hi)) {
        device.align(slot.track, lo);
        for (std::uint32_t b = 0; b < width; ++b) {
            out.set_bit(b, device.detect(slot.track, slot.port));
            if (b + 1 < width) {
                device.shift(slot.track, Direction::Right, 1);
            }
        }
    } else {
        device.align(slot.track, hi);
        for (std::uint32_t b = width; b-- > 0;) {
            out.set_bit(b, device.detect(slot.track, slot.port));
            if (b > 0) {
                device.shift(slot.track, Direction::Left, 1);
            }
        }
    }
    device.settle(slot.track);
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_group(const Device& device, std::span<const LaneSlot> slots,
                 std::span<const std::uint32_t> widths) {
    const auto& first = slots.front();
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& s = slots[i];
        if (s.group_first != first.group_first || s.group_tracks != first.group_tracks ||
            s.offset != first.offset) {
            throw AlignmentError("interleaved batch words must share one group and one offset");
        }
        if (s.lane + widths[i] > s.group_tracks) {
            throw BoundaryViolation("word lanes exceed the track group");
        }
        if (s.port >= device.track(s.group_first).ports()) {
            throw PortOutOfRange("port " + std::to_string(s.port) + " out of range");
        }
    }
}

} // namespace

OpCounters write_interleaved(Device& device, Strategy strategy, std::span<const LaneSlot> slots,
                             std::span<const Word> words, const WriteOptions& opts) {
    check_sizes(slots.size(), words.size());
    if (slots.empty()) {
        return {};
    }
    if (strategy == Strategy::Pw) {
        throw ConfigError("permutation write needs the word-based mapping");
    }
    std::vector<std::uint32_t> widths;
    for (const auto& w : words) {
        widths.push_back(w.width());
    }
    check_group(device, slots, widths);

    const auto before = device.counters();
    const auto& g = slots.front();
    device.align_range(g.group_first, g.group_tracks, g.offset);

    if (strategy == Strategy::Naive) {
        {
            Device::ParallelStep step(device);
            for (std::size_t i = 0; i < slots.size(); ++i) {
                for (std::uint32_t b = 0; b < widths[i]; ++b) {
                    device.remove(g.group_first + slots[i].lane + b, slots[i].port);
                }
            }
        }
        Device::ParallelStep step(device);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            for (std::uint32_t b = 0; b < widths[i]; ++b) {
                if (words[i].bit(b)) {
                    device.inject(g.group_first + slots[i].lane + b, slots[i].port);
                }
            }
        }
    } else {
        std::vector<Word> old;
        {
            Device::ParallelStep step(device);
            for (std::size_t i = 0; i < slots.size(); ++i) {
                Word w(widths[i]);
                for (std::uint32_t b = 0; b < widths[i]; ++b) {
                    const TrackId t = g.group_first + slots[i].lane + b;
                    w.set_bit(b, device.detect(t, slots[i].port));
                    if (opts.count_new_detect) {
                        device.detect(t, slots[i].port);
                    }
                }
                old.push_back(w);
            }
        }
        Device::ParallelStep step(device);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            for (std::uint32_t b = 0; b < widths[i]; ++b) {
                const TrackId t = g.group_first + slots[i].lane + b;
                const bool want = words[i].bit(b);
                if (!old[i].bit(b) && want) {
                    device.inject(t, slots[i].port);
                } else if (old[i].bit(b) && !want) {
                    device.remove(t, slots[i].port);
                }
            }
        }
    }
    device.settle_range(g.group_first, g.group_tracks);
    return device.counters() - before;
}

std::vector<Word> read_interleaved(Device& device, std::span<const LaneSlot> slots,
                                   std::span<const std::uint32_t> widths) {
    check_sizes(slots.size(), widths.size());
    std::vector<Word> out;
    if (slots.empty()) {
        return out;
    }
    check_group(device, slots, widths);
    const auto& g = slots.front();
    device.align_range(g.group_first, g.group_tracks, g.offset);
    {
        Device::ParallelStep step(device);
        for (std::size_t i = 0; i < slots.size(); ++i) {
            Word w(widths[i]);
            for (std::uint32_t b = 0; b < widths[i]; ++b) {
                w.set_bit(b, device.detect(g.group_first + slots[i].lane + b, slots[i].port));
            }
            out.push_back(w);
        }
    }
    device.settle_range(g.group_first, g.group_tracks);
    return out;
}

} // namespace skrm
