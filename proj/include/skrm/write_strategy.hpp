#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <skrm/device.hpp>
#include <skrm/word.hpp>

namespace skrm {

enum class Strategy : std::uint8_t {
    Naive,  ///< remove every skyrmion, inject every 1; reads nothing
    Dcw,    ///< detect, then flip only differing bits
    Pw,     ///< permutation write: reuse existing skyrmions (single word)
    Bcw,    ///< bit-comparison write across all ports of a batch
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct WriteOptions {
    /// Also charge a detect for the to-be-written bit (it normally comes from
    /// a controller register, so only the stored bit is detected).
    bool count_new_detect = false;
};

/// A word stored contiguously on one track (word-based mapping). Bit b of the
/// word sits at data index `port_position(port) + base + b`, so it is under
/// the port when the track offset equals `base + b`.
struct TrackSlot {
    TrackId track = 0;
    std::uint32_t port = 0;
    std::uint32_t base = 0;
};

/// A word spread across tracks (bit-interleaved mapping): bit b lives on
/// track `group_first + lane + b` at data index `port_position(port) + offset`.
/// The whole group of `group_tracks` tracks moves together.
struct LaneSlot {
    TrackId group_first = 0;
    std::uint32_t group_tracks = 0;
    std::uint32_t lane = 0;
    std::uint32_t port = 0;
    std::uint32_t offset = 0;
};

/// Words written together under one shared set of shifts.
struct BatchUpdate {
    std::vector<TrackSlot> slots;
    std::vector<Word> new_patterns;
    /// Optional expected old contents; checked against the detected bits.
    std::vector<Word> old_patterns;

    std::size_t batch_size() const { return slots.size(); }
};

// --- word-based mapping ----------------------------------------------------

/// Shift-through write of one or more words on one track sharing a single
/// set of shifts: shift out by the widest word, then per bit position shift
/// back one step and operate on every port. Naive issues a remove step and an
/// inject step per position; Dcw/Bcw a detect step then a flip step.
/// Pw is rejected here (see pw_write).
OpCounters write_shared(Device& device, Strategy strategy, std::span<const TrackSlot> slots,
                        std::span<const Word> words, const WriteOptions& opts = {});

OpCounters naive_write(Device& device, const TrackSlot& slot, const Word& word);
OpCounters dcw_write(Device& device, const TrackSlot& slot, const Word& word,
                     const WriteOptions& opts = {});
OpCounters pw_write(Device& device, const TrackSlot& slot, const Word& word);
/// Throws UnsupportedParallelPw for more than one word.
OpCounters pw_write(Device& device, std::span<const TrackSlot> slots, std::span<const Word> words);
OpCounters bcw_parallel_write(Device& device, const BatchUpdate& batch,
                              const WriteOptions& opts = {});

/// Writes each word separately with `strategy`.
OpCounters write_one_by_one(Device& device, Strategy strategy, std::span<const TrackSlot> slots,
                            std::span<const Word> words, const WriteOptions& opts = {});

/// Reads `width` bits starting at the slot, sweeping from whichever end of
/// the word is closer to the current offset.
Word read_word(Device& device, const TrackSlot& slot, std::uint32_t width);

// --- bit-interleaved mapping -----------------------------------------------

/// Aligns the group to the words' offset, then writes every word at once:
/// Naive uses a remove step and an inject step, Dcw/Bcw a detect step and a
/// flip step. All slots must belong to one group at one offset.
OpCounters write_interleaved(Device& device, Strategy strategy, std::span<const LaneSlot> slots,
                             std::span<const Word> words, const WriteOptions& opts = {});

/// Aligns the group and detects every bit of every slot in one step.
std::vector<Word> read_interleaved(Device& device, std::span<const LaneSlot> slots,
                                   std::span<const std::uint32_t> widths);

} // namespace skrm
