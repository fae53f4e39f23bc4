#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <skrm/device.hpp>
#include <skrm/word.hpp>
#include <skrm/write_strategy.hpp>

namespace skrm {

enum class Mapping : std::uint8_t { WordBased, BitInterleaved };

std::string_view to_string(Mapping m);
/// Accepts "word", "word_based", "bit" and "bit_interleaved".
Mapping parse_mapping(std::string_view s);

enum class RegionKind : std::uint8_t { Internal, Leaf, ArenaPage };

std::string_view to_string(RegionKind k);

/// A tree node or a page of the value arena.
struct RegionId {
    RegionKind kind = RegionKind::Leaf;
    std::uint32_t id = 0;

    friend auto operator<=>(const RegionId&, const RegionId&) = default;
};

struct LayoutOptions {
    /// Key/value pair slots per tree node.
    std::uint32_t pair_slots = 16;
    /// Nodes sharing one bit-interleaved track group; 0 means interport_bits.
    std::uint32_t group_capacity = 0;
};

/// Word-based placement of one region: a dedicated track, word w at port w.
struct WordBasedAssignment {
    RegionId region;
    TrackId track = 0;
    std::uint32_t words = 0;
};

/// A bit-interleaved group of homogeneous regions. Node i of the group sits at
/// offset i of every track; pair slot j uses port j. Node groups have one lane
/// per key bit followed by one lane per value bit; arena groups only carry
/// value lanes.
struct BitInterleavedAssignment {
    std::uint32_t group_id = 0;
    RegionKind kind = RegionKind::Leaf;
    TrackId first_track = 0;
    std::uint32_t tracks = 0;
    std::uint32_t capacity = 0;
    std::vector<std::uint32_t> members;
};

/// Physical home of one word.
struct WordLocation {
    TrackSlot track;  // word-based mapping
    LaneSlot lane;    // bit-interleaved mapping
};

enum class AccessKind : std::uint8_t { Read, BatchedWrite };

/// Word indices grouped into device batches. A write batch shares one set of
/// shifts; a bit-interleaved read batch is one alignment plus one detect step;
/// word-based reads are one batch per word.
struct AccessSchedule {
    RegionId region;
    AccessKind kind = AccessKind::Read;
    Mapping mapping = Mapping::WordBased;
    std::vector<std::vector<std::uint32_t>> batches;
    std::vector<WordLocation> locations;  // parallel to the flattened batches

    bool empty() const { return batches.empty(); }
};

/// Maps nodes and arena pages onto the tracks of one device.
class Layout {
public:
    Layout(Device& device, Mapping mapping, LayoutOptions options = {});

    Mapping mapping() const { return mapping_; }
    const LayoutOptions& options() const { return options_; }
    std::uint32_t group_capacity() const { return group_capacity_; }

    /// Words addressable in a region of this kind.
    std::uint32_t words_per_region(RegionKind kind) const;

    const WordBasedAssignment& place_node_word_based(std::uint32_t node_id, RegionKind kind,
                                                     std::uint32_t capacity_words);
    const BitInterleavedAssignment& place_group_bit_interleaved(
        RegionKind kind, std::span<const std::uint32_t> node_ids, std::uint32_t word_bits);

    /// Places a region using the active mapping. Bit-interleaved regions join
    /// the newest group of their kind until it is full.
    void place(RegionId region);
    bool placed(RegionId region) const;

    WordLocation locate(RegionId region, std::uint32_t word_index) const;

    AccessSchedule plan_node_access(RegionId region, AccessKind kind,
                                    std::span<const std::uint32_t> word_indices) const;

    /// Runs a write schedule; `words` is parallel to the flattened batches.
    OpCounters execute_write(const AccessSchedule& schedule, Strategy strategy,
                             std::span<const Word> words, const WriteOptions& opts = {});
    /// Runs a read schedule; `widths` is parallel to the flattened batches.
    std::vector<Word> execute_read(const AccessSchedule& schedule,
                                   std::span<const std::uint32_t> widths);

    std::size_t region_count() const;
    /// Allocation table as JSON text.
    std::string allocation_table_json(int indent = 2) const;

private:
    struct GroupRef {
        std::uint32_t group = 0;
        std::uint32_t member = 0;
    };

    std::uint32_t lanes_for(RegionKind kind) const;
    std::uint32_t words_per_pair_slot(RegionKind kind) const;

    Device& device_;
    Mapping mapping_;
    LayoutOptions options_;
    std::uint32_t group_capacity_;

    std::map<RegionId, WordBasedAssignment> word_based_;
    std::vector<BitInterleavedAssignment> groups_;
    std::map<RegionId, GroupRef> group_of_;
    std::map<RegionKind, std::uint32_t> open_group_;
};

} // namespace skrm
