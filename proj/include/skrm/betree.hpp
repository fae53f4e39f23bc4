#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <skrm/layout.hpp>
#include <skrm/word.hpp>

namespace skrm {

/// On-device image of a node: key of pair slot j at word 2j, its value (or
/// child id, or arena index) at word 2j+1. Unused slots hold zero words.
struct NodeImage {
    RegionKind kind = RegionKind::Leaf;
    /// Leading pair slots that hold pivots (internal nodes only).
    std::uint32_t pivot_slots = 0;
    std::vector<Word> words;
    /// Per pair slot: does it hold a live pivot, message or element.
    std::vector<std::uint8_t> occupied;

    std::uint32_t pair_count() const { return static_cast<std::uint32_t>(occupied.size()); }
    const Word& key(std::uint32_t j) const { return words[2 * j]; }
    const Word& value(std::uint32_t j) const { return words[2 * j + 1]; }
    /// Buffer and element slots count as key-value pairs; pivots do not.
    bool holds_pair(std::uint32_t j) const { return occupied[j] != 0 && j >= pivot_slots; }

    friend bool operator==(const NodeImage&, const NodeImage&) = default;
};

/// Pair slots whose key or value differ between two images of one node.
std::vector<std::uint32_t> changed_pairs(const NodeImage& before, const NodeImage& after);

struct Message {
    Word key;
    Word payload;  // value, or arena index when encoding is on
    std::uint64_t seq = 0;
};

/// ceil(log2(capacity)); 0 for capacity 1.
std::uint32_t index_bits_for(std::uint64_t capacity);
/// Bytes needed to hold one index per arena entry.
std::uint64_t encoding_overhead_bytes(std::uint64_t capacity);
/// Smallest power of two >= n (1 for n = 0).
std::uint64_t next_pow2(std::uint64_t n);

/// Separated values of buffered messages. Allocation always hands out the
/// lowest free index.
class ValueArena {
public:
    ValueArena(std::uint32_t capacity, std::uint32_t word_bits);

    std::uint32_t capacity() const { return static_cast<std::uint32_t>(slots_.size()); }
    std::uint32_t index_bits() const { return index_bits_; }
    std::uint32_t occupancy() const { return occupancy_; }
    std::uint32_t high_water() const { return high_water_; }

    /// Index the next allocate() will return; throws ArenaFull.
    std::uint32_t next_free() const;
    /// Returns the slot index; throws ArenaFull.
    std::uint32_t allocate(const Word& value);
    void release(std::uint32_t index);
    bool live(std::uint32_t index) const { return live_.at(index) != 0; }
    /// Last value written to the slot (kept after release).
    const Word& value(std::uint32_t index) const { return slots_.at(index); }

private:
    std::vector<Word> slots_;
    std::vector<std::uint8_t> live_;
    std::set<std::uint32_t> free_;
    std::uint32_t index_bits_;
    std::uint32_t occupancy_ = 0;
    std::uint32_t high_water_ = 0;
};

/// Where node images and arena values live. The tree keeps a controller-side
/// copy of every node and hands the store the before/after images of each
/// node it modified; probes return what the store actually holds.
class NodeStore {
public:
    virtual ~NodeStore() = default;

    virtual void commit(RegionId region, const NodeImage& before, const NodeImage& after) = 0;
    virtual Word probe(RegionId region, std::uint32_t word_index, const Word& expected) = 0;
    virtual void arena_write(std::uint32_t slot, const Word& previous, const Word& value) = 0;
    virtual Word arena_read(std::uint32_t slot, const Word& expected) = 0;
};

/// Purely logical store: no device, probes echo the controller copy.
class NullStore : public NodeStore {
public:
    void commit(RegionId, const NodeImage&, const NodeImage&) override {}
    Word probe(RegionId, std::uint32_t, const Word& expected) override { return expected; }
    void arena_write(std::uint32_t, const Word&, const Word&) override {}
    Word arena_read(std::uint32_t, const Word& expected) override { return expected; }
};

struct BeTreeConfig {
    std::uint32_t word_bits = 64;
    /// Pair slots per node (B).
    std::uint32_t node_slots = 16;
    /// Pivot pair slots of an internal node; the rest is buffer.
    std::uint32_t pivot_slots = 4;
    bool encoding = false;
    std::uint32_t arena_capacity = 1024;

    std::uint32_t buffer_slots() const { return node_slots - pivot_slots; }
    std::uint32_t leaf_slots() const { return node_slots; }
    void validate() const;
};

struct TreeStats {
    /// Pairs written into a node: upsert, flush move, rejoin or split move.
    std::uint64_t kv_writes = 0;
    /// Live buffer or element slots whose contents changed (pivots excluded).
    std::uint64_t slot_rewrites = 0;
    std::uint64_t upserts = 0;
    std::uint64_t queries = 0;
    std::uint64_t buffer_hits = 0;
    std::uint64_t flushes = 0;
    std::uint64_t splits = 0;
};

class BeTree {
public:
    BeTree(BeTreeConfig config, NodeStore& store);

    void upsert(const Word& key, const Word& value);
    std::optional<Word> query(const Word& key);
    /// Pushes every buffered message down to the leaves.
    void flush_all();
    /// Throws StructuralCorruption describing the first violated invariant.
    void audit() const;

    const BeTreeConfig& config() const { return config_; }
    const TreeStats& stats() const { return stats_; }
    std::uint32_t height() const;
    std::size_t node_count() const { return nodes_.size(); }
    std::uint32_t root() const { return root_; }
    /// Payload width of buffered messages.
    std::uint32_t payload_bits() const;
    const ValueArena* arena() const { return arena_ ? &*arena_ : nullptr; }
    std::size_t buffered_messages() const;

    NodeImage image_of(std::uint32_t id) const;
    RegionId region_of(std::uint32_t id) const;

private:
    struct Node {
        bool leaf = true;
        std::vector<Word> pivot_keys;
        std::vector<std::uint32_t> children;
        std::vector<Message> buffer;
        std::vector<std::pair<Word, Word>> elements;
    };

    std::uint32_t new_node(bool leaf);
    void touch(std::uint32_t id);
    void commit();

    void insert_element(Node& leaf, const Word& key, const Word& value);
    void flush_one(std::uint32_t id);
    void drain(std::uint32_t id);
    bool overflowing(const Node& n) const;
    void split_child(std::uint32_t parent, std::uint32_t index);
    void grow_root_if_needed();
    std::size_t child_for(const Node& n, const Word& key) const;
    Word resolve_payload(const Word& payload);

    void audit_node(std::uint32_t id, const Word& lo, const std::optional<Word>& hi, std::uint32_t depth,
                    std::optional<std::uint32_t>& leaf_depth, std::vector<std::uint32_t>& indices) const;

    BeTreeConfig config_;
    NodeStore& store_;
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
    std::uint64_t next_seq_ = 0;
    std::optional<ValueArena> arena_;
    std::map<std::uint32_t, NodeImage> dirty_;
    TreeStats stats_;
};

} // namespace skrm
