#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <skrm/word.hpp>

namespace skrm {

struct BTreeStats {
    /// Pairs written into a node: insert, overwrite or split move.
    std::uint64_t kv_writes = 0;
    /// Live pair slots whose contents changed, including in-node shifts.
    std::uint64_t slot_rewrites = 0;
    std::uint64_t inserts = 0;
    std::uint64_t splits = 0;
};

/// Classic in-memory B-tree (pairs in every node) with write counting.
class BTree {
public:
    /// A node holds at most `node_slots` pairs and splits around its median.
    explicit BTree(std::uint32_t node_slots = 16);

    /// Inserts or overwrites; returns the kv_writes charged by this call.
    std::uint64_t insert(const Word& key, const Word& value);
    std::optional<Word> find(const Word& key) const;
    /// Throws StructuralCorruption on a sortedness, occupancy or depth violation.
    void audit() const;

    const BTreeStats& stats() const { return stats_; }
    std::uint32_t node_slots() const { return node_slots_; }
    std::uint32_t height() const;
    std::size_t size() const { return size_; }

private:
    struct Node {
        std::vector<std::pair<Word, Word>> pairs;
        std::vector<std::uint32_t> children;
        bool leaf() const { return children.empty(); }
    };

    std::uint32_t new_node();
    void touch(std::uint32_t id);
    std::uint64_t commit();
    void split(std::vector<std::uint32_t>& path);
    void audit_node(std::uint32_t id, const std::optional<Word>& lo, const std::optional<Word>& hi,
                    std::uint32_t depth, std::optional<std::uint32_t>& leaf_depth) const;

    std::uint32_t node_slots_;
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
    std::size_t size_ = 0;
    std::map<std::uint32_t, std::vector<std::pair<Word, Word>>> dirty_;
    BTreeStats stats_;
};

/// Which event counts as a key-value write in the tree comparison.
enum class WriteMetric : std::uint8_t {
    KvWrites,      ///< every pair written into a node
    SlotRewrites,  ///< every live pair slot whose contents changed
};

struct WriteCountPoint {
    std::uint64_t n = 0;
    std::uint64_t btree_writes = 0;
    std::uint64_t betree_writes = 0;
    double ratio = 0.0;
};

struct WriteCountOptions {
    std::uint32_t node_slots = 16;
    std::uint32_t pivot_slots = 4;
    std::uint32_t word_bits = 64;
    WriteMetric metric = WriteMetric::KvWrites;
};

/// Feeds the same insert stream to a B-tree and a B^e-tree and reports the
/// cumulative write counts after each of the sorted sample sizes.
std::vector<WriteCountPoint> write_count_curve(std::vector<std::uint64_t> samples, std::uint64_t seed,
                                               const WriteCountOptions& opts = {});
WriteCountPoint write_count_experiment(std::uint64_t n_inserts, std::uint64_t seed,
                                       const WriteCountOptions& opts = {});

} // namespace skrm
