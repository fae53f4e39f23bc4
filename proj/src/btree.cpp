#include <skrm/btree.hpp>

#include <algorithm>
#include <random>
#include <string>

#include <skrm/betree.hpp>
#include <skrm/error.hpp>
#include <skrm/workload.hpp>

namespace skrm {

BTree::BTree(std::uint32_t node_slots) : node_slots_(node_slots) {
    if (node_slots < 3) {
        throw ConfigError("a B-tree node needs at least 3 pair slots");
    }
    root_ = new_node();
    dirty_.clear();
}

std::uint32_t BTree::new_node() {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    touch(id);
    return id;
}

void BTree::touch(std::uint32_t id) {
    if (dirty_.count(id) == 0) {
        dirty_.emplace(id, nodes_[id].pairs);
    }
}

std::uint64_t BTree::commit() {
    std::uint64_t writes = 0;
    for (const auto& [id, before] : dirty_) {
        const auto& after = nodes_[id].pairs;
        for (std::size_t j = 0; j < after.size(); ++j) {
            if (j >= before.size() || before[j] != after[j]) {
                ++writes;
            }
        }
    }
    dirty_.clear();
    stats_.slot_rewrites += writes;
    return writes;
}

std::uint64_t BTree::insert(const Word& key, const Word& value) {
    ++stats_.inserts;
    const auto before = stats_.kv_writes;
    std::vector<std::uint32_t> path;
    auto id = root_;
    while (true) {
        path.push_back(id);
        auto& n = nodes_[id];
        auto it = std::lower_bound(n.pairs.begin(), n.pairs.end(), key,
                                   [](const auto& p, const Word& k) { return p.first < k; });
        if (it != n.pairs.end() && it->first == key) {
            touch(id);
            it->second = value;
            ++stats_.kv_writes;
            commit();
            return stats_.kv_writes - before;
        }
        if (n.leaf()) {
            touch(id);
            n.pairs.emplace(it, key, value);
            ++stats_.kv_writes;
            ++size_;
            break;
        }
        id = n.children[static_cast<std::size_t>(it - n.pairs.begin())];
    }
    split(path);
    commit();
    return stats_.kv_writes - before;
}

void BTree::split(std::vector<std::uint32_t>& path) {
    while (!path.empty() && nodes_[path.back()].pairs.size() > node_slots_) {
        const auto id = path.back();
        path.pop_back();
        ++stats_.splits;
        const auto right = new_node();
        touch(id);
        auto& n = nodes_[id];
        auto& r = nodes_[right];
        const std::size_t mid = n.pairs.size() / 2;
        auto median = n.pairs[mid];
        r.pairs.assign(n.pairs.begin() + static_cast<std::ptrdiff_t>(mid) + 1, n.pairs.end());
        n.pairs.resize(mid);
        if (!n.leaf()) {
            r.children.assign(n.children.begin() + static_cast<std::ptrdiff_t>(mid) + 1, n.children.end());
            n.children.resize(mid + 1);
        }
        stats_.kv_writes += r.pairs.size() + 1;

        std::uint32_t parent;
        if (path.empty()) {
            parent = new_node();
            nodes_[parent].children.push_back(id);
            root_ = parent;
            path.push_back(parent);
        } else {
            parent = path.back();
        }
        touch(parent);
        auto& p = nodes_[parent];
        const auto pos = std::upper_bound(p.pairs.begin(), p.pairs.end(), median.first,
                                          [](const Word& k, const auto& x) { return k < x.first; });
        const auto at = pos - p.pairs.begin();
        p.pairs.insert(pos, std::move(median));
        p.children.insert(p.children.begin() + at + 1, right);
    }
}

std::optional<Word> BTree::find(const Word& key) const {
    auto id = root_;
    while (true) {
        const auto& n = nodes_[id];
        auto it = std::lower_bound(n.pairs.begin(), n.pairs.end(), key,
                                   [](const auto& p, const Word& k) { return p.first < k; });
        if (it != n.pairs.end() && it->first == key) {
            return it->second;
        }
        if (n.leaf()) {
            return std::nullopt;
        }
        id = n.children[static_cast<std::size_t>(it - n.pairs.begin())];
    }
}

std::uint32_t BTree::height() const {
    std::uint32_t h = 1;
    for (auto id = root_; !nodes_[id].leaf(); id = nodes_[id].children.front()) {
        ++h;
    }
    return h;
}

void BTree::audit() const {
    std::optional<std::uint32_t> leaf_depth;
    audit_node(root_, std::nullopt, std::nullopt, 0, leaf_depth);
}

void BTree::audit_node(std::uint32_t id, const std::optional<Word>& lo, const std::optional<Word>& hi,
                       std::uint32_t depth, std::optional<std::uint32_t>& leaf_depth) const {
    const auto& n = nodes_[id];
    const auto fail = [&](const std::string& what) {
        return StructuralCorruption("b-tree node " + std::to_string(id) + ": " + what);
    };
    if (n.pairs.size() > node_slots_) {
        throw fail("over capacity");
    }
    if (id != root_ && n.pairs.size() < node_slots_ / 2) {
        throw fail("under half full");
    }
    for (std::size_t i = 0; i < n.pairs.size(); ++i) {
        const auto& k = n.pairs[i].first;
        if ((lo && !(*lo < k)) || (hi && !(k < *hi))) {
            throw fail("key outside the node range");
        }
        if (i > 0 && !(n.pairs[i - 1].first < k)) {
            throw fail("keys not strictly sorted");
        }
    }
    if (n.leaf()) {
        if (leaf_depth && *leaf_depth != depth) {
            throw fail("leaves at different depths");
        }
        leaf_depth = depth;
        return;
    }
    if (n.children.size() != n.pairs.size() + 1) {
        throw fail("child count does not match key count");
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        const std::optional<Word> clo = i == 0 ? lo : std::optional<Word>(n.pairs[i - 1].first);
        const std::optional<Word> chi = i == n.pairs.size() ? hi : std::optional<Word>(n.pairs[i].first);
        audit_node(n.children[i], clo, chi, depth + 1, leaf_depth);
    }
}

// ---------------------------------------------------------------------------

std::vector<WriteCountPoint> write_count_curve(std::vector<std::uint64_t> samples, std::uint64_t seed,
                                               const WriteCountOptions& opts) {
    std::sort(samples.begin(), samples.end());
    samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
    std::vector<WriteCountPoint> out;
    if (samples.empty()) {
        return out;
    }
    BTree btree(opts.node_slots);
    NullStore store;
    BeTreeConfig cfg;
    cfg.word_bits = opts.word_bits;
    cfg.node_slots = opts.node_slots;
    cfg.pivot_slots = opts.pivot_slots;
    BeTree betree(cfg, store);

    std::mt19937_64 rng(seed);
    std::size_t next = 0;
    for (std::uint64_t i = 1; i <= samples.back(); ++i) {
        const auto key = key_for(rng(), opts.word_bits);
        const auto value = value_for(rng(), opts.word_bits);
        btree.insert(key, value);
        betree.upsert(key, value);
        while (next < samples.size() && samples[next] == i) {
            WriteCountPoint p;
            p.n = i;
            const bool slots = opts.metric == WriteMetric::SlotRewrites;
            p.btree_writes = slots ? btree.stats().slot_rewrites : btree.stats().kv_writes;
            p.betree_writes = slots ? betree.stats().slot_rewrites : betree.stats().kv_writes;
            p.ratio = p.btree_writes == 0 ? 0.0
                                          : static_cast<double>(p.betree_writes) /
                                                static_cast<double>(p.btree_writes);
            out.push_back(p);
            ++next;
        }
    }
    return out;
}

WriteCountPoint write_count_experiment(std::uint64_t n_inserts, std::uint64_t seed,
                                       const WriteCountOptions& opts) {
    if (n_inserts == 0) {
        throw ConfigError("write-count experiment needs at least one insert");
    }
    return write_count_curve({n_inserts}, seed, opts).front();
}

} // namespace skrm
