#include <skrm/betree.hpp>

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include <skrm/error.hpp>

namespace skrm {

std::vector<std::uint32_t> changed_pairs(const NodeImage& before, const NodeImage& after) {
    if (before.words.size() != after.words.size()) {
        throw std::invalid_argument("images of different node shapes");
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t j = 0; j < after.pair_count(); ++j) {
        if (before.key(j) != after.key(j) || before.value(j) != after.value(j)) {
            out.push_back(j);
        }
    }
    return out;
}

std::uint32_t index_bits_for(std::uint64_t capacity) {
    if (capacity <= 1) {
        return 0;
    }
    return static_cast<std::uint32_t>(std::bit_width(capacity - 1));
}

std::uint64_t encoding_overhead_bytes(std::uint64_t capacity) {
    return (index_bits_for(capacity) * capacity + 7) / 8;
}

std::uint64_t next_pow2(std::uint64_t n) {
    return n <= 1 ? 1 : std::bit_ceil(n);
}

// ---------------------------------------------------------------------------

ValueArena::ValueArena(std::uint32_t capacity, std::uint32_t word_bits)
    : slots_(capacity, Word(word_bits)), live_(capacity, 0), index_bits_(index_bits_for(capacity)) {
    if (capacity == 0) {
        throw ConfigError("arena capacity must be positive");
    }
    for (std::uint32_t i = 0; i < capacity; ++i) {
        free_.insert(free_.end(), i);
    }
}

std::uint32_t ValueArena::next_free() const {
    if (free_.empty()) {
        throw ArenaFull("value arena full at " + std::to_string(capacity()) + " entries");
    }
    return *free_.begin();
}

std::uint32_t ValueArena::allocate(const Word& value) {
    const auto index = next_free();
    free_.erase(free_.begin());
    slots_[index] = value;
    live_[index] = 1;
    ++occupancy_;
    high_water_ = std::max(high_water_, occupancy_);
    return index;
}

void ValueArena::release(std::uint32_t index) {
    if (!live(index)) {
        throw StructuralCorruption("arena slot " + std::to_string(index) + " released twice");
    }
    live_[index] = 0;
    free_.insert(index);
    --occupancy_;
}

// ---------------------------------------------------------------------------

void BeTreeConfig::validate() const {
    if (word_bits == 0 || word_bits > Word::kMaxBits) {
        throw ConfigError("word_bits must be in 1.." + std::to_string(Word::kMaxBits));
    }
    if (pivot_slots < 2 || pivot_slots >= node_slots) {
        throw ConfigError("need 2 <= pivot_slots < node_slots");
    }
    if (node_slots < 4) {
        throw ConfigError("node_slots must be at least 4");
    }
    if (encoding && arena_capacity == 0) {
        throw ConfigError("arena capacity must be positive");
    }
}

BeTree::BeTree(BeTreeConfig config, NodeStore& store) : config_(config), store_(store) {
    config_.validate();
    if (config_.encoding) {
        arena_.emplace(config_.arena_capacity, config_.word_bits);
    }
    root_ = new_node(true);
    commit();
}

std::uint32_t BeTree::payload_bits() const {
    return config_.encoding ? arena_->index_bits() : config_.word_bits;
}

RegionId BeTree::region_of(std::uint32_t id) const {
    return RegionId{nodes_.at(id).leaf ? RegionKind::Leaf : RegionKind::Internal, id};
}

std::uint32_t BeTree::height() const {
    std::uint32_t h = 1;
    for (auto id = root_; !nodes_[id].leaf; id = nodes_[id].children.front()) {
        ++h;
    }
    return h;
}

std::size_t BeTree::buffered_messages() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) {
        n += node.buffer.size();
    }
    return n;
}

NodeImage BeTree::image_of(std::uint32_t id) const {
    const auto& n = nodes_.at(id);
    const auto ws = config_.word_bits;
    NodeImage img;
    img.kind = n.leaf ? RegionKind::Leaf : RegionKind::Internal;
    img.words.reserve(2 * config_.node_slots);
    img.occupied.assign(config_.node_slots, 0);
    if (n.leaf) {
        if (n.elements.size() > config_.leaf_slots()) {
            throw StructuralCorruption("leaf " + std::to_string(id) + " holds too many elements");
        }
        for (std::uint32_t j = 0; j < config_.leaf_slots(); ++j) {
            if (j < n.elements.size()) {
                img.words.push_back(n.elements[j].first);
                img.words.push_back(n.elements[j].second);
                img.occupied[j] = 1;
            } else {
                img.words.emplace_back(ws);
                img.words.emplace_back(ws);
            }
        }
        return img;
    }
    if (n.pivot_keys.size() > config_.pivot_slots || n.buffer.size() > config_.buffer_slots()) {
        throw StructuralCorruption("internal node " + std::to_string(id) + " overflows its image");
    }
    img.pivot_slots = config_.pivot_slots;
    for (std::uint32_t j = 0; j < config_.pivot_slots; ++j) {
        if (j < n.pivot_keys.size()) {
            const auto child = n.children[j];
            if (ws < 64 && (std::uint64_t{child} >> ws) != 0) {
                throw CapacityError("node id " + std::to_string(child) + " does not fit a " +
                                    std::to_string(ws) + "-bit pointer");
            }
            img.words.push_back(n.pivot_keys[j]);
            img.words.push_back(Word::from_u64(child, ws));
            img.occupied[j] = 1;
        } else {
            img.words.emplace_back(ws);
            img.words.emplace_back(ws);
        }
    }
    const auto pb = payload_bits();
    for (std::uint32_t m = 0; m < config_.buffer_slots(); ++m) {
        if (m < n.buffer.size()) {
            img.words.push_back(n.buffer[m].key);
            img.words.push_back(n.buffer[m].payload);
            img.occupied[config_.pivot_slots + m] = 1;
        } else {
            img.words.emplace_back(ws);
            img.words.emplace_back(pb);
        }
    }
    return img;
}

std::uint32_t BeTree::new_node(bool leaf) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    nodes_.back().leaf = leaf;
    touch(id);
    return id;
}

void BeTree::touch(std::uint32_t id) {
    if (dirty_.count(id) == 0) {
        dirty_.emplace(id, image_of(id));
    }
}

void BeTree::commit() {
    for (const auto& [id, before] : dirty_) {
        const auto after = image_of(id);
        for (auto j : changed_pairs(before, after)) {
            if (after.holds_pair(j)) {
                ++stats_.slot_rewrites;
            }
        }
        store_.commit(region_of(id), before, after);
    }
    dirty_.clear();
}

void BeTree::insert_element(Node& leaf, const Word& key, const Word& value) {
    auto it = std::lower_bound(leaf.elements.begin(), leaf.elements.end(), key,
                               [](const auto& e, const Word& k) { return e.first < k; });
    if (it != leaf.elements.end() && it->first == key) {
        it->second = value;
    } else {
        leaf.elements.emplace(it, key, value);
    }
}

bool BeTree::overflowing(const Node& n) const {
    return n.leaf ? n.elements.size() > config_.leaf_slots()
                  : n.pivot_keys.size() > config_.pivot_slots;
}

std::size_t BeTree::child_for(const Node& n, const Word& key) const {
    const auto it = std::upper_bound(n.pivot_keys.begin() + 1, n.pivot_keys.end(), key);
    return static_cast<std::size_t>(it - n.pivot_keys.begin()) - 1;
}

Word BeTree::resolve_payload(const Word& payload) {
    if (!config_.encoding) {
        return payload;
    }
    const auto index = static_cast<std::uint32_t>(payload.to_u64());
    auto value = store_.arena_read(index, arena_->value(index));
    arena_->release(index);
    return value;
}

void BeTree::upsert(const Word& key, const Word& value) {
    if (key.width() != config_.word_bits || value.width() != config_.word_bits) {
        throw std::invalid_argument("key and value must be word-sized");
    }
    ++stats_.upserts;
    const auto seq = next_seq_++;
    if (nodes_[root_].leaf) {
        touch(root_);
        insert_element(nodes_[root_], key, value);
        ++stats_.kv_writes;
        grow_root_if_needed();
        commit();
        return;
    }
    Word payload = value;
    if (config_.encoding) {
        const auto index = arena_->next_free();
        const Word previous = arena_->value(index);
        arena_->allocate(value);
        store_.arena_write(index, previous, value);
        payload = Word::from_u64(index, arena_->index_bits());
    }
    touch(root_);
    auto& buf = nodes_[root_].buffer;
    const auto pos = std::upper_bound(buf.begin(), buf.end(), key,
                                      [](const Word& k, const Message& m) { return k < m.key; });
    buf.insert(pos, Message{key, payload, seq});
    ++stats_.kv_writes;
    while (nodes_[root_].buffer.size() > config_.buffer_slots()) {
        flush_one(root_);
    }
    grow_root_if_needed();
    commit();
}

void BeTree::flush_one(std::uint32_t id) {
    std::size_t best = 0;
    std::size_t best_lo = 0;
    std::size_t best_hi = 0;
    {
        const auto& n = nodes_[id];
        const auto by_key = [](const Message& m, const Word& k) { return m.key < k; };
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            const auto lo = i == 0 ? n.buffer.begin()
                                   : std::lower_bound(n.buffer.begin(), n.buffer.end(),
                                                      n.pivot_keys[i], by_key);
            const auto hi = i + 1 == n.children.size()
                                ? n.buffer.end()
                                : std::lower_bound(lo, n.buffer.end(), n.pivot_keys[i + 1], by_key);
            if (hi - lo > static_cast<std::ptrdiff_t>(best_hi - best_lo)) {
                best = i;
                best_lo = static_cast<std::size_t>(lo - n.buffer.begin());
                best_hi = static_cast<std::size_t>(hi - n.buffer.begin());
            }
        }
    }
    if (best_hi == best_lo) {
        return;
    }
    touch(id);
    auto& src = nodes_[id].buffer;
    std::vector<Message> batch(std::make_move_iterator(src.begin() + static_cast<std::ptrdiff_t>(best_lo)),
                               std::make_move_iterator(src.begin() + static_cast<std::ptrdiff_t>(best_hi)));
    src.erase(src.begin() + static_cast<std::ptrdiff_t>(best_lo),
              src.begin() + static_cast<std::ptrdiff_t>(best_hi));

    const auto child = nodes_[id].children[best];
    touch(child);
    ++stats_.flushes;
    stats_.kv_writes += batch.size();
    if (nodes_[child].leaf) {
        // Arena reads go in slot order so the arena tracks sweep once.
        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (config_.encoding) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return batch[a].payload.to_u64() < batch[b].payload.to_u64();
            });
        }
        std::vector<Word> values(batch.size());
        for (auto i : order) {
            values[i] = resolve_payload(batch[i].payload);
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            insert_element(nodes_[child], batch[i].key, values[i]);
        }
    } else {
        auto& dst = nodes_[child].buffer;
        for (auto& m : batch) {
            const auto pos = std::upper_bound(dst.begin(), dst.end(), m.key,
                                              [](const Word& k, const Message& x) { return k < x.key; });
            dst.insert(pos, std::move(m));
        }
        while (nodes_[child].buffer.size() > config_.buffer_slots()) {
            flush_one(child);
        }
    }
    if (overflowing(nodes_[child])) {
        split_child(id, static_cast<std::uint32_t>(best));
    }
}

void BeTree::split_child(std::uint32_t parent, std::uint32_t index) {
    const auto cid = nodes_[parent].children[index];
    const bool leaf = nodes_[cid].leaf;
    const std::size_t n = leaf ? nodes_[cid].elements.size() : nodes_[cid].pivot_keys.size();
    const std::size_t cap = leaf ? config_.leaf_slots() : config_.pivot_slots;
    const std::size_t pieces = (n + cap - 1) / cap;
    if (pieces <= 1) {
        return;
    }
    touch(parent);
    touch(cid);
    ++stats_.splits;

    std::vector<std::size_t> starts;
    {
        const std::size_t base = n / pieces;
        const std::size_t extra = n % pieces;
        std::size_t at = 0;
        for (std::size_t p = 0; p < pieces; ++p) {
            starts.push_back(at);
            at += base + (p < extra ? 1 : 0);
        }
        starts.push_back(n);
    }
    std::vector<std::uint32_t> ids;
    for (std::size_t p = 1; p < pieces; ++p) {
        ids.push_back(new_node(leaf));
    }

    auto& c = nodes_[cid];
    std::vector<Word> lower;
    for (std::size_t p = 1; p < pieces; ++p) {
        auto& piece = nodes_[ids[p - 1]];
        const auto s = static_cast<std::ptrdiff_t>(starts[p]);
        const auto e = static_cast<std::ptrdiff_t>(starts[p + 1]);
        if (leaf) {
            piece.elements.assign(c.elements.begin() + s, c.elements.begin() + e);
            lower.push_back(piece.elements.front().first);
            stats_.kv_writes += piece.elements.size();
        } else {
            piece.pivot_keys.assign(c.pivot_keys.begin() + s, c.pivot_keys.begin() + e);
            piece.children.assign(c.children.begin() + s, c.children.begin() + e);
            lower.push_back(piece.pivot_keys.front());
        }
    }
    if (leaf) {
        c.elements.resize(starts[1]);
    } else {
        c.pivot_keys.resize(starts[1]);
        c.children.resize(starts[1]);
        // Hand each buffered message to the piece covering its key.
        std::vector<Message> keep;
        for (auto& m : c.buffer) {
            const auto it = std::upper_bound(lower.begin(), lower.end(), m.key);
            if (it == lower.begin()) {
                keep.push_back(std::move(m));
            } else {
                nodes_[ids[static_cast<std::size_t>(it - lower.begin()) - 1]].buffer.push_back(std::move(m));
                ++stats_.kv_writes;
            }
        }
        c.buffer = std::move(keep);
    }

    auto& p = nodes_[parent];
    const auto at = static_cast<std::ptrdiff_t>(index) + 1;
    p.pivot_keys.insert(p.pivot_keys.begin() + at, lower.begin(), lower.end());
    p.children.insert(p.children.begin() + at, ids.begin(), ids.end());
}

void BeTree::grow_root_if_needed() {
    while (overflowing(nodes_[root_])) {
        const auto old_root = root_;
        root_ = new_node(false);
        nodes_[root_].pivot_keys.emplace_back(config_.word_bits);
        nodes_[root_].children.push_back(old_root);
        split_child(root_, 0);
    }
}

void BeTree::drain(std::uint32_t id) {
    if (nodes_[id].leaf) {
        return;
    }
    while (!nodes_[id].buffer.empty()) {
        flush_one(id);
    }
    for (std::size_t i = 0; i < nodes_[id].children.size();) {
        const auto child = nodes_[id].children[i];
        drain(child);
        if (overflowing(nodes_[child])) {
            const auto before = nodes_[id].children.size();
            split_child(id, static_cast<std::uint32_t>(i));
            i += nodes_[id].children.size() - before + 1;
        } else {
            ++i;
        }
    }
}

void BeTree::flush_all() {
    drain(root_);
    grow_root_if_needed();
    commit();
}

std::optional<Word> BeTree::query(const Word& key) {
    ++stats_.queries;
    auto id = root_;
    for (std::uint32_t depth = 0;; ++depth) {
        if (id >= nodes_.size() || depth > nodes_.size()) {
            throw StructuralCorruption("query followed a dangling child pointer");
        }
        const auto& n = nodes_[id];
        const auto region = region_of(id);
        std::map<std::uint32_t, Word> seen;
        const auto key_at = [&](std::uint32_t pair, const Word& expected) -> const Word& {
            auto it = seen.find(pair);
            if (it == seen.end()) {
                it = seen.emplace(pair, store_.probe(region, 2 * pair, expected)).first;
            }
            return it->second;
        };
        // Index one past the last slot in [first, first + count) whose key is <= key.
        const auto upper = [&](std::uint32_t first, std::uint32_t count, auto&& expected_key) {
            std::uint32_t lo = 0;
            std::uint32_t hi = count;
            while (lo < hi) {
                const auto mid = lo + (hi - lo) / 2;
                if (key_at(first + mid, expected_key(mid)) <= key) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            return lo;
        };

        if (n.leaf) {
            const auto count = static_cast<std::uint32_t>(n.elements.size());
            const auto u = upper(0, count, [&](std::uint32_t i) -> const Word& { return n.elements[i].first; });
            if (u > 0 && key_at(u - 1, n.elements[u - 1].first) == key) {
                return store_.probe(region, 2 * (u - 1) + 1, n.elements[u - 1].second);
            }
            return std::nullopt;
        }

        const auto first_msg = config_.pivot_slots;
        const auto count = static_cast<std::uint32_t>(n.buffer.size());
        const auto u = upper(first_msg, count, [&](std::uint32_t i) -> const Word& { return n.buffer[i].key; });
        if (u > 0 && key_at(first_msg + u - 1, n.buffer[u - 1].key) == key) {
            ++stats_.buffer_hits;
            const auto& m = n.buffer[u - 1];
            const auto payload = store_.probe(region, 2 * (first_msg + u - 1) + 1, m.payload);
            if (!config_.encoding) {
                return payload;
            }
            const auto index = static_cast<std::uint32_t>(payload.to_u64());
            if (index >= arena_->capacity()) {
                throw StructuralCorruption("buffered index outside the arena");
            }
            return store_.arena_read(index, arena_->value(index));
        }

        const auto pivots = static_cast<std::uint32_t>(n.pivot_keys.size());
        const auto p = 1 + upper(1, pivots - 1, [&](std::uint32_t i) -> const Word& { return n.pivot_keys[1 + i]; });
        const auto child = store_.probe(region, 2 * (p - 1) + 1, Word::from_u64(n.children[p - 1], config_.word_bits));
        id = static_cast<std::uint32_t>(child.to_u64());
    }
}

// ---------------------------------------------------------------------------

void BeTree::audit() const {
    std::optional<std::uint32_t> leaf_depth;
    std::vector<std::uint32_t> indices;
    audit_node(root_, Word(config_.word_bits), std::nullopt, 0, leaf_depth, indices);
    if (!dirty_.empty()) {
        throw StructuralCorruption("uncommitted node images");
    }
    if (config_.encoding) {
        std::sort(indices.begin(), indices.end());
        if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
            throw StructuralCorruption("two messages share an arena slot");
        }
        if (indices.size() != arena_->occupancy()) {
            throw StructuralCorruption("arena holds " + std::to_string(arena_->occupancy()) +
                                       " live slots but " + std::to_string(indices.size()) +
                                       " messages reference it");
        }
        for (auto i : indices) {
            if (i >= arena_->capacity() || !arena_->live(i)) {
                throw StructuralCorruption("message references a free arena slot");
            }
        }
    }
}

void BeTree::audit_node(std::uint32_t id, const Word& lo, const std::optional<Word>& hi,
                        std::uint32_t depth, std::optional<std::uint32_t>& leaf_depth,
                        std::vector<std::uint32_t>& indices) const {
    const auto& n = nodes_.at(id);
    const auto where = [&](const std::string& what) {
        return StructuralCorruption("node " + std::to_string(id) + ": " + what);
    };
    const auto in_range = [&](const Word& k) { return lo <= k && (!hi || k < *hi); };
    const bool is_root = id == root_;

    if (n.leaf) {
        if (leaf_depth && *leaf_depth != depth) {
            throw where("leaves at different depths");
        }
        leaf_depth = depth;
        if (n.elements.size() > config_.leaf_slots()) {
            throw where("too many elements");
        }
        if (!is_root && n.elements.size() < (config_.leaf_slots() + 1) / 2) {
            throw where("leaf under half full");
        }
        for (std::size_t i = 0; i < n.elements.size(); ++i) {
            if (!in_range(n.elements[i].first)) {
                throw where("element key outside the node range");
            }
            if (i > 0 && !(n.elements[i - 1].first < n.elements[i].first)) {
                throw where("elements not strictly sorted");
            }
        }
        return;
    }

    if (n.pivot_keys.empty() || n.pivot_keys.size() != n.children.size()) {
        throw where("pivot and child lists disagree");
    }
    if (n.pivot_keys.size() > config_.pivot_slots) {
        throw where("too many pivots");
    }
    if (!is_root && n.pivot_keys.size() < (config_.pivot_slots + 1) / 2) {
        throw where("internal node under half full");
    }
    if (n.pivot_keys.front() != lo) {
        throw where("first pivot does not match the node's lower bound");
    }
    for (std::size_t i = 1; i < n.pivot_keys.size(); ++i) {
        if (!(n.pivot_keys[i - 1] < n.pivot_keys[i]) || !in_range(n.pivot_keys[i])) {
            throw where("pivots not strictly increasing inside the node range");
        }
    }
    if (n.buffer.size() > config_.buffer_slots()) {
        throw where("buffer over capacity");
    }
    for (std::size_t i = 0; i < n.buffer.size(); ++i) {
        const auto& m = n.buffer[i];
        if (!in_range(m.key)) {
            throw where("message key outside the node range");
        }
        if (i > 0) {
            const auto& prev = n.buffer[i - 1];
            if (m.key < prev.key || (m.key == prev.key && m.seq <= prev.seq)) {
                throw where("messages not sorted by key and sequence");
            }
        }
        if (m.payload.width() != payload_bits()) {
            throw where("payload width mismatch");
        }
        if (config_.encoding) {
            indices.push_back(static_cast<std::uint32_t>(m.payload.to_u64()));
        }
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        const std::optional<Word> next =
            i + 1 < n.pivot_keys.size() ? std::optional<Word>(n.pivot_keys[i + 1]) : hi;
        audit_node(n.children[i], n.pivot_keys[i], next, depth + 1, leaf_depth, indices);
    }
}

} // namespace skrm
