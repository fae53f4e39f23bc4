#include <skrm/layout.hpp>

#include <nlohmann/json.hpp>

#include <skrm/error.hpp>

namespace skrm {

std::string_view to_string(Mapping m) {
    return m == Mapping::WordBased ? "word" : "bit_interleaved";
}

Mapping parse_mapping(std::string_view s) {
    if (s == "word" || s == "word_based") {
        return Mapping::WordBased;
    }
    if (s == "bit" || s == "bit_interleaved") {
        return Mapping::BitInterleaved;
    }
    throw ConfigError("mapping must be word or bit_interleaved, got '" + std::string(s) + "'");
}

std::string_view to_string(RegionKind k) {
    switch (k) {
        case RegionKind::Internal:  return "internal";
        case RegionKind::Leaf:      return "leaf";
        case RegionKind::ArenaPage: return "arena";
    }
    return "unknown";
}

Layout::Layout(Device& device, Mapping mapping, LayoutOptions options)
    : device_(device), mapping_(mapping), options_(options),
      group_capacity_(options.group_capacity != 0 ? options.group_capacity
                                                  : device.geometry().interport_bits) {
    if (options_.pair_slots == 0) {
        throw ConfigError("a node needs at least one pair slot");
    }
    if (mapping_ == Mapping::WordBased && 2 * options_.pair_slots > device.geometry().ports_per_track) {
        throw ConfigError("word-based nodes need ports_per_track >= 2 x pair slots");
    }
    if (mapping_ == Mapping::BitInterleaved && group_capacity_ > device.geometry().interport_bits) {
        throw ConfigError("group capacity cannot exceed interport_bits");
    }
}

std::uint32_t Layout::lanes_for(RegionKind kind) const {
    const auto ws = device_.geometry().word_bits;
    return kind == RegionKind::ArenaPage ? ws : 2 * ws;
}

std::uint32_t Layout::words_per_pair_slot(RegionKind kind) const {
    return kind == RegionKind::ArenaPage ? 1 : 2;
}

std::uint32_t Layout::words_per_region(RegionKind kind) const {
    if (mapping_ == Mapping::WordBased) {
        return kind == RegionKind::ArenaPage ? device_.geometry().ports_per_track
                                             : 2 * options_.pair_slots;
    }
    return words_per_pair_slot(kind) * options_.pair_slots;
}

const WordBasedAssignment& Layout::place_node_word_based(std::uint32_t node_id, RegionKind kind,
                                                         std::uint32_t capacity_words) {
    const RegionId region{kind, node_id};
    if (word_based_.count(region) != 0) {
        throw CapacityError("region " + std::string(to_string(kind)) + " " +
                            std::to_string(node_id) + " is already placed");
    }
    const auto ports = device_.geometry().ports_per_track;
    if (capacity_words > ports) {
        throw CapacityError(std::to_string(capacity_words) + " words do not fit a track with " +
                            std::to_string(ports) + " ports");
    }
    const TrackId track = device_.add_track(ports);
    return word_based_.emplace(region, WordBasedAssignment{region, track, capacity_words})
        .first->second;
}

const BitInterleavedAssignment& Layout::place_group_bit_interleaved(
    RegionKind kind, std::span<const std::uint32_t> node_ids, std::uint32_t word_bits) {
    if (word_bits != device_.geometry().word_bits) {
        throw ConfigError("group word size differs from the device word size");
    }
    if (node_ids.size() > group_capacity_) {
        throw CapacityError(std::to_string(node_ids.size()) + " nodes exceed the group capacity of " +
                            std::to_string(group_capacity_));
    }
    for (auto id : node_ids) {
        if (group_of_.count(RegionId{kind, id}) != 0) {
            throw CapacityError("region " + std::to_string(id) + " is already placed");
        }
    }
    BitInterleavedAssignment g;
    g.group_id = static_cast<std::uint32_t>(groups_.size());
    g.kind = kind;
    g.tracks = lanes_for(kind);
    g.capacity = group_capacity_;
    g.first_track = device_.add_tracks(g.tracks, options_.pair_slots);
    g.members.assign(node_ids.begin(), node_ids.end());
    for (std::uint32_t i = 0; i < g.members.size(); ++i) {
        group_of_[RegionId{kind, g.members[i]}] = GroupRef{g.group_id, i};
    }
    groups_.push_back(std::move(g));
    open_group_[kind] = groups_.back().group_id;
    return groups_.back();
}

void Layout::place(RegionId region) {
    if (placed(region)) {
        return;
    }
    if (mapping_ == Mapping::WordBased) {
        place_node_word_based(region.id, region.kind, words_per_region(region.kind));
        return;
    }
    const auto open = open_group_.find(region.kind);
    if (open != open_group_.end()) {
        auto& g = groups_[open->second];
        if (g.members.size() < g.capacity) {
            group_of_[region] = GroupRef{g.group_id, static_cast<std::uint32_t>(g.members.size())};
            g.members.push_back(region.id);
            return;
        }
    }
    const std::uint32_t ids[] = {region.id};
    place_group_bit_interleaved(region.kind, ids, device_.geometry().word_bits);
}

bool Layout::placed(RegionId region) const {
    return mapping_ == Mapping::WordBased ? word_based_.count(region) != 0
                                          : group_of_.count(region) != 0;
}

WordLocation Layout::locate(RegionId region, std::uint32_t word_index) const {
    if (word_index >= words_per_region(region.kind)) {
        throw LookupError("word " + std::to_string(word_index) + " is outside the region");
    }
    WordLocation loc;
    if (mapping_ == Mapping::WordBased) {
        const auto it = word_based_.find(region);
        if (it == word_based_.end()) {
            throw LookupError("region " + std::string(to_string(region.kind)) + " " +
                              std::to_string(region.id) + " is not placed");
        }
        loc.track = TrackSlot{it->second.track, word_index, 0};
        return loc;
    }
    const auto it = group_of_.find(region);
    if (it == group_of_.end()) {
        throw LookupError("region " + std::string(to_string(region.kind)) + " " +
                          std::to_string(region.id) + " is not placed");
    }
    const auto& g = groups_[it->second.group];
    const auto per_slot = words_per_pair_slot(region.kind);
    const auto ws = device_.geometry().word_bits;
    loc.lane.group_first = g.first_track;
    loc.lane.group_tracks = g.tracks;
    loc.lane.port = word_index / per_slot;
    loc.lane.lane = (word_index % per_slot) * ws;
    loc.lane.offset = it->second.member;
    return loc;
}

AccessSchedule Layout::plan_node_access(RegionId region, AccessKind kind,
                                        std::span<const std::uint32_t> word_indices) const {
    AccessSchedule s;
    s.region = region;
    s.kind = kind;
    s.mapping = mapping_;
    if (word_indices.empty()) {
        return s;
    }
    for (auto w : word_indices) {
        s.locations.push_back(locate(region, w));
    }
    if (kind == AccessKind::Read && mapping_ == Mapping::WordBased) {
        for (auto w : word_indices) {
            s.batches.push_back({w});
        }
    } else {
        s.batches.emplace_back(word_indices.begin(), word_indices.end());
    }
    return s;
}

OpCounters Layout::execute_write(const AccessSchedule& schedule, Strategy strategy,
                                 std::span<const Word> words, const WriteOptions& opts) {
    if (schedule.kind != AccessKind::BatchedWrite) {
        throw std::invalid_argument("not a write schedule");
    }
    if (words.size() != schedule.locations.size()) {
        throw std::invalid_argument("one word per scheduled location is required");
    }
    OpCounters total;
    std::size_t next = 0;
    for (const auto& batch : schedule.batches) {
        const auto n = batch.size();
        const auto batch_words = words.subspan(next, n);
        if (mapping_ == Mapping::WordBased) {
            std::vector<TrackSlot> slots;
            for (std::size_t i = 0; i < n; ++i) {
                slots.push_back(schedule.locations[next + i].track);
            }
            total += write_shared(device_, strategy, slots, batch_words, opts);
        } else {
            std::vector<LaneSlot> slots;
            for (std::size_t i = 0; i < n; ++i) {
                slots.push_back(schedule.locations[next + i].lane);
            }
            total += write_interleaved(device_, strategy, slots, batch_words, opts);
        }
        next += n;
    }
    return total;
}

std::vector<Word> Layout::execute_read(const AccessSchedule& schedule,
                                       std::span<const std::uint32_t> widths) {
    if (schedule.kind != AccessKind::Read) {
        throw std::invalid_argument("not a read schedule");
    }
    if (widths.size() != schedule.locations.size()) {
        throw std::invalid_argument("one width per scheduled location is required");
    }
    std::vector<Word> out;
    std::size_t next = 0;
    for (const auto& batch : schedule.batches) {
        const auto n = batch.size();
        if (mapping_ == Mapping::WordBased) {
            for (std::size_t i = 0; i < n; ++i) {
                out.push_back(read_word(device_, schedule.locations[next + i].track, widths[next + i]));
            }
        } else {
            std::vector<LaneSlot> slots;
            for (std::size_t i = 0; i < n; ++i) {
                slots.push_back(schedule.locations[next + i].lane);
            }
            auto words = read_interleaved(device_, slots, widths.subspan(next, n));
            out.insert(out.end(), words.begin(), words.end());
        }
        next += n;
    }
    return out;
}

std::size_t Layout::region_count() const {
    return mapping_ == Mapping::WordBased ? word_based_.size() : group_of_.size();
}

std::string Layout::allocation_table_json(int indent) const {
    nlohmann::json doc;
    doc["mapping"] = std::string(to_string(mapping_));
    doc["tracks"] = device_.track_count();
    if (mapping_ == Mapping::WordBased) {
        auto& regions = doc["regions"] = nlohmann::json::array();
        for (const auto& [id, a] : word_based_) {
            regions.push_back({{"kind", std::string(to_string(id.kind))},
                               {"id", id.id},
                               {"track", a.track},
                               {"words", a.words}});
        }
    } else {
        doc["group_capacity"] = group_capacity_;
        auto& groups = doc["groups"] = nlohmann::json::array();
        for (const auto& g : groups_) {
            groups.push_back({{"group", g.group_id},
                              {"kind", std::string(to_string(g.kind))},
                              {"first_track", g.first_track},
                              {"tracks", g.tracks},
                              {"members", g.members}});
        }
    }
    return doc.dump(indent);
}

} // namespace skrm
