#include <skrm/device_store.hpp>

#include <skrm/error.hpp>

namespace skrm {

DeviceStore::DeviceStore(Layout& layout, StoreOptions options)
    : layout_(layout), options_(options) {
    const bool bit = layout.mapping() == Mapping::BitInterleaved;
    for (auto s : {options_.strategy, options_.arena_strategy}) {
        if (s == Strategy::Pw && bit) {
            throw ConfigError("pw needs the word-based mapping");
        }
    }
    if (options_.strategy == Strategy::Pw && options_.parallel_ports) {
        throw ConfigError("pw cannot be combined with parallel port updates");
    }
}

void DeviceStore::commit(RegionId region, const NodeImage& before, const NodeImage& after) {
    const auto pairs = changed_pairs(before, after);
    if (pairs.empty()) {
        return;
    }
    layout_.place(region);
    const auto write = [&](const std::vector<std::uint32_t>& indices) {
        std::vector<Word> words;
        for (auto w : indices) {
            words.push_back(after.words[w]);
        }
        const auto schedule = layout_.plan_node_access(region, AccessKind::BatchedWrite, indices);
        layout_.execute_write(schedule, options_.strategy, words, options_.write);
    };
    if (options_.parallel_ports) {
        std::vector<std::uint32_t> indices;
        for (auto j : pairs) {
            indices.push_back(2 * j);
            indices.push_back(2 * j + 1);
        }
        write(indices);
        return;
    }
    for (auto j : pairs) {
        if (options_.strategy == Strategy::Pw) {
            write({2 * j});
            write({2 * j + 1});
        } else {
            write({2 * j, 2 * j + 1});
        }
    }
}

Word DeviceStore::probe(RegionId region, std::uint32_t word_index, const Word& expected) {
    if (!layout_.placed(region)) {
        // Never written: the device still holds zeros there.
        layout_.place(region);
    }
    const std::uint32_t idx[] = {word_index};
    const std::uint32_t width[] = {expected.width()};
    const auto schedule = layout_.plan_node_access(region, AccessKind::Read, idx);
    auto out = layout_.execute_read(schedule, width).front();
    if (out != expected) {
        ++mismatches_;
    }
    return out;
}

RegionId DeviceStore::arena_region(std::uint32_t slot, std::uint32_t& word) const {
    const auto per_page = layout_.words_per_region(RegionKind::ArenaPage);
    word = slot % per_page;
    return RegionId{RegionKind::ArenaPage, slot / per_page};
}

void DeviceStore::arena_write(std::uint32_t slot, const Word& /*previous*/, const Word& value) {
    std::uint32_t word = 0;
    const auto region = arena_region(slot, word);
    layout_.place(region);
    const std::uint32_t idx[] = {word};
    const auto schedule = layout_.plan_node_access(region, AccessKind::BatchedWrite, idx);
    layout_.execute_write(schedule, options_.arena_strategy, std::span(&value, 1), options_.write);
}

Word DeviceStore::arena_read(std::uint32_t slot, const Word& expected) {
    std::uint32_t word = 0;
    const auto region = arena_region(slot, word);
    layout_.place(region);
    const std::uint32_t idx[] = {word};
    const std::uint32_t width[] = {expected.width()};
    const auto schedule = layout_.plan_node_access(region, AccessKind::Read, idx);
    auto out = layout_.execute_read(schedule, width).front();
    if (out != expected) {
        ++mismatches_;
    }
    return out;
}

} // namespace skrm
