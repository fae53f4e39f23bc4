#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include <skrm/device.hpp>
#include <skrm/error.hpp>
#include <skrm/layout.hpp>

using namespace skrm;

namespace {

DeviceConfig geometry(std::uint32_t word_bits, std::uint32_t pair_slots) {
    DeviceConfig c;
    c.geometry.word_bits = word_bits;
    c.geometry.interport_bits = word_bits;
    c.geometry.ports_per_track = 2 * pair_slots;
    return c;
}

std::vector<std::uint32_t> all_words(const Layout& l, RegionKind k) {
    std::vector<std::uint32_t> v(l.words_per_region(k));
    std::iota(v.begin(), v.end(), 0u);
    return v;
}

} // namespace

TEST(Layout, MappingNames) {
    EXPECT_EQ(parse_mapping("word"), Mapping::WordBased);
    EXPECT_EQ(parse_mapping("bit"), Mapping::BitInterleaved);
    EXPECT_EQ(parse_mapping(to_string(Mapping::BitInterleaved)), Mapping::BitInterleaved);
    EXPECT_THROW(parse_mapping("diagonal"), ConfigError);
}

TEST(WordBased, InternalNodeOccupiesOneTrack) {
    DeviceConfig c = geometry(8, 12);
    Device d(c);
    Layout l(d, Mapping::WordBased, {12, 0});
    // 4 pivots + 8 buffer pairs = 12 pair slots = 24 words.
    const auto& a = l.place_node_word_based(0, RegionKind::Internal, 24);
    EXPECT_EQ(a.words, 24u);
    EXPECT_EQ(d.track_count(), 1u);
    l.place(RegionId{RegionKind::Internal, 0});
    EXPECT_EQ(d.track_count(), 1u);
    // Pivot pair 3 is the last pivot: key at word 6, child id at word 7.
    EXPECT_EQ(l.locate({RegionKind::Internal, 0}, 6).track.port, 6u);
    EXPECT_EQ(l.locate({RegionKind::Internal, 0}, 7).track.port, 7u);
    EXPECT_THROW(l.place_node_word_based(1, RegionKind::Leaf, 25), CapacityError);
}

TEST(WordBased, EmptyLeafHoldsNoSkyrmions) {
    Device d(geometry(8, 4));
    Layout l(d, Mapping::WordBased, {4, 0});
    l.place({RegionKind::Leaf, 0});
    EXPECT_EQ(d.track(0).population(), 0u);
    EXPECT_EQ(d.counters(), OpCounters{});
}

TEST(WordBased, DistinctNodesGetDistinctTracks) {
    Device d(geometry(8, 4));
    Layout l(d, Mapping::WordBased, {4, 0});
    l.place({RegionKind::Leaf, 0});
    l.place({RegionKind::Leaf, 1});
    l.place({RegionKind::Internal, 1});
    std::set<TrackId> tracks;
    for (auto r : {RegionId{RegionKind::Leaf, 0}, RegionId{RegionKind::Leaf, 1},
                   RegionId{RegionKind::Internal, 1}}) {
        tracks.insert(l.locate(r, 0).track.track);
    }
    EXPECT_EQ(tracks.size(), 3u);
}

TEST(WordBased, RejectsTooFewPorts) {
    Device d(geometry(8, 4));
    EXPECT_THROW(Layout(d, Mapping::WordBased, {5, 0}), ConfigError);
}

TEST(BitInterleaved, GroupUsesTwoTracksPerWordBit) {
    Device d(geometry(64, 16));
    Layout l(d, Mapping::BitInterleaved, {16, 0});
    const std::uint32_t ids[] = {0};
    const auto& g = l.place_group_bit_interleaved(RegionKind::Leaf, ids, 64);
    EXPECT_EQ(g.tracks, 128u);
    EXPECT_EQ(d.track_count(), 128u);
    EXPECT_EQ(l.locate({RegionKind::Leaf, 0}, 0).lane.offset, 0u);
    EXPECT_EQ(l.group_capacity(), 64u);
}

TEST(BitInterleaved, NeighbouringNodesAreOneShiftApart) {
    Device d(geometry(64, 16));
    Layout l(d, Mapping::BitInterleaved, {16, 0});
    const RegionId a{RegionKind::Leaf, 0};
    const RegionId b{RegionKind::Leaf, 1};
    l.place(a);
    l.place(b);
    EXPECT_EQ(d.track_count(), 128u);
    const std::uint32_t w[] = {0};
    const std::uint32_t width[] = {64};
    l.execute_read(l.plan_node_access(a, AccessKind::Read, w), width);
    const auto before = d.counters();
    l.execute_read(l.plan_node_access(b, AccessKind::Read, w), width);
    const auto delta = d.counters() - before;
    EXPECT_EQ(delta.shift_count, 128u);
    EXPECT_EQ(delta.latency_steps[mask_of(Primitive::Shift)], 1u);
    for (TrackId t = 0; t < 128; ++t) {
        EXPECT_EQ(d.track(t).offset(), 1);
    }
}

TEST(BitInterleaved, KeyReadDetectsAllTracksInOneStep) {
    Device d(geometry(64, 16));
    Layout l(d, Mapping::BitInterleaved, {16, 0});
    const RegionId r{RegionKind::Leaf, 0};
    l.place(r);
    const std::uint32_t w[] = {0};
    const std::uint32_t width[] = {64};
    l.execute_read(l.plan_node_access(r, AccessKind::Read, w), width);
    EXPECT_EQ(d.counters().detect_count, 64u);
    EXPECT_EQ(d.counters().shift_count, 0u);
    EXPECT_DOUBLE_EQ(d.cost().latency_ns, 0.1);
}

TEST(WordBased, KeyReadIsSerialThroughOnePort) {
    Device d(geometry(64, 16));
    Layout l(d, Mapping::WordBased, {16, 0});
    const RegionId r{RegionKind::Leaf, 0};
    l.place(r);
    const std::uint32_t w[] = {0};
    const std::uint32_t width[] = {64};
    l.execute_read(l.plan_node_access(r, AccessKind::Read, w), width);
    EXPECT_EQ(d.counters().detect_count, 64u);
    EXPECT_EQ(d.counters().latency_steps[mask_of(Primitive::Detect)], 64u);
    EXPECT_GT(d.counters().shift_count, 0u);
}

TEST(BitInterleaved, GroupsAreHomogeneousAndFillUp) {
    Device d(geometry(8, 4));
    Layout l(d, Mapping::BitInterleaved, {4, 3});
    for (std::uint32_t i = 0; i < 4; ++i) {
        l.place({RegionKind::Leaf, i});
    }
    l.place({RegionKind::Internal, 0});
    l.place({RegionKind::ArenaPage, 0});
    // Leaves 0-2 share a group, leaf 3 opens a second one.
    EXPECT_EQ(l.locate({RegionKind::Leaf, 2}, 0).lane.group_first,
              l.locate({RegionKind::Leaf, 0}, 0).lane.group_first);
    EXPECT_NE(l.locate({RegionKind::Leaf, 3}, 0).lane.group_first,
              l.locate({RegionKind::Leaf, 0}, 0).lane.group_first);
    EXPECT_EQ(l.locate({RegionKind::Leaf, 3}, 0).lane.offset, 0u);
    // Two leaf groups and one internal group of 16 tracks, one arena group of 8.
    EXPECT_EQ(d.track_count(), 3u * 16 + 8);
    const std::uint32_t too_many[] = {10, 11, 12, 13};
    EXPECT_THROW(l.place_group_bit_interleaved(RegionKind::Leaf, too_many, 8), CapacityError);
}

TEST(BitInterleaved, WordIndexMapsToPortAndLane) {
    Device d(geometry(8, 4));
    Layout l(d, Mapping::BitInterleaved, {4, 0});
    const RegionId r{RegionKind::Internal, 0};
    l.place(r);
    const auto key = l.locate(r, 6).lane;
    const auto value = l.locate(r, 7).lane;
    EXPECT_EQ(key.port, 3u);
    EXPECT_EQ(key.lane, 0u);
    EXPECT_EQ(value.port, 3u);
    EXPECT_EQ(value.lane, 8u);
    EXPECT_THROW(l.locate(r, 8), LookupError);
    EXPECT_THROW(l.locate({RegionKind::Leaf, 9}, 0), LookupError);
}

TEST(Layout, PortDensityParity) {
    const std::uint32_t ws = 64;
    const std::uint32_t pairs = 16;
    Device wd(geometry(ws, pairs));
    Layout wl(wd, Mapping::WordBased, {pairs, 0});
    wl.place({RegionKind::Leaf, 0});
    Device bd(geometry(ws, pairs));
    Layout bl(bd, Mapping::BitInterleaved, {pairs, 0});
    bl.place({RegionKind::Leaf, 0});
    const auto density = [](const Device& d) {
        std::uint64_t ports = 0;
        std::uint64_t bits = 0;
        for (TrackId t = 0; t < d.track_count(); ++t) {
            ports += d.track(t).ports();
            bits += d.track(t).length_bits();
        }
        return static_cast<double>(ports) / static_cast<double>(bits);
    };
    EXPECT_DOUBLE_EQ(density(wd), density(bd));
    EXPECT_DOUBLE_EQ(density(wd), 1.0 / ws);
}

TEST(Layout, EmptyWriteScheduleIsEmpty) {
    Device d(geometry(8, 4));
    Layout l(d, Mapping::BitInterleaved, {4, 0});
    l.place({RegionKind::Leaf, 0});
    const auto s = l.plan_node_access({RegionKind::Leaf, 0}, AccessKind::BatchedWrite, {});
    EXPECT_TRUE(s.empty());
    EXPECT_EQ(l.execute_write(s, Strategy::Bcw, {}), OpCounters{});
}

TEST(Layout, WordBasedWriteIsOneSharedBatch) {
    Device d(geometry(8, 4));
    Layout l(d, Mapping::WordBased, {4, 0});
    const RegionId r{RegionKind::Leaf, 0};
    l.place(r);
    const auto idx = all_words(l, RegionKind::Leaf);
    const auto s = l.plan_node_access(r, AccessKind::BatchedWrite, idx);
    ASSERT_EQ(s.batches.size(), 1u);
    std::vector<Word> words(idx.size(), Word::from_u64(0xFF, 8));
    const auto delta = l.execute_write(s, Strategy::Bcw, words);
    EXPECT_EQ(delta.latency_steps[mask_of(Primitive::Shift)], 16u);
    EXPECT_EQ(delta.inject_count, 64u);
}

TEST(Layout, RoundTripRandomImagesBothMappings) {
    std::mt19937_64 rng(99);
    for (auto mapping : {Mapping::WordBased, Mapping::BitInterleaved}) {
        for (std::uint32_t ws : {8u, 16u, 64u}) {
            Device d(geometry(ws, 4));
            Layout l(d, mapping, {4, 0});
            std::vector<std::vector<Word>> shadow(12);
            for (int image = 0; image < 200; ++image) {
                const auto id = static_cast<std::uint32_t>(rng() % shadow.size());
                const RegionId r{id % 2 ? RegionKind::Leaf : RegionKind::Internal, id};
                l.place(r);
                const auto idx = all_words(l, r.kind);
                std::vector<Word> words;
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    words.push_back(Word::from_u64(rng(), ws));
                }
                const auto strategy = rng() % 2 ? Strategy::Naive : Strategy::Bcw;
                l.execute_write(l.plan_node_access(r, AccessKind::BatchedWrite, idx), strategy, words);
                shadow[id] = words;
                // Read back a random earlier node as well as this one.
                for (auto check : {id, static_cast<std::uint32_t>(rng() % shadow.size())}) {
                    if (shadow[check].empty()) {
                        continue;
                    }
                    const RegionId cr{check % 2 ? RegionKind::Leaf : RegionKind::Internal, check};
                    const std::vector<std::uint32_t> widths(idx.size(), ws);
                    const auto back =
                        l.execute_read(l.plan_node_access(cr, AccessKind::Read, idx), widths);
                    ASSERT_EQ(back, shadow[check]);
                }
            }
        }
    }
}

TEST(Layout, AllocationTableIsInjective) {
    for (auto mapping : {Mapping::WordBased, Mapping::BitInterleaved}) {
        Device d(geometry(8, 4));
        Layout l(d, mapping, {4, 2});
        std::vector<RegionId> regions;
        for (std::uint32_t i = 0; i < 5; ++i) {
            regions.push_back({RegionKind::Leaf, i});
            regions.push_back({RegionKind::Internal, i});
            regions.push_back({RegionKind::ArenaPage, i});
        }
        std::set<std::tuple<TrackId, std::uint32_t, std::uint32_t, std::uint32_t>> cells;
        std::size_t words = 0;
        for (auto r : regions) {
            l.place(r);
            for (std::uint32_t w = 0; w < l.words_per_region(r.kind); ++w) {
                const auto loc = l.locate(r, w);
                if (mapping == Mapping::WordBased) {
                    cells.insert({loc.track.track, loc.track.port, loc.track.base, 0});
                } else {
                    cells.insert({loc.lane.group_first + loc.lane.lane, loc.lane.port, loc.lane.offset, 1});
                }
                ++words;
            }
        }
        EXPECT_EQ(cells.size(), words);
        EXPECT_EQ(l.region_count(), regions.size());
        const auto table = nlohmann::json::parse(l.allocation_table_json());
        EXPECT_EQ(table.at("mapping").get<std::string>(), std::string(to_string(mapping)));
    }
}
