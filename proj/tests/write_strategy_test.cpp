#include <gtest/gtest.h>

#include <random>
#include <vector>

#include <skrm/device.hpp>
#include <skrm/error.hpp>
#include <skrm/write_strategy.hpp>

using namespace skrm;

namespace {

Device make_device(std::uint32_t word_bits, std::uint32_t ports = 4) {
    DeviceConfig c;
    c.geometry.word_bits = word_bits;
    c.geometry.ports_per_track = ports;
    c.geometry.interport_bits = word_bits;
    return Device(c);
}

Word stored(const Device& d, const TrackSlot& s, std::uint32_t width) {
    Word w(width);
    const auto& t = d.track(s.track);
    for (std::uint32_t b = 0; b < width; ++b) {
        w.set_bit(b, d.peek(s.track, t.port_position(s.port) + s.base + b));
    }
    return w;
}

struct Outcome {
    OpCounters delta;
    Word after;
};

// Writes `old` with the naive strategy, then `next` with `s`, on a fresh track.
Outcome overwrite(Strategy s, const Word& old, const Word& next) {
    auto d = make_device(old.width());
    const auto t = d.add_track();
    const TrackSlot slot{t, 1, 0};
    naive_write(d, slot, old);
    const auto before = d.counters();
    switch (s) {
        case Strategy::Naive: naive_write(d, slot, next); break;
        case Strategy::Dcw: dcw_write(d, slot, next); break;
        case Strategy::Pw: pw_write(d, slot, next); break;
        case Strategy::Bcw: {
            BatchUpdate b;
            b.slots = {slot};
            b.new_patterns = {next};
            b.old_patterns = {old};
            bcw_parallel_write(d, b);
            break;
        }
    }
    return {d.counters() - before, stored(d, slot, old.width())};
}

std::uint32_t xor_injects(const Word& o, const Word& n) {
    std::uint32_t c = 0;
    for (std::uint32_t i = 0; i < o.width(); ++i) {
        c += !o.bit(i) && n.bit(i);
    }
    return c;
}

std::uint32_t xor_removes(const Word& o, const Word& n) { return xor_injects(n, o); }

Word random_word(std::mt19937_64& rng, std::uint32_t width) {
    Word w(width);
    for (std::uint32_t i = 0; i < width; i += 64) {
        w.set_limb(i / 64, rng());
    }
    return w;
}

} // namespace

TEST(Strategy, NamesRoundTrip) {
    for (auto s : {Strategy::Naive, Strategy::Dcw, Strategy::Pw, Strategy::Bcw}) {
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    }
    EXPECT_THROW(parse_strategy("fast"), ConfigError);
}

TEST(NaiveWrite, IgnoresEquality) {
    const auto r = overwrite(Strategy::Naive, Word::from_string("1111"), Word::from_string("1111"));
    EXPECT_EQ(r.delta.remove_count, 4u);
    EXPECT_EQ(r.delta.inject_count, 4u);
    EXPECT_EQ(r.delta.detect_count, 0u);
}

TEST(NaiveWrite, ZerosOnlyCostShifts) {
    const auto r = overwrite(Strategy::Naive, Word::from_string("0000"), Word::from_string("0000"));
    EXPECT_EQ(r.delta.remove_count, 0u);
    EXPECT_EQ(r.delta.inject_count, 0u);
    EXPECT_EQ(r.delta.shift_count, 8u);
}

TEST(NaiveWrite, RemovesOldPopcountInjectsNew) {
    const auto r = overwrite(Strategy::Naive, Word::from_string("1010"), Word::from_string("0110"));
    EXPECT_EQ(r.delta.remove_count, 2u);
    EXPECT_EQ(r.delta.inject_count, 2u);
    EXPECT_EQ(r.after, Word::from_string("0110"));
}

TEST(DcwWrite, IdentityDetectsOnly) {
    const auto r = overwrite(Strategy::Dcw, Word::from_string("1011"), Word::from_string("1011"));
    EXPECT_EQ(r.delta.inject_count, 0u);
    EXPECT_EQ(r.delta.remove_count, 0u);
    EXPECT_EQ(r.delta.detect_count, 4u);
}

TEST(DcwWrite, AllOnesFromZero) {
    const auto r = overwrite(Strategy::Dcw, Word::from_string("0000"), Word::from_string("1111"));
    EXPECT_EQ(r.delta.inject_count, 4u);
    EXPECT_EQ(r.delta.remove_count, 0u);
}

TEST(DcwWrite, FlipsOnlyDifferingBits) {
    const auto r = overwrite(Strategy::Dcw, Word::from_string("1100"), Word::from_string("0110"));
    EXPECT_EQ(r.delta.inject_count, 1u);
    EXPECT_EQ(r.delta.remove_count, 1u);
}

TEST(DcwWrite, CountNewDetectDoublesDetects) {
    auto d = make_device(8);
    const auto t = d.add_track();
    WriteOptions o;
    o.count_new_detect = true;
    const auto delta = dcw_write(d, {t, 0, 0}, Word::from_u64(0x5A, 8), o);
    EXPECT_EQ(delta.detect_count, 16u);
    // Both detects of a bit share one step.
    EXPECT_EQ(delta.latency_steps[mask_of(Primitive::Detect)], 8u);
}

TEST(PwWrite, ReusesSkyrmions) {
    // popcount 3 -> 2: one remove, nothing injected.
    const auto r = overwrite(Strategy::Pw, Word::from_string("1110"), Word::from_string("0101"));
    EXPECT_EQ(r.delta.inject_count, 0u);
    EXPECT_EQ(r.delta.remove_count, 1u);
    EXPECT_EQ(r.after, Word::from_string("0101"));
}

TEST(PwWrite, NothingToReuse) {
    const auto r = overwrite(Strategy::Pw, Word::from_string("00000000"), Word::from_string("10110010"));
    EXPECT_EQ(r.delta.inject_count, 4u);
    EXPECT_EQ(r.delta.remove_count, 0u);
    EXPECT_EQ(r.delta.shift_count, 16u);
}

TEST(PwWrite, RepositioningChargesDisplacement) {
    // The single skyrmion moves from bit 0 to bit 3.
    const auto r = overwrite(Strategy::Pw, Word::from_string("1000"), Word::from_string("0001"));
    EXPECT_EQ(r.delta.inject_count, 0u);
    EXPECT_EQ(r.delta.remove_count, 0u);
    EXPECT_EQ(r.delta.shift_count, 8u + 3u);
}

TEST(PwWrite, RejectsBatches) {
    auto d = make_device(4);
    const auto t = d.add_track();
    const TrackSlot slots[] = {{t, 0, 0}, {t, 1, 0}};
    const Word words[] = {Word::from_string("1000"), Word::from_string("0100")};
    EXPECT_THROW(pw_write(d, slots, words), UnsupportedParallelPw);
    EXPECT_THROW(write_shared(d, Strategy::Pw, slots, words), UnsupportedParallelPw);
}

TEST(BcwWrite, ShiftsIndependentOfBatchSize) {
    // 4 words of 64 bits: one-by-one naive = 512 shifts, shared = 128.
    auto d = make_device(64);
    const auto t = d.add_track();
    std::vector<TrackSlot> slots;
    std::vector<Word> words;
    std::mt19937_64 rng(3);
    for (std::uint32_t p = 0; p < 4; ++p) {
        slots.push_back({t, p, 0});
        words.push_back(Word::from_u64(rng(), 64));
    }
    const auto serial = write_one_by_one(d, Strategy::Naive, slots, words);
    EXPECT_EQ(serial.shift_count, 512u);
    BatchUpdate b;
    b.slots = slots;
    for (auto& w : words) {
        w = Word::from_u64(rng(), 64);
    }
    b.new_patterns = words;
    const auto shared = bcw_parallel_write(d, b);
    EXPECT_EQ(shared.shift_count, 128u);
    for (std::uint32_t p = 0; p < 4; ++p) {
        EXPECT_EQ(stored(d, slots[p], 64), words[p]);
    }
}

TEST(BcwWrite, IdentityBatchOnlyShifts) {
    auto d = make_device(8);
    const auto t = d.add_track();
    BatchUpdate b;
    b.slots = {{t, 0, 0}, {t, 2, 0}};
    b.new_patterns = {Word::from_u64(0x3C, 8), Word::from_u64(0x81, 8)};
    bcw_parallel_write(d, b);
    b.old_patterns = b.new_patterns;
    const auto delta = bcw_parallel_write(d, b);
    EXPECT_EQ(delta.inject_count, 0u);
    EXPECT_EQ(delta.remove_count, 0u);
    EXPECT_EQ(delta.shift_count, 16u);
}

TEST(BcwWrite, TwoWordExample) {
    auto d = make_device(4);
    const auto t = d.add_track();
    BatchUpdate b;
    b.slots = {{t, 0, 0}, {t, 1, 0}};
    b.new_patterns = {Word::from_string("1010"), Word::from_string("0000")};
    bcw_parallel_write(d, b);
    b.old_patterns = b.new_patterns;
    b.new_patterns = {Word::from_string("0110"), Word::from_string("1111")};
    const auto delta = bcw_parallel_write(d, b);
    // Per-word XOR: 1010 -> 0110 flips bits 0 and 1, 0000 -> 1111 injects 4.
    EXPECT_EQ(delta.inject_count, 1u + 4u);
    EXPECT_EQ(delta.remove_count, 1u + 0u);
    EXPECT_EQ(delta.detect_count, 8u);
    // Every bit column is one detect step and at most one flip step.
    EXPECT_EQ(delta.latency_steps[mask_of(Primitive::Detect)], 4u);
}

TEST(BcwWrite, MixedFlipStepCostsInjectLatency) {
    auto d = make_device(1, 2);
    const auto t = d.add_track();
    BatchUpdate b;
    b.slots = {{t, 0, 0}, {t, 1, 0}};
    b.new_patterns = {Word::from_string("1"), Word::from_string("0")};
    bcw_parallel_write(d, b);
    b.old_patterns = b.new_patterns;
    b.new_patterns = {Word::from_string("0"), Word::from_string("1")};
    const auto delta = bcw_parallel_write(d, b);
    const auto mixed = mask_of(Primitive::Remove) | mask_of(Primitive::Inject);
    EXPECT_EQ(delta.latency_steps[mixed], 1u);
    // 2 shifts, 1 detect step, 1 mixed flip step.
    EXPECT_NEAR(accumulate_cost(delta, {}).latency_ns, 2 * 0.5 + 0.1 + 1.0, 1e-12);
}

TEST(BcwWrite, StaleOldPatternIsReported) {
    auto d = make_device(4);
    const auto t = d.add_track();
    BatchUpdate b;
    b.slots = {{t, 0, 0}};
    b.new_patterns = {Word::from_string("1111")};
    b.old_patterns = {Word::from_string("0001")};
    EXPECT_THROW(bcw_parallel_write(d, b), StructuralCorruption);
}

TEST(BcwWrite, RejectsMixedAlignment) {
    auto d = make_device(4);
    const auto a = d.add_track();
    const auto c = d.add_track();
    const Word words[] = {Word::from_string("1000"), Word::from_string("0100")};
    const TrackSlot two_tracks[] = {{a, 0, 0}, {c, 1, 0}};
    EXPECT_THROW(write_shared(d, Strategy::Bcw, two_tracks, words), AlignmentError);
    const TrackSlot same_port[] = {{a, 1, 0}, {a, 1, 0}};
    EXPECT_THROW(write_shared(d, Strategy::Bcw, same_port, words), AlignmentError);
}

TEST(BcwWrite, EmptyBatchIsFree) {
    auto d = make_device(4);
    EXPECT_EQ(bcw_parallel_write(d, BatchUpdate{}), OpCounters{});
}

TEST(Strategies, ExhaustiveSmallWordsAgainstXorOracle) {
    for (std::uint32_t w : {4u, 8u}) {
        for (std::uint64_t o = 0; o < (1u << w); ++o) {
            for (std::uint64_t n = 0; n < (1u << w); ++n) {
                const auto old = Word::from_u64(o, w);
                const auto next = Word::from_u64(n, w);
                const auto dcw = overwrite(Strategy::Dcw, old, next);
                ASSERT_EQ(dcw.after, next);
                ASSERT_EQ(dcw.delta.inject_count, xor_injects(old, next));
                ASSERT_EQ(dcw.delta.remove_count, xor_removes(old, next));
                for (auto s : {Strategy::Naive, Strategy::Bcw}) {
                    const auto r = overwrite(s, old, next);
                    ASSERT_EQ(r.after, next);
                    ASSERT_GE(r.delta.inject_count + r.delta.remove_count, hamming(old, next));
                }
                // PW moves skyrmions instead of flipping bits, so it can go
                // below the Hamming distance; it pays in shifts.
                const auto pw = overwrite(Strategy::Pw, old, next);
                ASSERT_EQ(pw.after, next);
                ASSERT_LE(pw.delta.inject_count + pw.delta.remove_count, hamming(old, next));
            }
        }
    }
}

TEST(Strategies, RandomPairsKeepInjectOrdering) {
    std::mt19937_64 rng(2024);
    for (std::uint32_t w : {4u, 8u, 16u, 64u}) {
        for (int trial = 0; trial < 300; ++trial) {
            const auto old = random_word(rng, w);
            const auto next = random_word(rng, w);
            const auto naive = overwrite(Strategy::Naive, old, next);
            const auto dcw = overwrite(Strategy::Dcw, old, next);
            const auto pw = overwrite(Strategy::Pw, old, next);
            const auto bcw = overwrite(Strategy::Bcw, old, next);
            ASSERT_EQ(naive.after, next);
            ASSERT_EQ(dcw.after, next);
            ASSERT_EQ(pw.after, next);
            ASSERT_EQ(bcw.after, next);
            ASSERT_LE(pw.delta.inject_count, dcw.delta.inject_count);
            ASSERT_LE(dcw.delta.inject_count, naive.delta.inject_count);
            ASSERT_EQ(bcw.delta.inject_count, dcw.delta.inject_count);
            ASSERT_EQ(naive.delta.inject_count, next.popcount());
            ASSERT_EQ(naive.delta.remove_count, old.popcount());
            const auto pop_old = old.popcount();
            const auto pop_new = next.popcount();
            ASSERT_EQ(pw.delta.inject_count, pop_new > pop_old ? pop_new - pop_old : 0u);
            ASSERT_EQ(pw.delta.remove_count, pop_old > pop_new ? pop_old - pop_new : 0u);
        }
    }
}

TEST(Strategies, ConservationAroundUntouchedWords) {
    std::mt19937_64 rng(5);
    for (auto s : {Strategy::Naive, Strategy::Dcw, Strategy::Bcw}) {
        auto d = make_device(16);
        const auto t = d.add_track();
        const auto neighbour = random_word(rng, 16);
        naive_write(d, {t, 3, 0}, neighbour);
        for (int i = 0; i < 50; ++i) {
            const TrackSlot slots[] = {{t, 0, 0}, {t, 1, 0}};
            const Word words[] = {random_word(rng, 16), random_word(rng, 16)};
            write_shared(d, s, slots, words);
            EXPECT_EQ(d.track(t).population(),
                      neighbour.popcount() + words[0].popcount() + words[1].popcount());
        }
        EXPECT_EQ(stored(d, {t, 3, 0}, 16), neighbour);
    }
}

TEST(Strategies, OneByOneGrowsLinearlyWithBatch) {
    for (std::uint32_t n = 1; n <= 8; n *= 2) {
        auto d = make_device(8, 8);
        const auto t = d.add_track();
        std::vector<TrackSlot> slots;
        std::vector<Word> words;
        for (std::uint32_t p = 0; p < n; ++p) {
            slots.push_back({t, p, 0});
            words.push_back(Word::from_u64(0xA5, 8));
        }
        EXPECT_EQ(write_one_by_one(d, Strategy::Dcw, slots, words).shift_count, n * 16u);
        EXPECT_EQ(write_shared(d, Strategy::Dcw, slots, words).shift_count, 16u);
    }
}

TEST(ReadWord, ReadsBackAndSweepsFromNearEnd) {
    DeviceConfig c;
    c.geometry.word_bits = 8;
    c.geometry.ports_per_track = 2;
    c.geometry.interport_bits = 16;
    Device d(c);
    const auto t = d.add_track();
    const auto lo = Word::from_u64(0x96, 8);
    const auto hi = Word::from_u64(0x3C, 8);
    naive_write(d, {t, 0, 0}, lo);
    naive_write(d, {t, 0, 8}, hi);
    // The last write left the track at offset 8.
    EXPECT_EQ(d.track(t).offset(), 8);
    const auto before = d.counters();
    EXPECT_EQ(read_word(d, {t, 0, 8}, 8), hi);
    const auto delta = d.counters() - before;
    EXPECT_EQ(delta.detect_count, 8u);
    EXPECT_EQ(delta.shift_count, 7u);
    EXPECT_EQ(read_word(d, {t, 0, 0}, 8), lo);
}

TEST(Interleaved, AlignThenOneStepPerOperation) {
    DeviceConfig c;
    c.geometry.word_bits = 8;
    c.geometry.ports_per_track = 2;
    c.geometry.interport_bits = 8;
    Device d(c);
    const auto first = d.add_tracks(16, 2);
    const LaneSlot key{first, 16, 0, 1, 3};
    const LaneSlot val{first, 16, 8, 1, 3};
    const LaneSlot slots[] = {key, val};
    const Word words[] = {Word::from_u64(0xF0, 8), Word::from_u64(0x0F, 8)};
    const auto w = write_interleaved(d, Strategy::Dcw, slots, words);
    EXPECT_EQ(w.shift_count, 16u * 3);
    EXPECT_EQ(w.latency_steps[mask_of(Primitive::Shift)], 3u);
    EXPECT_EQ(w.detect_count, 16u);
    EXPECT_EQ(w.latency_steps[mask_of(Primitive::Detect)], 1u);
    EXPECT_EQ(w.inject_count, 8u);

    const std::uint32_t widths[] = {8, 8};
    const auto before = d.counters();
    const auto back = read_interleaved(d, slots, widths);
    const auto delta = d.counters() - before;
    EXPECT_EQ(back[0], words[0]);
    EXPECT_EQ(back[1], words[1]);
    EXPECT_EQ(delta.shift_count, 0u);
    EXPECT_EQ(delta.detect_count, 16u);
    EXPECT_DOUBLE_EQ(accumulate_cost(delta, {}).latency_ns, 0.1);
}

TEST(Interleaved, NaiveUsesRemoveThenInjectStep) {
    DeviceConfig c;
    c.geometry.word_bits = 4;
    c.geometry.ports_per_track = 1;
    c.geometry.interport_bits = 4;
    Device d(c);
    const auto first = d.add_tracks(4, 1);
    const LaneSlot slot{first, 4, 0, 0, 0};
    const Word w1[] = {Word::from_string("1100")};
    write_interleaved(d, Strategy::Naive, std::span(&slot, 1), w1);
    const Word w2[] = {Word::from_string("0110")};
    const auto delta = write_interleaved(d, Strategy::Naive, std::span(&slot, 1), w2);
    EXPECT_EQ(delta.remove_count, 2u);
    EXPECT_EQ(delta.inject_count, 2u);
    EXPECT_DOUBLE_EQ(accumulate_cost(delta, {}).latency_ns, 0.8 + 1.0);
    EXPECT_THROW(write_interleaved(d, Strategy::Pw, std::span(&slot, 1), w2), ConfigError);
}
