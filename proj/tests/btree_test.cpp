#include <gtest/gtest.h>

#include <map>
#include <random>

#include <skrm/btree.hpp>
#include <skrm/error.hpp>
#include <skrm/workload.hpp>

using namespace skrm;

namespace {
Word key(std::uint64_t v) { return Word::from_u64(v, 64); }
} // namespace

TEST(BTree, SingleInsertIsOneWrite) {
    BTree t;
    EXPECT_EQ(t.insert(key(1), key(10)), 1u);
    EXPECT_EQ(t.stats().kv_writes, 1u);
    EXPECT_EQ(t.find(key(1)), key(10));
}

TEST(BTree, OverwriteIsOneWrite) {
    BTree t;
    t.insert(key(1), key(10));
    EXPECT_EQ(t.insert(key(1), key(11)), 1u);
    EXPECT_EQ(t.find(key(1)), key(11));
    EXPECT_EQ(t.size(), 1u);
}

TEST(BTree, LeafSplitMovesHalfAndMedian) {
    BTree t(16);
    for (std::uint64_t i = 0; i < 16; ++i) {
        ASSERT_EQ(t.insert(key(i), key(i)), 1u);
    }
    // The new pair, the 8 pairs moved to the new sibling and the median
    // promoted into the new root.
    EXPECT_EQ(t.insert(key(16), key(16)), 1u + 8 + 1);
    EXPECT_EQ(t.height(), 2u);
    EXPECT_EQ(t.stats().splits, 1u);
    t.audit();
}

TEST(BTree, RejectsTinyNodes) { EXPECT_THROW(BTree(2), ConfigError); }

TEST(BTree, RandomisedOracleAndAudit) {
    BTree t(5);
    std::map<std::uint64_t, std::uint64_t> oracle;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20000; ++i) {
        const auto k = rng() % 5000;
        const auto v = rng();
        t.insert(key(k), key(v));
        oracle[k] = v;
        if (i % 1000 == 0) {
            t.audit();
        }
    }
    t.audit();
    EXPECT_EQ(t.size(), oracle.size());
    for (const auto& [k, v] : oracle) {
        ASSERT_EQ(t.find(key(k)), key(v));
    }
    EXPECT_FALSE(t.find(key(999999)).has_value());
    EXPECT_GE(t.stats().kv_writes, t.stats().inserts);
}

TEST(WriteCount, SingleInsertRatioIsOne) {
    const auto p = write_count_experiment(1, 42);
    EXPECT_EQ(p.btree_writes, 1u);
    EXPECT_EQ(p.betree_writes, 1u);
    EXPECT_DOUBLE_EQ(p.ratio, 1.0);
}

TEST(WriteCount, RejectsEmptyRun) { EXPECT_THROW(write_count_experiment(0, 42), ConfigError); }

TEST(WriteCount, Deterministic) {
    const auto a = write_count_experiment(5000, 9);
    const auto b = write_count_experiment(5000, 9);
    EXPECT_EQ(a.btree_writes, b.btree_writes);
    EXPECT_EQ(a.betree_writes, b.betree_writes);
}

TEST(WriteCount, CurveIsCumulativeAndRatioGrows) {
    for (auto metric : {WriteMetric::KvWrites, WriteMetric::SlotRewrites}) {
        WriteCountOptions o;
        o.metric = metric;
        const auto curve = write_count_curve({1000, 10000, 100000}, 42, o);
        ASSERT_EQ(curve.size(), 3u);
        const auto single = write_count_experiment(10000, 42, o);
        EXPECT_EQ(curve[1].btree_writes, single.btree_writes);
        EXPECT_EQ(curve[1].betree_writes, single.betree_writes);
        for (std::size_t i = 0; i < curve.size(); ++i) {
            EXPECT_GE(curve[i].ratio, 1.0);
            if (i > 0) {
                EXPECT_GT(curve[i].ratio, curve[i - 1].ratio);
                EXPECT_GT(curve[i].btree_writes, curve[i - 1].btree_writes);
            }
        }
    }
}
