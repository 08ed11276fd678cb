#include "recscale/dataset/dataset.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace recscale;
using namespace recscale::dataset;
using recscale::testing::TempDir;

namespace {

Interaction ix(std::string user, std::string item, int rating, std::int64_t ts) {
    return Interaction{std::move(user), std::move(item), rating, ts};
}

ItemCatalog numbered_catalog(int n) {
    ItemCatalog c;
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "i%03d", i);
        c[id] = ItemInfo{std::string("Item ") + id, "desc"};
    }
    return c;
}

// Second implementation of the documented sampler (docs/sampling.md), kept
// separate from the library code on purpose.
struct ReferenceSampler {
    std::uint64_t s;
    std::uint64_t next() {
        s += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t t = (0 - n) % n;
        std::uint64_t x;
        do x = next();
        while (x < t);
        return x % n;
    }
};

std::vector<std::string> reference_candidates(const UserSplit& split, const ItemCatalog& catalog, std::size_t c,
                                              std::uint64_t seed) {
    std::vector<std::string> pool;
    for (const auto& [id, info] : catalog) {
        bool in_history = id == split.test.item_id;
        for (const auto& x : split.train) in_history = in_history || x.item_id == id;
        if (!in_history) pool.push_back(id);
    }
    std::sort(pool.begin(), pool.end());
    ReferenceSampler r{seed};
    for (std::size_t i = 0; i + 1 < c; ++i) std::swap(pool[i], pool[i + r.below(pool.size() - i)]);
    std::vector<std::string> out(pool.begin(), pool.begin() + static_cast<long>(c - 1));
    out.insert(out.begin() + static_cast<long>(r.below(c)), split.test.item_id);
    return out;
}

}  // namespace

TEST(LoadInteractions, ParsesThreeRecords) {
    TempDir dir;
    const auto path = dir.write("x.jsonl",
                                R"({"user":"u1","item":"a","rating":5,"timestamp":1}
{"user":"u1","item":"b","rating":2,"timestamp":2}
{"user":"u2","item":"a","rating":4,"timestamp":3}
)");
    const auto load = load_interactions(path);
    ASSERT_EQ(load.interactions.size(), 3u);
    EXPECT_EQ(load.skipped, 0u);
    std::vector<int> ratings;
    for (const auto& x : load.interactions) ratings.push_back(x.rating);
    EXPECT_EQ(ratings, (std::vector<int>{5, 2, 4}));
}

TEST(LoadInteractions, SkipsMalformedLineWithLineNumber) {
    TempDir dir;
    std::string content;
    for (int i = 0; i < 10; ++i) {
        if (i == 6) {
            content += R"({"user":"u","item":"x","rating":9,"timestamp":1})" "\n";
        } else {
            content += R"({"user":"u","item":"i)" + std::to_string(i) + R"(","rating":3,"timestamp":)" +
                       std::to_string(i) + "}\n";
        }
    }
    const auto load = load_interactions(dir.write("x.jsonl", content));
    EXPECT_EQ(load.interactions.size(), 9u);
    EXPECT_EQ(load.skipped, 1u);
    ASSERT_EQ(load.errors.size(), 1u);
    EXPECT_EQ(load.errors[0].line, 7u);
}

TEST(LoadInteractions, RejectsBadJsonMissingKeysAndNegativeTimestamps) {
    TempDir dir;
    const auto load = load_interactions(dir.write("x.jsonl",
                                                  "{not json\n"
                                                  R"({"user":"u","item":"a","rating":3})" "\n"
                                                  R"({"user":"u","item":"a","rating":3,"timestamp":-5})" "\n"
                                                  R"({"user":"u","item":"a","rating":3.0,"timestamp":5.0})" "\n"));
    EXPECT_EQ(load.interactions.size(), 1u);
    EXPECT_EQ(load.skipped, 3u);
}

TEST(LoadInteractions, MissingFileThrows) {
    EXPECT_THROW(load_interactions("/nonexistent/file.jsonl"), DatasetError);
}

TEST(LoadCatalog, ReadsTitlesAndFlagsUnresolvedItems) {
    TempDir dir;
    const auto load = load_catalog(dir.write("c.jsonl", R"({"item":"a","title":"Alpha","description":"first"}
{"item":"b","title":"Beta"}
{"item":"c"}
)"));
    EXPECT_EQ(load.catalog.size(), 2u);
    EXPECT_EQ(load.skipped, 1u);
    EXPECT_EQ(load.catalog.at("a").description, "first");
    const auto missing = missing_catalog_items({ix("u", "a", 5, 1), ix("u", "z", 5, 2)}, load.catalog);
    EXPECT_EQ(missing, std::vector<std::string>{"z"});
}

TEST(BuildSplits, LastInteractionIsTest) {
    const auto r = build_splits({ix("u", "c", 5, 3), ix("u", "a", 4, 1), ix("u", "b", 3, 2)}, 2);
    ASSERT_EQ(r.splits.size(), 1u);
    ASSERT_EQ(r.splits[0].train.size(), 2u);
    EXPECT_EQ(r.splits[0].train[0].item_id, "a");
    EXPECT_EQ(r.splits[0].train[1].item_id, "b");
    EXPECT_EQ(r.splits[0].test.item_id, "c");
}

TEST(BuildSplits, DropsUsersBelowMinHistory) {
    const auto r = build_splits({ix("solo", "a", 5, 1), ix("u", "a", 5, 1), ix("u", "b", 5, 2)}, 2);
    ASSERT_EQ(r.splits.size(), 1u);
    EXPECT_EQ(r.splits[0].user_id, "u");
    EXPECT_EQ(r.dropped_users, 1u);
    EXPECT_THROW(build_splits({}, 1), DatasetError);
}

TEST(BuildSplits, EqualTimestampsOrderedByItemId) {
    // Both events at t=7: ascending item id puts "m" before "z", so "z" is the
    // held-out item regardless of input order.
    for (bool swapped : {false, true}) {
        std::vector<Interaction> xs{ix("u", "z", 5, 7), ix("u", "m", 2, 7)};
        if (swapped) std::swap(xs[0], xs[1]);
        const auto r = build_splits(xs, 2);
        ASSERT_EQ(r.splits.size(), 1u);
        EXPECT_EQ(r.splits[0].train.front().item_id, "m");
        EXPECT_EQ(r.splits[0].test.item_id, "z");
    }
}

TEST(BuildSplits, RepeatItemCollapsesToLatestEvent) {
    const auto r = build_splits({ix("u", "a", 2, 1), ix("u", "b", 4, 2), ix("u", "a", 5, 3)}, 2);
    ASSERT_EQ(r.splits.size(), 1u);
    EXPECT_EQ(r.collapsed_repeats, 1u);
    EXPECT_EQ(r.splits[0].test.item_id, "a");
    for (const auto& x : r.splits[0].train) EXPECT_NE(x.item_id, "a");
}

TEST(BuildSplits, PropertiesOnRandomLogs) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Interaction> xs;
        const int n = 5 + static_cast<int>(gen() % 200);
        for (int i = 0; i < n; ++i) {
            xs.push_back(ix("u" + std::to_string(gen() % 12), "i" + std::to_string(gen() % 40),
                            1 + static_cast<int>(gen() % 5), static_cast<std::int64_t>(gen() % 30)));
        }
        const auto r = build_splits(xs, 3);
        for (const auto& s : r.splits) {
            ASSERT_FALSE(s.train.empty());
            for (const auto& x : s.train) {
                EXPECT_NE(x.item_id, s.test.item_id);
                EXPECT_LE(x.timestamp, s.test.timestamp);
            }
            EXPECT_TRUE(std::is_sorted(s.train.begin(), s.train.end(), [](const auto& a, const auto& b) {
                return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.item_id < b.item_id;
            }));
        }
        // Idempotent on its own flattened output.
        const auto again = build_splits(flatten(r.splits), 3);
        EXPECT_EQ(again.splits, r.splits);
        EXPECT_EQ(again.dropped_users, 0u);
    }
}

TEST(PartitionPreferences, ThresholdCases) {
    UserSplit s{"u", {ix("u", "a", 5, 1), ix("u", "b", 4, 2), ix("u", "c", 2, 3)}, ix("u", "d", 5, 4)};
    auto p = partition_preferences(s, 4);
    EXPECT_EQ(p.liked.size(), 2u);
    EXPECT_EQ(p.disliked.size(), 1u);

    UserSplit all5{"u", {ix("u", "a", 5, 1), ix("u", "b", 5, 2)}, ix("u", "d", 5, 4)};
    EXPECT_TRUE(partition_preferences(all5, 4).disliked.empty());

    p = partition_preferences(s, 1);
    EXPECT_TRUE(p.disliked.empty());
    EXPECT_EQ(p.liked.size() + p.disliked.size(), s.train.size());

    EXPECT_THROW(partition_preferences(s, 0), DatasetError);
    EXPECT_THROW(partition_preferences(s, 6), DatasetError);
}

TEST(SampleCandidates, ForcedSetIsWholeCatalogPermuted) {
    UserSplit s{"u", {ix("u", "h1", 5, 1)}, ix("u", "i000", 5, 2)};
    auto catalog = numbered_catalog(20);
    catalog["h1"] = {"History", ""};
    const auto cs = sample_candidates(s, catalog, 20, 99);
    std::set<std::string> got(cs.candidates.begin(), cs.candidates.end());
    EXPECT_EQ(got.size(), 20u);
    EXPECT_FALSE(got.contains("h1"));
    EXPECT_TRUE(got.contains("i000"));
}

TEST(SampleCandidates, DeterministicGivenSeed) {
    UserSplit s{"u", {ix("u", "i001", 5, 1)}, ix("u", "i002", 5, 2)};
    const auto catalog = numbered_catalog(100);
    EXPECT_EQ(sample_candidates(s, catalog, 20, 5), sample_candidates(s, catalog, 20, 5));
    EXPECT_NE(sample_candidates(s, catalog, 20, 5).candidates, sample_candidates(s, catalog, 20, 6).candidates);
}

TEST(SampleCandidates, MatchesIndependentSamplerOn50ItemCatalog) {
    UserSplit s{"u", {ix("u", "i003", 5, 1), ix("u", "i017", 2, 2), ix("u", "i040", 4, 3)}, ix("u", "i021", 5, 4)};
    const auto catalog = numbered_catalog(50);
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL, ~0ULL}) {
        EXPECT_EQ(sample_candidates(s, catalog, 20, seed).candidates, reference_candidates(s, catalog, 20, seed))
            << "seed " << seed;
    }
}

TEST(SampleCandidates, InvariantsOnRandomUsers) {
    std::mt19937_64 gen(3);
    const auto catalog = numbered_catalog(60);
    std::vector<std::string> ids;
    for (const auto& [id, info] : catalog) ids.push_back(id);
    std::vector<std::size_t> position_counts(20, 0);
    for (int t = 0; t < 400; ++t) {
        std::shuffle(ids.begin(), ids.end(), gen);
        UserSplit s;
        s.user_id = "u";
        const int hist = 1 + static_cast<int>(gen() % 30);
        for (int i = 0; i < hist; ++i) s.train.push_back(ix("u", ids[i], 3, i));
        s.test = ix("u", ids[hist], 4, hist);
        const auto cs = sample_candidates(s, catalog, 20, gen());
        ASSERT_EQ(cs.candidates.size(), 20u);
        EXPECT_EQ(std::count(cs.candidates.begin(), cs.candidates.end(), s.test.item_id), 1);
        std::set<std::string> uniq(cs.candidates.begin(), cs.candidates.end());
        EXPECT_EQ(uniq.size(), 20u);
        for (const auto& c : cs.candidates) {
            for (const auto& x : s.train) EXPECT_NE(c, x.item_id);
        }
        ++position_counts[static_cast<std::size_t>(
            std::find(cs.candidates.begin(), cs.candidates.end(), s.test.item_id) - cs.candidates.begin())];
    }
    // The ground truth is not pinned to one slot.
    EXPECT_LT(*std::max_element(position_counts.begin(), position_counts.end()), 60u);
}

TEST(SampleCandidates, InsufficientCatalogThrows) {
    UserSplit s{"u", {ix("u", "i001", 5, 1)}, ix("u", "i002", 5, 2)};
    EXPECT_THROW(sample_candidates(s, numbered_catalog(10), 20, 1), DatasetError);
}

TEST(SplitJson, RoundTrips) {
    UserSplit s{"u", {ix("u", "a", 5, 1), ix("u", "b", 2, 2)}, ix("u", "c", 4, 3)};
    EXPECT_EQ(split_from_json(to_json(s)), s);
}
