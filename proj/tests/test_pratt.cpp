#include "psv/pratt.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "psv/closed_sets.hpp"

using namespace psv;

TEST(PrattTree, Leaf2) {
    auto t = build_pratt_tree(2);
    EXPECT_EQ(t->label, 2u);
    EXPECT_EQ(t->height, 1);
    EXPECT_TRUE(t->children.empty());
}

TEST(PrattTree, SevenHasChildren2And3) {
    auto t = build_pratt_tree(7);
    EXPECT_EQ(t->label, 7u);
    EXPECT_EQ(t->height, 3);
    ASSERT_EQ(t->children.size(), 2u);
    EXPECT_EQ(t->children[0]->label, 2u);
    EXPECT_EQ(t->children[1]->label, 3u);
}

TEST(PrattTree, FiveHasSingleChildDespiteSquare) {
    // 5 - 1 = 4 = 2^2: children are one per distinct prime
    auto t = build_pratt_tree(5);
    ASSERT_EQ(t->children.size(), 1u);
    EXPECT_EQ(t->children[0]->label, 2u);
    EXPECT_EQ(t->height, 2);
}

TEST(PrattTree, NotPrimeThrows) {
    EXPECT_THROW(build_pratt_tree(6), error);
    EXPECT_THROW(build_pratt_tree(1), error);
}

TEST(Height, Golden) {
    EXPECT_EQ(height(2), 1);
    EXPECT_EQ(height(3), 2);
    EXPECT_EQ(height(7), 3);
    EXPECT_EQ(height(5), 2);
    EXPECT_EQ(height(65537), 2);
}

TEST(ContainsLabel, Golden) {
    EXPECT_TRUE(contains_label(*build_pratt_tree(7), 3));
    EXPECT_FALSE(contains_label(*build_pratt_tree(5), 3));
    EXPECT_TRUE(contains_label(*build_pratt_tree(43), 3));  // 42 = 2*3*7
    EXPECT_TRUE(contains_label(*build_pratt_tree(43), 43));
    EXPECT_FALSE(contains_label(*build_pratt_tree(47), 3));  // 46 = 2*23
}

TEST(Height, MatchesIndependentRecursionUpTo1e5) {
    for (u32 p : small_primes()) {
        if (p > 100'000) break;
        int expected = 1;
        if (p != 2) {
            int best = 0;
            for (const auto& [q, e] : factorize(u64{p} - 1).factors)
                best = std::max(best, height(q));
            expected = 1 + best;
        }
        ASSERT_EQ(height(p), expected) << "p=" << p;
    }
}

namespace {

void assert_children_match(const PrattTree& node) {
    std::vector<u64> expect;
    if (node.label != 2)
        for (const auto& [q, e] : factorize(node.label - 1).factors)
            expect.push_back(q);
    ASSERT_EQ(node.children.size(), expect.size()) << "label " << node.label;
    for (std::size_t i = 0; i < expect.size(); ++i) {
        ASSERT_EQ(node.children[i]->label, expect[i]) << "label " << node.label;
        assert_children_match(*node.children[i]);
    }
}

}  // namespace

TEST(PrattTree, LabelsClosedDownward) {
    // every node's children are the distinct primes of label-1, at any depth
    for (u32 p : small_primes()) {
        if (p > 10'000) break;
        assert_children_match(*build_pratt_tree(p));
    }
}

TEST(PrattTree, MatchesOmitRuleMembership) {
    // tree of p has no node labeled r  <=>  p is a member under omit:r
    for (u64 r : {3ull, 5ull, 7ull}) {
        auto rule = ClosedSetRule::omit(r);
        MembershipCache cache(rule);
        for (u32 p : small_primes()) {
            if (p > 100'000) break;
            bool no_label = !contains_label(*build_pratt_tree(p), r);
            ASSERT_EQ(no_label, membership(rule, p, cache))
                << "p=" << p << " r=" << r;
        }
    }
}

TEST(PrattTree, ConcurrentBuildsAgree) {
    std::vector<std::thread> pool;
    std::vector<int> results(8, 0);
    for (int t = 0; t < 8; ++t) {
        pool.emplace_back([t, &results] {
            int acc = 0;
            for (u32 p : small_primes()) {
                if (p > 20'000) break;
                acc += height(p);
            }
            results[t] = acc;
        });
    }
    for (auto& th : pool) th.join();
    for (int t = 1; t < 8; ++t) EXPECT_EQ(results[t], results[0]);
}
