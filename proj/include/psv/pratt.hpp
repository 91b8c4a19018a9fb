#pragma once

// Pratt trees: the recursive p-1 certificate structure of a prime, with the
// height function used to stratify divisor-closed sets by level.

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "psv/arith.hpp"

namespace psv {

struct PrattTree;
using PrattTreePtr = std::shared_ptr<const PrattTree>;

// Node for a prime p. Children are the trees of the distinct primes
// dividing p-1, ascending. label == 2 iff children empty iff height == 1.
struct PrattTree {
    u64 label = 2;
    int height = 1;
    std::vector<PrattTreePtr> children;
};

namespace detail {

struct PrattForest {
    std::mutex mu;
    std::unordered_map<u64, PrattTreePtr> memo;
};

inline PrattForest& pratt_forest() {
    static PrattForest forest;
    return forest;
}

inline PrattTreePtr build_pratt_memo(u64 p) {
    auto& forest = pratt_forest();
    {
        std::lock_guard lock(forest.mu);
        auto it = forest.memo.find(p);
        if (it != forest.memo.end()) return it->second;
    }
    auto node = std::make_shared<PrattTree>();
    node->label = p;
    if (p != 2) {
        for (const auto& [q, e] : factorize(p - 1).factors)
            node->children.push_back(build_pratt_memo(q));
        int best = 0;
        for (const auto& child : node->children)
            best = std::max(best, child->height);
        node->height = 1 + best;
    }
    std::lock_guard lock(forest.mu);
    auto [it, inserted] = forest.memo.emplace(p, std::move(node));
    return it->second;  // keeps the first entry if another thread raced us
}

}  // namespace detail

inline PrattTreePtr build_pratt_tree(u64 p) {
    if (!is_prime(p)) throw error("build_pratt_tree: p is not prime");
    return detail::build_pratt_memo(p);
}

// H(2) = 1, H(p) = 1 + max over distinct q | (p-1) of H(q).
inline int height(u64 p) { return build_pratt_tree(p)->height; }

inline bool contains_label(const PrattTree& tree, u64 r) {
    if (tree.label == r) return true;
    for (const auto& child : tree.children)
        if (contains_label(*child, r)) return true;
    return false;
}

}  // namespace psv
