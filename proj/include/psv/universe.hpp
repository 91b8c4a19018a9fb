#pragma once

// The bounded universe P ∩ [2, X]: a classified bitmap plus the member
// list and heights. Divisor-closed by construction (every q | (p-1) is
// < p <= X), so set-level definitions instantiate exactly.

#include <limits>
#include <unordered_map>

#include "psv/pratt.hpp"
#include "psv/sieve.hpp"

namespace psv {

inline constexpr int height_infinity = std::numeric_limits<int>::max();

class BoundedUniverse {
public:
    static BoundedUniverse from_bitmap(MembershipBitmap bitmap) {
        BoundedUniverse u(std::move(bitmap));
        u.index_members();
        return u;
    }

    static BoundedUniverse build(const ClosedSetRule& rule, u64 X,
                                 const SieveOptions& options = {}) {
        return from_bitmap(classify_range(rule, X, options));
    }

    const ClosedSetRule& rule() const { return bitmap_.rule(); }
    u64 bound() const { return bitmap_.bound(); }
    const MembershipBitmap& bitmap() const { return bitmap_; }
    const std::vector<u64>& members() const { return members_; }

    bool is_member(u64 p) const { return bitmap_.contains(p); }

    int height_of(u64 p) const {
        auto it = heights_.find(p);
        if (it == heights_.end())
            throw error("height_of: " + std::to_string(p) + " is not a member");
        return it->second;
    }

private:
    explicit BoundedUniverse(MembershipBitmap bitmap)
        : bitmap_(std::move(bitmap)) {}

    // Ascending pass: every q | (p-1) is a member with known height.
    void index_members() {
        if (bitmap_.has_two()) {
            members_.push_back(2);
            heights_.emplace(2, 1);
        }
        for (u64 p = 3; p <= bitmap_.bound(); p += 2) {
            if (!bitmap_.contains(p)) continue;
            int best = 0;
            for (const auto& [q, e] : factorize(p - 1).factors) {
                auto it = heights_.find(q);
                int hq = it != heights_.end() ? it->second : height(q);
                best = std::max(best, hq);
            }
            members_.push_back(p);
            heights_.emplace(p, 1 + best);
        }
    }

    MembershipBitmap bitmap_;
    std::vector<u64> members_;
    std::unordered_map<u64, int> heights_;
};

}  // namespace psv
