#pragma once

// Divisor-closed prime sets: declarative rules, exact recursive membership,
// the Carmichael forcing closure and iterated-totient support.

#include <charconv>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "psv/arith.hpp"

namespace psv {

enum class RuleKind { omit, carmichael1, carmichael2, explicit_list };

// Which divisor-closed set is meant.
//   omit:R       largest set closed under q|(p-1) descent omitting the prime R
//                (R == 2 is the degenerate empty set)
//   carmichael1  seeds {2,3,7,13,43}; other p require p-1 squarefree
//   carmichael2  seeds {2,3,7,19,43}; other p require e3(p-1) <= 2 and all
//                other exponents 1
//   explicit:... a fixed finite set of primes
class ClosedSetRule {
public:
    static ClosedSetRule omit(u64 r) {
        if (!is_prime(r)) throw error("omit rule: r must be prime");
        ClosedSetRule rule;
        rule.kind_ = RuleKind::omit;
        rule.omitted_ = r;
        return rule;
    }
    static ClosedSetRule carmichael1() {
        ClosedSetRule rule;
        rule.kind_ = RuleKind::carmichael1;
        return rule;
    }
    static ClosedSetRule carmichael2() {
        ClosedSetRule rule;
        rule.kind_ = RuleKind::carmichael2;
        return rule;
    }
    static ClosedSetRule explicit_list(std::vector<u64> primes) {
        for (std::size_t i = 0; i < primes.size(); ++i) {
            if (!is_prime(primes[i]))
                throw error("explicit rule: all members must be prime");
            if (i > 0 && primes[i] <= primes[i - 1])
                throw error("explicit rule: members must be strictly ascending");
        }
        ClosedSetRule rule;
        rule.kind_ = RuleKind::explicit_list;
        rule.members_ = std::move(primes);
        return rule;
    }

    RuleKind kind() const { return kind_; }
    u64 omitted() const { return omitted_; }
    const std::vector<u64>& explicit_members() const { return members_; }

    // True iff the rule's set is the degenerate empty set.
    bool empty_set() const {
        return (kind_ == RuleKind::omit && omitted_ == 2) ||
               (kind_ == RuleKind::explicit_list && members_.empty());
    }

    // Canonical spec string; also the bitmap-file descriptor.
    std::string spec() const {
        switch (kind_) {
            case RuleKind::omit:
                return "omit:" + std::to_string(omitted_);
            case RuleKind::carmichael1:
                return "carmichael1";
            case RuleKind::carmichael2:
                return "carmichael2";
            case RuleKind::explicit_list: {
                std::string out = "explicit:";
                for (std::size_t i = 0; i < members_.size(); ++i) {
                    if (i) out += ',';
                    out += std::to_string(members_[i]);
                }
                return out;
            }
        }
        return {};
    }

    std::string description() const {
        switch (kind_) {
            case RuleKind::omit:
                if (omitted_ == 2) return "empty set (omits 2)";
                return "largest divisor-closed set omitting " +
                       std::to_string(omitted_);
            case RuleKind::carmichael1:
                return "Carmichael case (i) set P'";
            case RuleKind::carmichael2:
                return "Carmichael case (ii) set P''";
            case RuleKind::explicit_list:
                return "explicit set of " + std::to_string(members_.size()) +
                       " primes";
        }
        return {};
    }

    bool operator==(const ClosedSetRule& other) const {
        return kind_ == other.kind_ && omitted_ == other.omitted_ &&
               members_ == other.members_;
    }

private:
    RuleKind kind_ = RuleKind::omit;
    u64 omitted_ = 3;
    std::vector<u64> members_;
};

namespace detail {

inline u64 parse_u64_at(std::string_view text, std::size_t offset,
                        std::size_t end) {
    u64 value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + offset, text.data() + end,
                                     value);
    if (ec != std::errc() || ptr != text.data() + end)
        throw parse_error("rule spec: expected an integer", offset);
    return value;
}

}  // namespace detail

// "omit:3" | "carmichael1" | "carmichael2" | "explicit:2,5,11"
inline ClosedSetRule parse_rule(std::string_view spec) {
    if (spec == "carmichael1") return ClosedSetRule::carmichael1();
    if (spec == "carmichael2") return ClosedSetRule::carmichael2();
    if (spec.rfind("omit:", 0) == 0) {
        u64 r = detail::parse_u64_at(spec, 5, spec.size());
        if (!is_prime(r))
            throw parse_error("rule spec: omit target is not prime", 5);
        return ClosedSetRule::omit(r);
    }
    if (spec.rfind("explicit:", 0) == 0) {
        std::vector<u64> primes;
        std::size_t pos = 9;
        while (pos < spec.size()) {
            std::size_t comma = spec.find(',', pos);
            std::size_t end = comma == std::string_view::npos ? spec.size() : comma;
            if (end == pos)
                throw parse_error("rule spec: empty list entry", pos);
            u64 p = detail::parse_u64_at(spec, pos, end);
            if (!is_prime(p))
                throw parse_error("rule spec: explicit member is not prime", pos);
            if (!primes.empty() && p <= primes.back())
                throw parse_error("rule spec: members must be ascending", pos);
            primes.push_back(p);
            pos = end + (comma == std::string_view::npos ? 0 : 1);
            if (comma != std::string_view::npos && pos == spec.size())
                throw parse_error("rule spec: trailing comma", pos);
            if (comma == std::string_view::npos) break;
        }
        return ClosedSetRule::explicit_list(std::move(primes));
    }
    throw parse_error("rule spec: unknown rule '" + std::string(spec) + "'", 0);
}

// Memoized membership decisions for one rule. Behaves as a single logical
// map under concurrent queries; results are deterministic either way.
class MembershipCache {
public:
    explicit MembershipCache(ClosedSetRule rule) : rule_(std::move(rule)) {}

    const ClosedSetRule& rule() const { return rule_; }

    bool lookup(u64 p, bool& value) const {
        std::lock_guard lock(mu_);
        auto it = decided_.find(p);
        if (it == decided_.end()) return false;
        value = it->second;
        return true;
    }
    void store(u64 p, bool value) {
        std::lock_guard lock(mu_);
        decided_.emplace(p, value);
    }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return decided_.size();
    }

private:
    ClosedSetRule rule_;
    mutable std::mutex mu_;
    std::unordered_map<u64, bool> decided_;
};

namespace detail {

inline bool carmichael1_seed(u64 p) {
    return p == 2 || p == 3 || p == 7 || p == 13 || p == 43;
}
inline bool carmichael2_seed(u64 p) {
    return p == 2 || p == 3 || p == 7 || p == 19 || p == 43;
}

// Carmichael-II shape condition on p-1: exponent of 3 at most 2, every
// other prime exponent exactly 1 (covers both the squarefree case and the
// 9 | (p-1) case).
inline bool carmichael2_shape(const FactoredInteger& fac) {
    for (const auto& [q, e] : fac.factors) {
        if (q == 3) {
            if (e > 2) return false;
        } else if (e > 1) {
            return false;
        }
    }
    return true;
}

inline bool membership_recurse(const ClosedSetRule& rule, u64 p,
                               MembershipCache& cache) {
    bool cached;
    if (cache.lookup(p, cached)) return cached;

    bool result = false;
    switch (rule.kind()) {
        case RuleKind::omit: {
            u64 r = rule.omitted();
            if (r == 2) {
                result = false;
            } else if (p == r) {
                result = false;
            } else if (p < r) {
                result = true;
            } else {
                result = true;
                for (const auto& [q, e] : factorize(p - 1).factors) {
                    if (!membership_recurse(rule, q, cache)) {
                        result = false;
                        break;
                    }
                }
            }
            break;
        }
        case RuleKind::carmichael1: {
            if (carmichael1_seed(p)) {
                result = true;
            } else {
                auto fac = factorize(p - 1);
                result = fac.squarefree();
                if (result) {
                    for (const auto& [q, e] : fac.factors) {
                        if (!membership_recurse(rule, q, cache)) {
                            result = false;
                            break;
                        }
                    }
                }
            }
            break;
        }
        case RuleKind::carmichael2: {
            if (carmichael2_seed(p)) {
                result = true;
            } else {
                auto fac = factorize(p - 1);
                result = carmichael2_shape(fac);
                if (result) {
                    for (const auto& [q, e] : fac.factors) {
                        if (!membership_recurse(rule, q, cache)) {
                            result = false;
                            break;
                        }
                    }
                }
            }
            break;
        }
        case RuleKind::explicit_list: {
            const auto& members = rule.explicit_members();
            result = std::binary_search(members.begin(), members.end(), p);
            break;
        }
    }
    cache.store(p, result);
    return result;
}

}  // namespace detail

inline bool membership(const ClosedSetRule& rule, u64 p, MembershipCache& cache) {
    if (!is_prime(p)) throw error("membership: p is not prime");
    if (!(cache.rule() == rule))
        throw error("membership: cache built for a different rule");
    return detail::membership_recurse(rule, p, cache);
}

inline bool membership(const ClosedSetRule& rule, u64 p) {
    MembershipCache cache(rule);
    return membership(rule, p, cache);
}

// Exactly the members <= limit, ascending. Recursive engine; the sieve is
// the high-throughput route for large bounds.
inline std::vector<u64> enumerate_members(const ClosedSetRule& rule, u64 limit) {
    if (limit < 2) throw error("enumerate: limit must be >= 2");
    std::vector<bool> composite(limit + 1, false);
    MembershipCache cache(rule);
    std::vector<u64> out;
    for (u64 n = 2; n <= limit; ++n) {
        if (composite[n]) continue;
        if (n <= limit / n)
            for (u64 m = n * n; m <= limit; m += n) composite[m] = true;
        if (detail::membership_recurse(rule, n, cache)) out.push_back(n);
    }
    return out;
}

// Known lower bound on the exponent of one prime in the hypothetical
// counterexample; exact marks an assumption of the form p^e || a.
struct ExponentBound {
    int min_exponent = 1;
    bool exact = false;
};

struct ForcingState {
    std::map<u64, ExponentBound> exponents;

    bool operator==(const ForcingState& other) const {
        if (exponents.size() != other.exponents.size()) return false;
        for (const auto& [p, b] : exponents) {
            auto it = other.exponents.find(p);
            if (it == other.exponents.end()) return false;
            if (it->second.min_exponent != b.min_exponent ||
                it->second.exact != b.exact)
                return false;
        }
        return true;
    }
};

namespace detail {

// Enumerate candidates d with d * rad(d) dividing the known divisor, i.e.
// d = prod p^e with e + 1 <= min_exponent(p), capped at d_cap.
inline void forcing_candidates(
    const std::vector<std::pair<u64, int>>& pool, std::size_t index, u64 d,
    u64 d_cap, std::vector<u64>& out) {
    if (index == pool.size()) {
        out.push_back(d);
        return;
    }
    forcing_candidates(pool, index + 1, d, d_cap, out);
    auto [p, max_e] = pool[index];
    u64 value = d;
    for (int e = 1; e <= max_e; ++e) {
        if (value > d_cap / p) break;
        value *= p;
        forcing_candidates(pool, index + 1, value, d_cap, out);
    }
}

}  // namespace detail

// Least fixed point of the forcing rule: whenever d * rad(d) divides the
// known divisor and 1 + d is prime, 1 + d gains min_exponent >= 2.
// The empty state fires d = 1 first. Never sets exact flags.
inline ForcingState carmichael_forcing_closure(ForcingState state,
                                               u64 d_cap = 1'000'000'000) {
    for (const auto& [p, bound] : state.exponents) {
        if (!is_prime(p)) throw error("forcing state: keys must be prime");
        if (bound.min_exponent < 1)
            throw error("forcing state: exponents must be >= 1");
    }
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::pair<u64, int>> pool;
        for (const auto& [p, bound] : state.exponents)
            if (bound.min_exponent >= 2) pool.emplace_back(p, bound.min_exponent - 1);
        std::vector<u64> candidates;
        detail::forcing_candidates(pool, 0, 1, d_cap, candidates);
        for (u64 d : candidates) {
            if (d == UINT64_MAX) continue;
            u64 p = d + 1;
            if (!is_prime(p)) continue;
            auto [it, inserted] = state.exponents.emplace(p, ExponentBound{2, false});
            if (inserted) {
                changed = true;
            } else if (it->second.min_exponent < 2) {
                it->second.min_exponent = 2;
                changed = true;
            }
        }
    }
    return state;
}

// Primes dividing F(n) = prod_{k>=1} phi_k(n): unite the prime supports of
// the totient chain below n (n's own support excluded).
inline std::set<u64> f_support(u64 n) {
    if (n == 0) throw error("f_support: n must be >= 1");
    std::set<u64> out;
    u64 m = n;
    while (m > 1) {
        m = euler_phi(m);
        for (const auto& [p, e] : factorize(m).factors) out.insert(p);
    }
    return out;
}

}  // namespace psv
