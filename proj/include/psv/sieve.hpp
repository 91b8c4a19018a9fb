#pragma once

// Segmented factorizing sieve: classifies every prime <= X under a rule in
// one ascending pass, with counting checkpoints and growth-exponent fits.
//
// The kernel factorizes whole segments (every n, not just primes) by
// dividing out base primes <= sqrt(hi); classification then reads the
// factor list of p-1 directly. Factorization of a segment parallelizes
// over fixed-size chunks; the classify pass commits bits strictly in
// ascending order, so results are identical for any thread count and any
// segment size.

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <span>
#include <thread>
#include <vector>

#include "psv/closed_sets.hpp"

namespace psv {

struct SieveOptions {
    u64 segment_size = 1ull << 20;
    unsigned threads = 0;             // 0 = hardware concurrency
    u64 memory_cap_bytes = 0;         // 0 = uncapped; else bitmap guard
    u64 max_bound = 10'000'000'000ull;  // raise explicitly for larger runs
};

// Random-access membership of primes <= bound: one bit per odd integer,
// the prime 2 flagged separately. Bit set implies prime and member.
class MembershipBitmap {
public:
    MembershipBitmap(ClosedSetRule rule, u64 bound)
        : rule_(std::move(rule)),
          bound_(bound),
          words_(bound / 2 / 64 + 1, 0) {}

    const ClosedSetRule& rule() const { return rule_; }
    u64 bound() const { return bound_; }

    bool contains(u64 n) const {
        if (n == 2) return two_;
        if (n < 3 || n > bound_ || (n & 1) == 0) return false;
        u64 i = n >> 1;
        return (words_[i >> 6] >> (i & 63)) & 1;
    }

    void set(u64 n) {
        if (n == 2) {
            two_ = true;
            return;
        }
        u64 i = n >> 1;
        words_[i >> 6] |= 1ull << (i & 63);
    }

    bool has_two() const { return two_; }
    void set_two(bool v) { two_ = v; }
    const std::vector<u64>& words() const { return words_; }
    std::vector<u64>& words() { return words_; }

    bool same_membership(const MembershipBitmap& other) const {
        return bound_ == other.bound_ && two_ == other.two_ &&
               words_ == other.words_;
    }

private:
    ClosedSetRule rule_;
    u64 bound_;
    bool two_ = false;
    std::vector<u64> words_;
};

struct CountCheckpoint {
    u64 x = 0;
    u64 count = 0;
};

struct ExponentFit {
    std::vector<CountCheckpoint> used;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS in log2 space
};

namespace detail {

// Packed factor slot: prime in the low 56 bits, exponent in the high 8.
constexpr int kFactorSlots = 15;  // a 64-bit value has <= 15 distinct primes
constexpr u64 kPrimeMask = (1ull << 56) - 1;
constexpr u64 kPackLimit = 1ull << 56;

inline u64 pack_factor(u64 p, int e) {
    return p | (static_cast<u64>(e) << 56);
}
inline u64 packed_prime(u64 slot) { return slot & kPrimeMask; }
inline int packed_exp(u64 slot) { return static_cast<int>(slot >> 56); }

inline std::vector<u32> primes_up_to(u64 limit) {
    std::vector<u32> out;
    if (limit < 2) return out;
    std::vector<bool> composite(limit + 1, false);
    for (u64 i = 2; i <= limit; ++i) {
        if (composite[i]) continue;
        out.push_back(static_cast<u32>(i));
        for (u64 j = i * i; j <= limit; j += i) composite[j] = true;
    }
    return out;
}

// Factor lists for one contiguous range [lo, hi).
struct SegmentScratch {
    u64 lo = 0, hi = 0;
    std::vector<u64> remaining;
    std::vector<unsigned char> counts;
    std::vector<u64> slots;

    void prepare(u64 lo_, u64 hi_) {
        lo = lo_;
        hi = hi_;
        std::size_t n = static_cast<std::size_t>(hi - lo);
        if (remaining.size() < n) {
            remaining.resize(n);
            counts.resize(n);
            slots.resize(n * kFactorSlots);
        }
    }

    std::span<const u64> factors_of(u64 n) const {
        std::size_t idx = static_cast<std::size_t>(n - lo);
        return {slots.data() + idx * kFactorSlots, counts[idx]};
    }

    bool is_prime_at(u64 n) const {
        std::size_t idx = static_cast<std::size_t>(n - lo);
        return counts[idx] == 1 && slots[idx * kFactorSlots] == pack_factor(n, 1);
    }
};

// Fills scratch for indices covering [lo, hi) (a sub-chunk of scratch's
// range). bases must contain every prime <= sqrt(hi - 1).
inline void factor_chunk(u64 lo, u64 hi, SegmentScratch& s,
                         std::span<const u32> bases) {
    u64 base_off = s.lo;
    for (u64 n = lo; n < hi; ++n) {
        std::size_t idx = static_cast<std::size_t>(n - base_off);
        s.remaining[idx] = n;
        s.counts[idx] = 0;
    }
    u64 top = hi - 1;
    for (u32 p : bases) {
        u64 pp = static_cast<u64>(p) * p;
        if (pp > top) break;
        u64 start = (lo + p - 1) / p * p;
        if (start < p) start = p;
        for (u64 m = start; m < hi; m += p) {
            std::size_t idx = static_cast<std::size_t>(m - base_off);
            u64 r = s.remaining[idx];
            int e = 0;
            while (r % p == 0) {
                r /= p;
                ++e;
            }
            s.remaining[idx] = r;
            s.slots[idx * kFactorSlots + s.counts[idx]++] = pack_factor(p, e);
        }
    }
    for (u64 n = lo; n < hi; ++n) {
        std::size_t idx = static_cast<std::size_t>(n - base_off);
        u64 r = s.remaining[idx];
        if (r > 1)
            s.slots[idx * kFactorSlots + s.counts[idx]++] = pack_factor(r, 1);
    }
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Parallel factorization of [lo, hi) into scratch. The chunk grid is fixed
// (independent of thread count); each n's factor list is computed by
// exactly one chunk, so the contents never depend on scheduling.
inline void factor_segment_into(u64 lo, u64 hi, SegmentScratch& s,
                                std::span<const u32> bases, unsigned threads) {
    s.prepare(lo, hi);
    constexpr u64 kChunk = 1ull << 16;
    unsigned t = resolve_threads(threads);
    if (t <= 1 || hi - lo <= kChunk) {
        factor_chunk(lo, hi, s, bases);
        return;
    }
    std::atomic<u64> next{lo};
    auto worker = [&] {
        for (;;) {
            u64 c_lo = next.fetch_add(kChunk);
            if (c_lo >= hi) return;
            factor_chunk(c_lo, std::min(hi, c_lo + kChunk), s, bases);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

inline bool rule_admits_two(const ClosedSetRule& rule) {
    switch (rule.kind()) {
        case RuleKind::omit:
            return rule.omitted() != 2;
        case RuleKind::carmichael1:
        case RuleKind::carmichael2:
            return true;
        case RuleKind::explicit_list: {
            const auto& m = rule.explicit_members();
            return std::binary_search(m.begin(), m.end(), u64{2});
        }
    }
    return false;
}

// Membership of odd prime p given the packed factor list of p-1 and the
// bitmap of all smaller decisions. Ascending order makes this exact.
inline bool classify_prime(const ClosedSetRule& rule, u64 p,
                           std::span<const u64> pm1_factors,
                           const MembershipBitmap& bitmap) {
    auto all_members = [&] {
        for (u64 slot : pm1_factors) {
            u64 q = packed_prime(slot);
            if (q == 2) {
                if (!bitmap.has_two()) return false;
            } else if (!bitmap.contains(q)) {
                return false;
            }
        }
        return true;
    };
    switch (rule.kind()) {
        case RuleKind::omit:
            if (rule.omitted() == 2 || p == rule.omitted()) return false;
            return all_members();
        case RuleKind::carmichael1: {
            if (detail::carmichael1_seed(p)) return true;
            for (u64 slot : pm1_factors)
                if (packed_exp(slot) > 1) return false;
            return all_members();
        }
        case RuleKind::carmichael2: {
            if (detail::carmichael2_seed(p)) return true;
            for (u64 slot : pm1_factors) {
                int cap = packed_prime(slot) == 3 ? 2 : 1;
                if (packed_exp(slot) > cap) return false;
            }
            return all_members();
        }
        case RuleKind::explicit_list: {
            const auto& m = rule.explicit_members();
            return std::binary_search(m.begin(), m.end(), p);
        }
    }
    return false;
}

}  // namespace detail

// Full factorization of every n in [lo, hi).
inline std::vector<FactoredInteger> factorize_segment(
    u64 lo, u64 hi, const SieveOptions& options = {}) {
    if (lo < 2 || lo >= hi) throw error("factorize_segment: need 2 <= lo < hi");
    if (hi - lo > options.segment_size)
        throw error("factorize_segment: range exceeds configured segment size");
    if (hi - 1 >= detail::kPackLimit)
        throw resource_error("factorize_segment: values above 2^56 unsupported");
    auto bases = detail::primes_up_to(isqrt(hi - 1));
    detail::SegmentScratch scratch;
    detail::factor_segment_into(lo, hi, scratch, bases, options.threads);
    std::vector<FactoredInteger> out;
    out.reserve(static_cast<std::size_t>(hi - lo));
    for (u64 n = lo; n < hi; ++n) {
        FactoredInteger f;
        f.value = n;
        for (u64 slot : scratch.factors_of(n))
            f.factors.emplace_back(detail::packed_prime(slot),
                                   detail::packed_exp(slot));
        out.push_back(std::move(f));
    }
    return out;
}

// Classify every prime p <= X under the rule, ascending. Relies on every
// q | (p-1) being < p, hence already committed to the bitmap.
inline MembershipBitmap classify_range(const ClosedSetRule& rule, u64 X,
                                       const SieveOptions& options = {}) {
    if (X < 2) throw error("classify_range: X must be >= 2");
    if (X > options.max_bound)
        throw resource_error(
            "classify_range: bound exceeds configured cap; raise max_bound");
    if (X >= detail::kPackLimit)
        throw resource_error("classify_range: bounds above 2^56 unsupported");
    u64 bitmap_bytes = (X / 2 / 64 + 1) * 8;
    if (options.memory_cap_bytes && bitmap_bytes > options.memory_cap_bytes)
        throw resource_error("classify_range: bitmap exceeds memory cap");

    MembershipBitmap bitmap(rule, X);
    if (detail::rule_admits_two(rule)) bitmap.set(2);
    if (X == 2) return bitmap;

    auto bases = detail::primes_up_to(isqrt(X));
    detail::SegmentScratch scratch;
    u64 span = std::max<u64>(options.segment_size, 2);
    for (u64 seg_lo = 3; seg_lo <= X; seg_lo += span) {
        u64 seg_hi = std::min(X + 1, seg_lo + span);
        detail::factor_segment_into(seg_lo - 1, seg_hi, scratch, bases,
                                    options.threads);
        for (u64 p = seg_lo | 1; p < seg_hi; p += 2) {
            if (!scratch.is_prime_at(p)) continue;
            if (detail::classify_prime(rule, p, scratch.factors_of(p - 1),
                                       bitmap))
                bitmap.set(p);
        }
    }
    return bitmap;
}

// Exact member counts at each checkpoint (ascending, <= bound).
inline std::vector<CountCheckpoint> count_members(
    const MembershipBitmap& bitmap, std::span<const u64> checkpoints) {
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (checkpoints[i] > bitmap.bound())
            throw error("count_members: checkpoint beyond bitmap bound");
        if (i > 0 && checkpoints[i] < checkpoints[i - 1])
            throw error("count_members: checkpoints must be ascending");
    }
    std::vector<CountCheckpoint> out;
    out.reserve(checkpoints.size());
    const auto& words = bitmap.words();
    u64 cum = 0;
    std::size_t word = 0;
    for (u64 x : checkpoints) {
        if (x < 2) {
            out.push_back({x, 0});
            continue;
        }
        u64 max_index = (x - 1) >> 1;  // odd n <= x  <=>  index (n-1)/2 <= (x-1)/2
        u64 full_words = max_index / 64;
        while (word < full_words && word < words.size())
            cum += std::popcount(words[word++]);
        u64 count = cum;
        if (word < words.size()) {
            unsigned rem = static_cast<unsigned>(max_index % 64);
            u64 mask = rem == 63 ? ~0ull : ((1ull << (rem + 1)) - 1);
            count += std::popcount(words[word] & mask);
        }
        if (x >= 2 && bitmap.has_two()) ++count;
        out.push_back({x, count});
    }
    return out;
}

// Powers of two from 2^10 up to bound.
inline std::vector<u64> pow2_checkpoints(u64 bound) {
    std::vector<u64> out;
    for (int k = 10; k < 64 && (1ull << k) <= bound; ++k)
        out.push_back(1ull << k);
    return out;
}

// Least-squares slope of log2(count) against log2(x) over checkpoints in
// [x_min, x_max] with count >= 1.
inline ExponentFit fit_exponent(std::span<const CountCheckpoint> checkpoints,
                                u64 x_min, u64 x_max) {
    ExponentFit fit;
    for (const auto& cp : checkpoints)
        if (cp.x >= x_min && cp.x <= x_max && cp.count >= 1)
            fit.used.push_back(cp);
    if (fit.used.size() < 2)
        throw error("fit_exponent: need at least 2 usable checkpoints");
    double n = static_cast<double>(fit.used.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& cp : fit.used) {
        double lx = std::log2(static_cast<double>(cp.x));
        double ly = std::log2(static_cast<double>(cp.count));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0;
    for (const auto& cp : fit.used) {
        double lx = std::log2(static_cast<double>(cp.x));
        double ly = std::log2(static_cast<double>(cp.count));
        double r = ly - (fit.slope * lx + fit.intercept);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

}  // namespace psv
