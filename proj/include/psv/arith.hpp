#pragma once

// Exact 64-bit integer kernel: deterministic primality, factorization,
// modular orders and group-generation predicates. All operations are pure;
// every product goes through 128-bit intermediates, so the full uint64
// range is handled exactly.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "psv/errors.hpp"
#include "psv/numeric.hpp"

namespace psv {

// An integer together with its full prime factorization.
// Invariants: value == prod(prime^exp), primes strictly increasing,
// value == 1 iff factors is empty.
struct FactoredInteger {
    u64 value = 1;
    std::vector<std::pair<u64, int>> factors;

    bool squarefree() const {
        for (const auto& [p, e] : factors)
            if (e > 1) return false;
        return true;
    }
    int exponent_of(u64 p) const {
        for (const auto& [q, e] : factors)
            if (q == p) return e;
        return 0;
    }
};

inline u64 mod_pow(u64 base, u64 exponent, u64 modulus) {
    if (modulus == 0) throw error("mod_pow: modulus must be >= 1");
    if (modulus == 1) return 0;
    u64 result = 1;
    base %= modulus;
    while (exponent > 0) {
        if (exponent & 1) result = mul_mod(result, base, modulus);
        base = mul_mod(base, base, modulus);
        exponent >>= 1;
    }
    return result;
}

namespace detail {

// One Miller-Rabin round; n odd, n > 2, d odd with n-1 = d * 2^r.
inline bool mr_witness(u64 n, u64 a, u64 d, int r) {
    u64 x = mod_pow(a, d, n);
    if (x == 1 || x == n - 1) return false;
    for (int i = 1; i < r; ++i) {
        x = mul_mod(x, x, n);
        if (x == n - 1) return false;
    }
    return true;  // a proves n composite
}

}  // namespace detail

// Deterministic for all 64-bit inputs (fixed witness set).
inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                  29ull, 31ull, 37ull}) {
        if (n % p == 0) return n == p;
    }
    if (n < 41 * 41) return true;
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++r;
    }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                  29ull, 31ull, 37ull}) {
        if (detail::mr_witness(n, a, d, r)) return false;
    }
    return true;
}

// Primes up to 10^6, built once per process.
inline const std::vector<u32>& small_primes() {
    static const std::vector<u32> primes = [] {
        constexpr u32 limit = 1'000'000;
        std::vector<bool> composite(limit + 1, false);
        std::vector<u32> out;
        for (u32 i = 2; i <= limit; ++i) {
            if (composite[i]) continue;
            out.push_back(i);
            for (u64 j = static_cast<u64>(i) * i; j <= limit; j += i)
                composite[static_cast<u32>(j)] = true;
        }
        return out;
    }();
    return primes;
}

namespace detail {

inline u64 rho_step(u64 x, u64 c, u64 n) {
    u64 t = mul_mod(x, x, n);
    u64 y = t + c;
    if (y < t || y >= n) y -= n;  // y < t catches wraparound for n near 2^64
    return y;
}

// Brent's cycle variant of Pollard rho for odd composite n.
// Deterministic: increment constants tried in a fixed order.
inline u64 pollard_rho(u64 n) {
    for (u64 c = 1;; ++c) {
        u64 x = 2, y = 2, d = 1, q = 1, ys = 2;
        u64 power = 1;
        const u64 batch = 128;
        do {
            x = y;
            for (u64 i = 0; i < power; ++i) y = rho_step(y, c, n);
            u64 k = 0;
            while (k < power && d == 1) {
                ys = y;
                u64 steps = std::min(batch, power - k);
                for (u64 i = 0; i < steps; ++i) {
                    y = rho_step(y, c, n);
                    q = mul_mod(q, x > y ? x - y : y - x, n);
                }
                d = std::gcd(q, n);
                k += steps;
            }
            power *= 2;
        } while (d == 1);
        if (d == n) {
            // gcd collapsed inside a batch; redo stepwise from the checkpoint
            d = 1;
            y = ys;
            while (d == 1) {
                y = rho_step(y, c, n);
                d = std::gcd(x > y ? x - y : y - x, n);
            }
        }
        if (d != n) return d;
    }
}

inline void factor_recurse(u64 n, std::vector<u64>& out) {
    while (n > 1) {
        if (is_prime(n)) {
            out.push_back(n);
            return;
        }
        u64 d = pollard_rho(n);
        factor_recurse(d, out);
        n /= d;
    }
}

}  // namespace detail

inline FactoredInteger factorize(u64 n) {
    if (n == 0) throw error("factorize: n must be >= 1");
    FactoredInteger result;
    result.value = n;
    if (n == 1) return result;
    for (u32 p : small_primes()) {
        if (static_cast<u64>(p) * p > n) break;
        if (n % p == 0) {
            int e = 0;
            while (n % p == 0) {
                n /= p;
                ++e;
            }
            result.factors.emplace_back(p, e);
        }
    }
    if (n > 1) {
        if (n <= 1'000'000'000'000ull || is_prime(n)) {
            // after trial division by everything <= 1e6, a cofactor <= 1e12
            // has no factor <= its square root, hence is prime
            result.factors.emplace_back(n, 1);
        } else {
            std::vector<u64> rest;
            detail::factor_recurse(n, rest);
            std::sort(rest.begin(), rest.end());
            for (std::size_t i = 0; i < rest.size();) {
                std::size_t j = i;
                while (j < rest.size() && rest[j] == rest[i]) ++j;
                result.factors.emplace_back(rest[i], static_cast<int>(j - i));
                i = j;
            }
        }
    }
    return result;
}

// Least t >= 1 with g^t = 1 mod p. Throws unless p is prime and p does not
// divide g.
inline u64 multiplicative_order(u64 g, u64 p) {
    if (!is_prime(p)) throw error("multiplicative_order: p is not prime");
    if (g % p == 0) throw error("multiplicative_order: p divides g");
    u64 t = p - 1;
    for (const auto& [q, e] : factorize(p - 1).factors) {
        while (t % q == 0 && mod_pow(g, t / q, p) == 1) t /= q;
    }
    return t;
}

inline bool is_primitive_root(u64 g, u64 p) {
    return multiplicative_order(g, p) == p - 1;
}

// True iff the subgroup of (Z/pZ)* generated by gens is the whole group:
// for every prime l | p-1, some generator must be a non-l-th-power residue.
inline bool generates_full_group(std::span<const u64> gens, u64 p) {
    if (!is_prime(p)) throw error("generates_full_group: p is not prime");
    for (u64 g : gens)
        if (g % p == 0) throw error("generates_full_group: p divides a generator");
    for (const auto& [q, e] : factorize(p - 1).factors) {
        bool escapes = false;
        for (u64 g : gens) {
            if (mod_pow(g, (p - 1) / q, p) != 1) {
                escapes = true;
                break;
            }
        }
        if (!escapes) return false;
    }
    return true;
}

inline bool generates_full_group(std::initializer_list<u64> gens, u64 p) {
    return generates_full_group(std::span<const u64>(gens.begin(), gens.size()), p);
}

// Euler's totient via factorization.
inline u64 euler_phi(u64 n) {
    if (n == 0) throw error("euler_phi: n must be >= 1");
    u64 result = n;
    for (const auto& [p, e] : factorize(n).factors) result = result / p * (p - 1);
    return result;
}

}  // namespace psv
