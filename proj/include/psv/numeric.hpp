#pragma once

#include <cmath>
#include <cstdint>

namespace psv {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Neumaier-compensated accumulator. Used wherever a sum feeds a reported
// value, so results do not depend on how work is partitioned.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// floor(sqrt(n)), exact for the full 64-bit range.
inline u64 isqrt(u64 n) {
    if (n == 0) return 0;
    u64 r = static_cast<u64>(__builtin_sqrtl(static_cast<long double>(n)));
    while (r > 0 && r > n / r) --r;
    while ((r + 1) <= n / (r + 1)) ++r;
    return r;
}

inline u64 mul_mod(u64 a, u64 b, u64 m) {
    return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

// Modular inverse of a mod m for gcd(a, m) = 1, m >= 1.
inline u64 inv_mod(u64 a, u64 m) {
    __int128 x0 = 1, x1 = 0;
    __int128 r0 = a % m, r1 = m;
    while (r1 != 0) {
        __int128 q = r0 / r1;
        __int128 t = x0 - q * x1;
        x0 = x1;
        x1 = t;
        t = r0 - q * r1;
        r0 = r1;
        r1 = t;
    }
    __int128 mm = m;
    x0 %= mm;
    if (x0 < 0) x0 += mm;
    return static_cast<u64>(x0);
}

}  // namespace psv
