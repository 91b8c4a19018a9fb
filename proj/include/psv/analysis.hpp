#pragma once

// Numerical realization of the series/matrix machinery over a bounded
// universe: V_h(s), the T_h sets and the tilde/bar partition, residue sets
// U_Q, congruence matrices M_{s,j,Q}, column-sum closed forms, and the
// certificate-style lemma checks.
//
// Semantics: P is everywhere the bounded set P ∩ [2, X]. Sums over the
// multiplicative sets T are truncated at n_cap and reported as lower
// bounds; products over members are exact within the universe.

#include <cmath>
#include <numeric>

#include "psv/matrix.hpp"
#include "psv/universe.hpp"

namespace psv {

// A truncated nonnegative sum: nondecreasing in n_cap; lower_bound_only
// marks values whose untruncated counterpart may be strictly larger.
struct TruncatedValue {
    double value = 0.0;
    u64 n_cap = 0;
    bool lower_bound_only = true;
};

// 1 / (2^s - 1) on (0, 1].
inline double lambda(double s) {
    if (!(s > 0.0) || s > 1.0)
        throw error("lambda: s must lie in (0, 1]");
    return 1.0 / (std::exp2(s) - 1.0);
}

namespace detail {

inline double inv_pow(u64 n, double s) {
    return s == 1.0 ? 1.0 / static_cast<double>(n)
                    : std::pow(static_cast<double>(n), -s);
}

inline void check_s(double s) {
    if (!(s > 0.0) || s > 1.0) throw error("s must lie in (0, 1]");
}

}  // namespace detail

// True iff every prime factor of n is a member with height <= h.
inline bool t_h_member(const BoundedUniverse& universe, int h, u64 n) {
    if (n == 0) throw error("t_h_member: n must be >= 1");
    if (n == 1) return true;
    for (const auto& [q, e] : factorize(n).factors) {
        if (!universe.is_member(q)) return false;
        if (h != height_infinity && universe.height_of(q) > h) return false;
    }
    return true;
}

// Bulk T_h membership flags for 1..n_cap (index 0 unused, flags[1] = 1).
inline std::vector<unsigned char> t_h_flags(const BoundedUniverse& universe,
                                            int h, u64 n_cap,
                                            unsigned threads = 0) {
    if (n_cap < 1) throw error("t_h_flags: n_cap must be >= 1");
    if (n_cap > universe.bound())
        throw error("t_h_flags: n_cap exceeds the universe bound");
    std::vector<unsigned char> flags(n_cap + 1, 0);
    flags[1] = 1;
    if (n_cap == 1) return flags;
    auto bases = detail::primes_up_to(isqrt(n_cap));
    detail::SegmentScratch scratch;
    constexpr u64 kSpan = 1ull << 20;
    for (u64 lo = 2; lo <= n_cap; lo += kSpan) {
        u64 hi = std::min(n_cap + 1, lo + kSpan);
        detail::factor_segment_into(lo, hi, scratch, bases, threads);
        for (u64 n = lo; n < hi; ++n) {
            bool ok = true;
            for (u64 slot : scratch.factors_of(n)) {
                u64 q = detail::packed_prime(slot);
                if (!universe.is_member(q) ||
                    (h != height_infinity && universe.height_of(q) > h)) {
                    ok = false;
                    break;
                }
            }
            flags[n] = ok;
        }
    }
    return flags;
}

// V_h(s): sum of (p-1)^{-s} over members p <= p_cap with H(p) <= h.
inline TruncatedValue v_h(const BoundedUniverse& universe, int h, double s,
                          u64 p_cap) {
    detail::check_s(s);
    if (p_cap > universe.bound())
        throw error("v_h: p_cap exceeds the universe bound");
    KahanSum acc;
    for (u64 p : universe.members()) {
        if (p > p_cap) break;
        if (h != height_infinity && universe.height_of(p) > h) continue;
        acc.add(detail::inv_pow(p - 1, s));
    }
    return {acc.value(), p_cap, p_cap < universe.bound()};
}

struct TildePartition {
    std::vector<u64> tilde;  // repeated or doubled large factor
    std::vector<u64> bar;    // exactly one large prime, first power
};

// Partition of (T_k \ T_j) ∩ [1, n_cap]: "large" means height in (j, k].
inline TildePartition tilde_t_partition(const BoundedUniverse& universe, int j,
                                        int k, u64 n_cap,
                                        unsigned threads = 0) {
    if (j < 1 || k <= j) throw error("tilde_t_partition: need k > j >= 1");
    if (n_cap > universe.bound())
        throw error("tilde_t_partition: n_cap exceeds the universe bound");
    TildePartition out;
    if (n_cap < 2) return out;
    auto bases = detail::primes_up_to(isqrt(n_cap));
    detail::SegmentScratch scratch;
    constexpr u64 kSpan = 1ull << 20;
    for (u64 lo = 2; lo <= n_cap; lo += kSpan) {
        u64 hi = std::min(n_cap + 1, lo + kSpan);
        detail::factor_segment_into(lo, hi, scratch, bases, threads);
        for (u64 n = lo; n < hi; ++n) {
            bool in_tk = true;
            int large_count = 0;
            bool large_squared = false;
            for (u64 slot : scratch.factors_of(n)) {
                u64 q = detail::packed_prime(slot);
                if (!universe.is_member(q)) {
                    in_tk = false;
                    break;
                }
                int hq = universe.height_of(q);
                if (hq > k) {
                    in_tk = false;
                    break;
                }
                if (hq > j) {
                    ++large_count;
                    if (detail::packed_exp(slot) > 1) large_squared = true;
                }
            }
            if (!in_tk || large_count == 0) continue;  // outside T_k \ T_j
            if (large_count >= 2 || large_squared)
                out.tilde.push_back(n);
            else
                out.bar.push_back(n);
        }
    }
    return out;
}

struct TildeBoundReport {
    double lhs_truncated = 0.0;  // sum over tilde members <= n_cap
    double rhs_exact = 0.0;      // closed form from bounded-universe V values
    bool holds = false;
};

// Tilde-set bound: truncated LHS against 2 λ(s)^2 (V_k - V_j)^2 e^{λ V_k}
// with the V's exact over the bounded universe.
inline TildeBoundReport check_lemma_tilde_bound(const BoundedUniverse& universe,
                                                int j, int k, double s,
                                                u64 n_cap,
                                                unsigned threads = 0) {
    detail::check_s(s);
    auto partition = tilde_t_partition(universe, j, k, n_cap, threads);
    KahanSum lhs;
    for (u64 n : partition.tilde) lhs.add(detail::inv_pow(n, s));
    double vk = v_h(universe, k, s, universe.bound()).value;
    double vj = v_h(universe, j, s, universe.bound()).value;
    double lam = lambda(s);
    double diff = vk - vj;
    double rhs = 2.0 * lam * lam * diff * diff * std::exp(lam * vk);
    return {lhs.value(), rhs, lhs.value() <= rhs};
}

// U_Q: residues mod Q = prod_{p<=y} p that are coprime to Q and avoid
// 1 mod p for every prime p <= y outside the set.
struct ResidueSet {
    u64 Q = 1;
    u64 y = 2;
    std::vector<u64> members;  // ascending, in [1, Q]

    std::size_t index_of(u64 b) const {
        auto it = std::lower_bound(members.begin(), members.end(), b);
        if (it == members.end() || *it != b)
            throw error("residue " + std::to_string(b) + " is not in U_Q");
        return static_cast<std::size_t>(it - members.begin());
    }
};

inline ResidueSet residue_set(const BoundedUniverse& universe, u64 y,
                              std::size_t max_members = std::size_t{1} << 22) {
    if (y < 2) throw error("residue_set: y must be >= 2");
    if (y > 43)
        throw error("residue_set: y > 43 overflows the 64-bit primorial");
    if (y > universe.bound())
        throw error("residue_set: universe must classify every prime <= y");
    ResidueSet out;
    out.y = y;
    std::vector<u64> residues{0};
    u64 modulus = 1;
    for (u64 p = 2; p <= y; ++p) {
        if (!is_prime(p)) continue;
        bool excluded = !universe.is_member(p);
        std::vector<u64> allowed;
        for (u64 a = 1; a < p; ++a)
            if (!excluded || a != 1) allowed.push_back(a);
        if (residues.size() * allowed.size() > max_members)
            throw resource_error("residue_set: |U_Q| exceeds the configured cap");
        std::vector<u64> merged;
        merged.reserve(residues.size() * allowed.size());
        u64 m_inv = inv_mod(modulus % p, p);
        for (u64 r : residues) {
            for (u64 a : allowed) {
                u64 t = mul_mod((a + p - r % p) % p, m_inv, p);
                merged.push_back(r + modulus * t);
            }
        }
        residues = std::move(merged);
        modulus *= p;
    }
    std::sort(residues.begin(), residues.end());
    out.Q = modulus;
    out.members = std::move(residues);
    return out;
}

struct MatrixOptions {
    std::size_t max_residues = 8192;        // dense block size guard
    u64 max_bucket_modulus = 32'000'000;    // Q guard for the class sums
    unsigned threads = 0;
};

// The truncated congruence matrix: entry(a,b) sums m^{-s} over m <= n_cap
// with m in T_j and a m + 1 = b (mod Q), for a, b in U_Q (zero elsewhere).
class CongruenceMatrix {
public:
    CongruenceMatrix(double s, int height_cap, u64 n_cap, ResidueSet residues,
                     DenseMatrix entries)
        : s_(s),
          height_cap_(height_cap),
          n_cap_(n_cap),
          residues_(std::move(residues)),
          entries_(std::move(entries)) {}

    double s() const { return s_; }
    int height_cap() const { return height_cap_; }
    u64 n_cap() const { return n_cap_; }
    u64 Q() const { return residues_.Q; }
    const ResidueSet& residues() const { return residues_; }
    const DenseMatrix& entries() const { return entries_; }

    double entry(u64 a, u64 b) const {
        const auto& mem = residues_.members;
        auto ia = std::lower_bound(mem.begin(), mem.end(), a);
        auto ib = std::lower_bound(mem.begin(), mem.end(), b);
        if (ia == mem.end() || *ia != a || ib == mem.end() || *ib != b)
            return 0.0;  // zero outside U_Q x U_Q
        return entries_.at(static_cast<std::size_t>(ia - mem.begin()),
                           static_cast<std::size_t>(ib - mem.begin()));
    }

private:
    double s_;
    int height_cap_;
    u64 n_cap_;
    ResidueSet residues_;
    DenseMatrix entries_;
};

inline CongruenceMatrix build_matrix(const BoundedUniverse& universe, double s,
                                     int j, u64 y, u64 n_cap,
                                     const MatrixOptions& options = {}) {
    detail::check_s(s);
    if (j < 1 && j != height_infinity)
        throw error("build_matrix: height cap must be >= 1");
    if (n_cap < 1) throw error("build_matrix: n_cap must be >= 1");
    ResidueSet rs = residue_set(universe, y, options.max_residues);
    if (rs.Q > options.max_bucket_modulus)
        throw resource_error("build_matrix: Q exceeds the bucket modulus cap");
    u64 Q = rs.Q;

    // Class sums: acc[c] = sum of m^{-s} over m in T_j, m = c (mod Q).
    // One sequential pass; every matrix entry is then a single lookup,
    // since a m + 1 = b (mod Q) <=> m = a^{-1}(b-1) (mod Q).
    auto flags = t_h_flags(universe, j, n_cap, options.threads);
    std::vector<double> acc(Q, 0.0), comp(Q, 0.0);
    for (u64 m = 1; m <= n_cap; ++m) {
        if (!flags[m]) continue;
        u64 c = m % Q;
        double x = detail::inv_pow(m, s);
        double t = acc[c] + x;
        if (std::fabs(acc[c]) >= std::fabs(x))
            comp[c] += (acc[c] - t) + x;
        else
            comp[c] += (x - t) + acc[c];
        acc[c] = t;
    }

    std::size_t n = rs.members.size();
    DenseMatrix entries(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 a = rs.members[i];
        u64 a_inv = inv_mod(a % Q, Q);
        for (std::size_t jj = 0; jj < n; ++jj) {
            u64 c = mul_mod(a_inv, (rs.members[jj] - 1) % Q, Q);
            entries.at(i, jj) = acc[c] + comp[c];
        }
    }
    return CongruenceMatrix(s, j, n_cap, std::move(rs), std::move(entries));
}

// Closed-form column sum for M_{1,inf,Q}: with d = (b-1, Q) and
// b' = (b-1)/d,
//   C_b(M) = (phi(d)/d) * sum over k in T, (k, Q/d) = 1, k avoiding
//            b' mod every excluded prime <= y, of 1/k,
// truncated at k <= n_cap. matched is the k <= n_cap/d part, which equals
// the direct column sum of the n_cap-truncated matrix term for term.
struct ClosedFormColumnSum {
    u64 b = 0;
    u64 d = 0;
    u64 b_prime = 0;
    double value = 0.0;
    double matched = 0.0;
    double tail = 0.0;
    u64 n_cap = 0;
};

inline ClosedFormColumnSum column_sum_closed_form(
    const BoundedUniverse& universe, const CongruenceMatrix& matrix, u64 b,
    const std::vector<unsigned char>* t_flags = nullptr, unsigned threads = 0) {
    if (matrix.s() != 1.0 || matrix.height_cap() != height_infinity)
        throw hypothesis_error(
            "column_sum_closed_form: stated for M with s = 1 and j = infinity");
    matrix.residues().index_of(b);  // throws if b is not in U_Q

    u64 Q = matrix.Q();
    u64 n_cap = matrix.n_cap();
    u64 d = b == 1 ? Q : std::gcd(b - 1, Q);
    u64 b_prime = (b - 1) / d;

    std::vector<u64> excluded;
    for (u64 p = 2; p <= matrix.residues().y; ++p)
        if (is_prime(p) && !universe.is_member(p)) excluded.push_back(p);

    std::vector<unsigned char> own_flags;
    if (!t_flags) {
        own_flags = t_h_flags(universe, height_infinity, n_cap, threads);
        t_flags = &own_flags;
    }
    const auto& flags = *t_flags;
    if (flags.size() < n_cap + 1)
        throw error("column_sum_closed_form: flags shorter than n_cap");
    double scale =
        static_cast<double>(euler_phi(d)) / static_cast<double>(d);
    KahanSum matched, tail;
    u64 matched_cap = n_cap / d;
    for (u64 k = 1; k <= n_cap; ++k) {
        if (!flags[k]) continue;
        if (std::gcd(k, Q / d) != 1) continue;
        bool ok = true;
        for (u64 p : excluded) {
            if (k % p == b_prime % p) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (k <= matched_cap)
            matched.add(1.0 / static_cast<double>(k));
        else
            tail.add(1.0 / static_cast<double>(k));
    }
    ClosedFormColumnSum out;
    out.b = b;
    out.d = d;
    out.b_prime = b_prime;
    out.matched = scale * matched.value();
    out.tail = scale * tail.value();
    out.value = out.matched + out.tail;
    out.n_cap = n_cap;
    return out;
}

// prod over members y < p <= p_cap of (1 - 1/p)^{-1}; exact within the
// bounded universe, a lower bound for the infinite product.
inline double crude_bound(const BoundedUniverse& universe, u64 y, u64 p_cap) {
    if (p_cap > universe.bound())
        throw error("crude_bound: p_cap exceeds the universe bound");
    double prod = 1.0;
    for (u64 p : universe.members()) {
        if (p > p_cap) break;
        if (p > y) prod /= 1.0 - 1.0 / static_cast<double>(p);
    }
    return prod;
}

// K = prod over members p <= p_cap of (1 - 1/p).
inline double k_constant(const BoundedUniverse& universe, u64 p_cap) {
    if (p_cap > universe.bound())
        throw error("k_constant: p_cap exceeds the universe bound");
    double prod = 1.0;
    for (u64 p : universe.members()) {
        if (p > p_cap) break;
        prod *= 1.0 - 1.0 / static_cast<double>(p);
    }
    return prod;
}

// Certificate that C(M) <= 1 - 2^{1-p} K for a prime p outside the set
// with 2 as a primitive root, using the n_cap-truncated M_{1,inf,Q}.
struct PrimrootCertificate {
    u64 p = 0;
    u64 y = 0;
    u64 n_cap = 0;
    double column_sum_max = 0.0;
    double k_truncated = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool holds = false;
};

inline PrimrootCertificate certify_primroot_bound(
    const BoundedUniverse& universe, u64 p, u64 y, u64 n_cap,
    const MatrixOptions& options = {}) {
    if (universe.is_member(p))
        throw hypothesis_error("certify_primroot_bound: p must lie outside the set");
    if (!is_primitive_root(2, p))
        throw hypothesis_error("certify_primroot_bound: 2 is not a primitive root of p");
    if (p > y)
        throw hypothesis_error("certify_primroot_bound: need p <= y so that p | Q");
    CongruenceMatrix m = build_matrix(universe, 1.0, height_infinity, y, n_cap,
                                      options);
    PrimrootCertificate cert;
    cert.p = p;
    cert.y = y;
    cert.n_cap = n_cap;
    cert.column_sum_max = col_sums(m.entries()).max;
    cert.k_truncated = k_constant(universe, universe.bound());
    cert.bound = 1.0 - std::ldexp(cert.k_truncated, 1 - static_cast<int>(p));
    cert.margin = cert.bound - cert.column_sum_max;
    cert.holds = cert.column_sum_max <= cert.bound;
    return cert;
}

// Row/column sums of M^n plus the Perron root of M on the truncated block.
struct ContractionCertificate {
    u64 y = 0;
    double s = 1.0;
    unsigned power = 1;
    u64 n_cap = 0;
    std::size_t residue_count = 0;
    double row_sum_max = 0.0;        // R(M)
    double col_sum_max = 0.0;        // C(M)
    double row_sum_max_power = 0.0;  // R(M^n)
    double col_sum_max_power = 0.0;  // C(M^n)
    SpectralResult spectral;
    bool contracting = false;
    double margin = 0.0;  // 1 - spectral radius
};

inline ContractionCertificate certify_contraction(
    const BoundedUniverse& universe, u64 y, double s, unsigned n, u64 n_cap,
    const MatrixOptions& options = {}) {
    if (n < 1) throw error("certify_contraction: power must be >= 1");
    CongruenceMatrix m =
        build_matrix(universe, s, height_infinity, y, n_cap, options);
    ContractionCertificate cert;
    cert.y = y;
    cert.s = s;
    cert.power = n;
    cert.n_cap = n_cap;
    cert.residue_count = m.residues().members.size();
    cert.row_sum_max = row_sums(m.entries()).max;
    cert.col_sum_max = col_sums(m.entries()).max;
    DenseMatrix mn = matrix_power(m.entries(), n, options.threads);
    cert.row_sum_max_power = row_sums(mn).max;
    cert.col_sum_max_power = col_sums(mn).max;
    cert.spectral = spectral_radius(m.entries());
    cert.contracting = cert.spectral.radius < 1.0;
    cert.margin = 1.0 - cert.spectral.radius;
    return cert;
}

// Diagnostic evaluation of the multi-level descent inequality
//   V_h(s) <= V_j(s) + sum over members q with height in (j-n, h-n] of
//             R_{q mod Q}(M^n) / q^s
//           + 2 n lambda(s)^2 e^{n lambda(s) V_{h-1}(s)}
//             (V_{h-1}(s) - V_{j-n}(s))^2
// with M = M_{s,j,Q} truncated at n_cap. Truncations interleave in both
// directions here, so the report carries both sides without asserting.
struct DescentChainReport {
    int h = 0;
    int j = 0;
    unsigned n = 1;
    double lhs = 0.0;         // V_h(s), truncated
    double rhs = 0.0;         // the three-term right side, truncated
    double middle_term = 0.0; // the row-sum sum
    double tail_term = 0.0;   // the quadratic remainder term
    bool lhs_below_rhs = false;
};

inline DescentChainReport descent_chain_diagnostic(
    const BoundedUniverse& universe, int h, int j, unsigned n, u64 y, double s,
    u64 n_cap, const MatrixOptions& options = {}) {
    detail::check_s(s);
    if (n < 1) throw error("descent_chain_diagnostic: n must be >= 1");
    if (j < static_cast<int>(n) || (h != height_infinity && h <= j))
        throw error("descent_chain_diagnostic: need h > j >= n");
    int j_low = j - static_cast<int>(n);
    int h_low = h == height_infinity ? height_infinity : h - static_cast<int>(n);
    // the height cut must clear every member dividing Q
    for (u64 p : universe.members()) {
        if (p > y) break;
        if (universe.height_of(p) > j_low)
            throw hypothesis_error(
                "descent_chain_diagnostic: a member dividing Q has height above j-n");
    }
    CongruenceMatrix m = build_matrix(universe, s, j, y, n_cap, options);
    DenseMatrix mn = matrix_power(m.entries(), n, options.threads);
    auto rows = row_sums(mn);
    const auto& residues = m.residues().members;

    KahanSum middle;
    for (u64 q : universe.members()) {
        int hq = universe.height_of(q);
        if (hq <= j_low) continue;
        if (h_low != height_infinity && hq > h_low) continue;
        u64 r = q % m.Q();
        auto it = std::lower_bound(residues.begin(), residues.end(), r);
        if (it == residues.end() || *it != r) continue;  // q | Q, never here
        middle.add(rows.per[static_cast<std::size_t>(it - residues.begin())] *
                   detail::inv_pow(q, s));
    }

    double lam = lambda(s);
    int h1 = h == height_infinity ? height_infinity : h - 1;
    double vh1 = v_h(universe, h1, s, universe.bound()).value;
    double vjn = v_h(universe, j_low, s, universe.bound()).value;
    double diff = vh1 - vjn;
    double tail = 2.0 * n * lam * lam * std::exp(n * lam * vh1) * diff * diff;

    DescentChainReport report;
    report.h = h;
    report.j = j;
    report.n = n;
    report.lhs = v_h(universe, h, s, universe.bound()).value;
    report.middle_term = middle.value();
    report.tail_term = tail;
    report.rhs = v_h(universe, j, s, universe.bound()).value + report.middle_term + tail;
    report.lhs_below_rhs = report.lhs <= report.rhs;
    return report;
}

// Fixed point of f(x) = (x+eps)/3 + 8n e^{2n(D+1+x)} (x+eps)^2 inside
// (0, eps), located by bisection. Requires f(eps) < eps.
struct BootstrapReport {
    double eps_formula = 0.0;  // 1 / (100 n e^{2n(D+2)})
    double eps_used = 0.0;
    double x_tilde = 0.0;
    double f_at_x_tilde = 0.0;
    double f_at_eps = 0.0;
    bool converged = false;
};

inline BootstrapReport bootstrap_fixed_point(double D, unsigned n, double eps) {
    if (D < 0.0) throw error("bootstrap_fixed_point: D must be >= 0");
    if (n < 1) throw error("bootstrap_fixed_point: n must be >= 1");
    if (!(eps > 0.0)) throw error("bootstrap_fixed_point: eps must be > 0");
    double nd = static_cast<double>(n);
    BootstrapReport report;
    report.eps_formula = 1.0 / (100.0 * nd * std::exp(2.0 * nd * (D + 2.0)));
    report.eps_used = eps;
    auto f = [D, nd, eps](double x) {
        double t = x + eps;
        return t / 3.0 + 8.0 * nd * std::exp(2.0 * nd * (D + 1.0 + x)) * t * t;
    };
    report.f_at_eps = f(eps);
    if (!(report.f_at_eps < eps))
        throw hypothesis_error("bootstrap_fixed_point: f(eps) >= eps");
    double lo = 0.0, hi = eps;
    double tol = std::min(1e-12, eps * 1e-9);
    for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) > mid)
            lo = mid;
        else
            hi = mid;
    }
    report.x_tilde = 0.5 * (lo + hi);
    report.f_at_x_tilde = f(report.x_tilde);
    report.converged = hi - lo <= std::max(tol, 1e-18 * eps);
    return report;
}

}  // namespace psv
