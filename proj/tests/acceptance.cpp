// Acceptance suite: every gate below prints one [CRITERION n] PASS/FAIL
// line. Criterion 5 and the thread-determinism check over it live in the
// companion binary (acceptance_sieve), which carries the large sieve run.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <random>

#include "psv/psv.hpp"
#include "psv/report_json.hpp"

using namespace psv;

namespace {

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ =
        std::chrono::steady_clock::now();
};

void report(int criterion, const char* label, bool pass,
            const std::string& detail) {
    std::printf("[CRITERION %d] %s - %s%s%s\n", criterion,
                pass ? "PASS" : "FAIL", label, detail.empty() ? "" : ": ",
                detail.c_str());
    std::fflush(stdout);
    EXPECT_TRUE(pass) << "criterion " << criterion << " (" << label << ") "
                      << detail;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

const BoundedUniverse& p3_universe() {
    static const BoundedUniverse u =
        BoundedUniverse::build(ClosedSetRule::omit(3), 1'000'000);
    return u;
}

const BoundedUniverse& p5_universe() {
    static const BoundedUniverse u =
        BoundedUniverse::build(ClosedSetRule::omit(5), 1'000'000);
    return u;
}

}  // namespace

TEST(Acceptance, Criterion1GoldenPrefixes) {
    Timer timer;
    auto p3 = enumerate_members(ClosedSetRule::omit(3), 257);
    auto p5 = enumerate_members(ClosedSetRule::omit(5), 103);
    double elapsed = timer.seconds();
    const std::vector<u64> want_p3 = {2,  5,   11,  17,  23,  41,  47, 83,
                                      89, 101, 137, 167, 179, 251, 257};
    const std::vector<u64> want_p5 = {2,  3,  7,  13, 17, 19, 29, 37,
                                      43, 53, 59, 73, 79, 97, 103};
    bool pass = p3 == want_p3 && p5 == want_p5 && elapsed < 1.0;
    report(1, "golden prefixes of P_3 and P_5", pass,
           "15 + 15 members, " + fmt(elapsed) + " s");
}

TEST(Acceptance, Criterion2CarmichaelSets) {
    Timer timer;
    auto c1 = enumerate_members(ClosedSetRule::carmichael1(), 7000);
    auto c2 = enumerate_members(ClosedSetRule::carmichael2(), 6000);
    double elapsed = timer.seconds();
    c1.resize(9);
    c2.resize(9);
    const std::vector<u64> want1 = {2, 3, 7, 13, 43, 79, 547, 3319, 6163};
    const std::vector<u64> want2 = {2, 3, 7, 19, 43, 127, 2287, 4903, 5419};
    bool pass = c1 == want1 && c2 == want2 && elapsed < 5.0;
    report(2, "first 9 elements of both Carmichael sets", pass,
           fmt(elapsed) + " s");
}

TEST(Acceptance, Criterion3ForcingClosure) {
    Timer timer;
    auto fixed = carmichael_forcing_closure(ForcingState{}, 1'000'000);
    bool base_ok = fixed.exponents.size() == 4;
    for (u64 p : {2ull, 3ull, 7ull, 43ull}) {
        auto it = fixed.exponents.find(p);
        base_ok = base_ok && it != fixed.exponents.end() &&
                  it->second.min_exponent == 2;
    }
    ForcingState case2;
    case2.exponents[2] = {2, false};
    case2.exponents[3] = {3, false};
    case2.exponents[7] = {2, false};
    case2.exponents[43] = {2, false};
    auto forced = carmichael_forcing_closure(case2, 1'000'000);
    bool has19 = forced.exponents.count(19) &&
                 forced.exponents.at(19).min_exponent >= 2;
    double elapsed = timer.seconds();
    bool pass = base_ok && has19 && elapsed < 1.0;
    report(3, "forcing closure fixed points", pass,
           "base {2,3,7,43}, case (ii) adds 19, " + fmt(elapsed) + " s");
}

TEST(Acceptance, Criterion4FermatMembers) {
    std::vector<u64> low;
    for (u64 p : p3_universe().members())
        if (p3_universe().height_of(p) <= 2) low.push_back(p);
    bool pass = low == std::vector<u64>{2, 5, 17, 257, 65537};
    report(4, "height-2 members of P_3 below 1e6", pass,
           std::to_string(low.size()) + " members");
}

TEST(Acceptance, Criterion6OracleEquivalence) {
    Timer timer;
    const u64 limit = 1'000'000;
    u64 mismatches = 0;
    for (const auto& rule :
         {ClosedSetRule::omit(3), ClosedSetRule::omit(5),
          ClosedSetRule::carmichael1(), ClosedSetRule::carmichael2()}) {
        auto bitmap = classify_range(rule, limit);
        MembershipCache cache(rule);
        for (u32 p : small_primes()) {
            if (p > limit) break;
            if (bitmap.contains(p) != membership(rule, p, cache)) ++mismatches;
        }
    }
    double elapsed = timer.seconds();
    bool pass = mismatches == 0 && elapsed < 30.0;
    report(6, "sieve vs recursive membership to 1e6, all four rules", pass,
           std::to_string(mismatches) + " mismatches, " + fmt(elapsed) + " s");
}

TEST(Acceptance, Criterion7ColumnSumClosedForm) {
    bool pass = true;
    double worst_rel = 0.0;
    for (const auto* u : {&p3_universe(), &p5_universe()}) {
        auto flags = t_h_flags(*u, height_infinity, 1'000'000);
        for (u64 y : {3ull, 5ull, 7ull}) {
            auto m = build_matrix(*u, 1.0, height_infinity, y, 1'000'000);
            auto cols = col_sums(m.entries());
            for (std::size_t i = 0; i < m.residues().members.size(); ++i) {
                u64 b = m.residues().members[i];
                auto cf = column_sum_closed_form(*u, m, b, &flags);
                double direct = cols.per[i];
                // matched part must agree to 1e-9 relative; the full
                // closed form may exceed it only by its computed tail
                double rel = std::fabs(cf.matched - direct) /
                             std::max(1.0, direct);
                worst_rel = std::max(worst_rel, rel);
                pass = pass && rel <= 1e-9;
                pass = pass &&
                       std::fabs(cf.value - direct) <= 1e-9 + cf.tail + 1e-12;
            }
        }
    }
    report(7, "column-sum closed form vs direct sums (P_3, P_5; y=3,5,7)",
           pass, "worst relative difference " + fmt(worst_rel));
}

TEST(Acceptance, Criterion8PrimrootCertificate) {
    auto cert = certify_primroot_bound(p3_universe(), 3, 13, 1'000'000);
    bool pass = cert.holds && cert.margin > 0.0;
    report(8, "C(M) <= 1 - 2^{-2} K for P_3 at y=13", pass,
           "C(M)=" + fmt(cert.column_sum_max) + ", bound=" + fmt(cert.bound) +
               ", margin=" + fmt(cert.margin));
}

TEST(Acceptance, Criterion9Contraction) {
    auto cert = certify_contraction(p3_universe(), 13, 1.0, 3, 1'000'000);
    bool pass = cert.contracting && cert.spectral.radius < 1.0 &&
                cert.col_sum_max_power < 1.0;
    report(9, "truncated M contracting for P_3 at y=13", pass,
           "rho=" + fmt(cert.spectral.radius) +
               ", C(M^3)=" + fmt(cert.col_sum_max_power) + ", margins " +
               fmt(cert.margin) + " / " + fmt(1.0 - cert.col_sum_max_power));
}

TEST(Acceptance, Criterion10PropertySuites) {
    bool grid = true;
    for (double s : {0.5, 0.9, 1.0}) {
        for (u64 q = 2; q <= 100; ++q) {
            if (!is_prime(q)) continue;
            double lhs = 1.0 / (std::pow(static_cast<double>(q), s) - 1.0);
            double rhs = lambda(s) / std::pow(static_cast<double>(q - 1), s);
            grid = grid && lhs <= rhs * (1 + 1e-12);
        }
    }

    bool tilde = true;
    for (const auto* u : {&p3_universe(), &p5_universe()}) {
        for (double s : {0.9, 1.0}) {
            for (auto [j, k] : {std::pair{1, 2}, std::pair{2, 3}}) {
                auto rep = check_lemma_tilde_bound(*u, j, k, s, 1'000'000);
                tilde = tilde && rep.holds;
            }
        }
    }

    bool perron = true;
    for (const auto* u : {&p3_universe(), &p5_universe()}) {
        for (u64 y : {3ull, 5ull, 13ull}) {
            auto m = build_matrix(*u, 1.0, height_infinity, y, 100'000);
            auto s = spectral_radius(m.entries());
            perron = perron &&
                     s.radius <= std::min(row_sums(m.entries()).max,
                                          col_sums(m.entries()).max) *
                                     (1 + 1e-9);
        }
    }

    bool submult = true;
    std::mt19937_64 rng(20240901);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        DenseMatrix a(10), b(10);
        for (std::size_t i = 0; i < 10; ++i)
            for (std::size_t j = 0; j < 10; ++j) {
                a.at(i, j) = dist(rng);
                b.at(i, j) = dist(rng);
            }
        auto ab = multiply(a, b);
        double ca = col_sums(a).max;
        auto cb = col_sums(b);
        auto cab = col_sums(ab);
        for (std::size_t j = 0; j < 10; ++j)
            submult = submult && cab.per[j] <= ca * cb.per[j] * (1 + 1e-12);
    }

    auto bitmap = classify_range(ClosedSetRule::omit(3), 1'000'000);
    auto path = std::filesystem::temp_directory_path() / "psv_accept.bitmap";
    save_bitmap(bitmap, path);
    bool roundtrip = load_bitmap(path).same_membership(bitmap);
    std::filesystem::remove(path);

    bool pass = grid && tilde && perron && submult && roundtrip;
    report(10, "property suites", pass,
           std::string("series-grid ") + (grid ? "ok" : "FAIL") + ", tilde " +
               (tilde ? "ok" : "FAIL") + ", perron " + (perron ? "ok" : "FAIL") +
               ", submultiplicative " + (submult ? "ok" : "FAIL") +
               ", bitmap round-trip " + (roundtrip ? "ok" : "FAIL"));
}

TEST(Acceptance, Criterion11ContractionDeterminism) {
    // thread-count independence of the criterion-9 report, byte for byte
    std::string first;
    bool pass = true;
    for (unsigned threads : {1u, 4u, 8u}) {
        MatrixOptions opts;
        opts.threads = threads;
        auto cert = certify_contraction(p3_universe(), 13, 1.0, 3, 1'000'000,
                                        opts);
        std::string bytes =
            contraction_report(p3_universe().rule(), cert).dump();
        if (first.empty())
            first = bytes;
        else
            pass = pass && bytes == first;
    }
    report(11, "criterion-9 report byte-identical at 1/4/8 threads", pass,
           "(sieve-side determinism reported by the acceptance_sieve binary)");
}
