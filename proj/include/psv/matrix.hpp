#pragma once

// Dense nonnegative square matrices with deterministic reductions: row and
// column sums, fixed-order multiplication, powers, and the Perron root via
// power iteration. Summation order never depends on thread count.

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "psv/errors.hpp"
#include "psv/numeric.hpp"

namespace psv {

class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    const std::vector<double>& data() const { return a_; }

    bool operator==(const DenseMatrix& other) const {
        return n_ == other.n_ && a_ == other.a_;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

struct SumSummary {
    std::vector<double> per;
    double max = 0.0;
};

inline SumSummary row_sums(const DenseMatrix& m) {
    SumSummary out;
    out.per.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        KahanSum acc;
        for (std::size_t j = 0; j < m.size(); ++j) acc.add(m.at(i, j));
        out.per[i] = acc.value();
        out.max = std::max(out.max, out.per[i]);
    }
    return out;
}

inline SumSummary col_sums(const DenseMatrix& m) {
    SumSummary out;
    out.per.resize(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
        KahanSum acc;
        for (std::size_t i = 0; i < m.size(); ++i) acc.add(m.at(i, j));
        out.per[j] = acc.value();
        out.max = std::max(out.max, out.per[j]);
    }
    return out;
}

namespace detail {

inline unsigned resolve_threads_matrix(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

}  // namespace detail

// C = A * B. Each output row is produced by exactly one thread with a fixed
// inner loop order, so the result is bit-identical for any thread count.
inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b,
                            unsigned threads = 0) {
    if (a.size() != b.size()) throw error("multiply: size mismatch");
    std::size_t n = a.size();
    DenseMatrix c(n);
    auto row_job = [&](std::size_t i) {
        for (std::size_t k = 0; k < n; ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    };
    unsigned t = detail::resolve_threads_matrix(threads);
    if (t <= 1 || n < 64) {
        for (std::size_t i = 0; i < n; ++i) row_job(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                row_job(i);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < t; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return c;
}

// M^n by binary powering over the dense block.
inline DenseMatrix matrix_power(const DenseMatrix& m, unsigned n,
                                unsigned threads = 0) {
    if (n == 0) throw error("matrix_power: n must be >= 1");
    DenseMatrix result = m;
    DenseMatrix square = m;
    unsigned remaining = n - 1;
    while (remaining > 0) {
        if (remaining & 1) result = multiply(result, square, threads);
        remaining >>= 1;
        if (remaining > 0) square = multiply(square, square, threads);
    }
    return result;
}

struct SpectralResult {
    double radius = 0.0;
    double rayleigh_min = 0.0;  // min over i with v_i > 0 of (Mv)_i / v_i
    double rayleigh_max = 0.0;
    unsigned iterations = 0;
};

// Perron root of a nonnegative matrix by power iteration from the all-ones
// vector, converged to relative tolerance tol. Reducible matrices may fail
// to settle; one restart with a perturbed positive vector is attempted
// before reporting non-convergence.
inline SpectralResult spectral_radius(const DenseMatrix& m, double tol = 1e-10,
                                      unsigned max_iterations = 10000) {
    if (tol <= 0) throw error("spectral_radius: tol must be positive");
    std::size_t n = m.size();
    if (n == 0) throw error("spectral_radius: empty matrix");

    // The radius estimate is the geometric mean of two consecutive sup
    // norms; this also settles for period-2 (permutation-like) patterns
    // where the raw norms oscillate around the Perron root.
    auto run = [&](bool perturb) -> SpectralResult {
        std::vector<double> v(n, 1.0), w(n, 0.0);
        if (perturb)
            for (std::size_t i = 0; i < n; ++i)
                v[i] = 1.0 + 1e-3 * static_cast<double>(i) / static_cast<double>(n);
        double norm_prev = 0.0;
        double est_prev = -1.0;
        SpectralResult res;
        for (unsigned iter = 1; iter <= max_iterations; ++iter) {
            double norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                KahanSum acc;
                for (std::size_t j = 0; j < n; ++j) acc.add(m.at(i, j) * v[j]);
                w[i] = acc.value();
                norm = std::max(norm, w[i]);
            }
            if (norm == 0.0) return {0.0, 0.0, 0.0, iter};
            double rmin = std::numeric_limits<double>::infinity();
            double rmax = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (v[i] > 0.0) {
                    double ratio = w[i] / v[i];
                    rmin = std::min(rmin, ratio);
                    rmax = std::max(rmax, ratio);
                }
            }
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
            if (iter >= 2) {
                double est = std::sqrt(norm * norm_prev);
                res = {est, rmin, rmax, iter};
                if (est_prev > 0.0 && std::fabs(est - est_prev) <= tol * est)
                    return res;
                est_prev = est;
            }
            norm_prev = norm;
        }
        res.iterations = 0;  // marks failure
        return res;
    };

    SpectralResult res = run(false);
    if (res.iterations == 0) res = run(true);
    if (res.iterations == 0)
        throw convergence_error("spectral_radius: power iteration did not converge");
    return res;
}

}  // namespace psv
