#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "errors.hpp"

namespace wiener::fft {

using cd = std::complex<double>;

/// Plain complex product; std::complex's operator* carries NaN/inf recovery
/// that is not needed here and blocks vectorisation.
inline cd mul(cd a, cd b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Mixed-radix decimation-in-time FFT for arbitrary lengths. Prime factors
/// other than 2/3/5 fall back to an O(p) butterfly, which is fine for the block
/// sizes used here (38 = 2*19).
///
/// Convention: forward is unnormalized, inverse carries the 1/n factor.
class Plan1d {
public:
    explicit Plan1d(std::size_t n) : n_(n), twiddle_(n) {
        if (n == 0) throw ConfigError("FFT length must be positive");
        std::size_t rest = n;
        for (std::size_t p : {4u, 2u, 3u, 5u}) {
            while (rest % p == 0) {
                factors_.push_back(p);
                rest /= p;
            }
        }
        for (std::size_t p = 7; rest > 1; p += 2) {
            while (rest % p == 0) {
                factors_.push_back(p);
                rest /= p;
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = {std::cos(a), std::sin(a)};
        }
        std::size_t max_p = 1;
        for (auto p : factors_) max_p = std::max(max_p, p);
        scratch_.resize(max_p);
    }

    std::size_t size() const { return n_; }

    /// out[k] = sum_j in[j*stride] e^{-2 pi i jk/n}; out must not alias in.
    void forward(const cd* in, std::size_t stride, cd* out) {
        recurse(in, stride, out, n_, 0);
    }

    void inverse(const cd* in, std::size_t stride, cd* out) {
        conj_buf_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) conj_buf_[i] = std::conj(in[i * stride]);
        recurse(conj_buf_.data(), 1, out, n_, 0);
        const double s = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = std::conj(out[i]) * s;
    }

private:
    void recurse(const cd* in, std::size_t stride, cd* out, std::size_t n, std::size_t fi) {
        if (n == 1) {
            out[0] = in[0];
            return;
        }
        const std::size_t p = factors_[fi];
        const std::size_t m = n / p;
        for (std::size_t r = 0; r < p; ++r) recurse(in + r * stride, stride * p, out + r * m, m, fi + 1);

        const std::size_t tw_step = n_ / n;        // W_n^j = twiddle_[j * tw_step]
        const std::size_t root_step = n_ / p;      // W_p^j = twiddle_[j * root_step]
        cd* t = scratch_.data();
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t r = 0; r < p; ++r) {
                t[r] = r == 0 ? out[k] : mul(out[r * m + k], twiddle_[r * k * tw_step]);
            }
            if (p == 2) {
                out[k] = t[0] + t[1];
                out[m + k] = t[0] - t[1];
            } else if (p == 4) {
                const cd a = t[0] + t[2], b = t[0] - t[2];
                const cd c = t[1] + t[3];
                const cd e = t[1] - t[3];
                const cd d(e.imag(), -e.real());
                out[k] = a + c;
                out[m + k] = b + d;
                out[2 * m + k] = a - c;
                out[3 * m + k] = b - d;
            } else {
                // Odd prime: pair r with p - r so each output pair (q, p - q)
                // shares one cosine sum and one sine sum.
                const std::size_t half = p / 2;
                cd x0 = t[0];
                for (std::size_t r = 1; r <= half; ++r) {
                    const cd a = t[r] + t[p - r];
                    const cd b = t[r] - t[p - r];
                    t[r] = a;
                    t[p - r] = b;
                    x0 += a;
                }
                out[k] = x0;
                for (std::size_t q = 1; q <= half; ++q) {
                    cd sum_c = t[0], sum_s = 0.0;
                    std::size_t idx = 0;  // (r * q) mod p
                    for (std::size_t r = 1; r <= half; ++r) {
                        idx += q;
                        if (idx >= p) idx -= p;
                        const cd w = twiddle_[idx * root_step];  // cos - i sin
                        sum_c += t[r] * w.real();
                        sum_s += t[p - r] * (-w.imag());
                    }
                    const cd rot(sum_s.imag(), -sum_s.real());  // -i * sum_s
                    out[q * m + k] = sum_c + rot;
                    out[(p - q) * m + k] = sum_c - rot;
                }
            }
        }
    }

    std::size_t n_;
    std::vector<std::size_t> factors_;
    std::vector<cd> twiddle_;
    std::vector<cd> scratch_;
    std::vector<cd> conj_buf_;
};

/// Per-thread cache of 1D plans (plans carry scratch space).
inline Plan1d& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, Plan1d> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, Plan1d(n)).first;
    return it->second;
}

/// In-place 2D transform of a row-major rows x cols array.
inline void transform_2d(std::span<cd> data, std::size_t rows, std::size_t cols, bool inverse) {
    if (data.size() != rows * cols) throw ConfigError("transform_2d: size mismatch");
    std::vector<cd> line(std::max(rows, cols));
    Plan1d& row_plan = plan_for(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        cd* row = data.data() + r * cols;
        if (inverse) row_plan.inverse(row, 1, line.data());
        else row_plan.forward(row, 1, line.data());
        std::copy(line.begin(), line.begin() + cols, row);
    }
    Plan1d& col_plan = plan_for(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        if (inverse) col_plan.inverse(data.data() + c, cols, line.data());
        else col_plan.forward(data.data() + c, cols, line.data());
        for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] = line[r];
    }
}

inline void forward_2d(std::span<cd> data, std::size_t n) { transform_2d(data, n, n, false); }
inline void inverse_2d(std::span<cd> data, std::size_t n) { transform_2d(data, n, n, true); }

} // namespace wiener::fft
