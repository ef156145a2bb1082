#pragma once

// Slow, independent reference implementations used as test oracles. None of
// them call into the library's FFT, planner or accumulator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "wiener/conv_net.hpp"
#include "wiener/image.hpp"
#include "wiener/weight_bundle.hpp"

namespace oracle {

using cd = std::complex<double>;

/// Direct O(N^4) 2-D DFT, unnormalised forward, 1/N^2 inverse.
inline std::vector<cd> dft2(const std::vector<cd>& x, int n, bool inverse) {
    std::vector<cd> out(x.size());
    const double sign = inverse ? 1.0 : -1.0;
    for (int k1 = 0; k1 < n; ++k1) {
        for (int k2 = 0; k2 < n; ++k2) {
            cd acc = 0.0;
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) {
                    const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((k1 * a + k2 * b) % n) / n;
                    acc += x[static_cast<std::size_t>(a) * n + b] * cd(std::cos(ang), std::sin(ang));
                }
            }
            out[static_cast<std::size_t>(k1) * n + k2] = inverse ? acc / static_cast<double>(n * n) : acc;
        }
    }
    return out;
}

/// Window values straight from the closed forms.
inline std::vector<double> window(bool raised_cosine, int n, double alpha = 0.3) {
    std::vector<double> w(static_cast<std::size_t>(n) * n);
    for (int h = 0; h < n; ++h) {
        for (int k = 0; k < n; ++k) {
            const double u = (2.0 * h + 1.0 - n) / n, v = (2.0 * k + 1.0 - n) / n;
            w[static_cast<std::size_t>(h) * n + k] =
                raised_cosine ? std::cos(std::numbers::pi * u / 2) * std::cos(std::numbers::pi * v / 2)
                              : std::exp(-(u * u + v * v) / (2 * alpha * alpha));
        }
    }
    return w;
}

/// Wiener-filtered windowed block with the DC given explicitly, via the direct DFT.
inline std::vector<double> filter_block(const std::vector<double>& block, const std::vector<double>& w, int n,
                                        double dc, double sigma, double correction) {
    std::vector<cd> y(block.size());
    double wsq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = (block[i] - dc) * w[i];
        wsq += w[i] * w[i];
    }
    auto Y = dft2(y, n, false);
    const double pnn = correction * correction * sigma * sigma * wsq;
    for (auto& c : Y) {
        const double pyy = std::norm(c);
        c *= pyy > 1e-20 ? std::max(pyy - pnn, 0.0) / pyy : 0.0;
    }
    const auto x = dft2(Y, n, true);
    std::vector<double> out(block.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i].real() + dc * w[i];
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Mirror padding built explicitly by unfolding the image, pad <= extent - 1.
inline std::vector<double> mirror_pad(const std::vector<double>& plane, int w, int h, int pad) {
    auto m = [](int i, int n) {
        while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
        return i;
    };
    const int pw = w + 2 * pad, ph = h + 2 * pad;
    std::vector<double> out(static_cast<std::size_t>(pw) * ph);
    for (int r = 0; r < ph; ++r)
        for (int c = 0; c < pw; ++c)
            out[static_cast<std::size_t>(r) * pw + c] = plane[static_cast<std::size_t>(m(r - pad, h)) * w + m(c - pad, w)];
    return out;
}

/// Overlap-add of windowed per-block estimates over every block origin
/// k*stride (k >= 0) of an image padded by N - stride that still touches the
/// image. `filter` maps a raw block to its windowed estimate. Returns
/// (sum w*x, sum w^2) cropped to the image.
template <class Filter>
std::pair<std::vector<double>, std::vector<double>> overlap_add(const std::vector<double>& plane, int w, int h,
                                                                int n, int stride, const std::vector<double>& win,
                                                                Filter filter) {
    const int pad = n - stride;
    const int margin = n;  // mirror margin wide enough for the last block
    const auto padded = mirror_pad(plane, w, h, margin);
    const int pw = w + 2 * margin;
    std::vector<double> acc(padded.size(), 0.0), wsum(padded.size(), 0.0);
    for (int r0 = 0; r0 <= pad + h - 1; r0 += stride) {
        for (int c0 = 0; c0 <= pad + w - 1; c0 += stride) {
            const int pr = r0 - pad + margin, pc = c0 - pad + margin;
            std::vector<double> block(static_cast<std::size_t>(n) * n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    block[static_cast<std::size_t>(a) * n + b] = padded[static_cast<std::size_t>(pr + a) * pw + pc + b];
            const auto est = filter(block);
            for (int a = 0; a < n; ++a) {
                for (int b = 0; b < n; ++b) {
                    const std::size_t k = static_cast<std::size_t>(a) * n + b;
                    const std::size_t p = static_cast<std::size_t>(pr + a) * pw + pc + b;
                    acc[p] += win[k] * est[k];
                    wsum[p] += win[k] * win[k];
                }
            }
        }
    }
    std::vector<double> out_acc(static_cast<std::size_t>(w) * h), out_w(out_acc.size());
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            out_acc[static_cast<std::size_t>(r) * w + c] = acc[static_cast<std::size_t>(r + margin) * pw + c + margin];
            out_w[static_cast<std::size_t>(r) * w + c] = wsum[static_cast<std::size_t>(r + margin) * pw + c + margin];
        }
    }
    return {out_acc, out_w};
}

inline wiener::ImagePlanar random_image(int w, int h, int c, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    wiener::ImagePlanar img(w, h, c);
    for (auto& v : img.data) v = u(g);
    return img;
}

inline std::vector<double> plane_of(const wiener::ImagePlanar& img, int c) {
    const auto p = img.plane(c);
    return std::vector<double>(p.begin(), p.end());
}

/// Conv stack evaluated with plain loops in double precision, batch norm kept
/// unfolded. Reads the stack's records from `recs` starting at `pos`.
inline std::vector<double> conv_stack(const std::vector<wiener::TensorRecord>& recs, std::size_t& pos,
                                      const std::vector<wiener::ConvLayerDef>& layers, double bn_eps,
                                      std::vector<double> x, int h, int w) {
    int ch = layers.front().in;
    for (const auto& l : layers) {
        const auto& wt = recs[pos++].values;
        const auto& bias = recs[pos++].values;
        std::vector<double> y(static_cast<std::size_t>(l.out) * h * w, 0.0);
        for (int o = 0; o < l.out; ++o)
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    double acc = bias[o];
                    for (int i = 0; i < ch; ++i)
                        for (int kh = 0; kh < 3; ++kh)
                            for (int kw = 0; kw < 3; ++kw) {
                                const int rr = r + kh - 1, cc = c + kw - 1;
                                if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
                                acc += double(wt[((o * ch + i) * 3 + kh) * 3 + kw]) *
                                       x[(static_cast<std::size_t>(i) * h + rr) * w + cc];
                            }
                    y[(static_cast<std::size_t>(o) * h + r) * w + c] = acc;
                }
        if (l.batch_norm) {
            const auto& gamma = recs[pos++].values;
            const auto& beta = recs[pos++].values;
            const auto& mean = recs[pos++].values;
            const auto& var = recs[pos++].values;
            for (int o = 0; o < l.out; ++o)
                for (std::size_t p = 0; p < static_cast<std::size_t>(h) * w; ++p) {
                    double& v = y[o * static_cast<std::size_t>(h) * w + p];
                    v = (v - mean[o]) / std::sqrt(double(var[o]) + bn_eps) * gamma[o] + beta[o];
                }
        }
        if (l.relu)
            for (auto& v : y) v = std::max(v, 0.0);
        x = std::move(y);
        ch = l.out;
    }
    return x;
}

} // namespace oracle
