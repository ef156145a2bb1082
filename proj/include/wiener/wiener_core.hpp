#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "window.hpp"

namespace wiener {

/// How the per-block DC offset is estimated before the FFT.
struct DcStrategy {
    enum class Kind { Mean, Median, Quantile, Oracle };
    Kind kind = Kind::Median;
    double q = 0.5;  // Quantile only, in (0, 1)

    static DcStrategy mean() { return {Kind::Mean, 0.5}; }
    static DcStrategy median() { return {Kind::Median, 0.5}; }
    static DcStrategy quantile(double q) {
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("DC quantile must lie in (0,1)");
        return {Kind::Quantile, q};
    }
    static DcStrategy oracle() { return {Kind::Oracle, 0.5}; }

    std::string name() const {
        switch (kind) {
        case Kind::Mean: return "mean";
        case Kind::Median: return "median";
        case Kind::Quantile: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "quantile:%.17g", q);
            return buf;
        }
        case Kind::Oracle: return "oracle";
        }
        return "?";
    }
};

inline double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Block DC estimate. Median is the lower median; Quantile interpolates
/// linearly between order statistics. Oracle is the mean of the co-located
/// clean block, weighted by `weights` when given (the filter passes w^2, the
/// weight each sample's restored DC receives in the overlap-add).
inline double block_dc(std::span<const double> block, const DcStrategy& strategy,
                       std::span<const double> clean = {}, std::span<const double> weights = {}) {
    if (block.empty()) throw ConfigError("block_dc: empty block");
    switch (strategy.kind) {
    case DcStrategy::Kind::Mean: return mean_of(block);
    case DcStrategy::Kind::Oracle: {
        if (clean.size() != block.size()) {
            throw ConfigError("oracle DC needs the co-located clean block");
        }
        if (weights.empty()) return mean_of(clean);
        if (weights.size() != clean.size()) throw ConfigError("oracle DC weights have the wrong size");
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            num += clean[i] * weights[i];
            den += weights[i];
        }
        return num / den;
    }
    case DcStrategy::Kind::Median: {
        std::vector<double> s(block.begin(), block.end());
        const std::size_t mid = (s.size() - 1) / 2;
        std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(mid), s.end());
        return s[mid];
    }
    case DcStrategy::Kind::Quantile: {
        std::vector<double> s(block.begin(), block.end());
        std::sort(s.begin(), s.end());
        const double pos = strategy.q * static_cast<double>(s.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, s.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return s[lo] + (s[hi] - s[lo]) * frac;
    }
    }
    return 0.0;
}

/// Forward spectrum of one DC-removed, windowed block.
struct BlockSpectrum {
    int size = 0;
    std::vector<fft::cd> coefficients;
    std::vector<double> p_yy;
};

/// Y = FFT((y - dc) * w), P_yy = |Y|^2.
inline BlockSpectrum analyze_block(std::span<const double> block, double dc, const WindowTable& window) {
    const int n = window.size;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    if (block.size() != nn) throw ConfigError("analyze_block: block/window size mismatch");
    BlockSpectrum s;
    s.size = n;
    s.coefficients.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) s.coefficients[i] = (block[i] - dc) * window.values[i];
    fft::forward_2d(s.coefficients, static_cast<std::size_t>(n));
    s.p_yy.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) s.p_yy[i] = std::norm(s.coefficients[i]);
    return s;
}

/// Transfer function and clean-PSD estimate of one block.
struct CoringResult {
    std::vector<double> h;
    std::vector<double> p_xx;
};

inline constexpr double kPsdFloor = 1e-20;

/// Flat noise PSD for a block: (correction * sigma)^2 * ||w||^2.
inline double noise_psd(double sigma_block, double window_norm_sq, double correction) {
    const double s = correction * sigma_block;
    return s * s * window_norm_sq;
}

/// Spectral coring: P_xx = max(P_yy - P_nn, 0), H = P_xx / P_yy (0 on dead bins).
inline CoringResult core_psd(std::span<const double> p_yy, double sigma_block, double window_norm_sq,
                             double correction = 1.0) {
    if (sigma_block < 0.0) throw ConfigError("core_psd: sigma must be >= 0");
    if (!(correction > 0.0)) throw ConfigError("core_psd: correction must be > 0");
    const double p_nn = noise_psd(sigma_block, window_norm_sq, correction);
    CoringResult r;
    r.h.resize(p_yy.size());
    r.p_xx.resize(p_yy.size());
    for (std::size_t i = 0; i < p_yy.size(); ++i) {
        const double pxx = std::max(p_yy[i] - p_nn, 0.0);
        r.p_xx[i] = pxx;
        r.h[i] = p_yy[i] > kPsdFloor ? pxx / p_yy[i] : 0.0;
    }
    return r;
}

/// x_w = iFFT(Y * h) + dc * w, the windowed estimate of the clean block.
///
/// A transfer function from core_psd is Hermitian-symmetric, so the imaginary
/// residue is rounding noise and is checked. An external h need not be
/// symmetric; taking the real part then applies its symmetric part
/// (h(w) + h(-w)) / 2, and `check_imag` should be false.
inline void synthesize_block(const BlockSpectrum& spectrum, std::span<const double> h, double dc,
                             const WindowTable& window, std::span<double> out, bool check_imag = true) {
    const int n = spectrum.size;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    if (h.size() != nn || out.size() != nn) throw ConfigError("synthesize_block: size mismatch");
    std::vector<fft::cd> buf(nn);
    for (std::size_t i = 0; i < nn; ++i) buf[i] = spectrum.coefficients[i] * h[i];
    fft::inverse_2d(buf, static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < nn; ++i) {
        if (check_imag && std::abs(buf[i].imag()) > 1e-5) {
            throw NumericError("inverse FFT left an imaginary residue of " +
                               std::to_string(buf[i].imag()));
        }
        out[i] = buf[i].real() + dc * window.values[i];
    }
}

/// Per-block inputs to filter_block beyond the samples themselves.
struct BlockFilterParams {
    double sigma = 0.0;
    double correction = 1.0;
    DcStrategy dc = DcStrategy::median();
    std::span<const double> clean{};           // required by the oracle DC
    std::span<const double> coring_override{};  // externally refined h, optional
    int origin_row = 0;                         // for error messages
    int origin_col = 0;
};

/// Full per-block Wiener filter: DC removal, windowing, FFT, coring, inverse
/// FFT and windowed DC restoration. With sigma = 0 the output is block * w.
/// When `h_out` is non-empty the unrefined transfer function is written there.
inline void filter_block(std::span<const double> block, const WindowTable& window,
                         const BlockFilterParams& p, std::span<double> out, std::span<double> h_out = {}) {
    for (double v : block) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite sample in block at (" + std::to_string(p.origin_row) + "," +
                               std::to_string(p.origin_col) + ")");
        }
    }
    double dc = 0.0;
    if (p.dc.kind == DcStrategy::Kind::Oracle) {
        std::vector<double> w2(window.values.size());
        for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = window.values[i] * window.values[i];
        dc = block_dc(block, p.dc, p.clean, w2);
    } else {
        dc = block_dc(block, p.dc);
    }
    const BlockSpectrum spectrum = analyze_block(block, dc, window);
    const CoringResult coring = core_psd(spectrum.p_yy, p.sigma, window.norm_sq, p.correction);
    if (!h_out.empty()) std::copy(coring.h.begin(), coring.h.end(), h_out.begin());
    if (p.coring_override.empty()) {
        synthesize_block(spectrum, coring.h, dc, window, out);
    } else {
        if (p.coring_override.size() != coring.h.size()) throw ConfigError("coring override has wrong size");
        synthesize_block(spectrum, p.coring_override, dc, window, out, false);
    }
}

/// Window-weighted block noise level: sqrt(sum sigma^2 w^2 / ||w||^2).
inline double block_sigma(std::span<const double> sigma_block, const WindowTable& window) {
    if (sigma_block.size() != window.values.size()) throw ConfigError("block_sigma: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < sigma_block.size(); ++i) {
        const double w = window.values[i];
        acc += sigma_block[i] * sigma_block[i] * w * w;
    }
    return std::sqrt(acc / window.norm_sq);
}

} // namespace wiener
