#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "noise_estim.hpp"
#include "png_io.hpp"

namespace wiener {

/// Heteroscedastic Gaussian noise: var = sigma_s^2 * clean + sigma_c^2.
struct NoiseParams {
    double sigma_s = 0.0;
    double sigma_c = 0.0;
    std::uint64_t seed = 0;
    bool clamp = false;
};

inline void validate(const NoiseParams& p) {
    if (p.sigma_s < 0.0 || p.sigma_c < 0.0) throw ConfigError("noise parameters must be >= 0");
}

/// Seed of item `index` derived from a master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) { return master + index; }

/// mt19937_64 with a portable Box-Muller normal, so sequences are identical
/// across standard libraries.
class NoiseRng {
public:
    explicit NoiseRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline double noise_std_at(double clean, const NoiseParams& p) {
    return std::sqrt(p.sigma_s * p.sigma_s * std::max(clean, 0.0) + p.sigma_c * p.sigma_c);
}

/// noisy = clean + N(0, sigma_s^2 clean + sigma_c^2) per sample; clamped to
/// [0,1] only when p.clamp is set.
inline ImagePlanar add_noise(const ImagePlanar& clean, const NoiseParams& p) {
    validate(p);
    NoiseRng rng(p.seed);
    ImagePlanar out = clean;
    for (auto& v : out.data) {
        const double s = noise_std_at(v, p);
        const double n = rng.normal();
        double y = v + s * n;
        if (p.clamp) y = std::clamp(y, 0.0, 1.0);
        v = static_cast<float>(y);
    }
    return out;
}

inline SigmaMap ground_truth_sigma_map(const ImagePlanar& clean, const NoiseParams& p) {
    validate(p);
    SigmaMap m(clean.width, clean.height, clean.channels);
    for (std::size_t i = 0; i < clean.data.size(); ++i) m.data[i] = static_cast<float>(noise_std_at(clean.data[i], p));
    return m;
}

/// Per-pixel sample STD of (noisy_k - clean) over K draws with seeds
/// split_seed(p.seed, k).
inline SigmaMap empirical_sigma_map(const ImagePlanar& clean, const NoiseParams& p, int realizations = 12) {
    if (realizations < 2) throw ConfigError("empirical sigma map needs K >= 2");
    validate(p);
    std::vector<double> sum(clean.size(), 0.0), sum_sq(clean.size(), 0.0);
    for (int k = 0; k < realizations; ++k) {
        NoiseParams pk = p;
        pk.seed = split_seed(p.seed, static_cast<std::uint64_t>(k));
        const ImagePlanar noisy = add_noise(clean, pk);
        for (std::size_t i = 0; i < clean.size(); ++i) {
            const double d = static_cast<double>(noisy.data[i]) - clean.data[i];
            sum[i] += d;
            sum_sq[i] += d * d;
        }
    }
    SigmaMap m(clean.width, clean.height, clean.channels);
    const double k = realizations;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double var = std::max(0.0, (sum_sq[i] - sum[i] * sum[i] / k) / (k - 1.0));
        m.data[i] = static_cast<float>(std::sqrt(var));
    }
    return m;
}

/// Scale used when a sigma map is stored as a 16-bit PNG: code = sigma * 65535 / 0.5.
inline constexpr double kSigmaPngFullScale = 0.5;

inline void save_sigma_map(const SigmaMap& m, const std::string& png_path) {
    ImagePlanar scaled = m;
    for (auto& v : scaled.data) v = static_cast<float>(v / kSigmaPngFullScale);
    save_png(scaled, png_path, 16);
    std::ofstream side(png_path + ".txt");
    if (!side) throw DataError("cannot write sidecar for '" + png_path + "'");
    side << "# sigma map: 16-bit PNG, sigma = code / 65535 * " << kSigmaPngFullScale << "\n"
         << "full_scale=" << kSigmaPngFullScale << "\n";
}

inline SigmaMap load_sigma_map(const std::string& png_path) {
    ImagePlanar img = load_png(png_path, false);
    for (auto& v : img.data) v = static_cast<float>(v * kSigmaPngFullScale);
    return SigmaMap(std::move(img));
}

/// Deterministic piecewise-smooth RGB test scene: a two-colour gradient,
/// filled discs and rectangles, a sinusoidal texture patch and a darkened
/// region, so every scene has flat areas, edges, texture and shadows.
inline ImagePlanar synthetic_scene(std::uint64_t seed, int width = 128, int height = 128) {
    NoiseRng rng(seed * 0x9E3779B97F4A7C15ull + 1);
    ImagePlanar img(width, height, 3);
    auto colour = [&] { return std::array<double, 3>{rng.uniform(), rng.uniform(), rng.uniform()}; };

    const auto c0 = colour(), c1 = colour();
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double u = (ca * (c - width / 2.0) + sa * (r - height / 2.0)) / (0.75 * std::max(width, height));
            const double t = std::clamp(0.5 + u, 0.0, 1.0);
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, r, c) = static_cast<float>(c0[ch] * (1.0 - t) + c1[ch] * t);
        }
    }

    const int shapes = 4 + static_cast<int>(rng.uniform() * 5.0);
    for (int s = 0; s < shapes; ++s) {
        const auto col = colour();
        const double cy = rng.uniform(0.0, height), cx = rng.uniform(0.0, width);
        const double size = rng.uniform(0.08, 0.3) * std::min(width, height);
        const bool disc = rng.uniform() < 0.5;
        const double aspect = rng.uniform(0.5, 2.0);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                const double dy = (r - cy) / size, dx = (c - cx) / (size * aspect);
                const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (!inside) continue;
                for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = static_cast<float>(col[ch]);
            }
        }
    }

    {
        const double cy = rng.uniform(0.2, 0.8) * height, cx = rng.uniform(0.2, 0.8) * width;
        const double half = rng.uniform(0.12, 0.25) * std::min(width, height);
        const double freq = rng.uniform(0.15, 0.6), theta = rng.uniform(0.0, std::numbers::pi);
        const double amp = rng.uniform(0.1, 0.25);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                if (std::abs(r - cy) > half || std::abs(c - cx) > half) continue;
                const double phase = freq * (std::cos(theta) * c + std::sin(theta) * r);
                for (int ch = 0; ch < 3; ++ch) {
                    auto& v = img.at(ch, r, c);
                    v = static_cast<float>(v + amp * std::sin(phase + ch));
                }
            }
        }
    }

    // Shadow: a smooth dark falloff over part of the frame.
    const double sy = rng.uniform(0.0, height), sx = rng.uniform(0.0, width);
    const double radius = rng.uniform(0.35, 0.7) * std::max(width, height);
    const double depth = rng.uniform(0.6, 0.95);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double d = std::hypot(r - sy, c - sx) / radius;
            const double k = 1.0 - depth * std::exp(-d * d);
            for (int ch = 0; ch < 3; ++ch) {
                auto& v = img.at(ch, r, c);
                v = static_cast<float>(std::clamp(v * k, 0.0, 1.0));
            }
        }
    }
    return img;
}

} // namespace wiener
