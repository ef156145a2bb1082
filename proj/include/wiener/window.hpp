#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "plan.hpp"

namespace wiener {

enum class WindowKind { RaisedCosine, Gaussian };

inline const char* to_string(WindowKind k) {
    return k == WindowKind::RaisedCosine ? "raised-cosine" : "gaussian";
}

struct WindowSpec {
    WindowKind kind = WindowKind::Gaussian;
    /// Gaussian STD in normalized block coordinates u, v in (-1, 1).
    double alpha = 0.3;
    int size = 32;
};

/// Square analysis/synthesis window, row-major, plus its squared norm.
struct WindowTable {
    int size = 0;
    std::vector<double> values;
    double norm_sq = 0.0;

    double operator()(int h, int k) const { return values[static_cast<std::size_t>(h) * size + k]; }
};

/// Pixel-centre coordinate in (-1, 1): u = (2h + 1 - N) / N.
inline double normalized_coord(int h, int n) {
    return static_cast<double>(2 * h + 1 - n) / static_cast<double>(n);
}

inline WindowTable make_window(const WindowSpec& spec) {
    if (spec.size < 4) throw ConfigError("window size must be >= 4, got " + std::to_string(spec.size));
    if (!(spec.alpha > 0.0)) throw ConfigError("window alpha must be > 0");
    const int n = spec.size;
    WindowTable t;
    t.size = n;
    t.values.resize(static_cast<std::size_t>(n) * n);
    std::vector<double> axis(n);
    for (int h = 0; h < n; ++h) {
        const double u = normalized_coord(h, n);
        axis[h] = spec.kind == WindowKind::RaisedCosine ? std::cos(std::numbers::pi * u / 2.0) : u * u;
    }
    const double inv_two_var = 1.0 / (2.0 * spec.alpha * spec.alpha);
    for (int h = 0; h < n; ++h) {
        for (int k = 0; k < n; ++k) {
            const double v = spec.kind == WindowKind::RaisedCosine
                                 ? axis[h] * axis[k]
                                 : std::exp(-(axis[h] + axis[k]) * inv_two_var);
            t.values[static_cast<std::size_t>(h) * n + k] = v;
        }
    }
    for (double v : t.values) t.norm_sq += v * v;
    return t;
}

/// Double-precision single-channel plane.
struct PlaneD {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double& operator()(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    double operator()(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }

    ImagePlanar to_image() const {
        ImagePlanar img(width, height, 1);
        for (std::size_t i = 0; i < values.size(); ++i) img.data[i] = static_cast<float>(values[i]);
        return img;
    }
};

/// Accumulates w^2 of every block of `plan` onto the image extent. Throws
/// NumericError if any pixel ends up with zero weight.
inline PlaneD gain_map(const WindowTable& window, const BlockPlan& plan) {
    if (window.size != plan.block_size) {
        throw ConfigError("gain_map: window size " + std::to_string(window.size) +
                          " != block size " + std::to_string(plan.block_size));
    }
    PlaneD g{plan.image_width, plan.image_height,
             std::vector<double>(static_cast<std::size_t>(plan.image_width) * plan.image_height, 0.0)};
    const int n = plan.block_size;
    for (int r0 : plan.row_origins) {
        for (int c0 : plan.col_origins) {
            for (int h = 0; h < n; ++h) {
                const int r = r0 + h - plan.pad;
                if (r < 0 || r >= g.height) continue;
                for (int k = 0; k < n; ++k) {
                    const int c = c0 + k - plan.pad;
                    if (c < 0 || c >= g.width) continue;
                    const double w = window(h, k);
                    g(r, c) += w * w;
                }
            }
        }
    }
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!(g(r, c) > 0.0)) {
                throw NumericError("block plan leaves pixel (" + std::to_string(r) + "," +
                                   std::to_string(c) + ") without window coverage");
            }
        }
    }
    return g;
}

} // namespace wiener
