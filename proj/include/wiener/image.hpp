#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wiener {

/// Float image with planar channel layout: all of channel 0, then channel 1...
/// Nominal range is [0,1] but filter outputs may leave it.
struct ImagePlanar {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    ImagePlanar() = default;
    ImagePlanar(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w <= 0 || h <= 0 || c <= 0) {
            throw ConfigError("image extent must be positive, got " + std::to_string(w) + "x" +
                              std::to_string(h) + "x" + std::to_string(c));
        }
    }

    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
    std::size_t size() const { return data.size(); }

    std::span<float> plane(int c) { return {data.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const {
        return {data.data() + c * plane_size(), plane_size()};
    }

    float& at(int c, int row, int col) {
        return data[c * plane_size() + static_cast<std::size_t>(row) * width + col];
    }
    float at(int c, int row, int col) const {
        return data[c * plane_size() + static_cast<std::size_t>(row) * width + col];
    }

    bool same_shape(const ImagePlanar& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

struct ImagePair {
    ImagePlanar noisy;
    ImagePlanar clean;
};

inline void require_same_shape(const ImagePlanar& a, const ImagePlanar& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DataError(std::string(what) + ": shape mismatch " + std::to_string(a.width) + "x" +
                        std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                        std::to_string(b.width) + "x" + std::to_string(b.height) + "x" +
                        std::to_string(b.channels));
    }
}

inline ImagePair make_pair(ImagePlanar noisy, ImagePlanar clean) {
    require_same_shape(noisy, clean, "image pair");
    return {std::move(noisy), std::move(clean)};
}

/// Value returned by psnr() for identical images.
inline constexpr double kPsnrCap = 999.0;

inline double mse(const ImagePlanar& a, const ImagePlanar& b) {
    require_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

/// PSNR in dB with peak 1.0, one MSE over all pixels and channels.
inline double psnr(const ImagePlanar& a, const ImagePlanar& b) {
    const double m = mse(a, b);
    if (m <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(m));
}

inline ImagePlanar clamped(ImagePlanar img, float lo = 0.0f, float hi = 1.0f) {
    for (auto& v : img.data) v = std::clamp(v, lo, hi);
    return img;
}

} // namespace wiener
