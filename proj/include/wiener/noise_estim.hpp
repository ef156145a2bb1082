#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "conv_net.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "weight_bundle.hpp"

namespace wiener {

/// Per-pixel, per-channel noise STD in normalized intensity units.
struct SigmaMap : ImagePlanar {
    using ImagePlanar::ImagePlanar;
    SigmaMap() = default;
    explicit SigmaMap(ImagePlanar img) : ImagePlanar(std::move(img)) {}
};

inline void validate_sigma_map(const SigmaMap& m) {
    for (float v : m.data) {
        if (!std::isfinite(v) || v < 0.0f) throw NumericError("sigma map holds a negative or non-finite value");
    }
}

/// Noise level at one of three spatial resolutions.
struct SigmaScope {
    enum class Kind { Global, PerChannel, PerBlock };
    Kind kind = Kind::Global;
    double global = 0.0;
    std::array<double, 3> per_channel{0.0, 0.0, 0.0};
    SigmaMap map;

    static SigmaScope make_global(double s) {
        if (s < 0.0) throw ConfigError("sigma must be >= 0");
        SigmaScope r;
        r.global = s;
        return r;
    }
    static SigmaScope make_per_channel(std::array<double, 3> s) {
        for (double v : s)
            if (v < 0.0) throw ConfigError("sigma must be >= 0");
        SigmaScope r;
        r.kind = Kind::PerChannel;
        r.per_channel = s;
        return r;
    }
    static SigmaScope make_per_block(SigmaMap m) {
        validate_sigma_map(m);
        SigmaScope r;
        r.kind = Kind::PerBlock;
        r.map = std::move(m);
        return r;
    }

    /// Expands to a full map over the given extent.
    SigmaMap to_map(int width, int height, int channels) const {
        if (kind == Kind::PerBlock) {
            if (map.width != width || map.height != height || map.channels != channels) {
                throw DataError("sigma map extent does not match the image");
            }
            return map;
        }
        SigmaMap m(width, height, channels);
        for (int c = 0; c < channels; ++c) {
            const double v = kind == Kind::Global ? global : per_channel[static_cast<std::size_t>(std::min(c, 2))];
            auto p = m.plane(c);
            std::fill(p.begin(), p.end(), static_cast<float>(v));
        }
        return m;
    }
};

inline const char* to_string(SigmaScope::Kind k) {
    switch (k) {
    case SigmaScope::Kind::Global: return "global";
    case SigmaScope::Kind::PerChannel: return "per-channel";
    case SigmaScope::Kind::PerBlock: return "per-block";
    }
    return "?";
}

/// Collapses a sigma map to the requested scope: spatial mean over everything
/// (Global), per channel (PerChannel), or the map itself (PerBlock).
inline SigmaScope reduce_sigma(const SigmaMap& m, SigmaScope::Kind kind) {
    if (kind == SigmaScope::Kind::PerBlock) return SigmaScope::make_per_block(m);
    std::array<double, 3> ch{0.0, 0.0, 0.0};
    double all = 0.0;
    for (int c = 0; c < m.channels; ++c) {
        double s = 0.0;
        for (float v : m.plane(c)) s += v;
        all += s;
        if (c < 3) ch[static_cast<std::size_t>(c)] = s / static_cast<double>(m.plane_size());
    }
    if (m.channels == 1) ch = {ch[0], ch[0], ch[0]};
    if (kind == SigmaScope::Kind::PerChannel) return SigmaScope::make_per_channel(ch);
    return SigmaScope::make_global(all / static_cast<double>(m.size()));
}

// ---------------------------------------------------------------------------
// Tiny STD network

/// Noise-STD CNN: `depth` conv layers of width `channels`; every layer but the
/// last is conv + BN + ReLU, the last is a plain conv followed by softplus.
struct NetworkDef {
    int depth = 4;
    int channels = 32;
    int in_channels = 3;
    int out_channels = 3;
    float bn_eps = 1e-5f;

    std::vector<ConvLayerDef> layers() const {
        std::vector<ConvLayerDef> out;
        for (int l = 0; l < depth; ++l) {
            const bool last = l == depth - 1;
            out.push_back({l == 0 ? in_channels : channels, last ? out_channels : channels, !last, !last});
        }
        return out;
    }
};

inline void validate(const NetworkDef& d) {
    if (d.depth != 2 && d.depth != 4 && d.depth != 6) throw ConfigError("STD net depth must be 2, 4 or 6");
    if (d.channels != 16 && d.channels != 32 && d.channels != 64) {
        throw ConfigError("STD net width must be 16, 32 or 64");
    }
    if (d.in_channels != 3 || d.out_channels != 3) throw ConfigError("STD net maps 3 channels to 3 channels");
}

/// Closed-form trainable parameter count (BN running statistics excluded).
inline std::size_t param_count(const NetworkDef& d) {
    const std::size_t c = static_cast<std::size_t>(d.channels);
    const std::size_t k = kKernel * kKernel;
    const std::size_t in = static_cast<std::size_t>(d.in_channels), out = static_cast<std::size_t>(d.out_channels);
    const std::size_t middle = static_cast<std::size_t>(d.depth - 2);
    return (in * c * k + c) + middle * (c * c * k + c) + (c * out * k + out) +
           static_cast<std::size_t>(d.depth - 1) * 2 * c;
}

inline constexpr float kStdNetFamily = 1.0f;
inline constexpr float kCoringNetFamily = 2.0f;

/// Meta payload: [family, depth, channels, in, out, stage2_depth, bn_eps, 0].
inline TensorRecord meta_record(float family, int depth, int channels, int in, int out, int stage2_depth,
                                float bn_eps) {
    return {TensorKind::Meta,
            {8},
            {family, static_cast<float>(depth), static_cast<float>(channels), static_cast<float>(in),
             static_cast<float>(out), static_cast<float>(stage2_depth), bn_eps, 0.0f}};
}

/// Sum of trainable tensor sizes stored in a bundle (conv weights/biases and
/// BN gamma/beta).
inline std::size_t stored_trainable_count(const WeightBundle& b) {
    std::size_t n = 0;
    for (const auto& r : b.records) {
        if (r.kind == TensorKind::ConvWeight || r.kind == TensorKind::ConvBias || r.kind == TensorKind::BnGamma ||
            r.kind == TensorKind::BnBeta) {
            n += r.values.size();
        }
    }
    return n;
}

inline WeightBundle make_std_bundle(const NetworkDef& def, const TensorFill& fill) {
    validate(def);
    WeightBundle b;
    b.records.push_back(meta_record(kStdNetFamily, def.depth, def.channels, def.in_channels,
                                    def.out_channels, 0, def.bn_eps));
    const auto layers = def.layers();
    append_stack_records(b, layers, fill);
    return b;
}

/// All-zero conv/BN parameters with unit running variance.
inline WeightBundle make_zero_std_bundle(const NetworkDef& def) {
    return make_std_bundle(def, [](TensorKind k, std::size_t, std::size_t) {
        return k == TensorKind::BnVar ? 1.0f : 0.0f;
    });
}

/// Reads the declared STD-net definition from a bundle's meta record.
inline NetworkDef std_net_def(const WeightBundle& b) {
    if (b.records.empty() || b.records[0].kind != TensorKind::Meta || b.records[0].values.size() != 8) {
        throw DataError("weight bundle lacks a meta record");
    }
    const auto& m = b.records[0].values;
    if (m[0] != kStdNetFamily) throw DataError("weight bundle does not hold a noise-STD network");
    NetworkDef d;
    d.depth = static_cast<int>(m[1]);
    d.channels = static_cast<int>(m[2]);
    d.in_channels = static_cast<int>(m[3]);
    d.out_channels = static_cast<int>(m[4]);
    d.bn_eps = m[6];
    try {
        validate(d);
    } catch (const ConfigError& e) {
        throw DataError(std::string("weight bundle declares an invalid network: ") + e.what());
    }
    return d;
}

/// Validated, BN-folded STD network ready for inference.
struct StdNet {
    NetworkDef def;
    ConvStack stack;
};

inline StdNet load_std_net(const WeightBundle& b) {
    StdNet net;
    net.def = std_net_def(b);
    std::size_t pos = 1;
    const auto layers = net.def.layers();
    net.stack = load_stack(b.records, pos, layers, net.def.bn_eps, "std-net");
    if (pos != b.records.size()) throw DataError("weight bundle has extra records after the STD network");
    return net;
}

inline float softplus(float x) {
    return x > 20.0f ? x : std::log1p(std::exp(x));
}

/// Per-pixel sigma map from the STD network; same extent as the input.
inline SigmaMap infer_sigma_map(const ImagePlanar& image, const StdNet& net) {
    if (image.channels != net.def.in_channels) {
        throw DataError("STD net expects " + std::to_string(net.def.in_channels) + " channels, image has " +
                        std::to_string(image.channels));
    }
    Tensor3 x(image.channels, image.height, image.width);
    std::copy(image.data.begin(), image.data.end(), x.values.begin());
    Tensor3 y = forward(net.stack, std::move(x), "std-net");
    SigmaMap m(image.width, image.height, net.def.out_channels);
    for (std::size_t i = 0; i < y.values.size(); ++i) m.data[i] = softplus(y.values[i]);
    for (float v : m.data) {
        if (!std::isfinite(v)) throw NumericError("std-net: non-finite softplus output");
    }
    return m;
}

inline SigmaMap infer_sigma_map(const ImagePlanar& image, const WeightBundle& bundle) {
    return infer_sigma_map(image, load_std_net(bundle));
}

// ---------------------------------------------------------------------------
// Weight-free statistical estimator

/// Squared norm of the 3x3 Laplacian-type mask [1 -2 1; -2 4 -2; 1 -2 1].
inline constexpr double kLaplacianNormSq = 36.0;
inline constexpr double kMadToStd = 1.4826;

namespace detail {

inline double laplacian_at(std::span<const float> p, int width, int r, int c) {
    auto v = [&](int rr, int cc) { return static_cast<double>(p[static_cast<std::size_t>(rr) * width + cc]); };
    return v(r - 1, c - 1) - 2.0 * v(r - 1, c) + v(r - 1, c + 1) - 2.0 * v(r, c - 1) + 4.0 * v(r, c) -
           2.0 * v(r, c + 1) + v(r + 1, c - 1) - 2.0 * v(r + 1, c) + v(r + 1, c + 1);
}

/// |Laplacian| at interior pixels of rows [r0, r1) x cols [c0, c1).
inline void collect_abs_laplacian(const ImagePlanar& img, int ch, int r0, int r1, int c0, int c1,
                                  std::vector<double>& out) {
    const auto p = img.plane(ch);
    for (int r = std::max(r0, 1); r < std::min(r1, img.height - 1); ++r)
        for (int c = std::max(c0, 1); c < std::min(c1, img.width - 1); ++c)
            out.push_back(std::abs(laplacian_at(p, img.width, r, c)));
}

inline double mad_sigma(std::vector<double>& abs_d) {
    if (abs_d.empty()) return 0.0;
    const std::size_t mid = (abs_d.size() - 1) / 2;
    std::nth_element(abs_d.begin(), abs_d.begin() + static_cast<std::ptrdiff_t>(mid), abs_d.end());
    return kMadToStd * abs_d[mid] / std::sqrt(kLaplacianNormSq);
}

/// Splits [0, extent) into max(1, extent / block) tiles; the last absorbs the remainder.
inline std::vector<int> tile_edges(int extent, int block) {
    const int tiles = std::max(1, extent / block);
    std::vector<int> e;
    for (int t = 0; t < tiles; ++t) e.push_back(t * block);
    e.push_back(extent);
    return e;
}

} // namespace detail

/// Robust MAD-of-Laplacian noise estimate, globally, per channel or per tile
/// of `block_size` pixels (assembled into a piecewise-constant map).
inline SigmaScope estimate_sigma_statistical(const ImagePlanar& image, SigmaScope::Kind kind, int block_size = 32) {
    if (image.width < 8 || image.height < 8) throw ConfigError("statistical sigma estimate needs >= 8x8 pixels");
    std::vector<double> d;
    switch (kind) {
    case SigmaScope::Kind::Global:
        for (int c = 0; c < image.channels; ++c)
            detail::collect_abs_laplacian(image, c, 0, image.height, 0, image.width, d);
        return SigmaScope::make_global(detail::mad_sigma(d));
    case SigmaScope::Kind::PerChannel: {
        std::array<double, 3> s{0.0, 0.0, 0.0};
        for (int c = 0; c < image.channels && c < 3; ++c) {
            d.clear();
            detail::collect_abs_laplacian(image, c, 0, image.height, 0, image.width, d);
            s[static_cast<std::size_t>(c)] = detail::mad_sigma(d);
        }
        if (image.channels == 1) s = {s[0], s[0], s[0]};
        return SigmaScope::make_per_channel(s);
    }
    case SigmaScope::Kind::PerBlock: {
        if (block_size < 3 || block_size > image.width || block_size > image.height) {
            throw ConfigError("sigma block size " + std::to_string(block_size) + " does not fit a " +
                              std::to_string(image.width) + "x" + std::to_string(image.height) + " image");
        }
        SigmaMap m(image.width, image.height, image.channels);
        const auto rows = detail::tile_edges(image.height, block_size);
        const auto cols = detail::tile_edges(image.width, block_size);
        for (int c = 0; c < image.channels; ++c) {
            for (std::size_t tr = 0; tr + 1 < rows.size(); ++tr) {
                for (std::size_t tc = 0; tc + 1 < cols.size(); ++tc) {
                    d.clear();
                    detail::collect_abs_laplacian(image, c, rows[tr], rows[tr + 1], cols[tc], cols[tc + 1], d);
                    const float s = static_cast<float>(detail::mad_sigma(d));
                    for (int r = rows[tr]; r < rows[tr + 1]; ++r)
                        for (int cc = cols[tc]; cc < cols[tc + 1]; ++cc) m.at(c, r, cc) = s;
                }
            }
        }
        return SigmaScope::make_per_block(std::move(m));
    }
    }
    return {};
}

} // namespace wiener
