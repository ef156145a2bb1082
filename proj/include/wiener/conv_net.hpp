#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "weight_bundle.hpp"

namespace wiener {

inline constexpr int kKernel = 3;

/// One 3x3 / stride 1 / zero-pad 1 convolution, optionally followed by batch
/// norm and ReLU.
struct ConvLayerDef {
    int in = 0;
    int out = 0;
    bool batch_norm = false;
    bool relu = false;
};

inline std::size_t trainable_count(std::span<const ConvLayerDef> layers) {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += static_cast<std::size_t>(l.out) * l.in * kKernel * kKernel + l.out;
        if (l.batch_norm) n += 2 * static_cast<std::size_t>(l.out);
    }
    return n;
}

/// Convolution with batch norm folded in.
struct FoldedConv {
    ConvLayerDef def;
    std::vector<float> weight;  // OIHW
    std::vector<float> bias;
};

struct ConvStack {
    std::vector<FoldedConv> layers;
};

/// Channel-major activation tensor.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> values;

    Tensor3() = default;
    Tensor3(int c, int h, int w)
        : channels(c), height(h), width(w), values(static_cast<std::size_t>(c) * h * w, 0.0f) {}

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    float* channel(int c) { return values.data() + c * plane(); }
    const float* channel(int c) const { return values.data() + c * plane(); }
};

namespace detail {

inline const TensorRecord& expect_record(const std::vector<TensorRecord>& recs, std::size_t& pos,
                                         TensorKind kind, std::vector<std::uint32_t> dims,
                                         const std::string& where) {
    if (pos >= recs.size()) {
        throw DataError(where + ": bundle ends before " + to_string(kind));
    }
    const TensorRecord& r = recs[pos];
    if (r.kind != kind) {
        throw DataError(where + ": expected " + std::string(to_string(kind)) + ", found " +
                        to_string(r.kind));
    }
    if (r.dims != dims) {
        std::string want, got;
        for (auto d : dims) want += std::to_string(d) + " ";
        for (auto d : r.dims) got += std::to_string(d) + " ";
        throw DataError(where + ": " + to_string(kind) + " shape mismatch (want [ " + want +
                        "], got [ " + got + "])");
    }
    ++pos;
    return r;
}

} // namespace detail

/// Reads one conv stack from `recs` starting at `pos`, validating shapes and
/// folding batch norm. A BN layer may be stored either with its four BN
/// tensors or already folded (conv tensors only).
inline ConvStack load_stack(const std::vector<TensorRecord>& recs, std::size_t& pos,
                            std::span<const ConvLayerDef> layers, float bn_eps, const std::string& name) {
    ConvStack stack;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const ConvLayerDef& d = layers[li];
        const std::string where = name + " layer " + std::to_string(li);
        const auto o = static_cast<std::uint32_t>(d.out), i = static_cast<std::uint32_t>(d.in);
        FoldedConv fc{d, {}, {}};
        fc.weight = detail::expect_record(recs, pos, TensorKind::ConvWeight, {o, i, kKernel, kKernel}, where).values;
        fc.bias = detail::expect_record(recs, pos, TensorKind::ConvBias, {o}, where).values;
        if (d.batch_norm && pos < recs.size() && recs[pos].kind == TensorKind::BnGamma) {
            const auto& gamma = detail::expect_record(recs, pos, TensorKind::BnGamma, {o}, where).values;
            const auto& beta = detail::expect_record(recs, pos, TensorKind::BnBeta, {o}, where).values;
            const auto& mean = detail::expect_record(recs, pos, TensorKind::BnMean, {o}, where).values;
            const auto& var = detail::expect_record(recs, pos, TensorKind::BnVar, {o}, where).values;
            const std::size_t per_out = static_cast<std::size_t>(d.in) * kKernel * kKernel;
            for (int oc = 0; oc < d.out; ++oc) {
                if (var[oc] < 0.0f) throw DataError(where + ": negative BN running variance");
                const double scale = gamma[oc] / std::sqrt(static_cast<double>(var[oc]) + bn_eps);
                for (std::size_t k = 0; k < per_out; ++k) {
                    auto& w = fc.weight[oc * per_out + k];
                    w = static_cast<float>(w * scale);
                }
                fc.bias[oc] = static_cast<float>((fc.bias[oc] - mean[oc]) * scale + beta[oc]);
            }
        }
        stack.layers.push_back(std::move(fc));
    }
    return stack;
}

/// Value source used when synthesising bundles: (kind, layer index, element index) -> value.
using TensorFill = std::function<float(TensorKind, std::size_t layer, std::size_t element)>;

/// Appends the records of one conv stack (with raw BN tensors) to `bundle`.
inline void append_stack_records(WeightBundle& bundle, std::span<const ConvLayerDef> layers,
                                 const TensorFill& fill) {
    auto add = [&](TensorKind kind, std::vector<std::uint32_t> dims, std::size_t li) {
        TensorRecord r{kind, std::move(dims), {}};
        r.values.resize(r.element_count());
        for (std::size_t e = 0; e < r.values.size(); ++e) r.values[e] = fill(kind, li, e);
        bundle.records.push_back(std::move(r));
    };
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const auto o = static_cast<std::uint32_t>(layers[li].out), i = static_cast<std::uint32_t>(layers[li].in);
        add(TensorKind::ConvWeight, {o, i, kKernel, kKernel}, li);
        add(TensorKind::ConvBias, {o}, li);
        if (layers[li].batch_norm) {
            add(TensorKind::BnGamma, {o}, li);
            add(TensorKind::BnBeta, {o}, li);
            add(TensorKind::BnMean, {o}, li);
            add(TensorKind::BnVar, {o}, li);
        }
    }
}

/// out = conv3x3(in) with zero padding.
inline Tensor3 conv3x3(const Tensor3& in, const FoldedConv& layer) {
    const int h = in.height, w = in.width;
    Tensor3 out(layer.def.out, h, w);
    for (int o = 0; o < layer.def.out; ++o) {
        float* dst = out.channel(o);
        std::fill(dst, dst + out.plane(), layer.bias[o]);
        for (int i = 0; i < layer.def.in; ++i) {
            const float* src = in.channel(i);
            const float* k = layer.weight.data() + (static_cast<std::size_t>(o) * layer.def.in + i) * 9;
            for (int kh = 0; kh < kKernel; ++kh) {
                for (int kw = 0; kw < kKernel; ++kw) {
                    const float wv = k[kh * kKernel + kw];
                    if (wv == 0.0f) continue;
                    const int dc = kw - 1;
                    const int c_lo = std::max(0, -dc), c_hi = std::min(w, w - dc);
                    for (int r = 0; r < h; ++r) {
                        const int rr = r + kh - 1;
                        if (rr < 0 || rr >= h) continue;
                        float* drow = dst + static_cast<std::size_t>(r) * w;
                        const float* srow = src + static_cast<std::size_t>(rr) * w + dc;
                        for (int c = c_lo; c < c_hi; ++c) drow[c] += wv * srow[c];
                    }
                }
            }
        }
    }
    return out;
}

inline Tensor3 forward(const ConvStack& stack, Tensor3 x, const std::string& name) {
    for (std::size_t li = 0; li < stack.layers.size(); ++li) {
        const auto& layer = stack.layers[li];
        if (x.channels != layer.def.in) throw DataError(name + ": channel mismatch at layer " + std::to_string(li));
        x = conv3x3(x, layer);
        // Checked before ReLU, which would map NaN to 0.
        for (float v : x.values) {
            if (!std::isfinite(v)) {
                throw NumericError(name + ": non-finite activation after layer " + std::to_string(li));
            }
        }
        if (layer.def.relu) {
            for (auto& v : x.values) v = v > 0.0f ? v : 0.0f;
        }
    }
    return x;
}

} // namespace wiener
