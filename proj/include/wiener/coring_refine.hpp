#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "conv_net.hpp"
#include "errors.hpp"
#include "noise_estim.hpp"
#include "weight_bundle.hpp"

namespace wiener {

/// Transfer functions of a whole block grid, row-major (My, Mx, w1, w2).
struct CoringTensor {
    int mx = 0;  // blocks per row
    int my = 0;  // block rows
    int n = 0;   // block size
    std::vector<double> values;

    std::size_t slice_size() const { return static_cast<std::size_t>(n) * n; }
    std::size_t index(int by, int bx, int a, int b) const {
        return ((static_cast<std::size_t>(by) * mx + bx) * n + a) * n + b;
    }
};

/// Per-block h in grid order (row-major over block rows); absent blocks are nullopt.
using BlockTransfers = std::vector<std::optional<std::vector<double>>>;

inline CoringTensor collate_h(const BlockTransfers& blocks, int mx, int my, int n) {
    if (mx <= 0 || my <= 0 || n <= 0) throw ConfigError("collate_h: empty grid");
    if (blocks.size() != static_cast<std::size_t>(mx) * my) {
        throw DataError("collate_h: expected " + std::to_string(mx * my) + " blocks, got " +
                        std::to_string(blocks.size()));
    }
    CoringTensor t{mx, my, n, {}};
    t.values.reserve(blocks.size() * t.slice_size());
    for (int by = 0; by < my; ++by) {
        for (int bx = 0; bx < mx; ++bx) {
            const auto& h = blocks[static_cast<std::size_t>(by) * mx + bx];
            if (!h) {
                throw DataError("collate_h: block (" + std::to_string(by) + "," + std::to_string(bx) + ") is missing");
            }
            if (h->size() != t.slice_size()) {
                throw DataError("collate_h: block (" + std::to_string(by) + "," + std::to_string(bx) +
                                ") has the wrong size");
            }
            t.values.insert(t.values.end(), h->begin(), h->end());
        }
    }
    return t;
}

inline std::vector<std::vector<double>> scatter_h(const CoringTensor& t) {
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(t.mx) * t.my);
    for (std::size_t b = 0; b < static_cast<std::size_t>(t.mx) * t.my; ++b) {
        const auto first = t.values.begin() + static_cast<std::ptrdiff_t>(b * t.slice_size());
        out.emplace_back(first, first + static_cast<std::ptrdiff_t>(t.slice_size()));
    }
    return out;
}

/// Two-stage residual refinement network: stage 1 runs over the frequency
/// plane of every block, stage 2 over the block grid of every frequency. Each
/// stage maps 1 channel to 1 channel through `channels`-wide conv+BN+ReLU
/// layers and a final plain conv.
struct CoringNetDef {
    int stage1_depth = 5;
    int stage2_depth = 4;
    int channels = 20;
    float bn_eps = 1e-5f;

    static std::vector<ConvLayerDef> stage_layers(int depth, int channels) {
        std::vector<ConvLayerDef> out;
        for (int l = 0; l < depth; ++l) {
            const bool last = l == depth - 1;
            out.push_back({l == 0 ? 1 : channels, last ? 1 : channels, !last, !last});
        }
        return out;
    }
    std::vector<ConvLayerDef> stage1() const { return stage_layers(stage1_depth, channels); }
    std::vector<ConvLayerDef> stage2() const { return stage_layers(stage2_depth, channels); }
};

/// Trainable parameter count quoted for the reference coring network. The
/// single-channel-per-stage layout above has fewer; see `param_count`.
inline constexpr std::size_t kReferenceCoringParams = 22506;

inline std::size_t param_count(const CoringNetDef& d) {
    const auto s1 = d.stage1(), s2 = d.stage2();
    return trainable_count(s1) + trainable_count(s2);
}

inline WeightBundle make_coring_bundle(const CoringNetDef& def, const TensorFill& fill) {
    if (def.stage1_depth < 1 || def.stage2_depth < 1 || def.channels < 1) {
        throw ConfigError("coring net needs at least one layer per stage");
    }
    WeightBundle b;
    b.records.push_back(meta_record(kCoringNetFamily, def.stage1_depth, def.channels, 1, 1, def.stage2_depth,
                                    def.bn_eps));
    const auto s1 = def.stage1();
    const auto s2 = def.stage2();
    // Stage-2 layer indices continue after stage 1 so fills can tell them apart.
    append_stack_records(b, s1, fill);
    append_stack_records(b, s2, [&](TensorKind k, std::size_t li, std::size_t e) {
        return fill(k, li + s1.size(), e);
    });
    return b;
}

inline WeightBundle make_zero_coring_bundle(const CoringNetDef& def = {}) {
    return make_coring_bundle(def, [](TensorKind k, std::size_t, std::size_t) {
        return k == TensorKind::BnVar ? 1.0f : 0.0f;
    });
}

struct CoringNet {
    CoringNetDef def;
    ConvStack stage1;
    ConvStack stage2;
};

inline CoringNet load_coring_net(const WeightBundle& b) {
    if (b.records.empty() || b.records[0].kind != TensorKind::Meta || b.records[0].values.size() != 8) {
        throw DataError("weight bundle lacks a meta record");
    }
    const auto& m = b.records[0].values;
    if (m[0] != kCoringNetFamily) throw DataError("weight bundle does not hold a coring network");
    CoringNet net;
    net.def.stage1_depth = static_cast<int>(m[1]);
    net.def.channels = static_cast<int>(m[2]);
    net.def.stage2_depth = static_cast<int>(m[5]);
    net.def.bn_eps = m[6];
    if (m[3] != 1.0f || m[4] != 1.0f || net.def.stage1_depth < 1 || net.def.stage2_depth < 1 ||
        net.def.channels < 1) {
        throw DataError("weight bundle declares an invalid coring network");
    }
    std::size_t pos = 1;
    const auto s1 = net.def.stage1();
    const auto s2 = net.def.stage2();
    net.stage1 = load_stack(b.records, pos, s1, net.def.bn_eps, "coring stage 1");
    net.stage2 = load_stack(b.records, pos, s2, net.def.bn_eps, "coring stage 2");
    if (pos != b.records.size()) throw DataError("weight bundle has extra records after the coring network");
    return net;
}

/// Stage 1 (+skip) over each block's frequency plane, stage 2 (+skip) over the
/// block grid at each frequency, then clamp to [0,1]. A zero-weight network
/// returns the input unchanged.
inline CoringTensor refine_h(const CoringTensor& input, const CoringNet& net) {
    CoringTensor t = input;
    const std::size_t nn = t.slice_size();
    for (int by = 0; by < t.my; ++by) {
        for (int bx = 0; bx < t.mx; ++bx) {
            Tensor3 x(1, t.n, t.n);
            const std::size_t base = t.index(by, bx, 0, 0);
            for (std::size_t i = 0; i < nn; ++i) x.values[i] = static_cast<float>(t.values[base + i]);
            const Tensor3 y = forward(net.stage1, x, "coring stage 1");
            for (std::size_t i = 0; i < nn; ++i) t.values[base + i] += static_cast<double>(y.values[i]);
        }
    }
    for (int a = 0; a < t.n; ++a) {
        for (int b = 0; b < t.n; ++b) {
            Tensor3 x(1, t.my, t.mx);
            for (int by = 0; by < t.my; ++by)
                for (int bx = 0; bx < t.mx; ++bx)
                    x.values[static_cast<std::size_t>(by) * t.mx + bx] = static_cast<float>(t.values[t.index(by, bx, a, b)]);
            const Tensor3 y = forward(net.stage2, x, "coring stage 2");
            for (int by = 0; by < t.my; ++by)
                for (int bx = 0; bx < t.mx; ++bx)
                    t.values[t.index(by, bx, a, b)] += static_cast<double>(y.values[static_cast<std::size_t>(by) * t.mx + bx]);
        }
    }
    for (auto& v : t.values) v = std::clamp(v, 0.0, 1.0);
    return t;
}

inline CoringTensor refine_h(const CoringTensor& input, const WeightBundle& bundle) {
    return refine_h(input, load_coring_net(bundle));
}

} // namespace wiener
