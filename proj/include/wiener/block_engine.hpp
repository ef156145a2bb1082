#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "parallel.hpp"
#include "plan.hpp"
#include "window.hpp"

namespace wiener {

/// Where a block sits. Origins are in image coordinates (top-left may be
/// negative; samples outside the image are reflected).
struct BlockContext {
    int row = 0;
    int col = 0;
    int channel = 0;
    int block_row = 0;  // index into plan.row_origins
    int block_col = 0;  // index into plan.col_origins
    const WindowTable* window = nullptr;
    const BlockPlan* plan = nullptr;
};

/// Maps a raw (unwindowed) N x N block to its windowed estimate x_w. The engine
/// multiplies the result by the synthesis window before overlap-add, so the
/// identity filter is out = block * w.
using BlockFilter =
    std::function<void(std::span<const double> block, const BlockContext& ctx, std::span<double> out)>;

enum class Normalization {
    WeightMask,  // divide by accumulated sum of w^2
    UnitGain,    // no division; relies on sum of w^2 == 1 (half-cosine at 2:1 overlap)
};

enum class ScaleMode { Average, Joint };

inline const char* to_string(ScaleMode m) { return m == ScaleMode::Average ? "average" : "joint"; }

struct ScaleSet {
    std::vector<int> sizes{8, 16, 32, 64, 96};
    ScaleMode mode = ScaleMode::Average;
};

struct EngineOptions {
    Normalization normalization = Normalization::WeightMask;
    int workers = 0;
    bool warn_on_skip = true;
};

/// Reads an N x N block at (row, col) of a single plane with reflection.
inline void extract_block(std::span<const float> plane, int width, int height, int row, int col,
                          int n, std::span<double> out) {
    for (int h = 0; h < n; ++h) {
        const int r = reflect_index(row + h, height);
        const float* src = plane.data() + static_cast<std::size_t>(r) * width;
        for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(h) * n + k] = src[reflect_index(col + k, width)];
    }
}

/// Overlap-add buffers on the image extent: one x_all plane per channel and a
/// shared w_all plane.
struct Accumulator {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> x_all;
    std::vector<double> w_all;

    Accumulator(int w, int h, int c)
        : width(w), height(h), channels(c),
          x_all(static_cast<std::size_t>(w) * h * c, 0.0),
          w_all(static_cast<std::size_t>(w) * h, 0.0) {}

    ImagePlanar resolve(Normalization norm) const {
        ImagePlanar out(width, height, channels);
        const std::size_t plane = static_cast<std::size_t>(width) * height;
        for (std::size_t i = 0; i < plane; ++i) {
            if (!(w_all[i] > 0.0)) {
                throw NumericError("coverage hole at pixel (" + std::to_string(i / width) + "," +
                                   std::to_string(i % width) + ")");
            }
        }
        for (int c = 0; c < channels; ++c) {
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = x_all[c * plane + i];
                out.data[c * plane + i] =
                    static_cast<float>(norm == Normalization::WeightMask ? v / w_all[i] : v);
            }
        }
        return out;
    }
};

/// Filters every block of one plan and adds w * x_w and w * w into `acc`.
/// Blocks of one block-row are filtered concurrently; accumulation happens
/// serially in plan order, so the result does not depend on worker count.
inline void accumulate_scale(const ImagePlanar& y, const BlockPlan& plan, const WindowTable& window,
                             const BlockFilter& filter, Accumulator& acc, int workers) {
    if (window.size != plan.block_size) throw ConfigError("window/plan block size mismatch");
    if (plan.image_width != y.width || plan.image_height != y.height) {
        throw ConfigError("block plan was built for a different image extent");
    }
    const int n = plan.block_size;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const std::size_t cols = plan.col_origins.size();
    const std::size_t per_row = cols * y.channels;
    const std::size_t plane = y.plane_size();
    std::vector<double> filtered(per_row * nn);
    const int nworkers = resolve_workers(workers);

    for (std::size_t br = 0; br < plan.row_origins.size(); ++br) {
        const int row = plan.row_origins[br] - plan.pad;
        parallel_for(per_row, nworkers, [&](std::size_t j) {
            const int ch = static_cast<int>(j / cols);
            const std::size_t bc = j % cols;
            const int col = plan.col_origins[bc] - plan.pad;
            std::vector<double> block(nn);
            extract_block(y.plane(ch), y.width, y.height, row, col, n, block);
            BlockContext ctx{row, col, ch, static_cast<int>(br), static_cast<int>(bc), &window, &plan};
            filter(block, ctx, std::span<double>(filtered.data() + j * nn, nn));
        });
        for (std::size_t j = 0; j < per_row; ++j) {
            const int ch = static_cast<int>(j / cols);
            const std::size_t bc = j % cols;
            const int col = plan.col_origins[bc] - plan.pad;
            const double* xw = filtered.data() + j * nn;
            for (int h = 0; h < n; ++h) {
                const int r = row + h;
                if (r < 0 || r >= y.height) continue;
                for (int k = 0; k < n; ++k) {
                    const int c = col + k;
                    if (c < 0 || c >= y.width) continue;
                    const double w = window(h, k);
                    const std::size_t pix = static_cast<std::size_t>(r) * y.width + c;
                    acc.x_all[ch * plane + pix] += w * xw[static_cast<std::size_t>(h) * n + k];
                    if (ch == 0) acc.w_all[pix] += w * w;
                }
            }
        }
    }
}

/// One scale of overlap-add Wiener-style processing: every block is filtered
/// and the result normalised by the accumulated window energy.
inline ImagePlanar run_single_scale(const ImagePlanar& y, const BlockPlan& plan, const WindowTable& window,
                                    const BlockFilter& filter, const EngineOptions& opts = {}) {
    Accumulator acc(y.width, y.height, y.channels);
    accumulate_scale(y, plan, window, filter, acc, opts.workers);
    return acc.resolve(opts.normalization);
}

/// Produces the per-scale filter; called once for every scale that fits.
using FilterFactory = std::function<BlockFilter(const BlockPlan& plan, const WindowTable& window)>;

/// Runs every fitting scale. Average mode returns the mean of per-scale
/// outputs; Joint mode shares one accumulator across scales. Returns the sizes
/// actually used through `used_sizes` when non-null.
inline ImagePlanar run_multi_scale(const ImagePlanar& y, const ScaleSet& scales, int stride_denominator,
                                   const WindowSpec& window_spec, const FilterFactory& make_filter,
                                   const EngineOptions& opts = {}, std::vector<int>* used_sizes = nullptr) {
    if (scales.sizes.empty()) throw ConfigError("scale set is empty");
    if (scales.mode == ScaleMode::Joint && opts.normalization == Normalization::UnitGain) {
        throw ConfigError("joint multi-scale accumulation requires weight-mask normalisation");
    }
    std::vector<int> used;
    Accumulator joint(y.width, y.height, y.channels);
    std::vector<double> average(y.size(), 0.0);
    for (int size : scales.sizes) {
        if (size < 8) throw ConfigError("scale sizes must be >= 8, got " + std::to_string(size));
        if (size > y.width || size > y.height) {
            if (opts.warn_on_skip) {
                std::cerr << "warning: skipping block size " << size << " for " << y.width << "x"
                          << y.height << " image\n";
            }
            continue;
        }
        const BlockPlan plan = make_plan(y.width, y.height, size, stride_denominator);
        WindowSpec ws = window_spec;
        ws.size = size;
        const WindowTable window = make_window(ws);
        const BlockFilter filter = make_filter(plan, window);
        if (scales.mode == ScaleMode::Joint) {
            accumulate_scale(y, plan, window, filter, joint, opts.workers);
        } else {
            const ImagePlanar out = run_single_scale(y, plan, window, filter, opts);
            for (std::size_t i = 0; i < average.size(); ++i) average[i] += out.data[i];
        }
        used.push_back(size);
    }
    if (used.empty()) throw ConfigError("no block size in the scale set fits the image");
    if (used_sizes) *used_sizes = used;
    if (scales.mode == ScaleMode::Joint) return joint.resolve(opts.normalization);
    ImagePlanar out(y.width, y.height, y.channels);
    const double inv = 1.0 / static_cast<double>(used.size());
    for (std::size_t i = 0; i < average.size(); ++i) out.data[i] = static_cast<float>(average[i] * inv);
    return out;
}

} // namespace wiener
