#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wiener {

/// Maps any integer coordinate onto [0, n) by mirror reflection about the
/// edge samples (the edge sample itself is not repeated).
inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

struct BlockOrigin {
    int row = 0;
    int col = 0;
};

/// Regular grid of square blocks over a reflection-padded image.
///
/// Origins are stored in padded coordinates; the image pixel (r, c) sits at
/// padded (r + pad, c + pad). Every origin k*stride for k = 0.. up to the far
/// edge is listed, so each image pixel sees the same number of blocks at
/// every intra-block offset.
struct BlockPlan {
    int block_size = 0;
    int stride = 0;
    int pad = 0;
    int image_width = 0;
    int image_height = 0;
    std::vector<int> row_origins;
    std::vector<int> col_origins;

    std::size_t block_count() const { return row_origins.size() * col_origins.size(); }

    std::vector<BlockOrigin> origins() const {
        std::vector<BlockOrigin> out;
        out.reserve(block_count());
        for (int r : row_origins)
            for (int c : col_origins) out.push_back({r, c});
        return out;
    }
};

inline int stride_for(int block_size, int stride_denominator) {
    return std::max(1, block_size / stride_denominator);
}

inline std::vector<int> axis_origins(int extent, int pad, int stride) {
    std::vector<int> out;
    const int last_pixel = pad + extent - 1;
    for (int o = 0; o <= last_pixel; o += stride) out.push_back(o);
    return out;
}

/// Builds the block grid for one scale: stride = max(1, N/denominator),
/// pad = N - stride.
inline BlockPlan make_plan(int width, int height, int block_size, int stride_denominator) {
    if (stride_denominator < 1) {
        throw ConfigError("stride denominator must be >= 1, got " + std::to_string(stride_denominator));
    }
    if (block_size < 4) throw ConfigError("block size must be >= 4, got " + std::to_string(block_size));
    if (width <= 0 || height <= 0) throw ConfigError("make_plan: empty image");
    if (block_size > width || block_size > height) {
        throw ConfigError("image " + std::to_string(width) + "x" + std::to_string(height) +
                          " is smaller than block size " + std::to_string(block_size) +
                          "; drop this scale");
    }
    BlockPlan plan;
    plan.block_size = block_size;
    plan.stride = stride_for(block_size, stride_denominator);
    plan.pad = block_size - plan.stride;
    plan.image_width = width;
    plan.image_height = height;
    plan.row_origins = axis_origins(height, plan.pad, plan.stride);
    plan.col_origins = axis_origins(width, plan.pad, plan.stride);
    return plan;
}

} // namespace wiener
