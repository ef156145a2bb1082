#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "block_engine.hpp"
#include "coring_refine.hpp"
#include "errors.hpp"
#include "image.hpp"
#include "noise_estim.hpp"
#include "parallel.hpp"
#include "plan.hpp"
#include "wiener_core.hpp"
#include "window.hpp"

namespace wiener {

/// Everything the overlap-add Wiener filter needs besides its inputs.
struct DenoiseConfig {
    WindowSpec window{};  // size is overridden per scale
    int stride_denominator = 4;
    ScaleSet scales{{38}, ScaleMode::Average};
    Normalization normalization = Normalization::WeightMask;
    DcStrategy dc = DcStrategy::median();
    double correction = 1.0;
    int coring_scale = 32;  // block size the coring network refines
    int workers = 0;
    bool warn_on_skip = true;
};

/// Optional inputs: the clean reference (oracle DC) and a coring network.
struct DenoiseExtras {
    const ImagePlanar* clean = nullptr;
    const CoringNet* coring = nullptr;
};

namespace detail {

/// Per-block sigma and oracle DC lookups for one scale.
struct BlockInputs {
    const ImagePlanar& noisy;
    const SigmaScope& sigma;
    const ImagePlanar* clean;
    const DenoiseConfig& cfg;

    double sigma_for(const BlockContext& ctx, int n, std::vector<double>& scratch) const {
        switch (sigma.kind) {
        case SigmaScope::Kind::Global: return sigma.global;
        case SigmaScope::Kind::PerChannel: return sigma.per_channel[static_cast<std::size_t>(std::min(ctx.channel, 2))];
        case SigmaScope::Kind::PerBlock:
            scratch.resize(static_cast<std::size_t>(n) * n);
            extract_block(sigma.map.plane(ctx.channel), sigma.map.width, sigma.map.height, ctx.row, ctx.col, n,
                          scratch);
            return block_sigma(scratch, *ctx.window);
        }
        return 0.0;
    }

    BlockFilterParams params(const BlockContext& ctx, std::vector<double>& sigma_scratch,
                             std::vector<double>& clean_scratch) const {
        const int n = ctx.window->size;
        BlockFilterParams p;
        p.sigma = sigma_for(ctx, n, sigma_scratch);
        p.correction = cfg.correction;
        p.dc = cfg.dc;
        p.origin_row = ctx.row;
        p.origin_col = ctx.col;
        if (cfg.dc.kind == DcStrategy::Kind::Oracle) {
            clean_scratch.resize(static_cast<std::size_t>(n) * n);
            extract_block(clean->plane(ctx.channel), clean->width, clean->height, ctx.row, ctx.col, n, clean_scratch);
            p.clean = clean_scratch;
        }
        return p;
    }
};

/// Unrefined transfer functions of every block of `plan` for one channel.
inline BlockTransfers collect_transfers(const BlockInputs& in, const BlockPlan& plan, const WindowTable& window,
                                        int channel, int workers) {
    const int n = plan.block_size;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const std::size_t cols = plan.col_origins.size();
    BlockTransfers out(plan.block_count());
    parallel_for(out.size(), resolve_workers(workers), [&](std::size_t i) {
        const std::size_t br = i / cols, bc = i % cols;
        BlockContext ctx{plan.row_origins[br] - plan.pad, plan.col_origins[bc] - plan.pad, channel,
                         static_cast<int>(br), static_cast<int>(bc), &window, &plan};
        std::vector<double> block(nn), sig, cln, dummy(nn), h(nn);
        extract_block(in.noisy.plane(channel), in.noisy.width, in.noisy.height, ctx.row, ctx.col, n, block);
        filter_block(block, window, in.params(ctx, sig, cln), dummy, h);
        out[i] = std::move(h);
    });
    return out;
}

} // namespace detail

/// Multi-scale overlap-add Wiener denoiser.
inline ImagePlanar denoise(const ImagePlanar& noisy, const SigmaScope& sigma, const DenoiseConfig& cfg,
                           const DenoiseExtras& extras = {}) {
    if (cfg.dc.kind == DcStrategy::Kind::Oracle) {
        if (!extras.clean) throw ConfigError("oracle DC strategy needs the clean reference image");
        require_same_shape(noisy, *extras.clean, "oracle DC reference");
    }
    if (sigma.kind == SigmaScope::Kind::PerBlock) {
        if (!(sigma.map.width == noisy.width && sigma.map.height == noisy.height &&
              sigma.map.channels == noisy.channels)) {
            throw DataError("sigma map extent does not match the image");
        }
    }
    if (!(cfg.correction > 0.0)) throw ConfigError("noise correction factor must be > 0");
    if (extras.coring) {
        bool present = false;
        for (int s : cfg.scales.sizes) present = present || s == cfg.coring_scale;
        if (!present) {
            throw ConfigError("coring scale " + std::to_string(cfg.coring_scale) + " is not in the scale set");
        }
    }

    const detail::BlockInputs inputs{noisy, sigma, extras.clean, cfg};
    EngineOptions opts;
    opts.normalization = cfg.normalization;
    opts.workers = cfg.workers;
    opts.warn_on_skip = cfg.warn_on_skip;

    FilterFactory factory = [&](const BlockPlan& plan, const WindowTable& window) -> BlockFilter {
        if (extras.coring && plan.block_size == cfg.coring_scale) {
            // Two passes: gather every block's h per channel, refine on the grid, then filter.
            auto refined = std::make_shared<std::vector<std::vector<std::vector<double>>>>();
            const int mx = static_cast<int>(plan.col_origins.size());
            const int my = static_cast<int>(plan.row_origins.size());
            for (int ch = 0; ch < noisy.channels; ++ch) {
                const auto h = detail::collect_transfers(inputs, plan, window, ch, cfg.workers);
                const CoringTensor t = refine_h(collate_h(h, mx, my, plan.block_size), *extras.coring);
                refined->push_back(scatter_h(t));
            }
            return [inputs, refined, mx](std::span<const double> block, const BlockContext& ctx, std::span<double> out) {
                std::vector<double> sig, cln;
                BlockFilterParams p = inputs.params(ctx, sig, cln);
                p.coring_override = (*refined)[static_cast<std::size_t>(ctx.channel)]
                                              [static_cast<std::size_t>(ctx.block_row) * mx + ctx.block_col];
                filter_block(block, *ctx.window, p, out);
            };
        }
        return [inputs](std::span<const double> block, const BlockContext& ctx, std::span<double> out) {
            std::vector<double> sig, cln;
            filter_block(block, *ctx.window, inputs.params(ctx, sig, cln), out);
        };
    };
    return run_multi_scale(noisy, cfg.scales, cfg.stride_denominator, cfg.window, factory, opts);
}

} // namespace wiener
