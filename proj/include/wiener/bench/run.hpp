#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "../denoiser.hpp"
#include "../errors.hpp"
#include "../noise_estim.hpp"
#include "../synth_noise.hpp"
#include "../weight_bundle.hpp"
#include "config.hpp"
#include "dataset.hpp"

namespace wiener::bench {

/// Loaded network bundles, shared between runs.
class NetCache {
public:
    const StdNet& std_net(const std::string& path) {
        std::lock_guard lock(mu_);
        auto& slot = std_[path];
        if (!slot) slot = std::make_unique<StdNet>(load_std_net(read_bundle(path)));
        return *slot;
    }
    const CoringNet& coring_net(const std::string& path) {
        std::lock_guard lock(mu_);
        auto& slot = coring_[path];
        if (!slot) slot = std::make_unique<CoringNet>(load_coring_net(read_bundle(path)));
        return *slot;
    }

private:
    std::mutex mu_;
    std::map<std::string, std::unique_ptr<StdNet>> std_;
    std::map<std::string, std::unique_ptr<CoringNet>> coring_;
};

inline constexpr double kOracleGridMax = 60.0 / 255.0;
inline constexpr double kOracleGridStep = 2.0 / 255.0;

/// Per-channel sigma minimising the MSE against the clean image over the grid
/// 0, 2/255, ..., 60/255. Channels are filtered independently, so one
/// denoise per grid value covers all channels.
inline SigmaScope oracle_grid_sigma(const ImagePlanar& noisy, const ImagePlanar& clean, DenoiseConfig cfg,
                                    const DenoiseExtras& extras) {
    cfg.warn_on_skip = false;
    std::array<double, 3> best_sigma{0, 0, 0};
    std::array<double, 3> best_err{1e300, 1e300, 1e300};
    const int steps = static_cast<int>(std::lround(kOracleGridMax / kOracleGridStep));
    for (int k = 0; k <= steps; ++k) {
        const double s = k * kOracleGridStep;
        const ImagePlanar out = denoise(noisy, SigmaScope::make_global(s), cfg, extras);
        for (int c = 0; c < std::min(noisy.channels, 3); ++c) {
            double err = 0.0;
            const auto a = out.plane(c), b = clean.plane(c);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = std::clamp(a[i], 0.0f, 1.0f) - b[i];
                err += d * d;
            }
            if (err < best_err[static_cast<std::size_t>(c)]) {
                best_err[static_cast<std::size_t>(c)] = err;
                best_sigma[static_cast<std::size_t>(c)] = s;
            }
        }
    }
    return SigmaScope::make_per_channel(best_sigma);
}

inline SigmaScope resolve_sigma(const RunConfig& cfg, const Sample& s, NetCache& nets, const DenoiseConfig& dcfg,
                                const DenoiseExtras& extras) {
    const SigmaSource& src = cfg.sigma;
    switch (src.kind) {
    case SigmaSource::Kind::Fixed: return SigmaScope::make_global(src.fixed);
    case SigmaSource::Kind::PerChannelFixed: return SigmaScope::make_per_channel(src.per_channel);
    case SigmaSource::Kind::Statistical: return estimate_sigma_statistical(s.noisy, src.scope, src.block);
    case SigmaSource::Kind::Cnn: return reduce_sigma(infer_sigma_map(s.noisy, nets.std_net(src.bundle_path)), src.scope);
    case SigmaSource::Kind::OracleGrid: return oracle_grid_sigma(s.noisy, s.clean, dcfg, extras);
    case SigmaSource::Kind::GroundTruth:
        if (!s.noise) throw DataError("sample '" + s.name + "' has no recorded noise parameters for sigma=gt");
        return reduce_sigma(ground_truth_sigma_map(s.clean, *s.noise), src.scope);
    }
    throw ConfigError("unhandled sigma source");
}

/// Denoises one sample under `cfg`; the result is clamped to [0, 1].
inline ImagePlanar run_sample(const RunConfig& cfg, const Sample& s, NetCache& nets) {
    DenoiseConfig d = cfg.denoise;
    d.correction = cfg.effective_correction();
    DenoiseExtras extras;
    extras.clean = &s.clean;
    if (!cfg.coring_bundle.empty()) extras.coring = &nets.coring_net(cfg.coring_bundle);
    const SigmaScope sigma = resolve_sigma(cfg, s, nets, d, extras);
    return clamped(denoise(s.noisy, sigma, d, extras));
}

/// PSNR of every sample, computed in parallel and returned in dataset order.
inline std::vector<double> evaluate(const RunConfig& cfg, const Dataset& ds, NetCache& nets, int workers = 0) {
    std::vector<double> out(ds.samples.size());
    RunConfig inner = cfg;
    inner.denoise.workers = 1;  // parallelism is across images here
    inner.denoise.warn_on_skip = false;
    parallel_for(out.size(), resolve_workers(workers), [&](std::size_t i) {
        out[i] = psnr(run_sample(inner, ds.samples[i], nets), ds.samples[i].clean);
    });
    return out;
}

} // namespace wiener::bench
