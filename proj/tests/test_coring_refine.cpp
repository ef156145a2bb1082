#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wiener/coring_refine.hpp"
#include "wiener/denoiser.hpp"
#include "wiener/errors.hpp"
#include "wiener/noise_estim.hpp"
#include "wiener/synth_noise.hpp"

using namespace wiener;

namespace {

BlockTransfers grid_of(int mx, int my, int n, unsigned seed) {
    std::mt19937 g(seed);
    std::uniform_real_distribution<double> u;
    BlockTransfers b;
    for (int i = 0; i < mx * my; ++i) {
        std::vector<double> h(static_cast<std::size_t>(n) * n);
        for (auto& v : h) v = u(g);
        b.emplace_back(std::move(h));
    }
    return b;
}

WeightBundle random_coring_bundle(float scale, unsigned seed) {
    std::mt19937 g(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    return make_coring_bundle(CoringNetDef{}, [&](TensorKind k, std::size_t, std::size_t) {
        switch (k) {
        case TensorKind::ConvWeight: return scale * u(g);
        case TensorKind::ConvBias: return 0.1f * u(g);
        case TensorKind::BnGamma: return 1.0f + 0.2f * u(g);
        case TensorKind::BnBeta: return 0.05f * u(g);
        case TensorKind::BnMean: return 0.05f * u(g);
        case TensorKind::BnVar: return 0.8f + 0.2f * u(g);
        default: return 0.0f;
        }
    });
}

} // namespace

TEST(Collate, SlicesMatchSources) {
    const auto blocks = grid_of(2, 2, 8, 1);
    const CoringTensor t = collate_h(blocks, 2, 2, 8);
    EXPECT_EQ(t.values.size(), 2u * 2 * 8 * 8);
    for (int by = 0; by < 2; ++by)
        for (int bx = 0; bx < 2; ++bx)
            for (int a = 0; a < 8; ++a)
                for (int b = 0; b < 8; ++b)
                    EXPECT_EQ(t.values[t.index(by, bx, a, b)], (*blocks[by * 2 + bx])[a * 8 + b]);
    const auto back = scatter_h(t);
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], *blocks[i]);
}

TEST(Collate, MissingBlockNamesPosition) {
    auto blocks = grid_of(3, 2, 8, 2);
    blocks[1 * 3 + 2].reset();
    try {
        collate_h(blocks, 3, 2, 8);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("(1,2)"), std::string::npos) << e.what();
    }
    EXPECT_THROW(collate_h(grid_of(2, 2, 8, 3), 3, 2, 8), DataError);
}

TEST(CoringNet, ParameterCountIsReportedAgainstReference) {
    const std::size_t n = param_count(CoringNetDef{});
    // Stage 1: 1->20, 3x(20->20), 20->1 with BN on hidden layers; stage 2 the same with 2 middle layers.
    const std::size_t s1 = (9 * 20 + 20) + 3 * (20 * 20 * 9 + 20) + (20 * 9 + 1) + 4 * 2 * 20;
    const std::size_t s2 = (9 * 20 + 20) + 2 * (20 * 20 * 9 + 20) + (20 * 9 + 1) + 3 * 2 * 20;
    EXPECT_EQ(n, s1 + s2);
    EXPECT_EQ(n, 19142u);
    EXPECT_NE(n, kReferenceCoringParams);
    EXPECT_EQ(stored_trainable_count(make_zero_coring_bundle()), n);
}

TEST(CoringNet, ZeroBundleIsExactIdentity) {
    const CoringTensor t = collate_h(grid_of(3, 3, 8, 4), 3, 3, 8);
    const CoringTensor r = refine_h(t, make_zero_coring_bundle());
    EXPECT_EQ(r.values, t.values);
}

TEST(CoringNet, MatchesScalarForwardOn3x3GridOf8x8) {
    const CoringNetDef def;
    const WeightBundle b = random_coring_bundle(0.1f, 7);
    const CoringTensor t = collate_h(grid_of(3, 3, 8, 5), 3, 3, 8);
    const CoringTensor r = refine_h(t, b);

    // Scalar reference: stage 1 per block, residual, stage 2 per frequency, residual, clamp.
    std::vector<double> v = t.values;
    std::size_t pos = 1;
    const auto s1 = def.stage1(), s2 = def.stage2();
    for (int blk = 0; blk < 9; ++blk) {
        std::size_t p = 1;
        std::vector<double> x(v.begin() + blk * 64, v.begin() + (blk + 1) * 64);
        const auto y = oracle::conv_stack(b.records, p, s1, def.bn_eps, x, 8, 8);
        for (int i = 0; i < 64; ++i) v[blk * 64 + i] += y[i];
        pos = p;
    }
    for (int f = 0; f < 64; ++f) {
        std::size_t p = pos;
        std::vector<double> x(9);
        for (int blk = 0; blk < 9; ++blk) x[blk] = v[blk * 64 + f];
        const auto y = oracle::conv_stack(b.records, p, s2, def.bn_eps, x, 3, 3);
        for (int blk = 0; blk < 9; ++blk) v[blk * 64 + f] += y[blk];
    }
    for (auto& x : v) x = std::clamp(x, 0.0, 1.0);
    int changed = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        ASSERT_NEAR(r.values[i], v[i], 1e-5);
        changed += r.values[i] != t.values[i];
    }
    EXPECT_GT(changed, 0);
}

TEST(CoringNet, OutputStaysInUnitRange) {
    const CoringTensor t = collate_h(grid_of(4, 3, 16, 6), 4, 3, 16);
    for (unsigned seed = 0; seed < 3; ++seed) {
        const CoringTensor r = refine_h(t, random_coring_bundle(2.0f, seed));
        for (double v : r.values) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
    }
}

TEST(CoringNet, RejectsStdBundle) {
    EXPECT_THROW(load_coring_net(make_zero_std_bundle(NetworkDef{})), DataError);
    WeightBundle b = make_zero_coring_bundle();
    b.records.pop_back();
    EXPECT_THROW(load_coring_net(b), DataError);
}

TEST(Pipeline, IdentityRefinementIsBitForBit) {
    const ImagePlanar clean = synthetic_scene(8, 96, 80);
    const ImagePlanar noisy = add_noise(clean, {0.1, 0.03, 2});
    const SigmaScope sigma = estimate_sigma_statistical(noisy, SigmaScope::Kind::PerBlock, 32);
    DenoiseConfig cfg;
    cfg.scales = {{16, 32}, ScaleMode::Average};
    cfg.correction = 1.4;
    const ImagePlanar plain = denoise(noisy, sigma, cfg);
    const CoringNet zero = load_coring_net(make_zero_coring_bundle());
    DenoiseExtras extras;
    extras.coring = &zero;
    const ImagePlanar refined = denoise(noisy, sigma, cfg, extras);
    EXPECT_EQ(plain.data, refined.data);

    const CoringNet other = load_coring_net(random_coring_bundle(0.2f, 1));
    extras.coring = &other;
    EXPECT_NE(denoise(noisy, sigma, cfg, extras).data, plain.data);

    cfg.coring_scale = 64;
    extras.coring = &zero;
    EXPECT_THROW(denoise(noisy, sigma, cfg, extras), ConfigError);
}
