// Acceptance suite. Prints one PASS/FAIL line per criterion; with a criterion
// name as argument only that one runs. Exit status is non-zero if any
// selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "wiener/bench/ablate.hpp"
#include "wiener/bench/dataset.hpp"
#include "wiener/bench/run.hpp"
#include "wiener/block_engine.hpp"
#include "wiener/noise_estim.hpp"
#include "wiener/plan.hpp"
#include "wiener/wiener_core.hpp"
#include "wiener/window.hpp"

using namespace wiener;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double mean_psnr(const std::vector<bench::Setting>& settings, const bench::Dataset& ds) {
    bench::NetCache nets;
    return mean_of(bench::evaluate(bench::build_config(settings), ds, nets));
}

constexpr std::array<int, 6> kSizes{8, 16, 32, 38, 64, 96};

// Identity per-block filter: output equals input within 1e-6 for both windows,
// strides 1/2, 1/3, 1/4 and all sizes, in under 10 s.
Outcome reconstruction_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    const ImagePlanar img = oracle::random_image(128, 128, 1, 7);
    double worst = 0.0;
    std::string where = "every configuration";
    for (WindowKind kind : {WindowKind::RaisedCosine, WindowKind::Gaussian}) {
        for (int denom : {2, 3, 4}) {
            for (int n : kSizes) {
                const WindowTable win = make_window({kind, 0.3, n});
                const BlockPlan plan = make_plan(128, 128, n, denom);
                // Two identity filters: a plain copy and the Wiener filter at sigma = 0.
                const BlockFilter copy = [&](std::span<const double> b, const BlockContext&, std::span<double> o) {
                    for (std::size_t i = 0; i < b.size(); ++i) o[i] = b[i] * win.values[i];
                };
                const BlockFilter wiener0 = [&](std::span<const double> b, const BlockContext&, std::span<double> o) {
                    BlockFilterParams p;
                    p.sigma = 0.0;
                    p.dc = DcStrategy::mean();
                    filter_block(b, win, p, o);
                };
                for (const BlockFilter* f : {&copy, &wiener0}) {
                    const ImagePlanar out = run_single_scale(img, plan, win, *f);
                    for (std::size_t i = 0; i < img.data.size(); ++i) {
                        const double d = std::abs(static_cast<double>(out.data[i]) - img.data[i]);
                        if (d > worst) {
                            worst = d;
                            where = fmt("%s 1/%d N=%d", to_string(kind), denom, n);
                        }
                    }
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && secs < 10.0,
            fmt("max |out-in| %.3g at %s (tol 1e-6), %.2f s (limit 10 s)", worst, where.c_str(), secs)};
}

// Half-cosine at 2:1 overlap has gain 1 everywhere inside the image.
Outcome unit_gain() {
    double worst = 0.0;
    for (int n : kSizes) {
        const PlaneD g = gain_map(make_window({WindowKind::RaisedCosine, 0.3, n}), make_plan(128, 128, n, 2));
        for (double v : g.values) worst = std::max(worst, std::abs(v - 1.0));
    }
    return {worst <= 1e-9, fmt("max |gain-1| %.3g over N in {8..96} (tol 1e-9)", worst)};
}

// filter_block against a direct O(N^4) DFT reference.
Outcome fft_vs_dft() {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int n : {8, 16, 38}) {
        for (WindowKind kind : {WindowKind::RaisedCosine, WindowKind::Gaussian}) {
            const WindowTable win = make_window({kind, 0.3, n});
            const auto ow = oracle::window(kind == WindowKind::RaisedCosine, n);
            for (double sigma : {0.0, 0.02, 0.1}) {
                std::vector<double> block(static_cast<std::size_t>(n) * n), out(block.size());
                for (auto& v : block) v = u(g);
                BlockFilterParams p;
                p.sigma = sigma;
                p.correction = 1.4;
                p.dc = DcStrategy::mean();
                filter_block(block, win, p, out);
                const auto ref = oracle::filter_block(block, ow, n, oracle::mean(block), sigma, 1.4);
                for (std::size_t i = 0; i < out.size(); ++i) worst = std::max(worst, std::abs(out[i] - ref[i]));
            }
        }
    }
    return {worst <= 1e-5, fmt("max |fft-dft| %.3g for N in {8,16,38} (tol 1e-5)", worst)};
}

// 0 <= h <= 1, h non-increasing in sigma, sigma = 0 is the identity; 1000 spectra.
Outcome coring_properties() {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<double> sigmas{0.0, 1e-4, 0.003, 0.01, 0.03, 0.06, 0.1, 0.2, 0.5, 1.0};
    int bad_range = 0, bad_mono = 0, bad_identity = 0;
    double worst_identity = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = kSizes[static_cast<std::size_t>(trial) % kSizes.size()];
        const WindowTable win = make_window({trial % 2 ? WindowKind::Gaussian : WindowKind::RaisedCosine, 0.3, n});
        std::vector<double> block(static_cast<std::size_t>(n) * n), out(block.size());
        const double amp = std::pow(10.0, -3.0 * u(g));
        for (auto& v : block) v = 0.5 + amp * (u(g) - 0.5);
        const BlockSpectrum s = analyze_block(block, oracle::mean(block), win);
        std::vector<double> prev;
        for (double sigma : sigmas) {
            const CoringResult c = core_psd(s.p_yy, sigma, win.norm_sq, 1.0);
            for (std::size_t i = 0; i < c.h.size(); ++i) {
                if (!(c.h[i] >= 0.0 && c.h[i] <= 1.0)) ++bad_range;
                if (!prev.empty() && c.h[i] > prev[i]) ++bad_mono;
                if (sigma == 0.0 && s.p_yy[i] > kPsdFloor && c.h[i] != 1.0) ++bad_identity;
            }
            prev = c.h;
        }
        BlockFilterParams p;
        p.sigma = 0.0;
        p.dc = DcStrategy::mean();
        filter_block(block, win, p, out);
        for (std::size_t i = 0; i < out.size(); ++i)
            worst_identity = std::max(worst_identity, std::abs(out[i] - block[i] * win.values[i]));
    }
    const bool ok = bad_range == 0 && bad_mono == 0 && bad_identity == 0 && worst_identity <= 1e-9;
    return {ok, fmt("1000 spectra x %zu sigmas: %d out of [0,1], %d monotonicity breaks, %d non-unit h at "
                    "sigma=0, identity error %.3g (tol 1e-9)",
                    sigmas.size(), bad_range, bad_mono, bad_identity, worst_identity)};
}

struct GridPoint {
    int depth, channels;
    double reported_k;
};
constexpr std::array<GridPoint, 9> kStdGrid{{{2, 16, 0.9},
                                             {2, 32, 1.8},
                                             {2, 64, 3.6},
                                             {4, 16, 5.6},
                                             {4, 32, 20.4},
                                             {4, 64, 77.0},
                                             {6, 16, 10.0},
                                             {6, 32, 39.0},
                                             {6, 64, 152.0}}};

// Closed form written out independently of the library: conv weights + biases
// of every layer plus BN scale/shift on all hidden layers.
std::size_t closed_form(int d, int c) {
    const std::size_t C = static_cast<std::size_t>(c), D = static_cast<std::size_t>(d);
    return (3 * C * 9 + C) + (D - 2) * (C * C * 9 + C) + (C * 3 * 9 + 3) + (D - 1) * 2 * C;
}

// Constructed networks hold exactly the closed-form number of parameters.
Outcome std_net_param_counts() {
    int bad = 0;
    std::string list;
    for (const auto& gp : kStdGrid) {
        NetworkDef def;
        def.depth = gp.depth;
        def.channels = gp.channels;
        const WeightBundle b = decode_bundle(encode_bundle(make_zero_std_bundle(def)));
        const StdNet net = load_std_net(b);
        const std::size_t stored = stored_trainable_count(b);
        const std::size_t expect = closed_form(gp.depth, gp.channels);
        bad += stored != expect || param_count(net.def) != expect;
        list += fmt(" %dx%d=%zu", gp.depth, gp.channels, stored);
    }
    return {bad == 0, fmt("%d/9 mismatches vs closed form;%s", bad, list.c_str())};
}

// The closed-form counts, rounded to 0.1k, against the published column.
Outcome std_net_param_counts_reported() {
    int bad = 0;
    std::string list;
    for (const auto& gp : kStdGrid) {
        const double k = std::round(static_cast<double>(closed_form(gp.depth, gp.channels)) / 100.0) / 10.0;
        const bool ok = std::abs(k - gp.reported_k) < 1e-9;
        bad += !ok;
        list += fmt(" %dx%d %.1fk%s%.1fk", gp.depth, gp.channels, k, ok ? "==" : "!=", gp.reported_k);
    }
    return {bad == 0, fmt("%d/9 differ from the reported column;%s", bad, list.c_str())};
}

// Stride 1/4 beats 1/2 by >= 0.15 dB on 20 AWGN images (sigma 25/255, half-cosine 38).
Outcome awgn_quarter_vs_half_stride() {
    const auto t0 = std::chrono::steady_clock::now();
    const bench::Dataset ds = bench::builtin_dataset("awgn", 20, 1000);
    const std::vector<bench::Setting> base{{"window", "raised-cosine"}, {"block", "38"}, {"dc", "mean"},
                                           {"norm", "mask"}, {"sigma", "fixed:25/255"}};
    auto half = base, quarter = base;
    half.emplace_back("stride", "2");
    quarter.emplace_back("stride", "4");
    const double p2 = mean_psnr(half, ds), p4 = mean_psnr(quarter, ds);
    const double secs = seconds_since(t0);
    return {p4 - p2 >= 0.15 && secs < 120.0,
            fmt("stride 1/2 %.3f dB, 1/4 %.3f dB, gain %+.3f dB (need >= 0.15), %.1f s (limit 120 s)", p2, p4,
                p4 - p2, secs)};
}

// Oracle > Median > Mean DC, each gap > 0.05 dB, clamped signal-dependent noise.
Outcome dc_strategy_ordering() {
    const bench::Dataset ds = bench::builtin_dataset("clamped-sd", 20, 1000);
    const std::vector<bench::Setting> base{{"window", "gaussian"},
                                           {"block", "38"},
                                           {"stride", "4"},
                                           {"sigma", "statistical:per-block:32"}};
    std::array<double, 3> p{};
    const std::array<const char*, 3> dcs{"mean", "median", "oracle"};
    for (std::size_t i = 0; i < 3; ++i) {
        auto s = base;
        s.emplace_back("dc", dcs[i]);
        p[i] = mean_psnr(s, ds);
    }
    const double g1 = p[1] - p[0], g2 = p[2] - p[1];
    return {g1 > 0.05 && g2 > 0.05,
            fmt("mean %.3f, median %.3f, oracle %.3f dB; median-mean %+.3f, oracle-median %+.3f (need > 0.05)", p[0],
                p[1], p[2], g1, g2)};
}

// Per-block statistical sigma beats one fixed global sigma by >= 0.3 dB.
Outcome sigma_scope_per_block() {
    const bench::Dataset ds = bench::builtin_dataset("signal-dependent", 20, 1000);
    const std::vector<bench::Setting> base{{"window", "gaussian"}, {"block", "38"}, {"stride", "4"}, {"dc", "mean"}};
    auto fixed = base, block = base;
    fixed.emplace_back("sigma", "fixed:10/255");
    block.emplace_back("sigma", "statistical:per-block:32");
    const double pf = mean_psnr(fixed, ds), pb = mean_psnr(block, ds);
    return {pb - pf >= 0.3,
            fmt("global fixed 10/255 %.3f dB, per-block statistical %.3f dB, gain %+.3f dB (need >= 0.3)", pf, pb,
                pb - pf)};
}

// W0 <= W2 <= W3 on the bundled set.
Outcome pipeline_ladder() {
    const bench::Dataset ds = bench::builtin_dataset("signal-dependent", 20, 1000);
    const double w0 = mean_psnr({{"level", "W0"}}, ds);
    const double w2 = mean_psnr({{"level", "W2"}}, ds);
    const double w3 = mean_psnr({{"level", "W3"}}, ds);
    return {w0 <= w2 && w2 <= w3, fmt("W0 %.3f dB, W2 %.3f dB, W3 %.3f dB (need W0 <= W2 <= W3)", w0, w2, w3)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Rows of a full ablation reproduce bit-identically when rerun by hash.
Outcome ablation_determinism() {
    const auto root = std::filesystem::temp_directory_path() / ("wiener_accept_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    bench::AblationOptions o;
    o.dataset = "synthetic:signal-dependent:4:77";
    o.base = {{"level", "W2"}};
    o.axes = {bench::parse_axis("dc=mean,median"), bench::parse_axis("stride=2,4")};
    o.workers = 3;
    o.out_dir = (root / "full").string();
    bench::run_ablation(o);
    const std::string full = slurp(root / "full" / "results.csv");
    o.out_dir = (root / "again").string();
    bench::run_ablation(o);
    const bool same_run = full == slurp(root / "again" / "results.csv");

    // Re-run each row on its own by hash and compare the lines.
    std::istringstream lines(full);
    std::string header, line;
    std::getline(lines, header);
    int rows = 0, mismatched = 0;
    std::vector<std::string> hashes;
    while (std::getline(lines, line)) {
        ++rows;
        const std::string h = line.substr(0, line.find(','));
        if (std::find(hashes.begin(), hashes.end(), h) == hashes.end()) hashes.push_back(h);
    }
    for (const auto& h : hashes) {
        o.only = h;
        o.out_dir = (root / h).string();
        bench::run_ablation(o);
        std::istringstream one(slurp(root / h / "results.csv"));
        std::getline(one, line);
        while (std::getline(one, line))
            if (full.find(line + "\n") == std::string::npos) ++mismatched;
    }
    std::filesystem::remove_all(root);
    return {same_run && mismatched == 0 && rows == 16,
            fmt("%d rows, rerun identical: %s, %zu configs replayed by hash, %d mismatched rows", rows,
                same_run ? "yes" : "no", hashes.size(), mismatched)};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

const std::vector<Criterion> kCriteria{
    {"reconstruction_identity", reconstruction_identity},
    {"unit_gain", unit_gain},
    {"fft_vs_dft", fft_vs_dft},
    {"coring_properties", coring_properties},
    {"std_net_param_counts", std_net_param_counts},
    {"std_net_param_counts_reported", std_net_param_counts_reported},
    {"awgn_quarter_vs_half_stride", awgn_quarter_vs_half_stride},
    {"dc_strategy_ordering", dc_strategy_ordering},
    {"sigma_scope_per_block", sigma_scope_per_block},
    {"pipeline_ladder", pipeline_ladder},
    {"ablation_determinism", ablation_determinism},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> wanted(argv + 1, argv + argc);
    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
        ++ran;
        Outcome r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failed += !r.pass;
        std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", c.name, r.detail.c_str());
        std::fflush(stdout);
    }
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion\n");
        return 2;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
