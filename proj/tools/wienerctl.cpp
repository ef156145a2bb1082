// wienerctl: denoise images, build synthetic datasets, run ablation grids and
// inspect weight bundles.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wiener/bench/ablate.hpp"
#include "wiener/bench/config.hpp"
#include "wiener/bench/dataset.hpp"
#include "wiener/bench/run.hpp"
#include "wiener/coring_refine.hpp"
#include "wiener/noise_estim.hpp"
#include "wiener/png_io.hpp"
#include "wiener/weight_bundle.hpp"

namespace {

using wiener::bench::Setting;

/// Options shared by verbs that build a RunConfig.
struct ConfigFlags {
    std::string config_file;
    std::string level;
    std::vector<std::string> sets;
    // Shorthand flags, each equivalent to --set key=value.
    std::vector<std::pair<std::string, std::string>> direct;

    void add_to(CLI::App* app) {
        direct.reserve(16);  // options bind to the strings below
        app->add_option("--config", config_file, "flat key = value config file");
        app->add_option("--level", level, "preset: W0, W1, W2, W3, W4 or custom");
        app->add_option("--set", sets, "override one setting, key=value (repeatable)");
        for (const char* key : {"window", "alpha", "block", "scales", "mode", "stride", "norm", "dc", "sigma",
                                "correction", "coring", "coring-scale", "workers"}) {
            direct.emplace_back(key, "");
            app->add_option(std::string("--") + key, direct.back().second);
        }
    }

    /// defaults < preset < config file < flags
    std::vector<Setting> settings() const {
        std::vector<Setting> out;
        if (!config_file.empty()) out = wiener::bench::read_config_file(config_file);
        if (!level.empty()) out.emplace_back("level", level);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw wiener::ConfigError("--set expects key=value, got '" + s + "'");
            out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& [k, v] : direct)
            if (!v.empty()) out.emplace_back(k, v);
        return out;
    }
};

std::pair<double, double> parse_range(const std::string& text, const char* what) {
    const auto parts = wiener::bench::detail::split(text, ",:");
    if (parts.size() != 2) throw wiener::ConfigError(std::string(what) + " expects lo,hi");
    return {wiener::bench::detail::parse_double(what, parts[0]), wiener::bench::detail::parse_double(what, parts[1])};
}

int run_inspect(const std::string& path) {
    const wiener::WeightBundle b = wiener::read_bundle(path);
    std::printf("%s: %zu records, checksum ok\n", path.c_str(), b.records.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < b.records.size(); ++i) {
        const auto& r = b.records[i];
        std::string dims;
        for (std::size_t k = 0; k < r.dims.size(); ++k) dims += (k ? "x" : "") + std::to_string(r.dims[k]);
        std::printf("  [%zu] %-12s %-14s %zu values\n", i, wiener::to_string(r.kind), dims.c_str(), r.values.size());
        if (r.kind != wiener::TensorKind::Meta) total += r.values.size();
    }
    std::printf("stored values: %zu, trainable: %zu\n", total, wiener::stored_trainable_count(b));
    if (!b.records.empty() && b.records[0].kind == wiener::TensorKind::Meta && !b.records[0].values.empty()) {
        const float family = b.records[0].values[0];
        if (family == wiener::kStdNetFamily) {
            const auto net = wiener::load_std_net(b);
            std::printf("STD network: depth %d, width %d, %d -> %d channels, %zu parameters\n", net.def.depth,
                        net.def.channels, net.def.in_channels, net.def.out_channels, wiener::param_count(net.def));
        } else if (family == wiener::kCoringNetFamily) {
            const auto net = wiener::load_coring_net(b);
            std::printf("coring network: stages %d + %d, width %d, %zu parameters\n", net.def.stage1_depth,
                        net.def.stage2_depth, net.def.channels, wiener::param_count(net.def));
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Overlapping-block Wiener denoiser"};
    app.require_subcommand(1);

    // denoise
    auto* den = app.add_subcommand("denoise", "denoise one PNG image");
    ConfigFlags den_flags;
    std::string in_path, out_path, clean_path;
    int bit_depth = 8;
    bool print_config = false;
    den->add_option("input", in_path, "noisy PNG")->required();
    den->add_option("-o,--output", out_path, "output PNG")->required();
    den->add_option("--clean", clean_path, "clean reference (oracle settings, PSNR report)");
    den->add_option("--bit-depth", bit_depth, "output bit depth, 8 or 16")->check(CLI::IsMember({8, 16}));
    den->add_flag("--print-config", print_config, "print the canonical configuration and its hash");
    den_flags.add_to(den);

    // make-dataset
    auto* mk = app.add_subcommand("make-dataset", "cut clean patches and synthesise noisy pairs");
    wiener::bench::MakeDatasetOptions mk_opts;
    std::string sigma_s_range = "0,0.16", sigma_c_range = "0,0.06";
    mk->add_option("--clean-dir", mk_opts.clean_dir, "directory of clean PNGs (default: procedural scenes)");
    mk->add_option("-o,--out", mk_opts.out_dir, "output directory")->required();
    mk->add_option("--count", mk_opts.count, "number of patches");
    mk->add_option("--patch", mk_opts.patch, "patch size in pixels");
    mk->add_option("--sigma-s", sigma_s_range, "signal-dependent STD range lo,hi");
    mk->add_option("--sigma-c", sigma_c_range, "constant STD range lo,hi");
    mk->add_option("--seed", mk_opts.seed, "master seed");
    mk->add_flag("--clamp", mk_opts.clamp, "clamp noisy images to [0, 1]");
    mk->add_option("--realizations", mk_opts.realizations, "noise draws per empirical sigma map");

    // ablate
    auto* abl = app.add_subcommand("ablate", "run a configuration grid over a dataset");
    ConfigFlags abl_flags;
    wiener::bench::AblationOptions abl_opts;
    std::vector<std::string> grid;
    abl->add_option("--dataset", abl_opts.dataset,
                    "synthetic:<awgn|signal-dependent|clamped-sd>[:count[:seed]] or a dataset directory");
    abl->add_option("--grid", grid, "axis key=v1,v2,... (repeatable)");
    abl->add_option("-o,--out", abl_opts.out_dir, "output directory for results.csv and report.md");
    abl->add_option("--only", abl_opts.only, "run only the grid point with this config hash");
    abl->add_option("--jobs", abl_opts.workers, "images processed in parallel (0: auto)");
    abl_flags.add_to(abl);

    // inspect-weights
    auto* insp = app.add_subcommand("inspect-weights", "validate and summarise a weight bundle");
    std::string bundle_path;
    insp->add_option("bundle", bundle_path, "weight bundle file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*den) {
            const auto cfg = wiener::bench::build_config(den_flags.settings());
            if (print_config) {
                std::printf("%s\nhash %s\n", wiener::bench::canonical(cfg).c_str(),
                            wiener::bench::config_hash(cfg).c_str());
            }
            wiener::bench::Sample s;
            s.name = in_path;
            s.noisy = wiener::load_png(in_path);
            if (!clean_path.empty()) {
                s.clean = wiener::load_png(clean_path);
                wiener::require_same_shape(s.noisy, s.clean, "clean reference");
            } else if (cfg.is_oracle()) {
                throw wiener::ConfigError("oracle settings need --clean");
            }
            wiener::bench::NetCache nets;
            const auto out = wiener::bench::run_sample(cfg, s, nets);
            wiener::save_png(out, out_path, bit_depth);
            if (!clean_path.empty()) {
                std::printf("PSNR noisy %.3f dB, denoised %.3f dB\n", wiener::psnr(s.noisy, s.clean),
                            wiener::psnr(out, s.clean));
            }
        } else if (*mk) {
            std::tie(mk_opts.sigma_s_lo, mk_opts.sigma_s_hi) = parse_range(sigma_s_range, "--sigma-s");
            std::tie(mk_opts.sigma_c_lo, mk_opts.sigma_c_hi) = parse_range(sigma_c_range, "--sigma-c");
            wiener::bench::make_dataset(mk_opts);
            std::printf("wrote %d pairs to %s\n", mk_opts.count, mk_opts.out_dir.c_str());
        } else if (*abl) {
            abl_opts.base = abl_flags.settings();
            for (const auto& g : grid) abl_opts.axes.push_back(wiener::bench::parse_axis(g));
            const auto rows = wiener::bench::run_ablation(abl_opts);
            for (const auto& r : rows) {
                std::printf("%s  %8.3f dB%s", r.point.hash.c_str(), r.mean(), r.point.config.is_oracle() ? "  (oracle)" : "");
                for (std::size_t k = 0; k < r.point.values.size(); ++k)
                    std::printf("  %s=%s", abl_opts.axes[k].key.c_str(), r.point.values[k].c_str());
                std::printf("\n");
            }
        } else if (*insp) {
            return run_inspect(bundle_path);
        }
    } catch (const wiener::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
