#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "../errors.hpp"
#include "../image.hpp"
#include "../png_io.hpp"
#include "../synth_noise.hpp"
#include "config.hpp"

namespace wiener::bench {

namespace fs = std::filesystem;

struct Sample {
    std::string name;
    ImagePlanar clean;
    ImagePlanar noisy;
    std::optional<NoiseParams> noise;  // known for synthetic and manifest data
};

struct Dataset {
    std::string id;
    std::vector<Sample> samples;
};

/// Rounds to the nearest 8-bit code, like a clean image loaded from PNG.
inline ImagePlanar quantize8(ImagePlanar img) {
    for (auto& v : img.data) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
    return img;
}

/// Built-in synthetic sets (scenes are procedural and seeded):
///   awgn              sigma_c = 25/255
///   signal-dependent  sigma_s ~ U[0, 0.16], sigma_c ~ U[0, 0.06] per image
///   clamped-sd        sigma_s = 0.14, sigma_c = 0.08, clamped to [0, 1]
inline Dataset builtin_dataset(const std::string& kind, int count, std::uint64_t seed, int size = 128) {
    if (count < 1) throw ConfigError("dataset count must be >= 1");
    if (kind != "awgn" && kind != "signal-dependent" && kind != "clamped-sd") {
        throw ConfigError("unknown builtin dataset '" + kind + "' (awgn|signal-dependent|clamped-sd)");
    }
    Dataset ds;
    ds.id = "synthetic:" + kind + ":" + std::to_string(count) + ":" + std::to_string(seed);
    for (int i = 0; i < count; ++i) {
        const std::uint64_t s = split_seed(seed, static_cast<std::uint64_t>(i));
        NoiseParams p;
        p.seed = s;
        if (kind == "awgn") {
            p.sigma_c = 25.0 / 255.0;
        } else if (kind == "signal-dependent") {
            NoiseRng r(s * 7 + 1);
            p.sigma_s = r.uniform(0.0, 0.16);
            p.sigma_c = r.uniform(0.0, 0.06);
        } else {
            p.sigma_s = 0.14;
            p.sigma_c = 0.08;
            p.clamp = true;
        }
        Sample smp;
        smp.name = kind + "_" + std::to_string(i);
        smp.clean = quantize8(synthetic_scene(s, size, size));
        smp.noisy = add_noise(smp.clean, p);
        smp.noise = p;
        ds.samples.push_back(std::move(smp));
    }
    return ds;
}

inline std::vector<fs::path> list_pngs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Loads a manifest.jsonl dataset. Noisy images are regenerated from the
/// recorded noise parameters, so results do not depend on PNG rounding.
inline Dataset load_manifest(const fs::path& dir) {
    const fs::path manifest = dir / "manifest.jsonl";
    std::ifstream f(manifest);
    if (!f) throw DataError("cannot read " + manifest.string());
    Dataset ds;
    ds.id = "manifest:" + dir.string();
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            Sample s;
            s.name = j.at("file").get<std::string>();
            s.clean = load_png((dir / j.at("clean").get<std::string>()).string());
            NoiseParams p;
            p.sigma_s = j.at("sigma_s").get<double>();
            p.sigma_c = j.at("sigma_c").get<double>();
            p.seed = j.at("seed").get<std::uint64_t>();
            p.clamp = j.value("clamp", false);
            s.noisy = add_noise(s.clean, p);
            s.noise = p;
            ds.samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (ds.samples.empty()) throw DataError(manifest.string() + " lists no images");
    return ds;
}

/// Loads `noisy/` and `clean/` PNGs matched by file name.
inline Dataset load_pair_dir(const fs::path& dir) {
    Dataset ds;
    ds.id = "pairs:" + dir.string();
    for (const auto& noisy : list_pngs(dir / "noisy")) {
        const fs::path clean = dir / "clean" / noisy.filename();
        if (!fs::exists(clean)) throw DataError("no clean image for " + noisy.string());
        Sample s;
        s.name = noisy.stem().string();
        s.noisy = load_png(noisy.string());
        s.clean = load_png(clean.string());
        require_same_shape(s.noisy, s.clean, s.name.c_str());
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError("no noisy/*.png images under " + dir.string());
    return ds;
}

/// `synthetic:<kind>[:count[:seed]]`, a directory with manifest.jsonl, or a
/// directory with noisy/ and clean/ subdirectories.
inline Dataset load_dataset(const std::string& spec) {
    if (spec.starts_with("synthetic:")) {
        const auto parts = detail::split(spec.substr(10), ":");
        const int count = parts.size() > 1 ? detail::parse_int("dataset count", parts[1]) : 20;
        const std::uint64_t seed =
            parts.size() > 2 ? static_cast<std::uint64_t>(detail::parse_int("dataset seed", parts[2])) : 1000;
        return builtin_dataset(parts[0], count, seed);
    }
    const fs::path dir(spec);
    if (!fs::is_directory(dir)) throw DataError("dataset '" + spec + "' is not a directory");
    if (fs::exists(dir / "manifest.jsonl")) return load_manifest(dir);
    return load_pair_dir(dir);
}

struct MakeDatasetOptions {
    std::string clean_dir;  // empty: procedural scenes
    std::string out_dir;
    int count = 100;
    int patch = 128;
    double sigma_s_lo = 0.0, sigma_s_hi = 0.16;
    double sigma_c_lo = 0.0, sigma_c_hi = 0.06;
    std::uint64_t seed = 0;
    bool clamp = false;
    int realizations = 12;
};

/// Writes clean/noisy patches, empirical sigma maps and manifest.jsonl.
/// Output depends only on the options and the input images.
inline void make_dataset(const MakeDatasetOptions& o) {
    if (o.count < 1) throw ConfigError("count must be >= 1");
    if (o.patch < 8) throw ConfigError("patch size must be >= 8");
    if (o.sigma_s_lo < 0 || o.sigma_c_lo < 0 || o.sigma_s_hi < o.sigma_s_lo || o.sigma_c_hi < o.sigma_c_lo) {
        throw ConfigError("noise ranges must satisfy 0 <= lo <= hi");
    }
    if (o.realizations < 2) throw ConfigError("sigma maps need at least 2 noise realisations");
    std::vector<fs::path> sources;
    if (!o.clean_dir.empty()) {
        sources = list_pngs(o.clean_dir);
        if (sources.empty()) throw DataError("no PNG images in '" + o.clean_dir + "'");
    }
    const fs::path out(o.out_dir);
    for (const char* sub : {"clean", "noisy", "sigma"}) fs::create_directories(out / sub);
    std::ofstream manifest(out / "manifest.jsonl", std::ios::trunc);
    if (!manifest) throw DataError("cannot write " + (out / "manifest.jsonl").string());

    std::string cached_path;
    ImagePlanar cached;
    for (int i = 0; i < o.count; ++i) {
        const std::uint64_t s = split_seed(o.seed, static_cast<std::uint64_t>(i));
        NoiseRng r(s * 7 + 3);
        ImagePlanar clean;
        std::string source = "synthetic";
        std::array<int, 4> crop{0, 0, o.patch, o.patch};
        if (sources.empty()) {
            clean = quantize8(synthetic_scene(s, o.patch, o.patch));
        } else {
            const fs::path& src = sources[static_cast<std::size_t>(i) % sources.size()];
            if (src.string() != cached_path) {
                cached = load_png(src.string());
                cached_path = src.string();
            }
            if (cached.width < o.patch || cached.height < o.patch) {
                throw DataError(src.string() + " is smaller than the " + std::to_string(o.patch) + " px patch");
            }
            const int x = static_cast<int>(r.next_u64() % static_cast<std::uint64_t>(cached.width - o.patch + 1));
            const int y = static_cast<int>(r.next_u64() % static_cast<std::uint64_t>(cached.height - o.patch + 1));
            crop = {x, y, o.patch, o.patch};
            clean = ImagePlanar(o.patch, o.patch, cached.channels);
            for (int c = 0; c < cached.channels; ++c)
                for (int row = 0; row < o.patch; ++row)
                    for (int col = 0; col < o.patch; ++col) clean.at(c, row, col) = cached.at(c, y + row, x + col);
            source = src.filename().string();
        }
        NoiseParams p;
        p.sigma_s = r.uniform(o.sigma_s_lo, o.sigma_s_hi);
        p.sigma_c = r.uniform(o.sigma_c_lo, o.sigma_c_hi);
        p.seed = s;
        p.clamp = o.clamp;

        char name[32];
        std::snprintf(name, sizeof name, "%06d", i);
        const std::string file = std::string(name) + ".png";
        save_png(clean, (out / "clean" / file).string(), 16);
        save_png(add_noise(clean, p), (out / "noisy" / file).string(), 16);
        save_sigma_map(empirical_sigma_map(clean, p, o.realizations), (out / "sigma" / file).string());

        nlohmann::json j;
        j["file"] = name;
        j["clean"] = "clean/" + file;
        j["noisy"] = "noisy/" + file;
        j["sigma_map"] = "sigma/" + file;
        j["sigma_s"] = p.sigma_s;
        j["sigma_c"] = p.sigma_c;
        j["seed"] = p.seed;
        j["clamp"] = p.clamp;
        j["source"] = source;
        j["crop"] = crop;
        manifest << j.dump() << '\n';
    }
}

} // namespace wiener::bench
