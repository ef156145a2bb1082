#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "run.hpp"

namespace wiener::bench {

/// One ablation axis: a setting key and the values it sweeps.
struct Axis {
    std::string key;
    std::vector<std::string> values;
};

/// Parses `key=v1,v2,...`. Inside a value, list-valued settings such as
/// scales use '+' (e.g. `scales=8+16+32,38`).
inline Axis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("grid axis '" + text + "': expected key=v1,v2,...");
    Axis a{detail::trim(text.substr(0, eq)), detail::split(text.substr(eq + 1), ",")};
    for (const auto& v : a.values)
        if (v.empty()) throw ConfigError("grid axis '" + text + "' has an empty value");
    return a;
}

struct GridPoint {
    std::vector<std::string> values;  // one per axis
    RunConfig config;
    std::string hash;
};

/// Cartesian product of the axes over the base settings, first axis slowest.
inline std::vector<GridPoint> expand_grid(const std::vector<Setting>& base, const std::vector<Axis>& axes) {
    if (axes.empty()) throw ConfigError("ablation grid is empty: pass at least one --grid key=v1,v2");
    for (const auto& a : axes)
        if (a.values.empty()) throw ConfigError("ablation axis '" + a.key + "' has no values");
    std::vector<GridPoint> out;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        GridPoint g;
        std::vector<Setting> settings = base;
        for (std::size_t k = 0; k < axes.size(); ++k) {
            g.values.push_back(axes[k].values[idx[k]]);
            settings.emplace_back(axes[k].key, axes[k].values[idx[k]]);
        }
        g.config = build_config(settings);
        g.hash = config_hash(g.config);
        out.push_back(std::move(g));
        std::size_t k = axes.size();
        while (k > 0 && ++idx[k - 1] == axes[k - 1].values.size()) idx[--k] = 0;
        if (k == 0) break;
    }
    return out;
}

struct AblationOptions {
    std::string dataset = "synthetic:signal-dependent";
    std::vector<Setting> base;
    std::vector<Axis> axes;
    std::string out_dir = "ablation";
    std::string only;  // config hash to reproduce alone
    int workers = 0;
};

struct AblationRow {
    GridPoint point;
    std::vector<double> psnr;
    double mean() const { return std::accumulate(psnr.begin(), psnr.end(), 0.0) / static_cast<double>(psnr.size()); }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_report(const std::string& path, const AblationOptions& o, const Dataset& ds,
                         const std::vector<AblationRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot write " + path);
    f << "# Ablation report\n\n";
    f << "Dataset: `" << ds.id << "` (" << ds.samples.size() << " images)\n\n";
    f << "| hash |";
    for (const auto& a : o.axes) f << ' ' << a.key << " |";
    f << " mean PSNR (dB) | oracle |\n|---|";
    for (std::size_t i = 0; i < o.axes.size(); ++i) f << "---|";
    f << "---|---|\n";
    for (const auto& r : rows) {
        f << "| `" << r.point.hash << "` |";
        for (const auto& v : r.point.values) f << ' ' << v << " |";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", r.mean());
        f << ' ' << buf << " | " << (r.point.config.is_oracle() ? "yes" : "no") << " |\n";
    }
    f << "\nRows marked oracle use the clean reference and are upper bounds, not deployable results.\n\n";
    f << "## Configurations\n\n";
    for (const auto& r : rows) f << "- `" << r.point.hash << "`: `" << canonical(r.point.config) << "`\n";
}

/// Runs the grid, writing results.csv (one row per config and image, flushed
/// as each config finishes) and report.md into the output directory.
inline std::vector<AblationRow> run_ablation(const AblationOptions& o) {
    std::vector<GridPoint> grid = expand_grid(o.base, o.axes);
    if (!o.only.empty()) {
        std::vector<GridPoint> kept;
        for (auto& g : grid)
            if (g.hash == o.only) kept.push_back(std::move(g));
        if (kept.empty()) throw ConfigError("no grid point has config hash " + o.only);
        grid = std::move(kept);
    }
    const Dataset ds = load_dataset(o.dataset);
    std::filesystem::create_directories(o.out_dir);
    const std::string csv_path = (std::filesystem::path(o.out_dir) / "results.csv").string();
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw DataError("cannot write " + csv_path);
    csv << "config_hash";
    for (const auto& a : o.axes) csv << ',' << detail::csv_field(a.key);
    csv << ",oracle,image,psnr\n";
    csv.flush();

    NetCache nets;
    std::vector<AblationRow> rows;
    for (auto& g : grid) {
        AblationRow row{std::move(g), {}};
        row.psnr = evaluate(row.point.config, ds, nets, o.workers);
        for (std::size_t i = 0; i < row.psnr.size(); ++i) {
            csv << row.point.hash;
            for (const auto& v : row.point.values) csv << ',' << detail::csv_field(v);
            csv << ',' << (row.point.config.is_oracle() ? 1 : 0) << ',' << detail::csv_field(ds.samples[i].name)
                << ',' << detail::fmt17(row.psnr[i]) << '\n';
        }
        csv.flush();
        rows.push_back(std::move(row));
    }
    write_report((std::filesystem::path(o.out_dir) / "report.md").string(), o, ds, rows);
    return rows;
}

} // namespace wiener::bench
