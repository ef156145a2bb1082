#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "../denoiser.hpp"
#include "../errors.hpp"
#include "../noise_estim.hpp"

namespace wiener::bench {

/// Pipeline levels: W0 baseline through W4 with the coring network.
enum class Level { Custom, W0, W1, W2, W3, W4 };

inline const char* to_string(Level l) {
    switch (l) {
    case Level::Custom: return "custom";
    case Level::W0: return "W0";
    case Level::W1: return "W1";
    case Level::W2: return "W2";
    case Level::W3: return "W3";
    case Level::W4: return "W4";
    }
    return "?";
}

/// Where the noise STD comes from.
struct SigmaSource {
    enum class Kind {
        Fixed,            // one user-supplied sigma
        PerChannelFixed,  // user-supplied sigma per channel
        Statistical,      // MAD-of-Laplacian estimator
        Cnn,              // STD network bundle
        OracleGrid,       // per-channel grid search against the clean image
        GroundTruth,      // analytic map from the synthetic noise parameters
    };
    Kind kind = Kind::Statistical;
    double fixed = 10.0 / 255.0;
    std::array<double, 3> per_channel{0.0, 0.0, 0.0};
    SigmaScope::Kind scope = SigmaScope::Kind::PerBlock;
    int block = 32;
    std::string bundle_path;

    /// Sources that look at the clean reference.
    bool is_oracle() const { return kind == Kind::OracleGrid || kind == Kind::GroundTruth; }
};

struct RunConfig {
    Level level = Level::Custom;
    DenoiseConfig denoise{};
    SigmaSource sigma{};
    std::optional<double> correction;  // unset: 1.0 for CNN sigma, 1.4 otherwise
    std::string coring_bundle;

    double effective_correction() const {
        if (correction) return *correction;
        return sigma.kind == SigmaSource::Kind::Cnn ? 1.0 : 1.4;
    }
    bool is_oracle() const { return sigma.is_oracle() || denoise.dc.kind == DcStrategy::Kind::Oracle; }
};

using Setting = std::pair<std::string, std::string>;

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (seps.find(ch) != std::string::npos) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d != static_cast<int>(d)) throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
    return static_cast<int>(d);
}

/// Sigma values in [0,1] units; a "/255" suffix converts from 8-bit units.
inline double parse_sigma_value(const std::string& key, std::string v) {
    double scale = 1.0;
    if (v.size() > 4 && v.ends_with("/255")) {
        v = v.substr(0, v.size() - 4);
        scale = 1.0 / 255.0;
    }
    const double d = parse_double(key, v) * scale;
    if (d < 0.0) throw ConfigError("'" + key + "': sigma must be >= 0");
    return d;
}

inline SigmaScope::Kind parse_scope(const std::string& v) {
    if (v == "global" || v == "per-image") return SigmaScope::Kind::Global;
    if (v == "per-channel") return SigmaScope::Kind::PerChannel;
    if (v == "per-block") return SigmaScope::Kind::PerBlock;
    throw ConfigError("unknown sigma scope '" + v + "' (global|per-channel|per-block)");
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

} // namespace detail

inline SigmaSource parse_sigma_source(const std::string& v) {
    const auto parts = detail::split(v, ":");
    const std::string& head = parts[0];
    SigmaSource s;
    if (head == "fixed") {
        if (parts.size() != 2) throw ConfigError("sigma=fixed:<value>");
        s.kind = SigmaSource::Kind::Fixed;
        s.fixed = detail::parse_sigma_value("sigma", parts[1]);
    } else if (head == "channels") {
        const auto vals = parts.size() == 2 ? detail::split(parts[1], ",+") : std::vector<std::string>{};
        if (vals.size() != 3) throw ConfigError("sigma=channels:<r>+<g>+<b>");
        s.kind = SigmaSource::Kind::PerChannelFixed;
        for (std::size_t i = 0; i < 3; ++i) s.per_channel[i] = detail::parse_sigma_value("sigma", vals[i]);
    } else if (head == "statistical") {
        s.kind = SigmaSource::Kind::Statistical;
        if (parts.size() > 1) s.scope = detail::parse_scope(parts[1]);
        if (parts.size() > 2) s.block = detail::parse_int("sigma", parts[2]);
        if (parts.size() > 3) throw ConfigError("sigma=statistical[:scope[:block]]");
    } else if (head == "cnn") {
        if (parts.size() < 2 || parts[1].empty()) throw ConfigError("sigma=cnn:<bundle path>[:scope]");
        s.kind = SigmaSource::Kind::Cnn;
        s.bundle_path = parts[1];
        if (parts.size() > 2) s.scope = detail::parse_scope(parts[2]);
    } else if (head == "oracle-grid") {
        s.kind = SigmaSource::Kind::OracleGrid;
        s.scope = SigmaScope::Kind::PerChannel;
    } else if (head == "gt") {
        s.kind = SigmaSource::Kind::GroundTruth;
        if (parts.size() > 1) s.scope = detail::parse_scope(parts[1]);
    } else {
        throw ConfigError("unknown sigma source '" + v +
                          "' (fixed:<s> | channels:<r>+<g>+<b> | statistical[:scope[:block]] | "
                          "cnn:<path>[:scope] | oracle-grid | gt[:scope])");
    }
    return s;
}

inline std::string canonical(const SigmaSource& s) {
    switch (s.kind) {
    case SigmaSource::Kind::Fixed: return "fixed:" + detail::fmt_double(s.fixed);
    case SigmaSource::Kind::PerChannelFixed:
        return "channels:" + detail::fmt_double(s.per_channel[0]) + "+" + detail::fmt_double(s.per_channel[1]) +
               "+" + detail::fmt_double(s.per_channel[2]);
    case SigmaSource::Kind::Statistical:
        return std::string("statistical:") + to_string(s.scope) + ":" + std::to_string(s.block);
    case SigmaSource::Kind::Cnn: return "cnn:" + s.bundle_path + ":" + to_string(s.scope);
    case SigmaSource::Kind::OracleGrid: return "oracle-grid";
    case SigmaSource::Kind::GroundTruth: return std::string("gt:") + to_string(s.scope);
    }
    return "?";
}

inline DcStrategy parse_dc(const std::string& v) {
    if (v == "mean") return DcStrategy::mean();
    if (v == "median") return DcStrategy::median();
    if (v == "oracle") return DcStrategy::oracle();
    if (v.starts_with("quantile:")) return DcStrategy::quantile(detail::parse_double("dc", v.substr(9)));
    throw ConfigError("unknown DC strategy '" + v + "' (mean|median|oracle|quantile:<q>)");
}

inline Level parse_level(const std::string& v) {
    if (v == "W0") return Level::W0;
    if (v == "W1") return Level::W1;
    if (v == "W2") return Level::W2;
    if (v == "W3") return Level::W3;
    if (v == "W4") return Level::W4;
    if (v == "custom") return Level::Custom;
    throw ConfigError("unknown level '" + v + "' (W0..W4|custom)");
}

/// Resets `cfg` to the preset of `level`.
///
///   W0  half-cosine, 38x38, stride 1/2, unit-gain overlap-add, mean DC, fixed sigma 10/255
///   W1  W0 with per-channel sigma from an oracle grid search
///   W2  Gaussian window, median DC, per-block sigma
///   W3  W2 with stride 1/4 and block sizes 8..96 averaged
///   W4  W3 with the coring network (needs coring=<bundle>)
inline void apply_preset(RunConfig& cfg, Level level) {
    RunConfig p;
    p.level = level;
    auto& d = p.denoise;
    switch (level) {
    case Level::Custom: break;
    case Level::W0:
    case Level::W1:
        d.window = {WindowKind::RaisedCosine, 0.3, 38};
        d.scales = {{38}, ScaleMode::Average};
        d.stride_denominator = 2;
        d.normalization = Normalization::UnitGain;
        d.dc = DcStrategy::mean();
        p.sigma.kind = level == Level::W0 ? SigmaSource::Kind::Fixed : SigmaSource::Kind::OracleGrid;
        p.sigma.fixed = 10.0 / 255.0;
        if (level == Level::W1) p.sigma.scope = SigmaScope::Kind::PerChannel;
        break;
    case Level::W2:
    case Level::W3:
    case Level::W4:
        d.window = {WindowKind::Gaussian, 0.3, 38};
        d.scales = {{38}, ScaleMode::Average};
        d.stride_denominator = 2;
        d.normalization = Normalization::WeightMask;
        d.dc = DcStrategy::median();
        p.sigma.kind = SigmaSource::Kind::Statistical;
        p.sigma.scope = SigmaScope::Kind::PerBlock;
        if (level != Level::W2) {
            d.stride_denominator = 4;
            d.scales = {{8, 16, 32, 64, 96}, ScaleMode::Average};
        }
        break;
    }
    p.denoise.workers = cfg.denoise.workers;
    cfg = p;
}

/// Applies one key=value setting (keys match the CLI flag names).
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto& d = cfg.denoise;
    if (key == "level") {
        apply_preset(cfg, parse_level(value));
    } else if (key == "window") {
        if (value == "raised-cosine" || value == "half-cosine") d.window.kind = WindowKind::RaisedCosine;
        else if (value == "gaussian") d.window.kind = WindowKind::Gaussian;
        else throw ConfigError("unknown window '" + value + "' (raised-cosine|gaussian)");
    } else if (key == "alpha") {
        d.window.alpha = detail::parse_double(key, value);
        if (!(d.window.alpha > 0.0)) throw ConfigError("alpha must be > 0");
    } else if (key == "block") {
        d.scales.sizes = {detail::parse_int(key, value)};
    } else if (key == "scales") {
        d.scales.sizes.clear();
        for (const auto& s : detail::split(value, ",+")) d.scales.sizes.push_back(detail::parse_int(key, s));
    } else if (key == "mode") {
        if (value == "average") d.scales.mode = ScaleMode::Average;
        else if (value == "joint") d.scales.mode = ScaleMode::Joint;
        else throw ConfigError("unknown scale mode '" + value + "' (average|joint)");
    } else if (key == "stride") {
        d.stride_denominator = detail::parse_int(key, value);
    } else if (key == "norm") {
        if (value == "mask") d.normalization = Normalization::WeightMask;
        else if (value == "unit-gain") d.normalization = Normalization::UnitGain;
        else throw ConfigError("unknown normalisation '" + value + "' (mask|unit-gain)");
    } else if (key == "dc") {
        d.dc = parse_dc(value);
    } else if (key == "sigma") {
        cfg.sigma = parse_sigma_source(value);
    } else if (key == "correction") {
        if (value.empty() || value == "auto") cfg.correction.reset();
        else cfg.correction = detail::parse_double(key, value);
    } else if (key == "coring") {
        cfg.coring_bundle = value;
    } else if (key == "coring-scale") {
        d.coring_scale = detail::parse_int(key, value);
    } else if (key == "workers") {
        d.workers = detail::parse_int(key, value);
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

/// Checks cross-field consistency.
inline void validate(const RunConfig& cfg) {
    const auto& d = cfg.denoise;
    if (d.stride_denominator < 2 || d.stride_denominator > 7) {
        throw ConfigError("stride denominator must be in 2..7, got " + std::to_string(d.stride_denominator));
    }
    if (d.scales.sizes.empty()) throw ConfigError("scale set is empty");
    for (int s : d.scales.sizes)
        if (s < 8) throw ConfigError("block sizes must be >= 8, got " + std::to_string(s));
    if (d.normalization == Normalization::UnitGain &&
        (d.scales.mode == ScaleMode::Joint && d.scales.sizes.size() > 1)) {
        throw ConfigError("unit-gain normalisation cannot be combined with joint multi-scale accumulation");
    }
    if (cfg.level == Level::W4 && cfg.coring_bundle.empty()) {
        throw ConfigError("level W4 needs a coring network bundle (coring=<path>)");
    }
    if (cfg.correction && !(*cfg.correction > 0.0)) throw ConfigError("correction must be > 0");
}

/// Builds a config from ordered settings: the last `level` is applied first as
/// a preset, then every other setting in order, so later settings win.
inline RunConfig build_config(const std::vector<Setting>& settings) {
    RunConfig cfg;
    for (const auto& [k, v] : settings)
        if (k == "level") apply_preset(cfg, parse_level(v));
    for (const auto& [k, v] : settings)
        if (k != "level") apply_setting(cfg, k, v);
    validate(cfg);
    return cfg;
}

/// Flat `key = value` text, '#' starts a comment.
inline std::vector<Setting> parse_config_text(const std::string& text) {
    std::vector<Setting> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string value = detail::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out.emplace_back(detail::trim(line.substr(0, eq)), value);
    }
    return out;
}

inline std::vector<Setting> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

/// Canonical `key=value;...` form. It parses back through parse_canonical to
/// an identical config and is what the config hash is computed over.
inline std::string canonical(const RunConfig& cfg) {
    const auto& d = cfg.denoise;
    std::string s;
    s += "level=" + std::string(to_string(cfg.level));
    s += ";window=" + std::string(to_string(d.window.kind));
    s += ";alpha=" + detail::fmt_double(d.window.alpha);
    s += ";scales=" + detail::join_ints(d.scales.sizes);
    s += ";mode=" + std::string(to_string(d.scales.mode));
    s += ";stride=" + std::to_string(d.stride_denominator);
    s += ";norm=" + std::string(d.normalization == Normalization::WeightMask ? "mask" : "unit-gain");
    s += ";dc=" + d.dc.name();
    s += ";sigma=" + canonical(cfg.sigma);
    s += ";correction=" + detail::fmt_double(cfg.effective_correction());
    s += ";coring=" + cfg.coring_bundle;
    s += ";coring-scale=" + std::to_string(d.coring_scale);
    return s;
}

inline RunConfig parse_canonical(const std::string& s) {
    std::vector<Setting> settings;
    for (const auto& item : detail::split(s, ";")) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed canonical config item '" + item + "'");
        settings.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    return build_config(settings);
}

/// 64-bit FNV-1a of the canonical form, as 16 hex digits.
inline std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical(cfg)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace wiener::bench
