#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace wiener {

namespace detail {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

inline const char* png_color_type_name(int color_type) {
    switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return "grayscale";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    default: return "unknown";
    }
}

inline void png_error_to_jmp(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg ? msg : "libpng error";
    png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

inline std::uint16_t quantize(float v, int max_code) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint16_t>(std::floor(c * max_code + 0.5));
}

} // namespace detail

/// Reads an 8- or 16-bit grayscale/RGB PNG (alpha is dropped). 8-bit samples
/// are scaled by 1/255, 16-bit by 1/65535. Grayscale is replicated to three
/// channels unless `replicate_gray` is false.
inline ImagePlanar load_png(const std::string& path, bool replicate_gray = true) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw DataError("cannot open PNG '" + path + "'");

    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw DataError("'" + path + "' is not a PNG file");
    }

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                             detail::png_error_to_jmp, detail::png_warning_ignore);
    if (!png) throw DataError("libpng: cannot create read struct");
    png_infop info = png_create_info_struct(png);
    std::vector<unsigned char> raw;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("failed to read PNG '" + path + "': " + err);
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    const bool supported_type = color_type == PNG_COLOR_TYPE_GRAY ||
                                color_type == PNG_COLOR_TYPE_GRAY_ALPHA ||
                                color_type == PNG_COLOR_TYPE_RGB ||
                                color_type == PNG_COLOR_TYPE_RGB_ALPHA;
    if (!supported_type || (bit_depth != 8 && bit_depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported PNG color type '" +
                        std::string(detail::png_color_type_name(color_type)) + "' with bit depth " +
                        std::to_string(bit_depth) + " in '" + path +
                        "' (need 8/16-bit grayscale or RGB)");
    }

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    raw.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = raw.data() + r * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const int src_channels = (color_type == PNG_COLOR_TYPE_GRAY)         ? 1
                             : (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) ? 2
                             : (color_type == PNG_COLOR_TYPE_RGB)        ? 3
                                                                         : 4;
    const int color_channels = src_channels >= 3 ? 3 : 1;
    const int out_channels = (color_channels == 1 && replicate_gray) ? 3 : color_channels;
    const int bytes_per_sample = bit_depth / 8;
    const double scale = bit_depth == 8 ? 1.0 / 255.0 : 1.0 / 65535.0;

    ImagePlanar img(static_cast<int>(width), static_cast<int>(height), out_channels);
    for (png_uint_32 r = 0; r < height; ++r) {
        const unsigned char* row = rows[r];
        for (png_uint_32 c = 0; c < width; ++c) {
            for (int ch = 0; ch < out_channels; ++ch) {
                const int src_ch = color_channels == 1 ? 0 : ch;
                const unsigned char* p =
                    row + (static_cast<std::size_t>(c) * src_channels + src_ch) * bytes_per_sample;
                const unsigned v = bit_depth == 8 ? p[0] : (unsigned(p[0]) << 8) | p[1];
                img.at(ch, static_cast<int>(r), static_cast<int>(c)) =
                    static_cast<float>(v * scale);
            }
        }
    }
    return img;
}

/// Writes a 1- or 3-channel image. Values are clamped to [0,1] and quantized
/// with round-half-up to 8 or 16 bits.
inline void save_png(const ImagePlanar& image, const std::string& path, int bit_depth = 8) {
    if (image.channels != 1 && image.channels != 3) {
        throw ConfigError("save_png: need 1 or 3 channels, got " + std::to_string(image.channels));
    }
    if (bit_depth != 8 && bit_depth != 16) {
        throw ConfigError("save_png: bit depth must be 8 or 16");
    }
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw DataError("cannot write PNG '" + path + "'");

    const int bytes_per_sample = bit_depth / 8;
    const int max_code = bit_depth == 8 ? 255 : 65535;
    const std::size_t row_bytes =
        static_cast<std::size_t>(image.width) * image.channels * bytes_per_sample;
    std::vector<unsigned char> raw(row_bytes * image.height);
    for (int r = 0; r < image.height; ++r) {
        unsigned char* row = raw.data() + r * row_bytes;
        for (int c = 0; c < image.width; ++c) {
            for (int ch = 0; ch < image.channels; ++ch) {
                const std::uint16_t q = detail::quantize(image.at(ch, r, c), max_code);
                unsigned char* p =
                    row + (static_cast<std::size_t>(c) * image.channels + ch) * bytes_per_sample;
                if (bit_depth == 8) {
                    p[0] = static_cast<unsigned char>(q);
                } else {
                    p[0] = static_cast<unsigned char>(q >> 8);
                    p[1] = static_cast<unsigned char>(q & 0xff);
                }
            }
        }
    }
    std::vector<png_bytep> rows(image.height);
    for (int r = 0; r < image.height; ++r) rows[r] = raw.data() + r * row_bytes;

    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                              detail::png_error_to_jmp, detail::png_warning_ignore);
    if (!png) throw DataError("libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed to write PNG '" + path + "': " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), bit_depth,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace wiener
