#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wiener {

/// Binary container for network weights shared with the trainer.
///
/// Layout (all integers and floats little-endian):
///
///     char[4]  magic "WNB1"
///     u32      record count R
///     R times:
///       u8     kind           (TensorKind)
///       u32    ndim
///       u32    dims[ndim]
///       f32    payload[prod(dims)]
///     u32      CRC-32 (IEEE, as zlib's crc32) of every preceding byte
///
/// The first record is always a Meta record declaring the network; conv
/// weights are OIHW.
enum class TensorKind : std::uint8_t {
    Meta = 0,
    ConvWeight = 1,
    ConvBias = 2,
    BnGamma = 3,
    BnBeta = 4,
    BnMean = 5,
    BnVar = 6,
};

inline const char* to_string(TensorKind k) {
    switch (k) {
    case TensorKind::Meta: return "meta";
    case TensorKind::ConvWeight: return "conv.weight";
    case TensorKind::ConvBias: return "conv.bias";
    case TensorKind::BnGamma: return "bn.gamma";
    case TensorKind::BnBeta: return "bn.beta";
    case TensorKind::BnMean: return "bn.running_mean";
    case TensorKind::BnVar: return "bn.running_var";
    }
    return "unknown";
}

struct TensorRecord {
    TensorKind kind = TensorKind::Meta;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

struct WeightBundle {
    std::vector<TensorRecord> records;
};

inline constexpr char kBundleMagic[4] = {'W', 'N', 'B', '1'};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw DataError("weight bundle is truncated");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

inline std::vector<std::uint8_t> encode_bundle(const WeightBundle& bundle) {
    std::vector<std::uint8_t> out(kBundleMagic, kBundleMagic + 4);
    detail::put_u32(out, static_cast<std::uint32_t>(bundle.records.size()));
    for (const auto& rec : bundle.records) {
        if (rec.values.size() != rec.element_count()) {
            throw ConfigError(std::string("tensor '") + to_string(rec.kind) +
                              "' payload does not match its shape");
        }
        out.push_back(static_cast<std::uint8_t>(rec.kind));
        detail::put_u32(out, static_cast<std::uint32_t>(rec.dims.size()));
        for (auto d : rec.dims) detail::put_u32(out, d);
        for (float v : rec.values) detail::put_f32(out, v);
    }
    detail::put_u32(out, crc32_of(out));
    return out;
}

inline WeightBundle decode_bundle(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kBundleMagic, 4) != 0) {
        throw DataError("not a weight bundle (bad magic)");
    }
    const auto body = bytes.first(bytes.size() - 4);
    detail::ByteReader tail(bytes.last(4));
    if (crc32_of(body) != tail.u32()) throw DataError("weight bundle checksum mismatch");

    detail::ByteReader in(body);
    in.u32();  // magic
    const std::uint32_t count = in.u32();
    WeightBundle b;
    b.records.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        TensorRecord rec;
        const std::uint8_t kind = in.u8();
        if (kind > static_cast<std::uint8_t>(TensorKind::BnVar)) {
            throw DataError("weight bundle record " + std::to_string(r) + " has unknown kind " +
                            std::to_string(kind));
        }
        rec.kind = static_cast<TensorKind>(kind);
        const std::uint32_t ndim = in.u32();
        if (ndim > 8) throw DataError("weight bundle record " + std::to_string(r) + " has ndim " + std::to_string(ndim));
        rec.dims.resize(ndim);
        for (auto& d : rec.dims) d = in.u32();
        const std::size_t n = rec.element_count();
        if (n * 4 > in.remaining()) throw DataError("weight bundle is truncated");
        rec.values.resize(n);
        for (auto& v : rec.values) v = in.f32();
        b.records.push_back(std::move(rec));
    }
    if (in.remaining() != 0) throw DataError("weight bundle has trailing bytes");
    return b;
}

inline void write_bundle(const WeightBundle& bundle, const std::string& path) {
    const auto bytes = encode_bundle(bundle);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write weight bundle '" + path + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("failed writing weight bundle '" + path + "'");
}

inline WeightBundle read_bundle(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open weight bundle '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_bundle(bytes);
}

} // namespace wiener
