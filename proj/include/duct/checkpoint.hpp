#pragma once

// Named-tensor container:
//   "DUCT" | version u16 | count u32 |
//   per tensor: name_len u16 | utf-8 name | rank u8 | dims u32[rank] | f64[prod(dims)]
// All integers and floats little-endian. Matrices are written with rank 2.

#include "duct/binary_io.hpp"
#include "duct/model.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace duct {

inline constexpr std::string_view kCheckpointMagic = "DUCT";
inline constexpr std::uint16_t kCheckpointVersion = 1;

inline std::vector<std::uint8_t> encode_tensors(const WeightMap& tensors) {
    io::ByteWriter w;
    w.bytes(kCheckpointMagic);
    w.u16(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors.entries()) {
        if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw PreconditionError("tensor name too long");
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name);
        w.u8(2);
        w.u32(static_cast<std::uint32_t>(t.rows()));
        w.u32(static_cast<std::uint32_t>(t.cols()));
        for (double v : t.data()) w.f64(v);
    }
    return w.buffer();
}

inline WeightMap decode_tensors(std::span<const std::uint8_t> bytes) {
    io::ByteReader r(bytes);
    r.expect_magic(kCheckpointMagic);
    const std::size_t version_at = r.offset();
    if (const auto v = r.u16(); v != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(v), version_at);
    const std::uint32_t count = r.u32();
    WeightMap out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t entry_at = r.offset();
        const std::uint16_t name_len = r.u16();
        std::string name = r.bytes(name_len, "tensor name");
        const std::size_t rank_at = r.offset();
        const std::uint8_t rank = r.u8();
        if (rank > 2) throw FormatError("tensor '" + name + "' has unsupported rank " + std::to_string(rank), rank_at);
        std::size_t rows = 1, cols = 1;
        if (rank == 1) cols = r.u32();
        if (rank == 2) {
            rows = r.u32();
            cols = r.u32();
        }
        if (r.remaining() / 8 < rows * cols)
            throw FormatError("truncated payload of tensor '" + name + "'", r.offset());
        std::vector<double> data(rows * cols);
        for (auto& v : data) {
            const std::size_t at = r.offset();
            v = r.f64();
            if (!std::isfinite(v)) throw FormatError("tensor '" + name + "' has a non-finite value", at);
        }
        if (out.find(name) != nullptr) throw FormatError("duplicate tensor name '" + name + "'", entry_at);
        out.add(std::move(name), Matrix(rows, cols, std::move(data)));
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after last tensor", r.offset());
    return out;
}

inline void save_tensors(const std::filesystem::path& path, const WeightMap& tensors) {
    io::write_file(path, encode_tensors(tensors));
}

inline WeightMap load_tensors(const std::filesystem::path& path) { return decode_tensors(io::read_file(path)); }

// Re-prefixes every name of `src` with `prefix` and appends it to `dst`.
inline void append_prefixed(WeightMap& dst, const std::string& prefix, const WeightMap& src) {
    for (const auto& [name, t] : src.entries()) dst.add(prefix + name, t);
}

// Sub-map of all tensors whose name starts with `prefix`, prefix stripped.
inline WeightMap extract_prefixed(const WeightMap& src, const std::string& prefix) {
    WeightMap out;
    for (const auto& [name, t] : src.entries())
        if (name.starts_with(prefix)) out.add(name.substr(prefix.size()), t);
    return out;
}

}  // namespace duct
