#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "anchor_refine/error.hpp"
#include "anchor_refine/rle.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

namespace fs = std::filesystem;

inline constexpr std::string_view kProbabilityMagic = "PTM1";
inline constexpr std::string_view kEntropyMagic = "ENT1";

namespace detail {

inline std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

inline void append_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline std::uint32_t read_u32le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[offset + static_cast<std::size_t>(i)];
    return v;
}

inline void append_f32le(std::vector<std::uint8_t>& out, float f) {
    append_u32le(out, std::bit_cast<std::uint32_t>(f));
}

inline float read_f32le(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return std::bit_cast<float>(read_u32le(bytes, offset));
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFull) throw ValidationError(std::string(what) + " exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

// Float grid with a 4-byte magic and a u32 LE dimension header.
inline std::vector<std::uint8_t> encode_float_grid(std::string_view magic,
                                                   std::span<const std::uint32_t> dims,
                                                   std::span<const float> values) {
    std::vector<std::uint8_t> out(magic.begin(), magic.end());
    out.reserve(magic.size() + 4 * dims.size() + 4 * values.size());
    for (auto d : dims) append_u32le(out, d);
    for (float f : values) append_f32le(out, f);
    return out;
}

struct FloatGrid {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

inline FloatGrid decode_float_grid(std::span<const std::uint8_t> bytes, std::string_view magic,
                                   std::size_t rank, const std::string& source) {
    if (bytes.size() < magic.size() ||
        std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
        throw FormatError(source + ": bad magic, expected \"" + std::string(magic) + "\"");
    }
    const std::size_t header = magic.size() + 4 * rank;
    if (bytes.size() < header) throw FormatError(source + ": truncated header");
    FloatGrid grid;
    std::uint64_t count = 1;
    bool oversized = false;
    for (std::size_t i = 0; i < rank; ++i) {
        grid.dims.push_back(read_u32le(bytes, magic.size() + 4 * i));
        count *= grid.dims.back();
        if (count > bytes.size()) {
            oversized = true;
            count = 1;
        }
    }
    if (std::find(grid.dims.begin(), grid.dims.end(), 0u) != grid.dims.end()) {
        count = 0;
    } else if (oversized) {
        throw FormatError(source + ": truncated payload");
    }
    const std::uint64_t expected = header + 4 * count;
    if (bytes.size() < expected) {
        throw FormatError(source + ": truncated payload (" + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected) + ")");
    }
    if (bytes.size() > expected) {
        throw FormatError(source + ": " + std::to_string(bytes.size() - expected) +
                          " trailing bytes after payload");
    }
    grid.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) grid.values[i] = read_f32le(bytes, header + 4 * i);
    return grid;
}

struct PgmImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;
};

inline PgmImage decode_pgm(std::span<const std::uint8_t> bytes, const std::string& source) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError(source + ": not a PGM file");
    if (bytes[1] != '5') {
        throw FormatError(source + ": unsupported PNM variant P" +
                          std::string(1, static_cast<char>(bytes[1])) + " (binary P5 required)");
    }
    std::size_t pos = 2;
    auto next_field = [&]() -> std::uint64_t {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
            throw FormatError(source + ": malformed PGM header");
        }
        std::uint64_t v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > 0xFFFFFFFFull) throw FormatError(source + ": PGM header value too large");
        }
        return v;
    };
    PgmImage img;
    img.width = next_field();
    img.height = next_field();
    const auto maxval = next_field();
    if (maxval != 255) {
        throw FormatError(source + ": PGM maxval must be 255 (got " + std::to_string(maxval) + ")");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw FormatError(source + ": malformed PGM header");
    }
    ++pos;  // single whitespace before raster
    const std::size_t n = img.width * img.height;
    if (bytes.size() - pos < n) throw FormatError(source + ": truncated PGM raster");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

inline std::vector<std::uint8_t> encode_pgm(std::size_t height, std::size_t width,
                                            std::span<const std::uint8_t> pixels) {
    const std::string header =
        "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

} // namespace detail

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
inline void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
    const auto dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::random_device rd;
    const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed for " + path.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string() + ": " + ec.message());
    }
}

inline void write_text_atomic(const fs::path& path, std::string_view text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                      text.size()));
}

// ---- probability tensor ("PTM1") ------------------------------------------

inline std::vector<std::uint8_t> encode_probability_map(const ProbabilityMap& map) {
    const std::array<std::uint32_t, 3> dims{detail::checked_u32(map.height(), "height"),
                                            detail::checked_u32(map.width(), "width"),
                                            detail::checked_u32(map.num_classes(), "class count")};
    return detail::encode_float_grid(kProbabilityMagic, dims, map.data());
}

inline ProbabilityMap decode_probability_map(std::span<const std::uint8_t> bytes,
                                             const std::string& source = "<memory>") {
    auto grid = detail::decode_float_grid(bytes, kProbabilityMagic, 3, source);
    try {
        return ProbabilityMap(grid.dims[0], grid.dims[1], grid.dims[2], std::move(grid.values));
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

inline ProbabilityMap load_probability_map(const fs::path& path) {
    return decode_probability_map(detail::read_file(path), path.string());
}

inline void store_probability_map(const ProbabilityMap& map, const fs::path& path) {
    write_file_atomic(path, encode_probability_map(map));
}

// ---- entropy map ("ENT1": magic, u32 H, u32 W, H*W f32 LE) ----------------

inline EntropyMap load_entropy_map(const fs::path& path) {
    auto grid = detail::decode_float_grid(detail::read_file(path), kEntropyMagic, 2, path.string());
    try {
        return EntropyMap(grid.dims[0], grid.dims[1], std::move(grid.values));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

inline void store_entropy_map(const EntropyMap& map, const fs::path& path) {
    const std::array<std::uint32_t, 2> dims{detail::checked_u32(map.height(), "height"),
                                            detail::checked_u32(map.width(), "width")};
    write_file_atomic(path, detail::encode_float_grid(kEntropyMagic, dims, map.values()));
}

// ---- class maps and masks (binary PGM) -------------------------------------

inline std::vector<std::uint8_t> encode_class_map(const ClassMap& map) {
    return detail::encode_pgm(map.height(), map.width(), map.labels());
}

inline ClassMap decode_class_map(std::span<const std::uint8_t> bytes,
                                 const std::string& source = "<memory>") {
    auto img = detail::decode_pgm(bytes, source);
    return ClassMap(img.height, img.width, std::move(img.pixels));
}

inline ClassMap load_class_map(const fs::path& path) {
    return decode_class_map(detail::read_file(path), path.string());
}

inline void store_class_map(const ClassMap& map, const fs::path& path) {
    write_file_atomic(path, encode_class_map(map));
}

/// Masks are PGM rasters holding 0 (outside) and 255 (inside) only.
inline BinaryMask load_mask(const fs::path& path) {
    auto img = detail::decode_pgm(detail::read_file(path), path.string());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        if (img.pixels[i] != 0 && img.pixels[i] != 255) {
            throw FormatError(path.string() + ": mask value " + std::to_string(img.pixels[i]) +
                              " at pixel " + std::to_string(i) + " (only 0 and 255 allowed)");
        }
    }
    return BinaryMask(img.height, img.width, std::move(img.pixels));
}

inline void store_mask(const BinaryMask& mask, const fs::path& path) {
    std::vector<std::uint8_t> pixels(mask.bits().begin(), mask.bits().end());
    for (auto& v : pixels) v = v ? 255 : 0;
    write_file_atomic(path, detail::encode_pgm(mask.height(), mask.width(), pixels));
}

// ---- RLE JSON ---------------------------------------------------------------

inline nlohmann::json rle_to_json(const RunLengthEncoding& rle) {
    return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

inline RunLengthEncoding rle_from_json(const nlohmann::json& j) {
    try {
        const auto& size = j.at("size");
        if (!size.is_array() || size.size() != 2) throw FormatError("RLE \"size\" must be [H, W]");
        RunLengthEncoding rle;
        rle.height = size[0].get<std::size_t>();
        rle.width = size[1].get<std::size_t>();
        const auto& counts = j.at("counts");
        if (!counts.is_array()) throw FormatError("RLE \"counts\" must be an array");
        for (const auto& c : counts) {
            if (!c.is_number_unsigned()) {
                throw FormatError("RLE counts must be non-negative integers");
            }
            rle.counts.push_back(c.get<std::uint64_t>());
        }
        return rle;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed RLE object: ") + e.what());
    }
}

inline nlohmann::json load_json(const fs::path& path) {
    const auto bytes = detail::read_file(path);
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void store_json(const nlohmann::json& j, const fs::path& path) {
    write_text_atomic(path, j.dump(2) + "\n");
}

} // namespace anchor_refine
