#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "anchor_refine/error.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// Row-major run lengths alternating 0-runs and 1-runs, starting with a
/// (possibly empty) run of zeros.
struct RunLengthEncoding {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint64_t> counts;

    friend bool operator==(const RunLengthEncoding&, const RunLengthEncoding&) = default;
};

/// Canonical encoding: only the leading 0-run may be empty.
inline RunLengthEncoding rle_encode(const BinaryMask& mask) {
    RunLengthEncoding rle{mask.height(), mask.width(), {}};
    auto bits = mask.bits();
    if (bits.empty()) return rle;

    std::uint8_t current = 0;
    std::uint64_t run = 0;
    for (std::uint8_t b : bits) {
        if (b != current) {
            rle.counts.push_back(run);
            run = 0;
            current = b;
        }
        ++run;
    }
    rle.counts.push_back(run);
    return rle;
}

/// Accepts non-canonical input (empty interior runs) as long as the counts
/// cover the mask exactly.
inline BinaryMask rle_decode(const RunLengthEncoding& rle) {
    const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * rle.width;
    std::uint64_t sum = 0;
    for (auto c : rle.counts) {
        sum += c;
        if (sum > total) break;
    }
    if (sum != total) {
        throw FormatError("RLE counts cover " + std::to_string(sum) + " pixels, expected " +
                          std::to_string(total) + " (" + std::to_string(rle.height) + "x" +
                          std::to_string(rle.width) + ")");
    }

    std::vector<std::uint8_t> bits;
    bits.reserve(total);
    std::uint8_t value = 0;
    for (auto c : rle.counts) {
        bits.insert(bits.end(), c, value);
        value ^= 1;
    }
    return BinaryMask(rle.height, rle.width, std::move(bits));
}

} // namespace anchor_refine
