#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "anchor_refine/error.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// Pixel coordinate used as a point prompt. Origin is the top-left corner.
struct Anchor {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(const Anchor&, const Anchor&) = default;
};

namespace detail {

// Unbiased draw in [0, n). std::uniform_int_distribution is
// implementation-defined, which would make anchor lists differ across
// standard libraries for the same seed.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % n;
    }
}

} // namespace detail

/// Uniform sample of `k` set bits of `region` without replacement. Returns all
/// set bits (in seeded order) when fewer than `k` exist.
inline std::vector<Anchor> sample_anchors(const RegionMask& region, std::size_t k,
                                          std::uint64_t seed) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < region.pixel_count(); ++i) {
        if (region.at(i)) candidates.push_back(i);
    }
    const std::size_t take = std::min(k, candidates.size());
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + detail::uniform_below(rng, candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
    }
    std::vector<Anchor> anchors;
    anchors.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        anchors.push_back({candidates[i] / region.width(), candidates[i] % region.width()});
    }
    return anchors;
}

inline nlohmann::json anchors_to_json(const std::vector<Anchor>& anchors) {
    auto arr = nlohmann::json::array();
    for (const auto& a : anchors) arr.push_back({a.row, a.col});
    return arr;
}

inline std::vector<Anchor> anchors_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw FormatError("anchor list must be a JSON array");
    std::vector<Anchor> anchors;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_unsigned() ||
            !p[1].is_number_unsigned()) {
            throw FormatError("anchor must be a [row, col] pair of non-negative integers");
        }
        anchors.push_back({p[0].get<std::size_t>(), p[1].get<std::size_t>()});
    }
    return anchors;
}

} // namespace anchor_refine
