#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchor_refine/anchors.hpp"
#include "anchor_refine/error.hpp"
#include "anchor_refine/scene.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// Knobs for synthetic scenes: horizontal bands of "stuff" classes with round
/// objects inside them, and a base prediction corrupted over part of some
/// objects.
struct SceneParams {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t num_classes = 6;
    std::size_t min_bands = 1;
    std::size_t max_bands = 2;
    std::size_t min_objects = 2;
    std::size_t max_objects = 4;
    double min_radius = 6.0;
    double max_radius = 8.0;
    std::size_t margin = 3;          // clearance around each object inside its band
    double noise_level = 0.75;       // probability that an object is corrupted
    double mixture = 0.8;            // uniform weight inside corruption zones
    double zone_fraction = 0.4;      // corrupted share of an object's rows, from the top
    double boundary_softness = 0.4;  // neighbour-class weight on class boundaries
    double object_score = 0.95;
    bool decoys = true;
    std::size_t oversized_area = 1500;
    double oversized_score = 0.9;
    double low_score = 0.4;
    double merged_score = 0.85;

    void validate() const {
        if (height == 0 || width == 0) throw ValidationError("scene size must be non-zero");
        if (num_classes < 3 || num_classes > 256) {
            throw ValidationError("synthetic scenes need 3..256 classes");
        }
        if (min_bands < 1 || min_bands > max_bands || max_bands > 8 || max_bands > height) {
            throw ValidationError("invalid band count range");
        }
        if (min_objects > max_objects) throw ValidationError("invalid object count range");
        if (!(min_radius >= 1.0 && min_radius <= max_radius)) {
            throw ValidationError("invalid object radius range");
        }
        if (!(noise_level >= 0.0 && noise_level <= 1.0)) {
            throw ValidationError("noise level must lie in [0,1]");
        }
        if (!(mixture >= 0.0 && mixture < 1.0)) throw ValidationError("mixture must lie in [0,1)");
        if (!(zone_fraction > 0.0 && zone_fraction < 0.5)) {
            throw ValidationError("zone fraction must lie in (0, 0.5)");
        }
        if (!(boundary_softness >= 0.0 && boundary_softness < 0.5)) {
            throw ValidationError("boundary softness must lie in [0, 0.5)");
        }
    }
};

struct SyntheticScene {
    ClassMap truth;
    ProbabilityMap base_p;
    SceneSpec scene;
    BinaryMask corruption;  // union of corruption zones
};

/// Entropy (nats) of (1-mixture)·onehot + mixture·uniform over n classes.
inline double mixture_entropy(double mixture, std::size_t n) {
    const double other = mixture / static_cast<double>(n);
    const double top = 1.0 - mixture + other;
    double h = -top * std::log(top);
    if (other > 0.0) h -= static_cast<double>(n - 1) * other * std::log(other);
    return h;
}

/// Deterministic in (seed, params).
inline SyntheticScene generate_scene(std::uint64_t seed, const SceneParams& params) {
    params.validate();
    const auto H = params.height, W = params.width, N = params.num_classes;
    std::mt19937_64 rng(seed);
    auto below = [&](std::size_t n) { return static_cast<std::size_t>(detail::uniform_below(rng, n)); };
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    SceneSpec scene{H, W, 0, {}, {}};

    // Bands: full-width rects split at distinct random rows.
    const auto bands = params.min_bands + below(params.max_bands - params.min_bands + 1);
    // Every band keeps at least H/(bands+1) rows so objects can fit.
    const auto min_band = std::max<std::size_t>(1, H / (bands + 1));
    std::vector<std::size_t> cuts;
    for (;;) {
        cuts = {0, H};
        while (cuts.size() < bands + 1) {
            const auto c = 1 + below(H - 1);
            if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        bool wide_enough = true;
        for (std::size_t b = 0; b < bands; ++b) wide_enough &= cuts[b + 1] - cuts[b] >= min_band;
        if (wide_enough) break;
    }
    std::vector<ClassId> band_class;
    for (std::size_t b = 0; b < bands; ++b) {
        ClassId cls;
        do {
            cls = static_cast<ClassId>(below(N));
        } while (b > 0 && cls == band_class.back());
        band_class.push_back(cls);
        scene.entities.push_back({RectShape{cuts[b], 0, cuts[b + 1], W}, cls,
                                  1000 + static_cast<int>(b), params.object_score});
    }
    auto band_of = [&](std::size_t row) {
        return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), row) -
                                        cuts.begin() - 1);
    };

    // Objects: circles whose margin-expanded box lies in one band and clears
    // every other object's box.
    struct Placed {
        CircleShape circle;
        RectShape box;  // bounding box of the circle
        RectShape clearance;
        ClassId cls;
    };
    std::vector<Placed> objects;
    const auto target = params.min_objects + below(params.max_objects - params.min_objects + 1);
    for (int attempt = 0; attempt < 2000 && objects.size() < target; ++attempt) {
        const double radius =
            std::floor(params.min_radius + unit() * (params.max_radius - params.min_radius) + 0.5);
        const auto r = static_cast<std::size_t>(radius);
        const auto extent = r + params.margin;
        if (2 * extent + 1 > H || 2 * extent + 1 > W) continue;
        const auto cr = extent + below(H - 2 * extent);
        const auto cc = extent + below(W - 2 * extent);
        const RectShape box{cr - r, cc - r, cr + r + 1, cc + r + 1};
        const RectShape clearance{cr - extent, cc - extent, cr + extent + 1, cc + extent + 1};
        if (band_of(clearance.top) != band_of(clearance.bottom - 1)) continue;
        const bool overlaps = std::any_of(objects.begin(), objects.end(), [&](const Placed& o) {
            return clearance.top < o.clearance.bottom && o.clearance.top < clearance.bottom &&
                   clearance.left < o.clearance.right && o.clearance.left < clearance.right;
        });
        if (overlaps) continue;
        const auto host = band_class[band_of(cr)];
        ClassId cls;
        do {
            cls = static_cast<ClassId>(below(N));
        } while (cls == host);
        objects.push_back({CircleShape{static_cast<double>(cr), static_cast<double>(cc), radius},
                           box, clearance, cls});
    }
    if (objects.size() < params.min_objects) {
        throw ValidationError("could only place " + std::to_string(objects.size()) + " of " +
                              std::to_string(params.min_objects) + " objects in a " +
                              std::to_string(H) + "x" + std::to_string(W) + " scene");
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
        scene.entities.push_back(
            {objects[i].circle, objects[i].cls, static_cast<int>(i), params.object_score});
    }

    const auto truth = render_truth(scene);

    // Base prediction: one-hot truth, softened on class boundaries.
    std::vector<float> probs(H * W * N, 0.0f);
    auto set_pixel = [&](std::size_t px, ClassId main, ClassId second, double second_weight) {
        float* p = &probs[px * N];
        std::fill(p, p + N, 0.0f);
        p[main] += static_cast<float>(1.0 - second_weight);
        p[second] += static_cast<float>(second_weight);
    };
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            const auto own = truth.at(r, c);
            ClassId neighbour = own;
            const std::ptrdiff_t dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};
            for (int k = 0; k < 4 && neighbour == own; ++k) {
                const auto rr = static_cast<std::ptrdiff_t>(r) + dr[k];
                const auto cc = static_cast<std::ptrdiff_t>(c) + dc[k];
                if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(H) ||
                    cc >= static_cast<std::ptrdiff_t>(W)) {
                    continue;
                }
                neighbour = truth.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
            }
            set_pixel(r * W + c, own, neighbour, neighbour == own ? 0.0 : params.boundary_softness);
        }
    }

    // Corruption: top rows of selected objects become a noisy wrong class.
    BinaryMask corruption(H, W);
    const std::size_t first_object = bands;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const bool corrupt = unit() < params.noise_level;
        ClassId wrong;
        do {
            wrong = static_cast<ClassId>(below(N));
        } while (wrong == objects[i].cls);
        if (!corrupt) continue;
        const auto& box = objects[i].box;
        const auto rows = static_cast<std::size_t>(
            std::floor(params.zone_fraction * static_cast<double>(box.bottom - box.top)));
        for (std::size_t r = box.top; r < box.top + rows; ++r) {
            for (std::size_t c = box.left; c < box.right; ++c) {
                if (!contains(objects[i].circle, r, c)) continue;
                const auto px = r * W + c;
                corruption.set(px);
                float* p = &probs[px * N];
                const auto other = static_cast<float>(params.mixture / static_cast<double>(N));
                std::fill(p, p + N, other);
                p[wrong] = static_cast<float>(1.0 - params.mixture) + other;
            }
        }
    }

    if (params.decoys) {
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const auto parent = first_object + i;
            const auto& box = objects[i].box;
            // Oversized: the box grown until it covers oversized_area pixels.
            RectShape big = box;
            while ((big.bottom - big.top) * (big.right - big.left) < params.oversized_area &&
                   !(big.top == 0 && big.left == 0 && big.bottom == H && big.right == W)) {
                if (big.top > 0) --big.top;
                if (big.left > 0) --big.left;
                if (big.bottom < H) ++big.bottom;
                if (big.right < W) ++big.right;
            }
            scene.decoys.push_back({big, parent, params.oversized_score});
            // Low confidence: the box shifted half a width sideways.
            const auto half = (box.right - box.left) / 2;
            RectShape shifted = box;
            if (box.right + half <= W) {
                shifted.left += half;
                shifted.right += half;
            } else if (box.left >= half) {
                shifted.left -= half;
                shifted.right -= half;
            }
            scene.decoys.push_back({shifted, parent, params.low_score});
            // Merged with its surroundings: the clearance box.
            scene.decoys.push_back({objects[i].clearance, parent, params.merged_score});
        }
    }

    return {truth, ProbabilityMap(H, W, N, std::move(probs)), std::move(scene),
            std::move(corruption)};
}

inline nlohmann::json scene_params_to_json(const SceneParams& p) {
    return {{"height", p.height},
            {"width", p.width},
            {"num_classes", p.num_classes},
            {"min_bands", p.min_bands},
            {"max_bands", p.max_bands},
            {"min_objects", p.min_objects},
            {"max_objects", p.max_objects},
            {"min_radius", p.min_radius},
            {"max_radius", p.max_radius},
            {"margin", p.margin},
            {"noise_level", p.noise_level},
            {"mixture", p.mixture},
            {"zone_fraction", p.zone_fraction},
            {"boundary_softness", p.boundary_softness},
            {"object_score", p.object_score},
            {"decoys", p.decoys},
            {"oversized_area", p.oversized_area},
            {"oversized_score", p.oversized_score},
            {"low_score", p.low_score},
            {"merged_score", p.merged_score}};
}

} // namespace anchor_refine
