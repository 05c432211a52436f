#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "anchor_refine/anchors.hpp"
#include "anchor_refine/entropy.hpp"
#include "anchor_refine/error.hpp"
#include "anchor_refine/segmenter.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// Mask acceptance thresholds and the ablation switches.
struct FusionParams {
    double alpha = 0.7;         // keep masks with score >= alpha
    std::size_t beta = 20000;   // keep masks with area <= beta
    bool enhance = true;
    bool use_filter = true;
    bool use_sort = true;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0,1]");
        if (beta < 1) throw ValidationError("beta must be >= 1");
    }
};

/// A candidate mask with the class it will write.
struct ClassedMask {
    BinaryMask mask;
    ClassId cls = 0;
    std::size_t area = 0;
    std::size_t anchor_index = 0;

    friend bool operator==(const ClassedMask&, const ClassedMask&) = default;
};

/// Keeps masks that are confident (score >= alpha) and small (area <= beta),
/// in input order.
inline std::vector<CandidateMask> filter_masks(std::vector<CandidateMask> masks, double alpha,
                                               std::size_t beta) {
    std::erase_if(masks, [&](const CandidateMask& m) {
        return !(m.score() >= alpha && m.area() <= beta);
    });
    return masks;
}

/// Most frequent label of `y` under the mask; ties go to the smallest id.
inline ClassId assign_class(const BinaryMask& mask, const ClassMap& y) {
    if (!mask.same_shape(y.height(), y.width())) {
        throw ValidationError("mask is " + std::to_string(mask.height()) + "x" +
                              std::to_string(mask.width()) + " but prediction is " +
                              std::to_string(y.height()) + "x" + std::to_string(y.width()));
    }
    std::array<std::size_t, 256> histogram{};
    bool any = false;
    for (std::size_t px = 0; px < mask.pixel_count(); ++px) {
        if (mask.at(px)) {
            ++histogram[y.at(px)];
            any = true;
        }
    }
    if (!any) throw ValidationError("cannot take the mode of an empty mask");
    return static_cast<ClassId>(std::max_element(histogram.begin(), histogram.end()) -
                                histogram.begin());
}

/// Stable sort by area, largest first.
inline std::vector<ClassedMask> sort_masks(std::vector<ClassedMask> masks) {
    std::stable_sort(masks.begin(), masks.end(),
                     [](const ClassedMask& a, const ClassedMask& b) { return a.area > b.area; });
    return masks;
}

/// Writes each mask's class over its pixels, in list order; later masks win.
inline ClassMap overwrite(const ClassMap& y, const std::vector<ClassedMask>& ordered) {
    std::vector<ClassId> labels(y.labels().begin(), y.labels().end());
    for (const auto& m : ordered) {
        if (!m.mask.same_shape(y.height(), y.width())) {
            throw ValidationError("mask dimensions do not match the prediction");
        }
        for (std::size_t px = 0; px < labels.size(); ++px) {
            if (m.mask.at(px)) labels[px] = m.cls;
        }
    }
    return ClassMap(y.height(), y.width(), std::move(labels));
}

/// Everything refine() observed along the way, for diagnostics and tests.
struct RefineTrace {
    std::vector<Anchor> anchors;
    std::size_t candidate_count = 0;
    std::size_t accepted_count = 0;
    std::size_t empty_dropped = 0;
    std::vector<SegmentFailure> failures;
    std::vector<ClassedMask> applied;  // in overwrite order
};

struct RefineResult {
    ClassMap prediction;
    RefineTrace trace;
};

struct RefineOptions {
    FilterParams filter;
    FusionParams fusion;
    std::size_t anchor_count = 1000;
    std::uint64_t seed = 0;
    std::string image_id;
    unsigned threads = 1;
};

/// Classes every mask against the pristine prediction, drops empty masks,
/// orders (if enabled) and overwrites.
inline ClassMap fuse(const ClassMap& y, const std::vector<CandidateMask>& candidates,
                     const FusionParams& fusion, RefineTrace* trace = nullptr) {
    auto accepted = fusion.use_filter ? filter_masks(candidates, fusion.alpha, fusion.beta)
                                      : candidates;
    std::vector<ClassedMask> classed;
    classed.reserve(accepted.size());
    std::size_t empty = 0;
    for (auto& m : accepted) {
        if (m.area() == 0) {
            ++empty;
            continue;
        }
        const auto cls = assign_class(m.mask(), y);
        classed.push_back({m.mask(), cls, m.area(), m.anchor_index()});
    }
    if (fusion.use_sort) classed = sort_masks(std::move(classed));
    auto out = overwrite(y, classed);
    if (trace) {
        trace->candidate_count = candidates.size();
        trace->accepted_count = accepted.size();
        trace->empty_dropped = empty;
        trace->applied = std::move(classed);
    }
    return out;
}

/// Full refinement: entropy, region filter, anchors, segmenter, fusion.
inline RefineResult refine(const ClassMap& y, const ProbabilityMap& p, const RefineOptions& options,
                           const SegmenterBackend& backend) {
    options.filter.validate();
    options.fusion.validate();
    if (y.height() != p.height() || y.width() != p.width()) {
        throw ValidationError("prediction is " + std::to_string(y.height()) + "x" +
                              std::to_string(y.width()) + " but probabilities are " +
                              std::to_string(p.height()) + "x" + std::to_string(p.width()));
    }
    if (y.max_label() >= p.num_classes()) {
        throw ValidationError("prediction label " + std::to_string(y.max_label()) +
                              " >= class count " + std::to_string(p.num_classes()));
    }

    RefineResult result{y, {}};
    if (!options.fusion.enhance) return result;

    const auto ent = compute_entropy(p);
    const auto region = region_filter(ent, options.filter, options.threads);
    result.trace.anchors = sample_anchors(region, options.anchor_count, options.seed);
    if (result.trace.anchors.empty()) return result;

    SegmenterRequest request{options.image_id, y.height(), y.width(), result.trace.anchors};
    auto segmented = backend.segment(request);
    result.trace.failures = std::move(segmented.failures);
    result.prediction = fuse(y, segmented.masks, options.fusion, &result.trace);
    return result;
}

} // namespace anchor_refine
