#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

#include "anchor_refine/error.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// Per-pixel Shannon entropy (natural log) of the class distribution, with
/// 0·ln 0 = 0.
///
/// Each pixel is evaluated on its scores divided by their sum. Valid maps sum
/// to one within 1e-4, so this only removes that slack and keeps every value
/// inside [0, ln N].
inline EntropyMap compute_entropy(const ProbabilityMap& p) {
    std::vector<float> values(p.pixel_count());
    for (std::size_t px = 0; px < p.pixel_count(); ++px) {
        auto scores = p.pixel(px);
        double sum = 0.0;
        for (float v : scores) sum += v;
        double ent = 0.0;
        for (float v : scores) {
            if (v > 0.0f) {
                const double q = v / sum;
                ent -= q * std::log(q);
            }
        }
        values[px] = static_cast<float>(std::max(ent, 0.0));
    }
    return EntropyMap(p.height(), p.width(), std::move(values));
}

/// Region filter parameters: odd window width and binarization threshold (nats).
struct FilterParams {
    int w = 5;
    double tau = 1.0;

    void validate() const {
        if (w < 1 || w % 2 == 0) {
            throw ValidationError("filter width w must be odd and >= 1 (got " + std::to_string(w) +
                                  ")");
        }
        if (!(tau >= 0.0) || !std::isfinite(tau)) {
            throw ValidationError("threshold tau must be finite and >= 0");
        }
    }
};

/// w×w window mean of the entropy map with clamp-to-edge padding.
///
/// Each window is summed in a fixed row-major order, so the result does not
/// depend on `threads`.
inline std::vector<double> window_mean(const EntropyMap& ent, int w, unsigned threads = 1) {
    const auto h = static_cast<std::ptrdiff_t>(ent.height());
    const auto wd = static_cast<std::ptrdiff_t>(ent.width());
    const std::ptrdiff_t r = (w - 1) / 2;
    const double norm = 1.0 / (static_cast<double>(w) * w);
    auto values = ent.values();
    std::vector<double> out(ent.height() * ent.width());

    auto rows = [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
        for (std::ptrdiff_t i = begin; i < end; ++i) {
            for (std::ptrdiff_t j = 0; j < wd; ++j) {
                double sum = 0.0;
                for (std::ptrdiff_t m = -r; m <= r; ++m) {
                    const auto ii = std::clamp<std::ptrdiff_t>(i + m, 0, h - 1);
                    for (std::ptrdiff_t n = -r; n <= r; ++n) {
                        const auto jj = std::clamp<std::ptrdiff_t>(j + n, 0, wd - 1);
                        sum += values[static_cast<std::size_t>(ii * wd + jj)];
                    }
                }
                out[static_cast<std::size_t>(i * wd + j)] = sum * norm;
            }
        }
    };

    threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::max<std::ptrdiff_t>(h, 1)));
    if (threads == 1) {
        rows(0, h);
        return out;
    }
    std::vector<std::jthread> pool;
    const std::ptrdiff_t chunk = (h + threads - 1) / threads;
    for (std::ptrdiff_t begin = 0; begin < h; begin += chunk) {
        pool.emplace_back(rows, begin, std::min(h, begin + chunk));
    }
    pool.clear();
    return out;
}

/// Binarized window mean: a bit is set iff the w×w mean entropy is >= tau.
///
/// Thin high-entropy structures (class boundaries) average out below tau
/// while area-wise uncertainty survives.
inline RegionMask region_filter(const EntropyMap& ent, const FilterParams& params,
                                unsigned threads = 1) {
    params.validate();
    const auto limit = 2 * std::min(ent.height(), ent.width()) - 1;
    if (static_cast<std::size_t>(params.w) > limit) {
        throw ValidationError("filter width w=" + std::to_string(params.w) +
                              " exceeds 2*min(H,W)-1 = " + std::to_string(limit));
    }
    const auto means = window_mean(ent, params.w, threads);
    RegionMask region(ent.height(), ent.width());
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (means[i] >= params.tau) region.set(i);
    }
    return region;
}

} // namespace anchor_refine
