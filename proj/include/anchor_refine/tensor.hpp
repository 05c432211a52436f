#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anchor_refine/error.hpp"

namespace anchor_refine {

using ClassId = std::uint8_t;

/// Maximum tolerated deviation of a pixel's class scores from summing to one.
inline constexpr double kProbabilitySumTolerance = 1e-4;

/// Per-pixel softmax scores, row-major with the class axis innermost.
///
/// Construction validates every invariant: non-zero dimensions, matching
/// payload length, values in [0, 1] and per-pixel sums within
/// kProbabilitySumTolerance of one. Maps are never renormalized.
class ProbabilityMap {
public:
    ProbabilityMap(std::size_t height, std::size_t width, std::size_t num_classes,
                   std::vector<float> data)
        : height_(height), width_(width), num_classes_(num_classes), data_(std::move(data)) {
        validate();
    }

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return height_ * width_; }
    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }

    [[nodiscard]] std::span<const float> pixel(std::size_t index) const noexcept {
        return std::span<const float>(data_).subspan(index * num_classes_, num_classes_);
    }
    [[nodiscard]] std::span<const float> pixel(std::size_t row, std::size_t col) const noexcept {
        return pixel(row * width_ + col);
    }

    friend bool operator==(const ProbabilityMap&, const ProbabilityMap&) = default;

private:
    void validate() const {
        if (height_ == 0 || width_ == 0 || num_classes_ == 0) {
            throw ValidationError("probability map dimensions must be non-zero (got " +
                                  std::to_string(height_) + "x" + std::to_string(width_) + "x" +
                                  std::to_string(num_classes_) + ")");
        }
        if (num_classes_ > 256) {
            throw ValidationError("probability map has " + std::to_string(num_classes_) +
                                  " classes; labels are limited to 8 bits");
        }
        if (data_.size() != height_ * width_ * num_classes_) {
            throw ValidationError("probability map payload has " + std::to_string(data_.size()) +
                                  " values, expected " +
                                  std::to_string(height_ * width_ * num_classes_));
        }
        for (std::size_t px = 0; px < pixel_count(); ++px) {
            double sum = 0.0;
            for (float v : pixel(px)) {
                if (!(v >= 0.0f && v <= 1.0f)) {
                    throw ValidationError("probability out of [0,1] at pixel " +
                                          std::to_string(px) + ": " + std::to_string(v));
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
                throw ValidationError("probabilities at pixel " + std::to_string(px) +
                                      " sum to " + std::to_string(sum));
            }
        }
    }

    std::size_t height_;
    std::size_t width_;
    std::size_t num_classes_;
    std::vector<float> data_;
};

/// Per-pixel class labels, row-major.
class ClassMap {
public:
    ClassMap() = default;
    ClassMap(std::size_t height, std::size_t width, std::vector<ClassId> labels)
        : height_(height), width_(width), labels_(std::move(labels)) {
        if (labels_.size() != height_ * width_) {
            throw ValidationError("class map has " + std::to_string(labels_.size()) +
                                  " labels, expected " + std::to_string(height_ * width_));
        }
    }
    ClassMap(std::size_t height, std::size_t width, ClassId fill)
        : ClassMap(height, width, std::vector<ClassId>(height * width, fill)) {}

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return labels_.size(); }
    [[nodiscard]] std::span<const ClassId> labels() const noexcept { return labels_; }
    [[nodiscard]] ClassId at(std::size_t index) const noexcept { return labels_[index]; }
    [[nodiscard]] ClassId at(std::size_t row, std::size_t col) const noexcept {
        return labels_[row * width_ + col];
    }
    [[nodiscard]] ClassId max_label() const noexcept {
        return labels_.empty() ? ClassId{0} : *std::max_element(labels_.begin(), labels_.end());
    }

    friend bool operator==(const ClassMap&, const ClassMap&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<ClassId> labels_;
};

/// Row-major boolean mask. Bits are stored one per byte (0 or 1).
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(std::size_t height, std::size_t width)
        : height_(height), width_(width), bits_(height * width, 0) {}
    BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits)
        : height_(height), width_(width), bits_(std::move(bits)) {
        if (bits_.size() != height_ * width_) {
            throw ValidationError("mask has " + std::to_string(bits_.size()) + " bits, expected " +
                                  std::to_string(height_ * width_));
        }
        for (auto& b : bits_) b = b ? 1 : 0;
    }

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return bits_.size(); }
    [[nodiscard]] std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    [[nodiscard]] bool at(std::size_t index) const noexcept { return bits_[index] != 0; }
    [[nodiscard]] bool at(std::size_t row, std::size_t col) const noexcept {
        return bits_[row * width_ + col] != 0;
    }
    void set(std::size_t index) noexcept { bits_[index] = 1; }
    void set(std::size_t row, std::size_t col, bool value = true) noexcept {
        bits_[row * width_ + col] = value ? 1 : 0;
    }

    /// Number of set bits.
    [[nodiscard]] std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }
    [[nodiscard]] bool empty() const noexcept { return count() == 0; }
    [[nodiscard]] bool same_shape(std::size_t height, std::size_t width) const noexcept {
        return height_ == height && width_ == width;
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Region of high-entropy pixels selected by the region filter.
using RegionMask = BinaryMask;

/// Per-pixel Shannon entropy in nats, row-major.
class EntropyMap {
public:
    EntropyMap(std::size_t height, std::size_t width, std::vector<float> values)
        : height_(height), width_(width), values_(std::move(values)) {
        if (height_ == 0 || width_ == 0) {
            throw ValidationError("entropy map dimensions must be non-zero");
        }
        if (values_.size() != height_ * width_) {
            throw ValidationError("entropy map has " + std::to_string(values_.size()) +
                                  " values, expected " + std::to_string(height_ * width_));
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!(values_[i] >= 0.0f) || !std::isfinite(values_[i])) {
                throw ValidationError("entropy value invalid at pixel " + std::to_string(i));
            }
        }
    }

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
    [[nodiscard]] float at(std::size_t row, std::size_t col) const noexcept {
        return values_[row * width_ + col];
    }
    [[nodiscard]] float max() const noexcept {
        return *std::max_element(values_.begin(), values_.end());
    }

    friend bool operator==(const EntropyMap&, const EntropyMap&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<float> values_;
};

/// Index of the highest score per pixel; ties go to the smaller class id.
inline ClassMap argmax(const ProbabilityMap& p) {
    std::vector<ClassId> labels(p.pixel_count());
    for (std::size_t px = 0; px < p.pixel_count(); ++px) {
        auto scores = p.pixel(px);
        labels[px] = static_cast<ClassId>(std::max_element(scores.begin(), scores.end()) -
                                          scores.begin());
    }
    return ClassMap(p.height(), p.width(), std::move(labels));
}

} // namespace anchor_refine
