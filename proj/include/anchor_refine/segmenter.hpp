#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anchor_refine/anchors.hpp"
#include "anchor_refine/error.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// A mask proposed by the promptable segmenter for one anchor.
class CandidateMask {
public:
    CandidateMask(BinaryMask mask, double score, std::size_t anchor_index)
        : mask_(std::move(mask)), score_(score), anchor_index_(anchor_index), area_(mask_.count()) {
        if (!(score_ >= 0.0 && score_ <= 1.0)) {
            throw ValidationError("mask score " + std::to_string(score_) + " outside [0,1]");
        }
    }

    [[nodiscard]] const BinaryMask& mask() const noexcept { return mask_; }
    [[nodiscard]] double score() const noexcept { return score_; }
    [[nodiscard]] std::size_t anchor_index() const noexcept { return anchor_index_; }
    [[nodiscard]] std::size_t area() const noexcept { return area_; }

    friend bool operator==(const CandidateMask&, const CandidateMask&) = default;

private:
    BinaryMask mask_;
    double score_;
    std::size_t anchor_index_;
    std::size_t area_;
};

struct SegmenterRequest {
    std::string image_id;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<Anchor> anchors;

    void validate() const {
        for (std::size_t i = 0; i < anchors.size(); ++i) {
            if (anchors[i].row >= height || anchors[i].col >= width) {
                throw ValidationError("anchor " + std::to_string(i) + " (" +
                                      std::to_string(anchors[i].row) + ", " +
                                      std::to_string(anchors[i].col) + ") outside " +
                                      std::to_string(height) + "x" + std::to_string(width));
            }
        }
    }
};

enum class SegmentErrorKind {
    connection,     // endpoint unreachable
    http_status,    // non-2xx response
    size_mismatch,  // mask dimensions or RLE coverage disagree with the image
    bad_score,      // score outside [0,1]
    malformed,      // response does not follow the protocol
};

inline std::string_view to_string(SegmentErrorKind kind) {
    switch (kind) {
    case SegmentErrorKind::connection: return "connection";
    case SegmentErrorKind::http_status: return "http-status";
    case SegmentErrorKind::size_mismatch: return "size-mismatch";
    case SegmentErrorKind::bad_score: return "bad-score";
    case SegmentErrorKind::malformed: return "malformed";
    }
    return "unknown";
}

/// Failure of one batch of anchors, [first_anchor, end_anchor).
struct SegmentFailure {
    SegmentErrorKind kind;
    std::size_t first_anchor = 0;
    std::size_t end_anchor = 0;
    std::string message;

    [[nodiscard]] std::string describe() const {
        return std::string(to_string(kind)) + " error for anchors [" +
               std::to_string(first_anchor) + ", " + std::to_string(end_anchor) + "): " + message;
    }
};

/// Masks in ascending anchor order plus the batches that failed. A failed
/// batch contributes no masks; the rest of the request is unaffected.
struct SegmentResult {
    std::vector<CandidateMask> masks;
    std::vector<SegmentFailure> failures;

    [[nodiscard]] std::size_t failed_anchor_count() const noexcept {
        std::size_t n = 0;
        for (const auto& f : failures) n += f.end_anchor - f.first_anchor;
        return n;
    }
};

/// Promptable segmenter: point prompts in, candidate masks out.
/// Implementations must tolerate concurrent calls to segment().
class SegmenterBackend {
public:
    virtual ~SegmenterBackend() = default;
    [[nodiscard]] virtual SegmentResult segment(const SegmenterRequest& request) const = 0;
};

} // namespace anchor_refine
