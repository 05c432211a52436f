#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "anchor_refine/error.hpp"
#include "anchor_refine/io.hpp"
#include "anchor_refine/rle.hpp"
#include "anchor_refine/segmenter.hpp"

namespace anchor_refine {

struct HttpBackendOptions {
    std::size_t chunk_size = 256;    // anchors per POST
    std::size_t max_in_flight = 4;   // concurrent POSTs
    int connect_timeout_sec = 5;
    int read_timeout_sec = 60;
};

/// Client for the segmentation service: POST {endpoint}/v1/segment.
///
/// Anchors are split into chunks that may be sent concurrently; results are
/// merged back in anchor order. A chunk that fails for any reason is reported
/// as a SegmentFailure covering its anchors and contributes no masks.
class HttpBackend final : public SegmenterBackend {
public:
    explicit HttpBackend(std::string endpoint, HttpBackendOptions options = {})
        : options_(options) {
        if (options_.chunk_size == 0) throw ValidationError("HTTP chunk size must be >= 1");
        if (options_.max_in_flight == 0) options_.max_in_flight = 1;
        const auto scheme_end = endpoint.find("://");
        const auto host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_begin = endpoint.find('/', host_begin);
        if (path_begin == std::string::npos) {
            origin_ = endpoint;
        } else {
            origin_ = endpoint.substr(0, path_begin);
            prefix_ = endpoint.substr(path_begin);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
        if (origin_.size() <= host_begin) throw ValidationError("invalid endpoint \"" + endpoint + "\"");
    }

    [[nodiscard]] SegmentResult segment(const SegmenterRequest& request) const override {
        request.validate();
        SegmentResult result;
        const auto n = request.anchors.size();
        std::vector<std::pair<std::size_t, std::size_t>> chunks;
        for (std::size_t begin = 0; begin < n; begin += options_.chunk_size) {
            chunks.emplace_back(begin, std::min(n, begin + options_.chunk_size));
        }
        for (std::size_t wave = 0; wave < chunks.size(); wave += options_.max_in_flight) {
            const auto wave_end = std::min(chunks.size(), wave + options_.max_in_flight);
            std::vector<std::future<SegmentResult>> pending;
            for (std::size_t c = wave; c < wave_end; ++c) {
                pending.push_back(std::async(std::launch::async, [this, &request, chunk = chunks[c]] {
                    return segment_chunk(request, chunk.first, chunk.second);
                }));
            }
            for (auto& f : pending) {
                auto part = f.get();
                std::move(part.masks.begin(), part.masks.end(), std::back_inserter(result.masks));
                std::move(part.failures.begin(), part.failures.end(),
                          std::back_inserter(result.failures));
            }
        }
        return result;
    }

private:
    SegmentResult segment_chunk(const SegmenterRequest& request, std::size_t begin,
                                std::size_t end) const {
        SegmentResult out;
        auto fail = [&](SegmentErrorKind kind, std::string message) {
            out.masks.clear();
            out.failures.push_back({kind, begin, end, std::move(message)});
            return out;
        };

        auto points = nlohmann::json::array();
        for (std::size_t i = begin; i < end; ++i) {
            points.push_back({request.anchors[i].row, request.anchors[i].col});
        }
        const nlohmann::json body{{"image_id", request.image_id},
                                  {"height", request.height},
                                  {"width", request.width},
                                  {"points", std::move(points)}};

        httplib::Client client(origin_);
        client.set_connection_timeout(options_.connect_timeout_sec, 0);
        client.set_read_timeout(options_.read_timeout_sec, 0);
        auto res = client.Post(prefix_ + "/v1/segment", body.dump(), "application/json");
        if (!res) {
            return fail(SegmentErrorKind::connection,
                        origin_ + ": " + httplib::to_string(res.error()));
        }
        if (res->status < 200 || res->status >= 300) {
            std::string detail = res->body;
            try {
                detail = nlohmann::json::parse(res->body).at("error").get<std::string>();
            } catch (const nlohmann::json::exception&) {
            }
            return fail(SegmentErrorKind::http_status,
                        "status " + std::to_string(res->status) + ": " + detail);
        }

        const auto count = end - begin;
        try {
            const auto reply = nlohmann::json::parse(res->body);
            std::vector<std::vector<CandidateMask>> per_point(count);
            for (const auto& entry : reply.at("results")) {
                const auto idx = entry.at("point_index").get<long long>();
                if (idx < 0 || static_cast<std::size_t>(idx) >= count) {
                    return fail(SegmentErrorKind::malformed,
                                "point_index " + std::to_string(idx) + " out of range");
                }
                for (const auto& m : entry.at("masks")) {
                    const auto score = m.at("score").get<double>();
                    if (!(score >= 0.0 && score <= 1.0)) {
                        return fail(SegmentErrorKind::bad_score,
                                    "score " + std::to_string(score) + " outside [0,1]");
                    }
                    RunLengthEncoding rle;
                    try {
                        rle = rle_from_json(m.at("rle"));
                    } catch (const FormatError& e) {
                        return fail(SegmentErrorKind::malformed, e.what());
                    }
                    if (rle.height != request.height || rle.width != request.width) {
                        return fail(SegmentErrorKind::size_mismatch,
                                    "RLE size [" + std::to_string(rle.height) + ", " +
                                        std::to_string(rle.width) + "] does not match the image");
                    }
                    per_point[static_cast<std::size_t>(idx)].emplace_back(
                        rle_decode(rle), score, begin + static_cast<std::size_t>(idx));
                }
            }
            for (auto& masks : per_point) {
                std::move(masks.begin(), masks.end(), std::back_inserter(out.masks));
            }
        } catch (const nlohmann::json::exception& e) {
            return fail(SegmentErrorKind::malformed, e.what());
        } catch (const FormatError& e) {
            return fail(SegmentErrorKind::size_mismatch, e.what());
        }
        return out;
    }

    HttpBackendOptions options_;
    std::string origin_;
    std::string prefix_;
};

} // namespace anchor_refine
