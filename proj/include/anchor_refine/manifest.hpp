#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "anchor_refine/anchors.hpp"
#include "anchor_refine/error.hpp"
#include "anchor_refine/io.hpp"
#include "anchor_refine/segmenter.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

struct ManifestEntry {
    Anchor anchor;
    double score = 0.0;
    std::string mask_path;  // relative to the manifest file
    BinaryMask mask;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Recorded segmenter output for one image.
struct Manifest {
    std::string image_id;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<ManifestEntry> entries;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Parses the manifest and loads every referenced mask. Missing mask files
/// are reported together in one error.
inline Manifest load_manifest(const fs::path& path) {
    const auto j = load_json(path);
    const auto base = path.parent_path();
    if (!base.empty()) fs::create_directories(base);
    Manifest m;
    struct Raw {
        Anchor anchor;
        double score;
        std::string mask_path;
    };
    std::vector<Raw> raw;
    try {
        m.image_id = j.at("image_id").get<std::string>();
        m.height = j.at("height").get<std::size_t>();
        m.width = j.at("width").get<std::size_t>();
        for (const auto& e : j.at("entries")) {
            const auto& a = e.at("anchor");
            if (!a.is_array() || a.size() != 2) throw FormatError("anchor must be [row, col]");
            raw.push_back({{a[0].get<std::size_t>(), a[1].get<std::size_t>()},
                           e.at("score").get<double>(),
                           e.at("mask_path").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": malformed manifest: " + e.what());
    }

    std::string missing;
    for (const auto& r : raw) {
        if (!fs::exists(base / r.mask_path)) missing += " " + (base / r.mask_path).string();
    }
    if (!missing.empty()) {
        throw FormatError(path.string() + ": manifest references missing mask files:" + missing);
    }

    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto& r = raw[i];
        const auto where = path.string() + ": entry " + std::to_string(i);
        if (r.anchor.row >= m.height || r.anchor.col >= m.width) {
            throw ValidationError(where + ": anchor outside the image");
        }
        if (!(r.score >= 0.0 && r.score <= 1.0)) {
            throw ValidationError(where + ": score outside [0,1]");
        }
        auto mask = load_mask(base / r.mask_path);
        if (!mask.same_shape(m.height, m.width)) {
            throw ValidationError(where + ": mask " + r.mask_path + " is " +
                                  std::to_string(mask.height()) + "x" +
                                  std::to_string(mask.width()) + ", expected " +
                                  std::to_string(m.height) + "x" + std::to_string(m.width));
        }
        m.entries.push_back({r.anchor, r.score, r.mask_path, std::move(mask)});
    }
    return m;
}

/// Writes the manifest JSON and every entry's mask next to it.
inline void store_manifest(const Manifest& m, const fs::path& path) {
    const auto base = path.parent_path();
    if (!base.empty()) fs::create_directories(base);
    auto entries = nlohmann::json::array();
    for (const auto& e : m.entries) {
        const auto mask_file = base / e.mask_path;
        if (mask_file.has_parent_path()) fs::create_directories(mask_file.parent_path());
        store_mask(e.mask, mask_file);
        entries.push_back({{"anchor", {e.anchor.row, e.anchor.col}},
                           {"score", e.score},
                           {"mask_path", e.mask_path}});
    }
    store_json({{"image_id", m.image_id},
                {"height", m.height},
                {"width", m.width},
                {"entries", std::move(entries)}},
               path);
}

/// Replays recorded masks keyed by anchor coordinates. Anchors without a
/// recording yield no masks.
class ManifestBackend final : public SegmenterBackend {
public:
    explicit ManifestBackend(Manifest manifest) : manifest_(std::move(manifest)) {
        for (std::size_t i = 0; i < manifest_.entries.size(); ++i) {
            by_anchor_[manifest_.entries[i].anchor].push_back(i);
        }
    }

    static ManifestBackend load(const fs::path& path) { return ManifestBackend(load_manifest(path)); }

    [[nodiscard]] const Manifest& manifest() const noexcept { return manifest_; }

    [[nodiscard]] SegmentResult segment(const SegmenterRequest& request) const override {
        request.validate();
        if (request.height != manifest_.height || request.width != manifest_.width) {
            throw ValidationError("request is " + std::to_string(request.height) + "x" +
                                  std::to_string(request.width) + " but manifest \"" +
                                  manifest_.image_id + "\" is " + std::to_string(manifest_.height) +
                                  "x" + std::to_string(manifest_.width));
        }
        SegmentResult result;
        for (std::size_t a = 0; a < request.anchors.size(); ++a) {
            auto it = by_anchor_.find(request.anchors[a]);
            if (it == by_anchor_.end()) continue;
            for (auto idx : it->second) {
                const auto& e = manifest_.entries[idx];
                result.masks.emplace_back(e.mask, e.score, a);
            }
        }
        return result;
    }

private:
    Manifest manifest_;
    std::map<Anchor, std::vector<std::size_t>> by_anchor_;
};

} // namespace anchor_refine
