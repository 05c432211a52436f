#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "anchor_refine/error.hpp"
#include "anchor_refine/segmenter.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

/// Axis-aligned rectangle, half-open: rows [top, bottom), cols [left, right).
struct RectShape {
    std::size_t top = 0;
    std::size_t left = 0;
    std::size_t bottom = 0;
    std::size_t right = 0;

    friend bool operator==(const RectShape&, const RectShape&) = default;
};

/// Filled circle: pixel (r, c) is inside iff (r-row)² + (c-col)² <= radius².
struct CircleShape {
    double row = 0.0;
    double col = 0.0;
    double radius = 0.0;

    friend bool operator==(const CircleShape&, const CircleShape&) = default;
};

using Shape = std::variant<RectShape, CircleShape>;

inline bool contains(const Shape& shape, std::size_t row, std::size_t col) {
    if (const auto* r = std::get_if<RectShape>(&shape)) {
        return row >= r->top && row < r->bottom && col >= r->left && col < r->right;
    }
    const auto& c = std::get<CircleShape>(shape);
    const double dr = static_cast<double>(row) - c.row;
    const double dc = static_cast<double>(col) - c.col;
    return dr * dr + dc * dc <= c.radius * c.radius;
}

inline BinaryMask rasterize(const Shape& shape, std::size_t height, std::size_t width) {
    BinaryMask mask(height, width);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (contains(shape, r, c)) mask.set(r, c);
        }
    }
    return mask;
}

/// A visible object. Smaller depth is closer to the camera and owns
/// contested pixels.
struct SceneEntity {
    Shape shape;
    ClassId cls = 0;
    int depth = 0;
    double score = 1.0;

    friend bool operator==(const SceneEntity&, const SceneEntity&) = default;
};

/// An extra hypothesis emitted whenever a prompt lands on entity `parent`.
/// Decoys are not part of the ground truth; they model wrong or oversized
/// proposals a real segmenter produces.
struct SceneDecoy {
    Shape shape;
    std::size_t parent = 0;
    double score = 1.0;

    friend bool operator==(const SceneDecoy&, const SceneDecoy&) = default;
};

struct SceneSpec {
    std::size_t height = 0;
    std::size_t width = 0;
    ClassId background = 0;
    std::vector<SceneEntity> entities;
    std::vector<SceneDecoy> decoys;

    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;

    void validate() const {
        if (height == 0 || width == 0) throw ValidationError("scene dimensions must be non-zero");
        auto in_bounds = [&](const Shape& s) {
            if (const auto* r = std::get_if<RectShape>(&s)) {
                return r->top < r->bottom && r->left < r->right && r->bottom <= height &&
                       r->right <= width;
            }
            const auto& c = std::get<CircleShape>(s);
            return c.radius >= 0.0 && c.row - c.radius >= -0.5 && c.col - c.radius >= -0.5 &&
                   c.row + c.radius <= static_cast<double>(height) - 0.5 &&
                   c.col + c.radius <= static_cast<double>(width) - 0.5;
        };
        std::set<int> depths;
        for (std::size_t i = 0; i < entities.size(); ++i) {
            const auto& e = entities[i];
            if (!in_bounds(e.shape)) {
                throw ValidationError("scene entity " + std::to_string(i) + " exceeds the image");
            }
            if (!depths.insert(e.depth).second) {
                throw ValidationError("scene entity " + std::to_string(i) + " repeats depth " +
                                      std::to_string(e.depth));
            }
            if (!(e.score >= 0.0 && e.score <= 1.0)) {
                throw ValidationError("scene entity " + std::to_string(i) + " score outside [0,1]");
            }
        }
        for (std::size_t i = 0; i < decoys.size(); ++i) {
            const auto& d = decoys[i];
            if (!in_bounds(d.shape)) {
                throw ValidationError("scene decoy " + std::to_string(i) + " exceeds the image");
            }
            if (d.parent >= entities.size()) {
                throw ValidationError("scene decoy " + std::to_string(i) + " has no parent entity");
            }
            if (!(d.score >= 0.0 && d.score <= 1.0)) {
                throw ValidationError("scene decoy " + std::to_string(i) + " score outside [0,1]");
            }
        }
    }
};

inline constexpr std::size_t kNoEntity = std::numeric_limits<std::size_t>::max();

/// Index of the front-most entity at each pixel, or kNoEntity.
inline std::vector<std::size_t> owner_map(const SceneSpec& scene) {
    std::vector<std::size_t> owner(scene.height * scene.width, kNoEntity);
    std::vector<int> best(owner.size(), std::numeric_limits<int>::max());
    for (std::size_t e = 0; e < scene.entities.size(); ++e) {
        const auto& ent = scene.entities[e];
        for (std::size_t r = 0; r < scene.height; ++r) {
            for (std::size_t c = 0; c < scene.width; ++c) {
                const auto px = r * scene.width + c;
                if (ent.depth < best[px] && contains(ent.shape, r, c)) {
                    best[px] = ent.depth;
                    owner[px] = e;
                }
            }
        }
    }
    return owner;
}

/// Ground-truth labels: each pixel takes its front-most entity's class.
inline ClassMap render_truth(const SceneSpec& scene) {
    const auto owner = owner_map(scene);
    std::vector<ClassId> labels(owner.size(), scene.background);
    for (std::size_t px = 0; px < owner.size(); ++px) {
        if (owner[px] != kNoEntity) labels[px] = scene.entities[owner[px]].cls;
    }
    return ClassMap(scene.height, scene.width, std::move(labels));
}

/// Deterministic stand-in for a promptable segmenter. A prompt on an entity
/// returns that entity's visible region, followed by the entity's decoys in
/// scene order. A prompt on background returns nothing.
class MockBackend final : public SegmenterBackend {
public:
    explicit MockBackend(SceneSpec scene) : scene_(std::move(scene)) {
        scene_.validate();
        owner_ = owner_map(scene_);
    }

    [[nodiscard]] const SceneSpec& scene() const noexcept { return scene_; }

    [[nodiscard]] SegmentResult segment(const SegmenterRequest& request) const override {
        request.validate();
        if (request.height != scene_.height || request.width != scene_.width) {
            throw ValidationError("request dimensions do not match the scene");
        }
        SegmentResult result;
        for (std::size_t a = 0; a < request.anchors.size(); ++a) {
            const auto& anchor = request.anchors[a];
            const auto owner = owner_[anchor.row * scene_.width + anchor.col];
            if (owner == kNoEntity) continue;
            BinaryMask visible(scene_.height, scene_.width);
            for (std::size_t px = 0; px < owner_.size(); ++px) {
                if (owner_[px] == owner) visible.set(px);
            }
            result.masks.emplace_back(std::move(visible), scene_.entities[owner].score, a);
            for (const auto& d : scene_.decoys) {
                if (d.parent == owner) {
                    result.masks.emplace_back(rasterize(d.shape, scene_.height, scene_.width),
                                              d.score, a);
                }
            }
        }
        return result;
    }

private:
    SceneSpec scene_;
    std::vector<std::size_t> owner_;
};

// ---- JSON ------------------------------------------------------------------

inline nlohmann::json shape_to_json(const Shape& shape) {
    if (const auto* r = std::get_if<RectShape>(&shape)) {
        return {{"type", "rect"},
                {"top", r->top},
                {"left", r->left},
                {"bottom", r->bottom},
                {"right", r->right}};
    }
    const auto& c = std::get<CircleShape>(shape);
    return {{"type", "circle"}, {"row", c.row}, {"col", c.col}, {"radius", c.radius}};
}

inline Shape shape_from_json(const nlohmann::json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "rect") {
        return RectShape{j.at("top").get<std::size_t>(), j.at("left").get<std::size_t>(),
                         j.at("bottom").get<std::size_t>(), j.at("right").get<std::size_t>()};
    }
    if (type == "circle") {
        return CircleShape{j.at("row").get<double>(), j.at("col").get<double>(),
                           j.at("radius").get<double>()};
    }
    throw FormatError("unknown shape type \"" + type + "\"");
}

inline nlohmann::json scene_to_json(const SceneSpec& scene) {
    auto entities = nlohmann::json::array();
    for (const auto& e : scene.entities) {
        entities.push_back({{"shape", shape_to_json(e.shape)},
                            {"class", e.cls},
                            {"depth", e.depth},
                            {"score", e.score}});
    }
    auto decoys = nlohmann::json::array();
    for (const auto& d : scene.decoys) {
        decoys.push_back(
            {{"shape", shape_to_json(d.shape)}, {"parent", d.parent}, {"score", d.score}});
    }
    return {{"height", scene.height},
            {"width", scene.width},
            {"background", scene.background},
            {"entities", std::move(entities)},
            {"decoys", std::move(decoys)}};
}

inline SceneSpec scene_from_json(const nlohmann::json& j) {
    try {
        SceneSpec s;
        s.height = j.at("height").get<std::size_t>();
        s.width = j.at("width").get<std::size_t>();
        s.background = j.value("background", ClassId{0});
        for (const auto& e : j.at("entities")) {
            s.entities.push_back({shape_from_json(e.at("shape")), e.at("class").get<ClassId>(),
                                  e.at("depth").get<int>(), e.value("score", 1.0)});
        }
        if (j.contains("decoys")) {
            for (const auto& d : j.at("decoys")) {
                s.decoys.push_back({shape_from_json(d.at("shape")),
                                    d.at("parent").get<std::size_t>(), d.value("score", 1.0)});
            }
        }
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed scene: ") + e.what());
    }
}

} // namespace anchor_refine
