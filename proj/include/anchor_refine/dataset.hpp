#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "anchor_refine/ablation.hpp"
#include "anchor_refine/io.hpp"
#include "anchor_refine/scene.hpp"
#include "anchor_refine/synth.hpp"

namespace anchor_refine {

// A scene directory holds truth.pgm, pred.pgm, prob.ptm and scene.json.
inline constexpr const char* kTruthFile = "truth.pgm";
inline constexpr const char* kPredFile = "pred.pgm";
inline constexpr const char* kProbFile = "prob.ptm";
inline constexpr const char* kSceneFile = "scene.json";

inline void store_scene_dir(const SyntheticScene& s, const fs::path& dir) {
    fs::create_directories(dir);
    store_class_map(s.truth, dir / kTruthFile);
    store_class_map(argmax(s.base_p), dir / kPredFile);
    store_probability_map(s.base_p, dir / kProbFile);
    store_json(scene_to_json(s.scene), dir / kSceneFile);
}

inline LabeledScene load_scene_dir(const fs::path& dir) {
    LabeledScene s{dir.filename().string(), load_class_map(dir / kTruthFile),
                   load_class_map(dir / kPredFile), load_probability_map(dir / kProbFile),
                   scene_from_json(load_json(dir / kSceneFile))};
    if (s.truth.height() != s.p.height() || s.truth.width() != s.p.width() ||
        s.prediction.height() != s.p.height() || s.prediction.width() != s.p.width()) {
        throw ValidationError(dir.string() + ": scene files disagree on image size");
    }
    return s;
}

/// Loads `dir` itself if it is a scene directory, otherwise every scene
/// subdirectory in name order.
inline std::vector<LabeledScene> load_scene_batch(const fs::path& dir) {
    if (fs::exists(dir / kSceneFile)) return {load_scene_dir(dir)};
    if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / kSceneFile)) {
            subdirs.push_back(entry.path());
        }
    }
    std::sort(subdirs.begin(), subdirs.end());
    if (subdirs.empty()) throw ValidationError(dir.string() + " contains no scene directories");
    std::vector<LabeledScene> scenes;
    for (const auto& d : subdirs) scenes.push_back(load_scene_dir(d));
    return scenes;
}

inline LabeledScene to_labeled(const SyntheticScene& s, std::string id) {
    return {std::move(id), s.truth, argmax(s.base_p), s.base_p, s.scene};
}

} // namespace anchor_refine
