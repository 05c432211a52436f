#pragma once

#include <cstddef>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "anchor_refine/config.hpp"
#include "anchor_refine/fusion.hpp"
#include "anchor_refine/metrics.hpp"
#include "anchor_refine/scene.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

struct AblationRow {
    std::string name;
    bool enhance = true;
    bool use_filter = true;
    bool use_sort = true;
};

/// The four toggle combinations of the ablation study, in table order.
inline std::vector<AblationRow> standard_ablation_rows() {
    return {{"base", false, false, false},
            {"enhance", true, false, false},
            {"enhance+filter", true, true, false},
            {"enhance+filter+sort", true, true, true}};
}

/// One evaluation image: ground truth, the base model's output, and the scene
/// that drives the mock segmenter.
struct LabeledScene {
    std::string id;
    ClassMap truth;
    ClassMap prediction;
    ProbabilityMap p;
    SceneSpec scene;
};

struct AblationEntry {
    AblationRow row;
    EvalReport report;
    std::size_t failed_anchors = 0;
};

using BackendFactory = std::function<std::unique_ptr<SegmenterBackend>(const LabeledScene&)>;

inline BackendFactory mock_backend_factory() {
    return [](const LabeledScene& s) { return std::make_unique<MockBackend>(s.scene); };
}

/// Refines every scene under every row and reports batch mIoU per row. All
/// rows share `config` apart from their toggles.
inline std::vector<AblationEntry> run_ablation(const std::vector<LabeledScene>& scenes,
                                               const PipelineConfig& config,
                                               const std::vector<AblationRow>& rows,
                                               const BackendFactory& make_backend = mock_backend_factory()) {
    if (scenes.empty()) throw ValidationError("ablation needs at least one scene");
    const auto n = scenes.front().p.num_classes();
    std::vector<std::unique_ptr<SegmenterBackend>> backends;
    for (const auto& s : scenes) backends.push_back(make_backend(s));

    std::vector<AblationEntry> table;
    for (const auto& row : rows) {
        auto cfg = config;
        cfg.enhance = row.enhance;
        cfg.use_filter = row.use_filter;
        cfg.use_sort = row.use_sort;
        cfg.validate();
        ConfusionMatrix cm(n);
        std::size_t failed = 0;
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            const auto& s = scenes[i];
            if (s.p.num_classes() != n) {
                throw ValidationError("scene " + s.id + " has a different class count");
            }
            auto refined = refine(s.prediction, s.p, cfg.refine_options(s.id), *backends[i]);
            for (const auto& f : refined.trace.failures) failed += f.end_anchor - f.first_anchor;
            cm += accumulate_confusion(refined.prediction, s.truth, n, cfg.ignore_label);
        }
        table.push_back({row, make_report(cm, config_to_json(cfg)), failed});
    }
    return table;
}

inline nlohmann::json ablation_to_json(const std::vector<AblationEntry>& table) {
    auto arr = nlohmann::json::array();
    for (const auto& e : table) {
        auto j = report_to_json(e.report);
        j["name"] = e.row.name;
        j["failed_anchors"] = e.failed_anchors;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::string ablation_to_text(const std::vector<AblationEntry>& table) {
    std::size_t name_width = 4;
    for (const auto& e : table) name_width = std::max(name_width, e.row.name.size());
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s  %-7s  %-6s  %-4s  %8s\n", static_cast<int>(name_width),
                  "row", "ENHANCE", "filter", "sort", "mIoU");
    out += line;
    for (const auto& e : table) {
        const auto mark = [](bool b) { return b ? "x" : "-"; };
        if (e.report.miou) {
            std::snprintf(line, sizeof line, "%-*s  %-7s  %-6s  %-4s  %8.4f\n",
                          static_cast<int>(name_width), e.row.name.c_str(), mark(e.row.enhance),
                          mark(e.row.use_filter), mark(e.row.use_sort), *e.report.miou * 100.0);
        } else {
            std::snprintf(line, sizeof line, "%-*s  %-7s  %-6s  %-4s  %8s\n",
                          static_cast<int>(name_width), e.row.name.c_str(), mark(e.row.enhance),
                          mark(e.row.use_filter), mark(e.row.use_sort), "n/a");
        }
        out += line;
    }
    return out;
}

} // namespace anchor_refine
