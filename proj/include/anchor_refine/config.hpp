#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "anchor_refine/entropy.hpp"
#include "anchor_refine/error.hpp"
#include "anchor_refine/fusion.hpp"
#include "anchor_refine/tensor.hpp"

namespace anchor_refine {

enum class BackendKind { manifest, mock, http };

inline std::string to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::manifest: return "manifest";
    case BackendKind::mock: return "mock";
    case BackendKind::http: return "http";
    }
    return "unknown";
}

inline BackendKind parse_backend(const std::string& name) {
    if (name == "manifest") return BackendKind::manifest;
    if (name == "mock") return BackendKind::mock;
    if (name == "http") return BackendKind::http;
    throw ValidationError("unknown backend \"" + name + "\" (expected manifest, mock or http)");
}

/// Every hyperparameter of a refinement run. JSON keys match the field names.
struct PipelineConfig {
    int w = 5;
    double tau = 1.0;
    double alpha = 0.7;
    std::size_t beta = 20000;
    std::size_t k = 1000;
    std::uint64_t seed = 0;
    bool enhance = true;
    bool use_filter = true;
    bool use_sort = true;
    BackendKind backend = BackendKind::mock;
    std::string endpoint;
    std::string manifest;
    std::string scene;
    std::optional<ClassId> ignore_label;
    unsigned threads = 1;

    [[nodiscard]] FilterParams filter_params() const { return {w, tau}; }
    [[nodiscard]] FusionParams fusion_params() const {
        return {alpha, beta, enhance, use_filter, use_sort};
    }
    [[nodiscard]] RefineOptions refine_options(std::string image_id = {}) const {
        return {filter_params(), fusion_params(), k, seed, std::move(image_id), threads};
    }

    void validate() const {
        filter_params().validate();
        fusion_params().validate();
        if (threads == 0) throw ValidationError("threads must be >= 1");
    }
};

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected so
/// typos do not silently fall back to defaults.
inline PipelineConfig merge_config(PipelineConfig base, const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "w") base.w = value.get<int>();
            else if (key == "tau") base.tau = value.get<double>();
            else if (key == "alpha") base.alpha = value.get<double>();
            else if (key == "beta") base.beta = value.get<std::size_t>();
            else if (key == "k") base.k = value.get<std::size_t>();
            else if (key == "seed") base.seed = value.get<std::uint64_t>();
            else if (key == "enhance") base.enhance = value.get<bool>();
            else if (key == "use_filter") base.use_filter = value.get<bool>();
            else if (key == "use_sort") base.use_sort = value.get<bool>();
            else if (key == "backend") base.backend = parse_backend(value.get<std::string>());
            else if (key == "endpoint") base.endpoint = value.get<std::string>();
            else if (key == "manifest") base.manifest = value.get<std::string>();
            else if (key == "scene") base.scene = value.get<std::string>();
            else if (key == "threads") base.threads = value.get<unsigned>();
            else if (key == "ignore_label") {
                if (value.is_null()) base.ignore_label.reset();
                else base.ignore_label = value.get<ClassId>();
            } else {
                throw FormatError("unknown config key \"" + key + "\"");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid config value: ") + e.what());
    }
    return base;
}

/// The hyperparameters echoed into every report.
inline nlohmann::json config_to_json(const PipelineConfig& c) {
    return {{"w", c.w},
            {"tau", c.tau},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"k", c.k},
            {"seed", c.seed},
            {"enhance", c.enhance},
            {"use_filter", c.use_filter},
            {"use_sort", c.use_sort},
            {"backend", to_string(c.backend)},
            {"endpoint", c.endpoint},
            {"ignore_label", c.ignore_label ? nlohmann::json(*c.ignore_label) : nlohmann::json(nullptr)}};
}

} // namespace anchor_refine
