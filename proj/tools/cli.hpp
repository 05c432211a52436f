#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "anchor_refine/anchor_refine.hpp"
#include "anchor_refine/http_backend.hpp"

namespace anchor_refine::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackend = 2;
inline constexpr const char* kConfigEnv = "ANCHOR_REFINE_CONFIG";

/// Flags shared by every subcommand that runs or reports the pipeline.
struct ConfigFlags {
    std::string config_path;
    int w = 0;
    double tau = 0;
    double alpha = 0;
    std::size_t beta = 0;
    std::size_t anchors = 0;
    std::uint64_t seed = 0;
    bool no_enhance = false;
    bool no_filter = false;
    bool no_sort = false;
    std::string backend;
    std::string endpoint;
    std::string manifest;
    std::string scene;
    int ignore_label = -1;
    unsigned threads = 1;

    CLI::Option* o_w = nullptr;
    CLI::Option* o_tau = nullptr;
    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_beta = nullptr;
    CLI::Option* o_anchors = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_backend = nullptr;
    CLI::Option* o_endpoint = nullptr;
    CLI::Option* o_manifest = nullptr;
    CLI::Option* o_scene = nullptr;
    CLI::Option* o_ignore = nullptr;
    CLI::Option* o_threads = nullptr;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path,
                       std::string("JSON config file (falls back to $") + kConfigEnv + ")");
        o_w = app.add_option("--w", w, "region filter width (odd)");
        o_tau = app.add_option("--tau", tau, "binarization threshold in nats");
        o_alpha = app.add_option("--alpha", alpha, "minimum mask score");
        o_beta = app.add_option("--beta", beta, "maximum mask area in pixels");
        o_anchors = app.add_option("--anchors", anchors, "number of anchors to sample");
        o_seed = app.add_option("--seed", seed, "anchor sampling seed");
        app.add_flag("--no-enhance", no_enhance, "leave the prediction untouched");
        app.add_flag("--no-filter", no_filter, "skip score/area filtering");
        app.add_flag("--no-sort", no_sort, "overwrite in segmenter order instead of by area");
        o_backend = app.add_option("--backend", backend, "manifest | mock | http");
        o_endpoint = app.add_option("--endpoint", endpoint, "segmentation service base URL");
        o_manifest = app.add_option("--manifest", manifest, "recorded-mask manifest JSON");
        o_scene = app.add_option("--scene", scene, "scene JSON for the mock segmenter");
        o_ignore = app.add_option("--ignore-label", ignore_label, "truth label excluded from metrics");
        o_threads = app.add_option("--threads", threads, "worker threads for the region filter");
    }

    /// defaults < config file < flags
    [[nodiscard]] PipelineConfig resolve() const {
        PipelineConfig cfg;
        std::string path = config_path;
        if (path.empty()) {
            if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
        }
        if (!path.empty()) cfg = merge_config(cfg, load_json(path));
        if (o_w->count()) cfg.w = w;
        if (o_tau->count()) cfg.tau = tau;
        if (o_alpha->count()) cfg.alpha = alpha;
        if (o_beta->count()) cfg.beta = beta;
        if (o_anchors->count()) cfg.k = anchors;
        if (o_seed->count()) cfg.seed = seed;
        if (no_enhance) cfg.enhance = false;
        if (no_filter) cfg.use_filter = false;
        if (no_sort) cfg.use_sort = false;
        if (o_backend->count()) cfg.backend = parse_backend(backend);
        if (o_endpoint->count()) cfg.endpoint = endpoint;
        if (o_manifest->count()) cfg.manifest = manifest;
        if (o_scene->count()) cfg.scene = scene;
        if (o_threads->count()) cfg.threads = threads;
        if (o_ignore->count()) {
            if (ignore_label < 0) {
                cfg.ignore_label.reset();
            } else if (ignore_label > 255) {
                throw ValidationError("--ignore-label must be below 256");
            } else {
                cfg.ignore_label = static_cast<ClassId>(ignore_label);
            }
        }
        cfg.validate();
        return cfg;
    }
};

// Stands in when enhancement is off and no segmenter is needed.
class NullBackend final : public SegmenterBackend {
public:
    [[nodiscard]] SegmentResult segment(const SegmenterRequest&) const override { return {}; }
};

inline std::unique_ptr<SegmenterBackend> make_backend(const PipelineConfig& cfg) {
    switch (cfg.backend) {
    case BackendKind::manifest:
        if (cfg.manifest.empty()) throw ValidationError("--backend manifest requires --manifest");
        return std::make_unique<ManifestBackend>(ManifestBackend::load(cfg.manifest));
    case BackendKind::mock:
        if (cfg.scene.empty()) throw ValidationError("--backend mock requires --scene");
        return std::make_unique<MockBackend>(scene_from_json(load_json(cfg.scene)));
    case BackendKind::http:
        if (cfg.endpoint.empty()) throw ValidationError("--backend http requires --endpoint");
        return std::make_unique<HttpBackend>(cfg.endpoint);
    }
    throw ValidationError("unknown backend");
}

// Fixed overlay palette (Cityscapes train-id colours), repeated past 19 classes.
inline constexpr std::array<std::array<std::uint8_t, 3>, 19> kPalette{{
    {128, 64, 128}, {244, 35, 232}, {70, 70, 70},   {102, 102, 156}, {190, 153, 153},
    {153, 153, 153}, {250, 170, 30}, {220, 220, 0},  {107, 142, 35},  {152, 251, 152},
    {70, 130, 180}, {220, 20, 60},  {255, 0, 0},     {0, 0, 142},     {0, 0, 70},
    {0, 60, 100},   {0, 80, 100},   {0, 0, 230},     {119, 11, 32},
}};

inline std::vector<std::uint8_t> render_overlay(const ClassMap& pred, const ClassMap* base,
                                                double opacity) {
    const std::string header =
        "P6\n" + std::to_string(pred.width()) + " " + std::to_string(pred.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (std::size_t px = 0; px < pred.pixel_count(); ++px) {
        const double gray = base ? base->at(px) : 128.0;
        const auto& color = kPalette[pred.at(px) % kPalette.size()];
        for (auto c : color) {
            const double v = (1.0 - opacity) * gray + opacity * c;
            out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0))));
        }
    }
    return out;
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Entropy-anchored prompt-and-fuse refinement for semantic segmentation"};
    app.require_subcommand(1);

    // entropy
    std::string ent_in, ent_out;
    auto* entropy = app.add_subcommand("entropy", "per-pixel entropy of a PTM1 probability map");
    entropy->add_option("prob", ent_in, "input PTM1 file")->required();
    entropy->add_option("out", ent_out, "output ENT1 file")->required();

    // regions
    std::string reg_in, reg_out;
    int reg_w = 5;
    double reg_tau = 1.0;
    unsigned reg_threads = 1;
    auto* regions = app.add_subcommand("regions", "box-filter and binarize an entropy map");
    regions->add_option("entropy", reg_in, "input ENT1 file")->required();
    regions->add_option("out", reg_out, "output mask PGM")->required();
    regions->add_option("--w", reg_w, "filter width (odd)");
    regions->add_option("--tau", reg_tau, "threshold in nats");
    regions->add_option("--threads", reg_threads, "worker threads");

    // anchors
    std::string anc_in, anc_out;
    std::size_t anc_k = 1000;
    std::uint64_t anc_seed = 0;
    auto* anchors = app.add_subcommand("anchors", "sample anchors from a region mask");
    anchors->add_option("region", anc_in, "region mask PGM")->required();
    anchors->add_option("out", anc_out, "output JSON [[row, col], ...]")->required();
    anchors->add_option("--anchors", anc_k, "number of anchors");
    anchors->add_option("--seed", anc_seed, "sampling seed");

    // refine
    std::string ref_pred, ref_prob, ref_out, ref_image_id, ref_trace;
    ConfigFlags ref_flags;
    auto* refine_cmd = app.add_subcommand("refine", "refine a prediction with segmenter masks");
    refine_cmd->add_option("pred", ref_pred, "base prediction PGM")->required();
    refine_cmd->add_option("prob", ref_prob, "base softmax PTM1")->required();
    refine_cmd->add_option("out", ref_out, "refined prediction PGM")->required();
    refine_cmd->add_option("--image-id", ref_image_id, "image id sent to the segmenter (default: pred file stem)");
    refine_cmd->add_option("--trace", ref_trace, "write anchors, counts and failures to this JSON file");
    ref_flags.attach(*refine_cmd);

    // eval
    std::vector<std::string> eval_pred, eval_truth;
    std::size_t eval_n = 0;
    std::string eval_out;
    ConfigFlags eval_flags;
    auto* eval = app.add_subcommand("eval", "IoU / mIoU of predictions against ground truth");
    eval->add_option("--pred", eval_pred, "prediction PGM (repeatable)")->required();
    eval->add_option("--truth", eval_truth, "ground-truth PGM (repeatable, same order)")->required();
    eval->add_option("--num-classes", eval_n, "class count")->required();
    eval->add_option("--out", eval_out, "report JSON")->required();
    eval_flags.attach(*eval);

    // synth
    std::uint64_t syn_seed = 0;
    std::size_t syn_count = 1;
    std::string syn_out;
    SceneParams syn;
    bool syn_no_decoys = false;
    auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
    synth->add_option("out-dir", syn_out, "output directory")->required();
    synth->add_option("--seed", syn_seed, "first scene seed");
    synth->add_option("--count", syn_count, "number of scenes");
    synth->add_option("--height", syn.height);
    synth->add_option("--width", syn.width);
    synth->add_option("--num-classes", syn.num_classes);
    synth->add_option("--min-objects", syn.min_objects);
    synth->add_option("--max-objects", syn.max_objects);
    synth->add_option("--noise-level", syn.noise_level, "probability that an object is corrupted");
    synth->add_option("--mixture", syn.mixture, "uniform weight in corruption zones");
    synth->add_flag("--no-decoys", syn_no_decoys, "omit decoy segmenter proposals");

    // ablate
    std::string abl_dir, abl_out, abl_text;
    ConfigFlags abl_flags;
    auto* ablate = app.add_subcommand("ablate", "run the four-row ablation over a scene batch");
    ablate->add_option("scene-dir", abl_dir, "directory of scenes (from synth)")->required();
    ablate->add_option("--out", abl_out, "report JSON")->required();
    ablate->add_option("--table", abl_text, "also write the aligned text table here");
    abl_flags.attach(*ablate);

    // overlay
    std::string ov_pred, ov_out, ov_base;
    double ov_opacity = 0.5;
    auto* overlay = app.add_subcommand("overlay", "blend a prediction over a grayscale image (PPM)");
    overlay->add_option("pred", ov_pred, "prediction PGM")->required();
    overlay->add_option("out", ov_out, "output PPM")->required();
    overlay->add_option("--base", ov_base, "grayscale PGM underlay");
    overlay->add_option("--opacity", ov_opacity, "label colour weight in [0,1]")->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (*entropy) {
            store_entropy_map(compute_entropy(load_probability_map(ent_in)), ent_out);
        } else if (*regions) {
            store_mask(region_filter(load_entropy_map(reg_in), {reg_w, reg_tau}, reg_threads), reg_out);
        } else if (*anchors) {
            store_json(anchors_to_json(sample_anchors(load_mask(anc_in), anc_k, anc_seed)), anc_out);
        } else if (*refine_cmd) {
            const auto cfg = ref_flags.resolve();
            const auto pred_bytes = detail::read_file(ref_pred);
            const auto y = decode_class_map(pred_bytes, ref_pred);
            const auto p = load_probability_map(ref_prob);
            const auto backend = cfg.enhance ? make_backend(cfg) : nullptr;
            const auto id = ref_image_id.empty() ? fs::path(ref_pred).stem().string() : ref_image_id;
            const NullBackend none;
            const auto result = refine(y, p, cfg.refine_options(id),
                                       backend ? *backend : static_cast<const SegmenterBackend&>(none));
            const auto& trace = result.trace;
            for (const auto& f : trace.failures) std::cerr << "warning: " << f.describe() << "\n";
            if (trace.empty_dropped > 0) {
                std::cerr << "warning: dropped " << trace.empty_dropped << " empty mask(s)\n";
            }
            std::size_t failed = 0;
            for (const auto& f : trace.failures) failed += f.end_anchor - f.first_anchor;
            if (!trace.anchors.empty() && failed == trace.anchors.size()) {
                std::cerr << "error: segmenter failed for every anchor; no output written\n";
                return kExitBackend;
            }
            if (result.prediction == y) {
                write_file_atomic(ref_out, pred_bytes);  // unchanged input stays byte-identical
            } else {
                store_class_map(result.prediction, ref_out);
            }
            if (!ref_trace.empty()) {
                auto failures = nlohmann::json::array();
                for (const auto& f : trace.failures) failures.push_back(f.describe());
                store_json({{"anchors", anchors_to_json(trace.anchors)},
                            {"candidates", trace.candidate_count},
                            {"accepted", trace.accepted_count},
                            {"applied", trace.applied.size()},
                            {"empty_dropped", trace.empty_dropped},
                            {"failures", failures},
                            {"config", config_to_json(cfg)}},
                           ref_trace);
            }
            std::cerr << "refined " << ref_pred << ": " << trace.anchors.size() << " anchors, "
                      << trace.applied.size() << " masks applied\n";
        } else if (*eval) {
            const auto cfg = eval_flags.resolve();
            if (eval_pred.size() != eval_truth.size()) {
                throw ValidationError("--pred and --truth must be given the same number of times");
            }
            ConfusionMatrix cm(eval_n);
            for (std::size_t i = 0; i < eval_pred.size(); ++i) {
                try {
                    cm += accumulate_confusion(load_class_map(eval_pred[i]), load_class_map(eval_truth[i]),
                                               eval_n, cfg.ignore_label);
                } catch (const ValidationError& e) {
                    throw ValidationError(eval_pred[i] + " vs " + eval_truth[i] + ": " + e.what());
                }
            }
            const auto report = make_report(cm, config_to_json(cfg));
            store_json(report_to_json(report), eval_out);
            std::cerr << "mIoU: " << (report.miou ? std::to_string(*report.miou) : "undefined") << "\n";
        } else if (*synth) {
            syn.decoys = !syn_no_decoys;
            for (std::size_t i = 0; i < syn_count; ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "scene_%04zu", i);
                store_scene_dir(generate_scene(syn_seed + i, syn), fs::path(syn_out) / name);
            }
            store_json({{"seed", syn_seed}, {"count", syn_count}, {"params", scene_params_to_json(syn)}},
                       fs::path(syn_out) / "synth.json");
        } else if (*ablate) {
            const auto cfg = abl_flags.resolve();
            const auto scenes = load_scene_batch(abl_dir);
            BackendFactory factory = mock_backend_factory();
            if (cfg.backend != BackendKind::mock) {
                factory = [&cfg](const LabeledScene&) { return make_backend(cfg); };
            }
            const auto table = run_ablation(scenes, cfg, standard_ablation_rows(), factory);
            store_json(ablation_to_json(table), abl_out);
            const auto text = ablation_to_text(table);
            if (!abl_text.empty()) write_text_atomic(abl_text, text);
            std::cerr << text;
        } else if (*overlay) {
            const auto pred = load_class_map(ov_pred);
            std::optional<ClassMap> base;
            if (!ov_base.empty()) {
                base = load_class_map(ov_base);
                if (base->height() != pred.height() || base->width() != pred.width()) {
                    throw ValidationError("--base size differs from the prediction");
                }
            }
            write_file_atomic(ov_out, render_overlay(pred, base ? &*base : nullptr, ov_opacity));
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    }
    return kExitOk;
}

} // namespace anchor_refine::cli
