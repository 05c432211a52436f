#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "anchor_refine/anchor_refine.hpp"
#include "oracle.hpp"

using namespace anchor_refine;

TEST(Confusion, SmallExample) {
    const ClassMap truth(2, 2, {0, 0, 1, 1});
    const ClassMap pred(2, 2, {0, 1, 1, 1});
    const auto cm = accumulate_confusion(pred, truth, 2);
    EXPECT_EQ(cm.cell(0, 0), 1u);
    EXPECT_EQ(cm.cell(0, 1), 1u);
    EXPECT_EQ(cm.cell(1, 0), 0u);
    EXPECT_EQ(cm.cell(1, 1), 2u);
    const auto iou = iou_per_class(cm);
    EXPECT_DOUBLE_EQ(*iou[0], 1.0 / 2.0);
    EXPECT_DOUBLE_EQ(*iou[1], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(*mean_iou(cm), 7.0 / 12.0);
}

TEST(Confusion, AbsentClassesAreUndefined) {
    const ClassMap labels(1, 3, {0, 0, 2});
    const auto cm = accumulate_confusion(labels, labels, 4);
    const auto iou = iou_per_class(cm);
    EXPECT_FALSE(iou[1].has_value());
    EXPECT_FALSE(iou[3].has_value());
    EXPECT_DOUBLE_EQ(*mean_iou(cm), 1.0);
    EXPECT_FALSE(mean_iou(ConfusionMatrix(3)).has_value());
}

TEST(Confusion, IgnoreLabelSkipsTruthPixels) {
    const ClassMap truth(1, 4, {0, 255, 1, 255});
    const ClassMap pred(1, 4, {0, 1, 1, 0});
    EXPECT_THROW((void)accumulate_confusion(pred, truth, 2), ValidationError);
    const auto cm = accumulate_confusion(pred, truth, 2, ClassId{255});
    EXPECT_EQ(cm.total(), 2u);
    EXPECT_DOUBLE_EQ(*mean_iou(cm), 1.0);
}

TEST(Confusion, RejectsBadInputs) {
    EXPECT_THROW((void)accumulate_confusion(ClassMap(2, 2, ClassId{0}), ClassMap(2, 3, ClassId{0}), 2),
                 ValidationError);
    EXPECT_THROW((void)accumulate_confusion(ClassMap(1, 1, ClassId{5}), ClassMap(1, 1, ClassId{0}), 2),
                 ValidationError);
}

TEST(Confusion, AccumulationIsOrderFree) {
    std::mt19937_64 rng(2);
    std::vector<ConfusionMatrix> parts;
    ConfusionMatrix whole(5);
    std::vector<ClassId> all_t, all_p;
    for (int i = 0; i < 6; ++i) {
        std::vector<ClassId> t(30), p(30);
        for (auto& v : t) v = static_cast<ClassId>(rng() % 5);
        for (auto& v : p) v = static_cast<ClassId>(rng() % 5);
        all_t.insert(all_t.end(), t.begin(), t.end());
        all_p.insert(all_p.end(), p.begin(), p.end());
        parts.push_back(accumulate_confusion(ClassMap(5, 6, p), ClassMap(5, 6, t), 5));
        whole += parts.back();
    }
    ConfusionMatrix reversed(5);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) reversed = *it + reversed;
    EXPECT_EQ(whole, reversed);
    EXPECT_EQ(whole, accumulate_confusion(ClassMap(1, all_p.size(), all_p),
                                          ClassMap(1, all_t.size(), all_t), 5));

    // Pixel order inside one image does not matter either.
    std::vector<std::size_t> perm(all_t.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ClassId> pt, pp;
    for (auto i : perm) {
        pt.push_back(all_t[i]);
        pp.push_back(all_p[i]);
    }
    EXPECT_EQ(whole, accumulate_confusion(ClassMap(1, pp.size(), pp), ClassMap(1, pt.size(), pt), 5));
}

TEST(Report, JsonShape) {
    const ClassMap labels(1, 2, {0, 2});
    auto j = report_to_json(make_report(accumulate_confusion(labels, labels, 3), {{"w", 5}}));
    EXPECT_TRUE(j["per_class_iou"][1].is_null());
    EXPECT_DOUBLE_EQ(j["miou"].get<double>(), 1.0);
    EXPECT_EQ(j["pixel_count"], 2);
    EXPECT_EQ(j["config"]["w"], 5);
}

TEST(Synthetic, NoiseFreeArgmaxIsTruth) {
    SceneParams sp;
    sp.noise_level = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = generate_scene(seed, sp);
        EXPECT_EQ(argmax(s.base_p), s.truth) << seed;
        EXPECT_EQ(s.corruption.count(), 0u);
        EXPECT_EQ(render_truth(s.scene), s.truth);
    }
}

TEST(Synthetic, Deterministic) {
    const SceneParams sp;
    const auto a = generate_scene(77, sp), b = generate_scene(77, sp);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(a.base_p, b.base_p);
    EXPECT_EQ(a.scene, b.scene);
    EXPECT_NE(generate_scene(78, sp).truth, a.truth);
}

TEST(Synthetic, CorruptionZonesAreHighEntropy) {
    SceneParams sp;
    sp.noise_level = 1.0;
    const auto s = generate_scene(9, sp);
    const auto ent = compute_entropy(s.base_p);
    ASSERT_GT(s.corruption.count(), 0u);
    // (1 - 0.8) one-hot + 0.8 uniform over 6 classes, computed independently.
    const double other = 0.8 / 6.0, top = 0.2 + other;
    const double expected = -top * std::log(top) - 5.0 * other * std::log(other);
    double sum = 0.0;
    for (std::size_t px = 0; px < s.corruption.pixel_count(); ++px) {
        if (!s.corruption.at(px)) continue;
        EXPECT_NEAR(ent.values()[px], expected, 1e-5);
        EXPECT_GE(ent.values()[px], 1.5);
        sum += ent.values()[px];
    }
    EXPECT_GE(sum / static_cast<double>(s.corruption.count()), 1.0);
    EXPECT_NEAR(mixture_entropy(0.8, 6), expected, 1e-12);
}

TEST(Synthetic, RejectsImpossibleLayouts) {
    SceneParams sp;
    sp.height = sp.width = 12;
    sp.min_objects = 3;
    EXPECT_THROW((void)generate_scene(1, sp), ValidationError);
    SceneParams bad;
    bad.mixture = 1.0;
    EXPECT_THROW((void)generate_scene(1, bad), ValidationError);
}

namespace {

std::vector<LabeledScene> scenes(std::size_t count, std::uint64_t first_seed) {
    std::vector<LabeledScene> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(to_labeled(generate_scene(first_seed + i, {}), "s" + std::to_string(i)));
    }
    return out;
}

} // namespace

TEST(Ablation, BaseRowEqualsPlainEvaluation) {
    const auto batch = scenes(4, 300);
    PipelineConfig cfg;
    cfg.beta = 1000;
    const auto table = run_ablation(batch, cfg, standard_ablation_rows());
    ASSERT_EQ(table.size(), 4u);
    ConfusionMatrix cm(6);
    for (const auto& s : batch) cm += accumulate_confusion(s.prediction, s.truth, 6);
    EXPECT_EQ(*table[0].report.miou, *mean_iou(cm));
    EXPECT_EQ(table[0].report.config["enhance"], false);
    EXPECT_EQ(table[3].report.config["use_sort"], true);
    EXPECT_EQ(table[3].report.config["beta"], 1000);
    EXPECT_GE(*table[3].report.miou, *table[0].report.miou);
    const auto text = ablation_to_text(table);
    EXPECT_NE(text.find("enhance+filter+sort"), std::string::npos);
    EXPECT_EQ(ablation_to_json(table).size(), 4u);
}

TEST(Ablation, EmptyBatchIsRejected) {
    EXPECT_THROW((void)run_ablation({}, {}, standard_ablation_rows()), ValidationError);
}
