#include <gtest/gtest.h>

#include <random>

#include "anchor_refine/anchor_refine.hpp"
#include "oracle.hpp"

using namespace anchor_refine;

namespace {

BinaryMask mask_with_area(std::size_t h, std::size_t w, std::size_t area) {
    BinaryMask m(h, w);
    for (std::size_t px = 0; px < area; ++px) m.set(px);
    return m;
}

ClassMap row_labels(std::vector<ClassId> labels) {
    const auto w = labels.size();
    return {1, w, std::move(labels)};
}

ClassedMask classed(BinaryMask m, ClassId cls, std::size_t anchor = 0) {
    const auto area = m.count();
    return {std::move(m), cls, area, anchor};
}

} // namespace

TEST(FilterMasks, ScoreAndAreaThresholds) {
    std::vector<CandidateMask> in{{mask_with_area(200, 200, 500), 0.9, 0},
                                  {mask_with_area(200, 200, 500), 0.6, 1},
                                  {mask_with_area(200, 200, 30000), 0.9, 2},
                                  {mask_with_area(200, 200, 20000), 0.7, 3}};
    const auto out = filter_masks(in, 0.7, 20000);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].anchor_index(), 0u);
    EXPECT_EQ(out[1].anchor_index(), 3u);  // both thresholds are inclusive
}

TEST(AssignClass, ModeOfPristineLabels) {
    const auto y = row_labels({1, 1, 1, 2, 2, 7});
    EXPECT_EQ(assign_class(BinaryMask(1, 6, {1, 1, 1, 1, 1, 0}), y), 1);
    EXPECT_EQ(assign_class(BinaryMask(1, 6, {0, 1, 1, 1, 1, 0}), y), 1);  // tie 2:2
    EXPECT_EQ(assign_class(BinaryMask(1, 6, {0, 0, 0, 0, 0, 1}), y), 7);
    EXPECT_THROW((void)assign_class(BinaryMask(1, 6), y), ValidationError);
    EXPECT_THROW((void)assign_class(BinaryMask(2, 3), y), ValidationError);
}

TEST(SortMasks, LargestFirstStableOnTies) {
    std::vector<ClassedMask> in{classed(mask_with_area(4, 4, 3), 1, 0),
                                classed(mask_with_area(4, 4, 10), 2, 1),
                                classed(mask_with_area(4, 4, 3), 3, 2),
                                classed(mask_with_area(4, 4, 7), 4, 3)};
    const auto out = sort_masks(in);
    std::vector<std::size_t> order;
    for (const auto& m : out) order.push_back(m.anchor_index);
    EXPECT_EQ(order, (std::vector<std::size_t>{1, 3, 0, 2}));
}

TEST(Overwrite, LaterMasksWin) {
    const auto y = row_labels({0, 0, 0, 0});
    const auto out = overwrite(y, {classed(BinaryMask(1, 4, {1, 1, 1, 0}), 5),
                                   classed(BinaryMask(1, 4, {0, 1, 0, 0}), 3)});
    EXPECT_EQ(out, row_labels({5, 3, 5, 0}));
    EXPECT_EQ(overwrite(y, {}), y);
}

TEST(Fuse, SmallMaskSurvivesLargeOne) {
    // 4x4 image: a large mask over the whole image labelled 0 by majority and
    // a small mask over the 1-labelled corner.
    std::vector<ClassId> labels(16, 0);
    labels[0] = labels[1] = labels[4] = labels[5] = 1;
    const ClassMap y(4, 4, labels);
    BinaryMask corner(4, 4);
    corner.set(0, 0);
    corner.set(0, 1);
    corner.set(1, 0);
    corner.set(1, 1);
    const std::vector<CandidateMask> candidates{{corner, 0.9, 0}, {BinaryMask(4, 4, std::vector<std::uint8_t>(16, 1)), 0.9, 1}};
    FusionParams fp;
    const auto sorted = fuse(y, candidates, fp);
    EXPECT_EQ(sorted.at(1, 0), 1);  // small mask wrote last
    EXPECT_EQ(sorted.at(1, 1), 1);
    fp.use_sort = false;
    const auto unsorted = fuse(y, candidates, fp);
    EXPECT_EQ(unsorted.at(0, 0), 0);  // big mask, applied last, wipes the corner
}

TEST(Fuse, EmptyMasksAreDropped) {
    const ClassMap y(2, 2, ClassId{3});
    RefineTrace trace;
    const auto out = fuse(y, {{BinaryMask(2, 2), 0.9, 0}}, FusionParams{}, &trace);
    EXPECT_EQ(out, y);
    EXPECT_EQ(trace.empty_dropped, 1u);
    EXPECT_TRUE(trace.applied.empty());
}

TEST(Refine, DefaultsMatchReferenceSettings) {
    const RefineOptions o;
    EXPECT_EQ(o.filter.w, 5);
    EXPECT_DOUBLE_EQ(o.filter.tau, 1.0);
    EXPECT_DOUBLE_EQ(o.fusion.alpha, 0.7);
    EXPECT_EQ(o.fusion.beta, 20000u);
    EXPECT_EQ(o.anchor_count, 1000u);
    EXPECT_TRUE(o.fusion.enhance && o.fusion.use_filter && o.fusion.use_sort);
}

TEST(Refine, EnhanceOffLeavesPredictionAlone) {
    std::mt19937_64 rng(5);
    const auto p = oracle::random_probability_map(rng, 12, 12, 4, 0.0);
    const auto y = argmax(p);
    oracle::ScriptedBackend backend({{BinaryMask(12, 12, std::vector<std::uint8_t>(144, 1)), 1.0}});
    RefineOptions o;
    o.fusion.enhance = false;
    const auto r = refine(y, p, o, backend);
    EXPECT_EQ(r.prediction, y);
    EXPECT_TRUE(r.trace.anchors.empty());
}

TEST(Refine, RejectsMismatchedInputs) {
    std::mt19937_64 rng(6);
    const auto p = oracle::random_probability_map(rng, 4, 4, 3);
    const oracle::ScriptedBackend backend({});
    EXPECT_THROW((void)refine(ClassMap(4, 5, ClassId{0}), p, {}, backend), ValidationError);
    EXPECT_THROW((void)refine(ClassMap(4, 4, ClassId{3}), p, {}, backend), ValidationError);
    RefineOptions bad;
    bad.filter.w = 4;
    EXPECT_THROW((void)refine(ClassMap(4, 4, ClassId{0}), p, bad, backend), ValidationError);
}

TEST(Refine, SyntheticSceneRecoversCorruptedObjects) {
    SceneParams sp;
    sp.noise_level = 1.0;
    const auto s = generate_scene(42, sp);
    const auto y = argmax(s.base_p);
    RefineOptions o;
    o.fusion.beta = 1000;
    o.seed = 3;
    const auto r = refine(y, s.base_p, o, MockBackend(s.scene));
    ASSERT_GT(s.corruption.count(), 0u);
    std::size_t wrong_before = 0, wrong_after = 0;
    for (std::size_t px = 0; px < y.pixel_count(); ++px) {
        if (!s.corruption.at(px)) continue;
        wrong_before += y.at(px) != s.truth.at(px);
        wrong_after += r.prediction.at(px) != s.truth.at(px);
    }
    EXPECT_EQ(wrong_before, s.corruption.count());
    EXPECT_EQ(wrong_after, 0u);
    EXPECT_EQ(r.prediction, s.truth);
}

TEST(Refine, MatchesReferenceFusionOnRandomInstances) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto h = 1 + rng() % 12, w = 1 + rng() % 12, n = 2 + rng() % 4;
        const auto p = oracle::random_probability_map(rng, h, w, n, 0.0);
        const auto y = argmax(p);
        std::vector<std::pair<BinaryMask, double>> masks;
        const auto count = rng() % 7;
        for (std::size_t i = 0; i < count; ++i) {
            masks.emplace_back(rng() % 2 ? oracle::random_blob(rng, h, w)
                                         : oracle::random_mask(rng, h, w, 0.3),
                               std::uniform_real_distribution<double>(0.0, 1.0)(rng));
        }
        RefineOptions o;
        o.filter.w = 1;
        o.filter.tau = 0.0;
        o.fusion.beta = 1 + rng() % (h * w);
        o.fusion.use_filter = rng() % 2;
        o.fusion.use_sort = rng() % 2;
        o.anchor_count = 1 + rng() % 4;
        o.seed = trial;
        const oracle::ScriptedBackend backend(masks);
        const auto r = refine(y, p, o, backend);
        const auto expected = oracle::simulate_fusion(
            {y.labels().begin(), y.labels().end()}, backend.last_returned(), o.fusion.alpha,
            o.fusion.beta, o.fusion.use_filter, o.fusion.use_sort);
        ASSERT_EQ(std::vector<ClassId>(r.prediction.labels().begin(), r.prediction.labels().end()),
                  expected)
            << "trial " << trial;
    }
}
