#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "anchor_refine/anchor_refine.hpp"
#include "anchor_refine/http_backend.hpp"
#include "test_util.hpp"

using namespace anchor_refine;
using nlohmann::json;

namespace {

// In-process stand-in for the segmentation service.
class StubServer {
public:
    using Handler = std::function<void(const json& request, httplib::Response& res)>;

    explicit StubServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/segment", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            handler_(json::parse(req.body), res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    [[nodiscard]] int calls() const { return calls_; }

private:
    Handler handler_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> calls_{0};
};

void reply(httplib::Response& res, const json& body) {
    res.set_content(body.dump(), "application/json");
}

json one_mask(const json& counts, double score, std::size_t h, std::size_t w) {
    return {{"results",
             {{{"point_index", 0},
               {"masks", {{{"score", score}, {"rle", {{"size", {h, w}}, {"counts", counts}}}}}}}}}};
}

const SegmenterRequest kRequest{"img", 2, 3, {{0, 1}}};

} // namespace

TEST(HttpBackend, DecodesMaskAndScore) {
    json seen;
    StubServer stub([&](const json& req, httplib::Response& res) {
        seen = req;
        reply(res, one_mask({2, 2, 2}, 0.9, 2, 3));
    });
    const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
    ASSERT_TRUE(result.failures.empty());
    ASSERT_EQ(result.masks.size(), 1u);
    EXPECT_EQ(result.masks[0].area(), 2u);
    EXPECT_DOUBLE_EQ(result.masks[0].score(), 0.9);
    EXPECT_EQ(result.masks[0].mask(), BinaryMask(2, 3, {0, 0, 1, 1, 0, 0}));
    EXPECT_EQ(seen.at("image_id"), "img");
    EXPECT_EQ(seen.at("height"), 2);
    EXPECT_EQ(seen.at("width"), 3);
    EXPECT_EQ(seen.at("points"), json::parse("[[0,1]]"));
}

TEST(HttpBackend, EndpointPathPrefixIsKept) {
    httplib::Server server;
    server.Post("/svc/v1/segment", [](const httplib::Request&, httplib::Response& res) {
        reply(res, {{"results", json::array()}});
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    const auto result =
        HttpBackend("http://127.0.0.1:" + std::to_string(port) + "/svc/").segment(kRequest);
    server.stop();
    t.join();
    EXPECT_TRUE(result.failures.empty());
    EXPECT_TRUE(result.masks.empty());
}

TEST(HttpBackend, EmptyMaskListIsNotAnError) {
    StubServer stub([](const json&, httplib::Response& res) {
        reply(res, {{"results", {{{"point_index", 0}, {"masks", json::array()}}}}});
    });
    const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
    EXPECT_TRUE(result.failures.empty());
    EXPECT_TRUE(result.masks.empty());
}

TEST(HttpBackend, CountsShortOfImageAreSizeMismatch) {
    StubServer stub([](const json&, httplib::Response& res) { reply(res, one_mask({2, 3}, 0.9, 2, 3)); });
    const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].kind, SegmentErrorKind::size_mismatch);
    EXPECT_TRUE(result.masks.empty());
}

TEST(HttpBackend, WrongRleSizeIsSizeMismatch) {
    StubServer stub([](const json&, httplib::Response& res) { reply(res, one_mask({6}, 0.9, 3, 2)); });
    const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].kind, SegmentErrorKind::size_mismatch);
}

TEST(HttpBackend, ScoreOutsideUnitIntervalIsRejected) {
    StubServer stub([](const json&, httplib::Response& res) { reply(res, one_mask({6}, 1.2, 2, 3)); });
    const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].kind, SegmentErrorKind::bad_score);
}

TEST(HttpBackend, ClientErrorStatusCarriesServerMessage) {
    StubServer stub([](const json&, httplib::Response& res) {
        res.status = 400;
        reply(res, {{"error", "point out of bounds"}});
    });
    const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].kind, SegmentErrorKind::http_status);
    EXPECT_NE(result.failures[0].message.find("point out of bounds"), std::string::npos);
    EXPECT_NE(result.failures[0].message.find("400"), std::string::npos);
}

TEST(HttpBackend, MalformedReplies) {
    for (const auto& body : std::vector<std::string>{"not json", R"({"nothing":1})",
                                   R"({"results":[{"point_index":5,"masks":[]}]})",
                                   R"({"results":[{"point_index":0,"masks":[{"score":0.5,"rle":{"size":[2],"counts":[6]}}]}]})"}) {
        StubServer stub([&](const json&, httplib::Response& res) { res.set_content(body, "application/json"); });
        const auto result = HttpBackend(stub.endpoint()).segment(kRequest);
        ASSERT_EQ(result.failures.size(), 1u) << body;
        EXPECT_EQ(result.failures[0].kind, SegmentErrorKind::malformed) << body;
    }
}

TEST(HttpBackend, RefusedConnection) {
    const int port = test_util::unused_port();
    HttpBackendOptions opts;
    opts.connect_timeout_sec = 1;
    const auto result =
        HttpBackend("http://127.0.0.1:" + std::to_string(port), opts).segment(kRequest);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].kind, SegmentErrorKind::connection);
    EXPECT_EQ(result.failures[0].first_anchor, 0u);
    EXPECT_EQ(result.failures[0].end_anchor, 1u);
}

TEST(HttpBackend, ChunksMergeInAnchorOrder) {
    // Each point gets a one-pixel mask at its own location; later chunks
    // answer faster so completion order differs from anchor order.
    StubServer stub([](const json& req, httplib::Response& res) {
        const auto h = req.at("height").get<std::size_t>(), w = req.at("width").get<std::size_t>();
        const auto& points = req.at("points");
        std::this_thread::sleep_for(std::chrono::milliseconds(5 * (20 - points[0][0].get<int>())));
        json results = json::array();
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto px = points[i][0].get<std::size_t>() * w + points[i][1].get<std::size_t>();
            results.push_back({{"point_index", i},
                               {"masks",
                                {{{"score", 0.5},
                                  {"rle", {{"size", {h, w}}, {"counts", {px, 1, h * w - px - 1}}}}}}}});
        }
        reply(res, {{"results", results}});
    });
    SegmenterRequest req{"img", 20, 4, {}};
    for (std::size_t r = 0; r < 20; ++r) req.anchors.push_back({r, r % 4});
    HttpBackendOptions opts;
    opts.chunk_size = 3;
    opts.max_in_flight = 4;
    const auto result = HttpBackend(stub.endpoint(), opts).segment(req);
    ASSERT_TRUE(result.failures.empty());
    ASSERT_EQ(result.masks.size(), 20u);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(result.masks[i].anchor_index(), i);
        EXPECT_TRUE(result.masks[i].mask().at(req.anchors[i].row, req.anchors[i].col));
        EXPECT_EQ(result.masks[i].area(), 1u);
    }
    EXPECT_EQ(stub.calls(), 7);
}

TEST(HttpBackend, PartialFailureCountsAnchors) {
    StubServer stub([](const json& req, httplib::Response& res) {
        if (req.at("points")[0][0] == 1) {
            res.status = 500;
            return;
        }
        reply(res, one_mask({8}, 0.8, 2, 4));
    });
    HttpBackendOptions opts;
    opts.chunk_size = 2;
    const SegmenterRequest req{"img", 2, 4, {{0, 0}, {0, 1}, {1, 2}, {1, 3}, {0, 3}}};
    const auto result = HttpBackend(stub.endpoint(), opts).segment(req);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].first_anchor, 2u);
    EXPECT_EQ(result.failures[0].end_anchor, 4u);
    EXPECT_EQ(result.failed_anchor_count(), 2u);
    ASSERT_EQ(result.masks.size(), 2u);
    EXPECT_EQ(result.masks[0].anchor_index(), 0u);
    EXPECT_EQ(result.masks[1].anchor_index(), 4u);
}
