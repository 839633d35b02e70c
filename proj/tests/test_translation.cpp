// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <thread>

#include "masc/common/fsio.hpp"
#include "masc/common/text.hpp"
#include "masc/translation/providers.hpp"
#include "masc/translation/router.hpp"

// httplib drags in resolv.h whose _res macro mangles Eigen internals, so it
// must come after any header that includes Eigen.
#include "httplib.h"

namespace fs = std::filesystem;
using namespace masc::translation;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ObjectAnnotation obj(int id, const std::string& target, double x = 1, double y = 2,
                     double w = 3, double h = 4) {
    ObjectAnnotation o;
    o.object_id = id;
    o.bbox = {x, y, w, h};
    o.linked_target = target;
    return o;
}

}  // namespace

TEST_CASE("resolve_object picks the highest-similarity linked candidate") {
    std::vector<ObjectAnnotation> cands = {obj(3, "Messi"), obj(1, "Ronaldo"), obj(2, "Messi")};
    TableSimilarityScorer table({{3, 0.2}, {1, 0.95}, {2, 0.9}});
    auto score = [&](const ObjectAnnotation& o) { return table.score_object(o); };

    auto r = resolve_object("Messi", cands, "img.jpg", score);
    REQUIRE(r.has_value());
    CHECK(r->object_id == 2);

    CHECK_FALSE(resolve_object("Neymar", cands, "img.jpg", score).has_value());
    CHECK_FALSE(resolve_object("Messi", {}, "img.jpg", score).has_value());

    auto single = resolve_object("Ronaldo", cands, "img.jpg", score);
    REQUIRE(single.has_value());
    CHECK(single->object_id == 1);
}

TEST_CASE("resolve_object breaks score ties toward the lower object id") {
    std::vector<ObjectAnnotation> cands = {obj(7, "t"), obj(5, "t"), obj(9, "t")};
    TableSimilarityScorer table({{7, 0.9}, {5, 0.9}, {9, 0.2}});
    auto r = resolve_object("t", cands, "img.jpg",
                            [&](const ObjectAnnotation& o) { return table.score_object(o); });
    REQUIRE(r.has_value());
    CHECK(r->object_id == 5);

    // negative scores still beat "no candidate"
    TableSimilarityScorer neg({{7, -0.5}, {5, -0.1}, {9, -0.9}});
    auto rn = resolve_object("t", cands, "img.jpg",
                             [&](const ObjectAnnotation& o) { return neg.score_object(o); });
    REQUIRE(rn.has_value());
    CHECK(rn->object_id == 5);
}

TEST_CASE("route_description maps presence and detector bit to the kind") {
    MockFaceDetector detector({{"face.jpg", 1}, {"scene.jpg", 0}, {"crowd.jpg", 2}});
    MockCaptioner captioner;
    MockFaceDescriber describer;

    auto ac = route_description("face.jpg", std::nullopt, detector, captioner, describer);
    CHECK(ac.kind == AuxKind::kAC);
    CHECK(ac.text == "caption:face.jpg");
    CHECK(ac.source == "mock-captioner");
    CHECK(detector.calls.empty());  // no object, no detection

    auto fd = route_description("face.jpg", obj(1, "t"), detector, captioner, describer);
    CHECK(fd.kind == AuxKind::kFD);
    CHECK(fd.text == "face:face.jpg:crop:1,2,3,4");
    CHECK(fd.source == "mock-describer");

    auto ao = route_description("scene.jpg", obj(1, "t", 5, 6, 7, 8), detector, captioner,
                                describer);
    CHECK(ao.kind == AuxKind::kAO);
    CHECK(ao.text == "caption:scene.jpg:crop:5,6,7,8");
    CHECK(ao.source == "mock-captioner");
    // the crop itself reached the captioner, not the whole image
    REQUIRE(captioner.calls.size() == 2);
    REQUIRE(captioner.calls[1].crop.has_value());
    CHECK(captioner.calls[1].crop->x == 5);
    CHECK(captioner.calls[1].crop->h == 8);
    CHECK_FALSE(captioner.calls[0].crop.has_value());

    // multiple detected faces still route to the facial branch
    auto multi = route_description("crowd.jpg", obj(4, "t"), detector, captioner, describer);
    CHECK(multi.kind == AuxKind::kFD);
}

TEST_CASE("route_description truncates to the token budget") {
    MockFaceDetector detector({{"long.jpg", 0}});
    MockCaptioner captioner;
    MockFaceDescriber describer;
    std::string long_ref;
    for (int i = 0; i < 80; ++i) long_ref += "w" + std::to_string(i) + " ";
    long_ref += "tail";

    auto out = route_description(long_ref, std::nullopt, detector, captioner, describer, 50);
    CHECK(masc::split_ws(out.text).size() == 50);

    auto tight = route_description(long_ref, std::nullopt, detector, captioner, describer, 3);
    CHECK(masc::split_ws(tight.text).size() == 3);
}

TEST_CASE("provider failures surface with the provider id") {
    MockFaceDetector detector({{"img.jpg", 0}});
    MockCaptioner captioner;
    MockFaceDescriber describer;
    captioner.fail_next = 1;

    try {
        route_description("img.jpg", obj(1, "t"), detector, captioner, describer);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.provider_id() == "mock-captioner");
    }

    MockFaceDetector face_yes({{"img.jpg", 1}});
    describer.fail_next = 1;
    try {
        route_description("img.jpg", obj(1, "t"), face_yes, captioner, describer);
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.provider_id() == "mock-describer");
    }
}

TEST_CASE("router caches one record per key and replays byte-identically") {
    fs::path dir = fresh_dir("masckit_router_cache");
    MockFaceDetector detector({{"a.jpg", 1}, {"b.jpg", 0}});
    MockCaptioner captioner;
    MockFaceDescriber describer;
    Router router(detector, captioner, describer, dir);

    auto r1 = router.describe("a.jpg", obj(1, "t"));
    auto r2 = router.describe("b.jpg", std::nullopt);
    auto r3 = router.describe("b.jpg", obj(2, "u", 9, 9, 2, 2));
    CHECK(router.cache_misses() == 3);
    CHECK(router.cache_hits() == 0);
    std::size_t captioner_calls = captioner.calls.size();
    std::size_t describer_calls = describer.calls.size();

    auto record_bytes = [&dir] {
        std::vector<fs::path> paths;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".json") paths.push_back(entry.path());
        std::sort(paths.begin(), paths.end());
        std::vector<std::string> out;
        for (const auto& p : paths) out.push_back(masc::read_file(p));
        return out;
    };
    std::vector<std::string> bytes = record_bytes();
    CHECK(bytes.size() == 3);

    auto c1 = router.describe("a.jpg", obj(1, "t"));
    auto c2 = router.describe("b.jpg", std::nullopt);
    auto c3 = router.describe("b.jpg", obj(2, "u", 9, 9, 2, 2));
    CHECK(router.cache_hits() == 3);
    CHECK(captioner.calls.size() == captioner_calls);  // zero provider calls on replay
    CHECK(describer.calls.size() == describer_calls);
    CHECK(c1.text == r1.text);
    CHECK(c1.kind == r1.kind);
    CHECK(c1.source == r1.source);
    CHECK(c2.text == r2.text);
    CHECK(c3.text == r3.text);

    CHECK(record_bytes() == bytes);

    // a fresh router over the same directory replays from disk too
    MockCaptioner cold_captioner;
    MockFaceDescriber cold_describer;
    Router cold(detector, cold_captioner, cold_describer, dir);
    auto cold1 = cold.describe("a.jpg", obj(1, "t"));
    CHECK(cold.cache_hits() == 1);
    CHECK(cold_captioner.calls.empty());
    CHECK(cold_describer.calls.empty());
    CHECK(cold1.text == r1.text);
    fs::remove_all(dir);
}

TEST_CASE("wire codec round trips requests and responses") {
    WireRequest with_crop{"img.jpg", CropBox{1.5, 2.0, 3.25, 4.0}, "face_describe"};
    WireRequest whole{"scene.png", std::nullopt, "caption"};

    auto back = decode_wire_request(encode_wire_request(with_crop));
    CHECK(back.image_ref == "img.jpg");
    REQUIRE(back.crop.has_value());
    CHECK(back.crop->x == 1.5);
    CHECK(back.crop->w == 3.25);
    CHECK(back.mode == "face_describe");

    auto back2 = decode_wire_request(encode_wire_request(whole));
    CHECK(back2.image_ref == "scene.png");
    CHECK_FALSE(back2.crop.has_value());
    CHECK(back2.mode == "caption");

    CHECK(decode_wire_response(encode_wire_response("a smiling crowd")) == "a smiling crowd");
}

TEST_CASE("remote provider speaks the wire contract end to end") {
    httplib::Server server;
    std::atomic<int> requests{0};
    server.Post("/translate", [&](const httplib::Request& req, httplib::Response& res) {
        ++requests;
        WireRequest wire = decode_wire_request(req.body);
        std::string text;
        if (wire.mode == "caption") {
            text = "remote caption of " + wire.image_ref;
        } else if (wire.mode == "face_detect") {
            text = wire.image_ref == "face.jpg" ? "1" : "0";
        } else if (wire.mode == "face_describe") {
            text = "remote face in " + wire.image_ref;
        } else {
            res.status = 400;
            return;
        }
        res.set_content(encode_wire_response(text), "application/json");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread serve([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RemoteVisionProvider remote("127.0.0.1", port);
    CHECK(remote.caption("x.jpg", std::nullopt) == "remote caption of x.jpg");
    CHECK(remote.detect("face.jpg", CropBox{0, 0, 1, 1}) == 1);
    CHECK(remote.detect("scene.jpg", CropBox{0, 0, 1, 1}) == 0);
    CHECK(remote.describe("face.jpg", CropBox{0, 0, 1, 1}) == "remote face in face.jpg");
    CHECK(requests == 4);
    CHECK(remote.id() == "remote:127.0.0.1:" + std::to_string(port));

    server.stop();
    serve.join();

    RemoteVisionProvider dead("127.0.0.1", port);
    CHECK_THROWS_AS(dead.caption("x.jpg", std::nullopt), ProviderError);
}
