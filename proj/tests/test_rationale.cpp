// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <thread>

#include "masc/common/fsio.hpp"
#include "masc/common/text.hpp"
#include "masc/rationale/client.hpp"
#include "masc/rationale/generator.hpp"
#include "masc/rationale/prompts.hpp"

// httplib must follow Eigen-including headers (resolv.h _res macro clash)
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using namespace masc::rationale;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string pool_json(std::vector<std::string> users_sr, std::vector<std::string> users_ir) {
    std::string out = R"({"version": 1, "templates": [)";
    bool first = true;
    int n = 0;
    auto add = [&](const std::string& kind, const std::string& user) {
        if (!first) out += ",";
        first = false;
        out += R"({"id": "t)" + std::to_string(n++) + R"(", "kind": ")" + kind +
               R"(", "system": "sys", "user": ")" + user + R"("})";
    };
    for (const auto& u : users_sr) add("SR", u);
    for (const auto& u : users_ir) add("IR", u);
    return out + "]}";
}

masc::data::Sample sample(const std::string& id, const std::string& target,
                          const std::string& label) {
    masc::data::Sample s;
    s.id = id;
    s.image = id + ".jpg";
    s.sentence = "a sentence about " + target;
    s.target = target;
    s.label = label;
    return s;
}

std::vector<PromptTemplate> shipped_pool() {
    return load_prompt_pool(fs::path(MASCKIT_SOURCE_DIR) / "data/prompts/pools.json");
}

}  // namespace

TEST_CASE("shipped prompt pool validates and holds four templates per kind") {
    auto pool = shipped_pool();
    int sr = 0, ir = 0;
    for (const auto& t : pool) {
        if (t.kind == PromptKind::kSR) {
            ++sr;
            CHECK(masc::contains(t.user_text, kSrStem));
        } else {
            ++ir;
        }
        CHECK(masc::contains(t.user_text, "{aspect}"));
        CHECK(masc::contains(t.user_text, "{label}"));
    }
    CHECK(sr == 4);
    CHECK(ir == 4);
}

TEST_CASE("pool validation rejects malformed templates") {
    // missing {aspect}
    CHECK_THROWS_AS(parse_prompt_pool(pool_json({}, {"about {label} only"})),
                    std::invalid_argument);
    // missing {label}
    CHECK_THROWS_AS(parse_prompt_pool(pool_json({}, {"about {aspect} only"})),
                    std::invalid_argument);
    // unknown placeholder
    CHECK_THROWS_AS(
        parse_prompt_pool(pool_json({}, {"about {aspect} {label} and {imposter}"})),
        std::invalid_argument);
    // unclosed brace
    CHECK_THROWS_AS(parse_prompt_pool(pool_json({}, {"about {aspect} {label} and {oops"})),
                    std::invalid_argument);
    // SR template without the demanded stem
    CHECK_THROWS_AS(parse_prompt_pool(pool_json({"about {aspect} and {label} only"}, {})),
                    std::invalid_argument);
    // duplicate ids
    std::string dup = R"({"version": 1, "templates": [)"
                      R"({"id": "x", "kind": "IR", "system": "s", "user": "{aspect} {label}"},)"
                      R"({"id": "x", "kind": "IR", "system": "s", "user": "{aspect} {label}"}]})";
    CHECK_THROWS_AS(parse_prompt_pool(dup), std::invalid_argument);
    // valid IR pool passes
    CHECK(parse_prompt_pool(pool_json({}, {"about {aspect} with {label}"})).size() == 1);
}

TEST_CASE("select_prompt is uniform and reproducible") {
    auto pool = shipped_pool();

    // singleton pool always yields its template
    auto single = parse_prompt_pool(pool_json({}, {"about {aspect} with {label}"}));
    for (std::uint64_t s = 0; s < 20; ++s) CHECK(select_prompt(single, PromptKind::kIR, s).id == "t0");

    // fixed seed replays the same id
    std::string first = select_prompt(pool, PromptKind::kSR, 1234).id;
    for (int i = 0; i < 100; ++i) CHECK(select_prompt(pool, PromptKind::kSR, 1234).id == first);

    // empty pool for the requested kind
    CHECK_THROWS_AS(select_prompt(single, PromptKind::kSR, 0), std::invalid_argument);

    // 10,000 draws spread within 4 sigma of uniform
    std::map<std::string, int> counts;
    for (std::uint64_t s = 0; s < 10000; ++s) ++counts[select_prompt(pool, PromptKind::kSR, s).id];
    CHECK(counts.size() == 4);
    double sigma = std::sqrt(10000.0 * 0.25 * 0.75);
    for (const auto& [id, c] : counts) {
        INFO("template ", id, " count ", c);
        CHECK(std::abs(c - 2500.0) <= 4.0 * sigma);
    }
}

TEST_CASE("render_prompt substitutes placeholders exactly once") {
    auto pool = shipped_pool();
    const PromptTemplate* core = nullptr;
    for (const auto& t : pool)
        if (t.id == "sr-core") core = &t;
    REQUIRE(core != nullptr);

    auto r = render_prompt(*core, "St. Bede", "neutral");
    CHECK(masc::contains(r.user_text, "St. Bede"));
    CHECK(masc::contains(r.user_text, "neutral"));
    CHECK(!masc::contains(r.user_text, "{aspect}"));
    CHECK(!masc::contains(r.user_text, "{label}"));
    CHECK(masc::contains(
        r.user_text,
        "Based on the image-text pair, the sentiment towards St. Bede is neutral because"));

    // placeholder-shaped text inside the aspect value stays literal
    auto adv = render_prompt(*core, "{label}", "positive");
    CHECK(masc::contains(adv.user_text, "the sentiment towards {label} is positive because"));

    CHECK_THROWS_AS(render_prompt(*core, "x", "happy"), std::invalid_argument);
}

TEST_CASE("mock client echoes the template id and obeys the stem") {
    auto pool = shipped_pool();
    MockLlmClient mock(pool);
    const PromptTemplate& sr = select_prompt(pool, PromptKind::kSR, 7);
    auto r = render_prompt(sr, "Messi", "positive");
    std::string text = mock.complete(r.system_text, r.user_text, std::nullopt);
    CHECK(masc::contains(text, "[" + sr.id + "]"));
    CHECK(text.rfind("Based on the image-text pair, the sentiment towards Messi is positive because",
                     0) == 0);
    CHECK(mock.calls() == 1);

    const PromptTemplate& ir = select_prompt(pool, PromptKind::kIR, 7);
    auto ri = render_prompt(ir, "Messi", "positive");
    std::string ir_text = mock.complete(ri.system_text, ri.user_text, std::nullopt);
    CHECK(masc::contains(ir_text, "[" + ir.id + "]"));

    mock.fail_next(1);
    CHECK_THROWS(mock.complete(r.system_text, r.user_text, std::nullopt));
}

TEST_CASE("generate_rationales produces one record per sample from the mock") {
    fs::path dir = fresh_dir("masckit_rat_basic");
    auto pool = shipped_pool();
    MockLlmClient mock(pool);
    std::vector<masc::data::Sample> ds = {sample("s1", "Messi", "positive"),
                                          sample("s2", "the rain", "negative"),
                                          sample("s3", "a museum", "neutral")};
    GeneratorConfig cfg;
    cfg.backoff = [](int) {};

    auto empty = generate_rationales({}, pool, mock, dir, cfg);
    CHECK(empty.records.empty());
    CHECK(empty.failures.empty());
    CHECK(mock.calls() == 0);

    auto res = generate_rationales(ds, pool, mock, dir, cfg);
    REQUIRE(res.records.size() == 3);
    CHECK(res.failures.empty());
    CHECK(res.complete());
    CHECK(mock.calls() == 6);  // one SR and one IR call per sample
    CHECK(res.client_calls == 6);
    CHECK(res.cache_hits == 0);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& r = res.records[i];
        CHECK(r.sample_id == ds[i].id);  // sorted by sample_id
        CHECK(!r.sr_text.empty());
        CHECK(!r.ir_text.empty());
        CHECK(masc::contains(r.sr_text, "[" + r.sr_prompt_id + "]"));
        CHECK(masc::contains(r.ir_text, "[" + r.ir_prompt_id + "]"));
        CHECK(r.model_id == "mock-llm");
        CHECK(r.cache_key.size() == 16);
        // obedient mock opens SR with the rendered stem
        std::string stem = "Based on the image-text pair, the sentiment towards " +
                           ds[i].target + " is " + ds[i].label + " because";
        CHECK(r.sr_text.rfind(stem, 0) == 0);
    }
    fs::remove_all(dir);
}

TEST_CASE("generation is idempotent and resumes from the durable cache") {
    fs::path dir = fresh_dir("masckit_rat_cache");
    fs::path out1 = dir / "run1.jsonl";
    fs::path out2 = dir / "run2.jsonl";
    fs::path cache = dir / "cache";
    auto pool = shipped_pool();
    MockLlmClient mock(pool);
    std::vector<masc::data::Sample> ds;
    for (int i = 0; i < 6; ++i)
        ds.push_back(sample("s" + std::to_string(i), "target" + std::to_string(i),
                            i % 2 ? "positive" : "negative"));
    GeneratorConfig cfg;
    cfg.backoff = [](int) {};

    auto first = generate_rationales(ds, pool, mock, cache, cfg);
    int calls_after_first = mock.calls();
    CHECK(calls_after_first == 12);
    write_records(out1, first.records);

    auto second = generate_rationales(ds, pool, mock, cache, cfg);
    CHECK(mock.calls() == calls_after_first);  // zero client calls on rerun
    CHECK(second.cache_hits == 12);
    write_records(out2, second.records);
    CHECK(masc::read_file(out1) == masc::read_file(out2));

    // deleting exactly one cache entry costs exactly one client call
    std::string key = rationale_cache_key(ds[2].id, first.records[2].ir_prompt_id, "mock-llm");
    REQUIRE(fs::remove(cache / ("r_" + key + ".json")));
    auto third = generate_rationales(ds, pool, mock, cache, cfg);
    CHECK(mock.calls() == calls_after_first + 1);
    write_records(out2, third.records);
    CHECK(masc::read_file(out1) == masc::read_file(out2));

    // round trip of the record file
    auto back = read_records(out1);
    REQUIRE(back.size() == first.records.size());
    CHECK(back[0].sr_text == first.records[0].sr_text);
    CHECK(back[5].cache_key == first.records[5].cache_key);
    fs::remove_all(dir);
}

TEST_CASE("parallel generation matches the serial records byte for byte") {
    fs::path dir = fresh_dir("masckit_rat_par");
    auto pool = shipped_pool();
    std::vector<masc::data::Sample> ds;
    for (int i = 0; i < 16; ++i)
        ds.push_back(sample("p" + std::to_string(i), "t" + std::to_string(i), "neutral"));

    MockLlmClient serial_mock(pool);
    GeneratorConfig serial_cfg;
    serial_cfg.parallelism = 1;
    serial_cfg.backoff = [](int) {};
    auto serial = generate_rationales(ds, pool, serial_mock, dir / "serial", serial_cfg);

    MockLlmClient par_mock(pool);
    GeneratorConfig par_cfg;
    par_cfg.parallelism = 4;
    par_cfg.backoff = [](int) {};
    auto par = generate_rationales(ds, pool, par_mock, dir / "par", par_cfg);

    fs::path a = dir / "serial.jsonl", b = dir / "par.jsonl";
    write_records(a, serial.records);
    write_records(b, par.records);
    CHECK(masc::read_file(a) == masc::read_file(b));
    CHECK(par_mock.calls() == 32);
    fs::remove_all(dir);
}

TEST_CASE("failures are retried, recorded, and do not stop the run") {
    fs::path dir = fresh_dir("masckit_rat_fail");
    auto pool = shipped_pool();
    std::vector<masc::data::Sample> ds = {sample("a1", "x", "positive"),
                                          sample("a2", "y", "negative")};
    GeneratorConfig cfg;
    cfg.parallelism = 1;
    cfg.backoff = [](int) {};
    std::vector<int> backoff_attempts;
    cfg.backoff = [&](int attempt) { backoff_attempts.push_back(attempt); };

    // first sample's first completion fails through all retries
    MockLlmClient mock(pool);
    mock.fail_next(3);
    auto res = generate_rationales(ds, pool, mock, dir, cfg);
    CHECK(res.records.size() == 1);
    CHECK(res.records[0].sample_id == "a2");
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].sample_id == "a1");
    CHECK(!res.complete());
    CHECK(backoff_attempts == std::vector<int>{1, 2});  // two waits, three attempts

    // rerun with a healthy client finishes only the missing work
    MockLlmClient healthy(pool);
    auto resumed = generate_rationales(ds, pool, healthy, dir, cfg);
    CHECK(resumed.complete());
    CHECK(resumed.records.size() == 2);
    CHECK(healthy.calls() == 2);  // a1's SR and IR; a2 came from cache
    CHECK(resumed.cache_hits == 2);

    // one transient failure is absorbed by a retry
    fs::remove_all(dir);
    fs::create_directories(dir);
    MockLlmClient flaky(pool);
    flaky.fail_next(1);
    auto ok = generate_rationales(ds, pool, flaky, dir, cfg);
    CHECK(ok.complete());
    CHECK(flaky.calls() == 5);  // 4 completions + 1 retried failure
    fs::remove_all(dir);
}

TEST_CASE("http client speaks the llm wire contract") {
    httplib::Server server;
    std::atomic<int> requests{0};
    server.Post("/complete", [&](const httplib::Request& req, httplib::Response& res) {
        ++requests;
        auto j = nlohmann::ordered_json::parse(req.body);
        std::string user = j.at("user").get<std::string>();
        std::string reply = "srv:" + j.at("system").get<std::string>() + ":" +
                            user.substr(0, 8) + (j.contains("image") ? ":img" : "");
        res.set_content(encode_llm_response(reply), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread serve([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpLlmClient client("127.0.0.1", port, "/complete", "test-model");
    CHECK(client.model_id() == "test-model");
    CHECK(client.complete("sys", "usertext here", std::nullopt) == "srv:sys:usertext");
    CHECK(client.complete("sys", "usertext here", std::string("abc")) == "srv:sys:usertext:img");
    CHECK(requests == 2);

    server.stop();
    serve.join();
    CHECK_THROWS(client.complete("sys", "user", std::nullopt));
}
