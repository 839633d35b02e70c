// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <filesystem>

#include "masc/common/random.hpp"
#include "masc/features/provider.hpp"

namespace fs = std::filesystem;
using namespace masc::features;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CountingProvider : FeatureProvider {
    explicit CountingProvider(FeatureProvider& inner) : inner(inner) {}
    masc::lsa::PatchFeatures image_features(const std::string& ref) override {
        ++image_calls;
        return inner.image_features(ref);
    }
    masc::lsa::TokenFeatures text_features(const std::string& s) override {
        ++text_calls;
        return inner.text_features(s);
    }
    int dim() const override { return inner.dim(); }

    FeatureProvider& inner;
    int image_calls = 0;
    int text_calls = 0;
};

}  // namespace

TEST_CASE("synthetic features are deterministic and well-shaped") {
    SyntheticFeatureProvider a(8, 42), b(8, 42), c(8, 43);
    auto fa = a.image_features("img1.jpg");
    auto fb = b.image_features("img1.jpg");
    auto fc = c.image_features("img1.jpg");
    CHECK(fa.patches == fb.patches);
    CHECK(fa.cls == fb.cls);
    CHECK(fa.patches != fc.patches);  // seed changes features
    CHECK(fa.n() >= 4);
    CHECK(fa.n() <= 8);
    CHECK(fa.dim() == 8);
    CHECK(fa.patches.allFinite());
    CHECK(fa.patches.cwiseAbs().maxCoeff() <= 1.0);

    auto d1 = a.image_features("img2.jpg");
    CHECK(fa.patches != d1.patches);

    auto t1 = a.text_features("a little sentence here");
    CHECK(t1.n() == 4);
    CHECK(t1.dim() == 8);
    auto t2 = a.text_features("");
    CHECK(t2.n() == 1);  // empty text still yields one token row
}

TEST_CASE("feature matrix codec round trips exactly") {
    masc::RandomStream rng(7);
    masc::lsa::Mat m(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j)
            m(i, j) = static_cast<double>(static_cast<float>(rng.uniform_in(-2.0, 2.0)));
    fs::path dir = fresh_dir("masckit_feat_codec");
    write_feature_matrix(dir / "m.feat", m);
    masc::lsa::Mat back = read_feature_matrix(dir / "m.feat");
    CHECK(back == m);  // float32-exact inputs survive the float32 codec untouched
    fs::remove_all(dir);
}

TEST_CASE("caching provider serves identical features without recomputing") {
    fs::path dir = fresh_dir("masckit_feat_cache");
    SyntheticFeatureProvider synth(6, 11);
    CountingProvider counted(synth);
    CachingFeatureProvider cached(counted, dir);

    auto first = cached.image_features("x.jpg");
    auto again = cached.image_features("x.jpg");
    CHECK(counted.image_calls == 1);
    CHECK(cached.hits() == 1);
    CHECK(cached.misses() == 1);
    CHECK(first.patches == again.patches);
    CHECK(first.cls == again.cls);

    auto t_first = cached.text_features("hello world");
    auto t_again = cached.text_features("hello world");
    CHECK(counted.text_calls == 1);
    CHECK(t_first.tokens == t_again.tokens);
    CHECK(t_first.global == t_again.global);

    // a second cache instance over the same directory reads the same bytes
    CountingProvider counted2(synth);
    CachingFeatureProvider cached2(counted2, dir);
    auto warm = cached2.image_features("x.jpg");
    CHECK(counted2.image_calls == 0);
    CHECK(warm.patches == first.patches);
    fs::remove_all(dir);
}
