// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/features/provider.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "masc/common/fsio.hpp"
#include "masc/common/hash.hpp"
#include "masc/common/random.hpp"
#include "masc/common/text.hpp"

namespace masc::features {

namespace {

// float32-exact uniform in [-1, 1]
double f32_uniform(RandomStream& rng) {
    return static_cast<double>(static_cast<float>(rng.uniform_in(-1.0, 1.0)));
}

lsa::Mat f32_matrix(int rows, int cols, RandomStream& rng) {
    lsa::Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = f32_uniform(rng);
    return m;
}

}  // namespace

SyntheticFeatureProvider::SyntheticFeatureProvider(int dim, std::uint64_t seed, int min_patches,
                                                   int max_patches)
    : dim_(dim), seed_(seed), min_patches_(min_patches), max_patches_(max_patches) {
    if (dim < 1) throw std::invalid_argument("SyntheticFeatureProvider: dim must be positive");
    if (min_patches < 2 || max_patches < min_patches)
        throw std::invalid_argument("SyntheticFeatureProvider: bad patch range");
}

lsa::PatchFeatures SyntheticFeatureProvider::image_features(const std::string& image_ref) {
    std::uint64_t h = fnv1a64_combine(fnv1a64_combine(seed_, "image"), image_ref);
    RandomStream rng(h);
    int span = max_patches_ - min_patches_ + 1;
    int n = min_patches_ + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
    lsa::PatchFeatures out;
    lsa::Mat all = f32_matrix(n + 1, dim_, rng);
    out.cls = all.row(0).transpose();
    out.patches = all.bottomRows(n);
    return out;
}

lsa::TokenFeatures SyntheticFeatureProvider::text_features(const std::string& sentence) {
    std::uint64_t h = fnv1a64_combine(fnv1a64_combine(seed_, "text"), sentence);
    RandomStream rng(h);
    int n = std::max<int>(1, static_cast<int>(token_count(sentence)));
    lsa::TokenFeatures out;
    lsa::Mat all = f32_matrix(n + 1, dim_, rng);
    out.global = all.row(0).transpose();
    out.tokens = all.bottomRows(n);
    return out;
}

CachingFeatureProvider::CachingFeatureProvider(FeatureProvider& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path CachingFeatureProvider::path_for(const std::string& kind,
                                                       const std::string& ref) const {
    std::uint64_t h = fnv1a64_combine(fnv1a64(kind), ref);
    return dir_ / (kind + "_" + hex64(h) + ".feat");
}

lsa::PatchFeatures CachingFeatureProvider::image_features(const std::string& image_ref) {
    auto p = path_for("image", image_ref);
    if (std::filesystem::exists(p)) {
        ++hits_;
        lsa::Mat all = read_feature_matrix(p);
        lsa::PatchFeatures out;
        out.cls = all.row(0).transpose();
        out.patches = all.bottomRows(all.rows() - 1);
        return out;
    }
    ++misses_;
    lsa::PatchFeatures fresh = inner_.image_features(image_ref);
    lsa::Mat all(fresh.patches.rows() + 1, fresh.patches.cols());
    all.row(0) = fresh.cls.transpose();
    all.bottomRows(fresh.patches.rows()) = fresh.patches;
    write_feature_matrix(p, all);
    return fresh;
}

lsa::TokenFeatures CachingFeatureProvider::text_features(const std::string& sentence) {
    auto p = path_for("text", sentence);
    if (std::filesystem::exists(p)) {
        ++hits_;
        lsa::Mat all = read_feature_matrix(p);
        lsa::TokenFeatures out;
        out.global = all.row(0).transpose();
        out.tokens = all.bottomRows(all.rows() - 1);
        return out;
    }
    ++misses_;
    lsa::TokenFeatures fresh = inner_.text_features(sentence);
    lsa::Mat all(fresh.tokens.rows() + 1, fresh.tokens.cols());
    all.row(0) = fresh.global.transpose();
    all.bottomRows(fresh.tokens.rows()) = fresh.tokens;
    write_feature_matrix(p, all);
    return fresh;
}

void write_feature_matrix(const std::filesystem::path& path, const lsa::Mat& m) {
    std::uint32_t n = static_cast<std::uint32_t>(m.rows());
    std::uint32_t d = static_cast<std::uint32_t>(m.cols());
    std::string buf;
    buf.resize(8 + static_cast<std::size_t>(n) * d * 4);
    std::memcpy(buf.data(), &n, 4);
    std::memcpy(buf.data() + 4, &d, 4);
    std::size_t off = 8;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            float f = static_cast<float>(m(i, j));
            std::memcpy(buf.data() + off, &f, 4);
            off += 4;
        }
    }
    atomic_write_file(path, buf);
}

lsa::Mat read_feature_matrix(const std::filesystem::path& path) {
    std::string buf = read_file(path);
    if (buf.size() < 8) throw std::runtime_error("feature file truncated: " + path.string());
    std::uint32_t n = 0, d = 0;
    std::memcpy(&n, buf.data(), 4);
    std::memcpy(&d, buf.data() + 4, 4);
    std::size_t need = 8 + static_cast<std::size_t>(n) * d * 4;
    if (buf.size() != need) throw std::runtime_error("feature file size mismatch: " + path.string());
    lsa::Mat m(n, d);
    std::size_t off = 8;
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j) {
            float f;
            std::memcpy(&f, buf.data() + off, 4);
            off += 4;
            m(i, j) = static_cast<double>(f);
        }
    }
    return m;
}

}  // namespace masc::features
