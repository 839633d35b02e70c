// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Feature providers hand the alignment pipeline its visual and linguistic
// features. Real encoder adapters implement the same interface; the
// synthetic provider is the deterministic test default. Matrices cache to
// disk as row-major float32 with a (N, d) header; row 0 carries the
// global (cls / pooled sentence) vector.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "masc/lsa/types.hpp"

namespace masc::features {

class FeatureProvider {
public:
    virtual ~FeatureProvider() = default;
    virtual lsa::PatchFeatures image_features(const std::string& image_ref) = 0;
    virtual lsa::TokenFeatures text_features(const std::string& sentence) = 0;
    virtual int dim() const = 0;
};

// Seeded random features: stable across runs and platforms, one patch row
// per hashed patch slot, one token row per whitespace token. Values are
// exactly representable in float32 so a disk round trip is lossless.
class SyntheticFeatureProvider : public FeatureProvider {
public:
    SyntheticFeatureProvider(int dim, std::uint64_t seed, int min_patches = 4,
                             int max_patches = 8);

    lsa::PatchFeatures image_features(const std::string& image_ref) override;
    lsa::TokenFeatures text_features(const std::string& sentence) override;
    int dim() const override { return dim_; }

private:
    int dim_;
    std::uint64_t seed_;
    int min_patches_;
    int max_patches_;
};

// Write-through disk cache around any provider. Files are content-addressed
// by (kind, ref) and written atomically.
class CachingFeatureProvider : public FeatureProvider {
public:
    CachingFeatureProvider(FeatureProvider& inner, std::filesystem::path dir);

    lsa::PatchFeatures image_features(const std::string& image_ref) override;
    lsa::TokenFeatures text_features(const std::string& sentence) override;
    int dim() const override { return inner_.dim(); }

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    std::filesystem::path path_for(const std::string& kind, const std::string& ref) const;

    FeatureProvider& inner_;
    std::filesystem::path dir_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

// Feature-matrix codec: [u32 N][u32 d][N*d little-endian float32 row-major].
void write_feature_matrix(const std::filesystem::path& path, const lsa::Mat& m);
lsa::Mat read_feature_matrix(const std::filesystem::path& path);

}  // namespace masc::features
