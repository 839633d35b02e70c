// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Object resolution and description routing: no object -> whole-image
// aesthetic caption; object with a face -> facial description; object
// without a face -> aesthetic caption of the crop. Results cache to disk as
// one JSON record per (image, object, providers) key.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "masc/translation/providers.hpp"
#include "masc/translation/types.hpp"

namespace masc::translation {

// Highest-similarity candidate among those linked to the target; ties go to
// the lowest object id. none when nothing is linked.
std::optional<ObjectAnnotation> resolve_object(
    const std::string& target, const std::vector<ObjectAnnotation>& candidates,
    const std::string& image_ref,
    const std::function<double(const ObjectAnnotation&)>& score);

// One auxiliary text per call; kind is a pure function of (object presence,
// detector bit). Provider failures propagate as ProviderError.
AuxiliaryText route_description(const std::string& image_ref,
                                const std::optional<ObjectAnnotation>& resolved,
                                FaceDetector& detector, Captioner& captioner,
                                FaceDescriber& describer, int max_tokens = 50);

// Durable routing cache. Replaying a cached key returns byte-identical text
// with no provider calls.
class Router {
public:
    Router(FaceDetector& detector, Captioner& captioner, FaceDescriber& describer,
           std::filesystem::path cache_dir, int max_tokens = 50);

    AuxiliaryText describe(const std::string& image_ref,
                           const std::optional<ObjectAnnotation>& resolved);

    std::size_t cache_hits() const { return hits_; }
    std::size_t cache_misses() const { return misses_; }

private:
    std::filesystem::path key_path(const std::string& image_ref,
                                   const std::optional<ObjectAnnotation>& resolved) const;

    FaceDetector& detector_;
    Captioner& captioner_;
    FaceDescriber& describer_;
    std::filesystem::path dir_;
    int max_tokens_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

}  // namespace masc::translation
