// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/translation/router.hpp"

#include <sstream>

#include "nlohmann/json.hpp"

#include "masc/common/fsio.hpp"
#include "masc/common/hash.hpp"
#include "masc/common/text.hpp"

namespace masc::translation {

using ordered_json = nlohmann::ordered_json;

std::optional<ObjectAnnotation> resolve_object(
    const std::string& target, const std::vector<ObjectAnnotation>& candidates,
    const std::string& image_ref,
    const std::function<double(const ObjectAnnotation&)>& score) {
    (void)image_ref;
    std::optional<ObjectAnnotation> best;
    double best_score = 0.0;
    for (const ObjectAnnotation& cand : candidates) {
        if (cand.linked_target != target) continue;
        double s = score(cand);
        if (!best || s > best_score || (s == best_score && cand.object_id < best->object_id)) {
            best = cand;
            best_score = s;
        }
    }
    return best;
}

AuxiliaryText route_description(const std::string& image_ref,
                                const std::optional<ObjectAnnotation>& resolved,
                                FaceDetector& detector, Captioner& captioner,
                                FaceDescriber& describer, int max_tokens) {
    AuxiliaryText out;
    if (!resolved) {
        out.kind = AuxKind::kAC;
        out.text = captioner.caption(image_ref, std::nullopt);
        out.source = captioner.id();
    } else if (detector.detect(image_ref, resolved->bbox) != 0) {
        // any nonzero face count routes to the facial branch
        out.kind = AuxKind::kFD;
        out.text = describer.describe(image_ref, resolved->bbox);
        out.source = describer.id();
    } else {
        out.kind = AuxKind::kAO;
        out.text = captioner.caption(image_ref, resolved->bbox);
        out.source = captioner.id();
    }
    out.text = truncate_tokens(out.text, static_cast<std::size_t>(max_tokens));
    return out;
}

Router::Router(FaceDetector& detector, Captioner& captioner, FaceDescriber& describer,
               std::filesystem::path cache_dir, int max_tokens)
    : detector_(detector), captioner_(captioner), describer_(describer),
      dir_(std::move(cache_dir)), max_tokens_(max_tokens) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path Router::key_path(const std::string& image_ref,
                                       const std::optional<ObjectAnnotation>& resolved) const {
    std::uint64_t h = fnv1a64(image_ref);
    h = fnv1a64_combine(h, resolved ? std::to_string(resolved->object_id) : "whole");
    if (resolved) {
        std::ostringstream os;
        os << resolved->bbox.x << "," << resolved->bbox.y << ","
           << resolved->bbox.w << "," << resolved->bbox.h;
        h = fnv1a64_combine(h, os.str());
    }
    h = fnv1a64_combine(h, detector_.id());
    h = fnv1a64_combine(h, captioner_.id());
    h = fnv1a64_combine(h, describer_.id());
    return dir_ / ("aux_" + hex64(h) + ".json");
}

AuxiliaryText Router::describe(const std::string& image_ref,
                               const std::optional<ObjectAnnotation>& resolved) {
    auto path = key_path(image_ref, resolved);
    if (std::filesystem::exists(path)) {
        ++hits_;
        ordered_json j = ordered_json::parse(read_file(path));
        AuxiliaryText out;
        out.kind = aux_kind_from_name(j.at("kind").get<std::string>());
        out.text = j.at("text").get<std::string>();
        out.source = j.at("source").get<std::string>();
        return out;
    }
    ++misses_;
    AuxiliaryText out =
        route_description(image_ref, resolved, detector_, captioner_, describer_, max_tokens_);
    ordered_json j;
    j["kind"] = aux_kind_name(out.kind);
    j["text"] = out.text;
    j["source"] = out.source;
    ScopedFileLock lock(path.string() + ".lock");
    atomic_write_file(path, j.dump(2) + "\n");
    return out;
}

}  // namespace masc::translation
