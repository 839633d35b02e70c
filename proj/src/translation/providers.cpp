// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/translation/providers.hpp"

#include <sstream>

#include "httplib.h"
#include "nlohmann/json.hpp"

#include "masc/common/hash.hpp"

namespace masc::translation {

using ordered_json = nlohmann::ordered_json;

const char* aux_kind_name(AuxKind k) {
    switch (k) {
        case AuxKind::kAC: return "AC";
        case AuxKind::kFD: return "FD";
        case AuxKind::kAO: return "AO";
    }
    return "AC";
}

AuxKind aux_kind_from_name(const std::string& name) {
    if (name == "AC") return AuxKind::kAC;
    if (name == "FD") return AuxKind::kFD;
    if (name == "AO") return AuxKind::kAO;
    throw std::invalid_argument("unknown auxiliary text kind: " + name);
}

namespace {

std::string crop_suffix(const std::optional<CropBox>& crop) {
    if (!crop) return "";
    std::ostringstream os;
    os << ":crop:" << crop->x << "," << crop->y << "," << crop->w << "," << crop->h;
    return os.str();
}

}  // namespace

std::string MockCaptioner::caption(const std::string& image_ref,
                                   const std::optional<CropBox>& crop) {
    calls.push_back({image_ref, crop});
    if (fail_next > 0) {
        --fail_next;
        throw ProviderError(id(), "injected failure");
    }
    return "caption:" + image_ref + crop_suffix(crop);
}

MockFaceDetector::MockFaceDetector(std::map<std::string, int> verdicts)
    : verdicts_(std::move(verdicts)) {}

int MockFaceDetector::detect(const std::string& image_ref, const CropBox& crop) {
    calls.push_back({image_ref, crop});
    auto it = verdicts_.find(image_ref);
    if (it != verdicts_.end()) return it->second;
    return static_cast<int>(fnv1a64(image_ref) & 1u);
}

std::string MockFaceDescriber::describe(const std::string& image_ref, const CropBox& crop) {
    calls.push_back({image_ref, crop});
    if (fail_next > 0) {
        --fail_next;
        throw ProviderError(id(), "injected failure");
    }
    return "face:" + image_ref + crop_suffix(std::optional<CropBox>(crop));
}

double TableSimilarityScorer::score_object(const ObjectAnnotation& obj) const {
    auto it = table_.find(obj.object_id);
    return it == table_.end() ? 0.0 : it->second;
}

double FeatureSimilarityScorer::score(const std::string& image_ref, const CropBox& crop) {
    std::ostringstream os;
    os << image_ref << "#" << crop.x << "," << crop.y << "," << crop.w << "," << crop.h;
    Eigen::VectorXd a = embed_(image_ref);
    Eigen::VectorXd b = embed_(os.str());
    double den = a.norm() * b.norm();
    return den == 0.0 ? 0.0 : a.dot(b) / den;
}

std::string encode_wire_request(const WireRequest& req) {
    ordered_json j;
    j["image_ref"] = req.image_ref;
    if (req.crop) j["crop"] = {{"x", req.crop->x}, {"y", req.crop->y},
                               {"w", req.crop->w}, {"h", req.crop->h}};
    j["mode"] = req.mode;
    return j.dump();
}

WireRequest decode_wire_request(const std::string& body) {
    ordered_json j = ordered_json::parse(body);
    WireRequest req;
    req.image_ref = j.at("image_ref").get<std::string>();
    if (j.contains("crop")) {
        CropBox c;
        c.x = j["crop"].at("x").get<double>();
        c.y = j["crop"].at("y").get<double>();
        c.w = j["crop"].at("w").get<double>();
        c.h = j["crop"].at("h").get<double>();
        req.crop = c;
    }
    req.mode = j.at("mode").get<std::string>();
    return req;
}

std::string encode_wire_response(const std::string& text) {
    ordered_json j;
    j["text"] = text;
    return j.dump();
}

std::string decode_wire_response(const std::string& body) {
    return ordered_json::parse(body).at("text").get<std::string>();
}

RemoteVisionProvider::RemoteVisionProvider(std::string host, int port, std::string path)
    : host_(std::move(host)), port_(port), path_(std::move(path)) {}

std::string RemoteVisionProvider::id() const {
    return "remote:" + host_ + ":" + std::to_string(port_);
}

std::string RemoteVisionProvider::post(const WireRequest& req) {
    httplib::Client client(host_, port_);
    auto res = client.Post(path_, encode_wire_request(req), "application/json");
    if (!res) throw ProviderError(id(), "transport failure");
    if (res->status != 200)
        throw ProviderError(id(), "status " + std::to_string(res->status));
    return decode_wire_response(res->body);
}

int RemoteVisionProvider::detect(const std::string& image_ref, const CropBox& crop) {
    std::string text = post({image_ref, crop, "face_detect"});
    if (text == "0") return 0;
    if (text == "1") return 1;
    throw ProviderError(id(), "non-binary detector response: " + text);
}

std::string RemoteVisionProvider::caption(const std::string& image_ref,
                                          const std::optional<CropBox>& crop) {
    return post({image_ref, crop, "caption"});
}

std::string RemoteVisionProvider::describe(const std::string& image_ref, const CropBox& crop) {
    return post({image_ref, crop, "face_describe"});
}

}  // namespace masc::translation
