// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Pluggable vision providers. Real captioner / face models attach over the
// HTTP wire contract; the mocks are the deterministic test doubles.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "masc/translation/types.hpp"

namespace masc::translation {

// Binary facial gate on a crop. Ambiguous detections count as 1.
class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    virtual int detect(const std::string& image_ref, const CropBox& crop) = 0;
    virtual std::string id() const = 0;
};

// Aesthetic caption of a whole image or of a crop.
class Captioner {
public:
    virtual ~Captioner() = default;
    virtual std::string caption(const std::string& image_ref,
                                const std::optional<CropBox>& crop) = 0;
    virtual std::string id() const = 0;
};

// Facial expression / emotion description of a crop.
class FaceDescriber {
public:
    virtual ~FaceDescriber() = default;
    virtual std::string describe(const std::string& image_ref, const CropBox& crop) = 0;
    virtual std::string id() const = 0;
};

// Whole-image-to-crop similarity for object resolution.
class SimilarityScorer {
public:
    virtual ~SimilarityScorer() = default;
    virtual double score(const std::string& image_ref, const CropBox& crop) = 0;
};

// ---- deterministic test doubles ---------------------------------------------

struct MockCall {
    std::string image_ref;
    std::optional<CropBox> crop;
};

class MockCaptioner : public Captioner {
public:
    std::string caption(const std::string& image_ref, const std::optional<CropBox>& crop) override;
    std::string id() const override { return "mock-captioner"; }

    std::vector<MockCall> calls;
    int fail_next = 0;  // number of upcoming calls to fail
};

class MockFaceDetector : public FaceDetector {
public:
    // verdicts keyed by image_ref; absent keys fall back to hash parity
    explicit MockFaceDetector(std::map<std::string, int> verdicts = {});
    int detect(const std::string& image_ref, const CropBox& crop) override;
    std::string id() const override { return "mock-detector"; }

    std::vector<MockCall> calls;

private:
    std::map<std::string, int> verdicts_;
};

class MockFaceDescriber : public FaceDescriber {
public:
    std::string describe(const std::string& image_ref, const CropBox& crop) override;
    std::string id() const override { return "mock-describer"; }

    std::vector<MockCall> calls;
    int fail_next = 0;
};

// Similarity from a fixed table keyed by object id; unknown ids score 0.
class TableSimilarityScorer : public SimilarityScorer {
public:
    explicit TableSimilarityScorer(std::map<int, double> table) : table_(std::move(table)) {}
    double score(const std::string&, const CropBox&) override { return 0.0; }
    double score_object(const ObjectAnnotation& obj) const;

private:
    std::map<int, double> table_;
};

// Cosine similarity between feature-provider embeddings of the whole image
// and a synthetic crop reference "<image>#<x>,<y>,<w>,<h>".
class FeatureSimilarityScorer : public SimilarityScorer {
public:
    using Embed = std::function<Eigen::VectorXd(const std::string&)>;
    explicit FeatureSimilarityScorer(Embed embed) : embed_(std::move(embed)) {}
    double score(const std::string& image_ref, const CropBox& crop) override;

private:
    Embed embed_;
};

// ---- wire contract -----------------------------------------------------------

// Request {image_ref, crop?, mode}; response {text}. Modes: "caption",
// "face_detect" (text "0"/"1"), "face_describe".
struct WireRequest {
    std::string image_ref;
    std::optional<CropBox> crop;
    std::string mode;
};

std::string encode_wire_request(const WireRequest& req);
WireRequest decode_wire_request(const std::string& body);
std::string encode_wire_response(const std::string& text);
std::string decode_wire_response(const std::string& body);

// HTTP adapter implementing all three provider roles against one endpoint.
class RemoteVisionProvider : public FaceDetector, public Captioner, public FaceDescriber {
public:
    RemoteVisionProvider(std::string host, int port, std::string path = "/translate");

    int detect(const std::string& image_ref, const CropBox& crop) override;
    std::string caption(const std::string& image_ref, const std::optional<CropBox>& crop) override;
    std::string describe(const std::string& image_ref, const CropBox& crop) override;
    std::string id() const override;

private:
    std::string post(const WireRequest& req);

    std::string host_;
    int port_;
    std::string path_;
};

}  // namespace masc::translation
