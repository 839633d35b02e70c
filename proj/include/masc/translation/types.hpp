// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Types for visual-content translation: routing an image (or a resolved
// object crop) to one emotion-laden auxiliary text.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace masc::translation {

// Whole-image aesthetic caption, object facial description, object
// aesthetic caption.
enum class AuxKind { kAC, kFD, kAO };

const char* aux_kind_name(AuxKind k);
AuxKind aux_kind_from_name(const std::string& name);

struct CropBox {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;
};

struct ObjectAnnotation {
    int object_id = 0;
    CropBox bbox;
    std::string linked_target;
};

struct AuxiliaryText {
    AuxKind kind = AuxKind::kAC;
    std::string text;
    std::string source;  // provider id
};

// Provider failure; carries the provider id so callers can retry the same
// kind instead of silently switching branches.
class ProviderError : public std::runtime_error {
public:
    ProviderError(std::string provider_id, const std::string& message)
        : std::runtime_error(provider_id + ": " + message), provider_id_(std::move(provider_id)) {}

    const std::string& provider_id() const { return provider_id_; }

private:
    std::string provider_id_;
};

}  // namespace masc::translation
