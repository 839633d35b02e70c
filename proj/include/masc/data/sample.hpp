// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// One MASC record: an image reference, a sentence, a target span, its gold
// sentiment, and the optional generated fields the pipeline fills in
// (object annotation, auxiliary texts, rationales). Splits persist as JSONL,
// one record per line, keys in schema order.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "masc/translation/types.hpp"

namespace masc::data {

inline constexpr const char* kLabels[] = {"positive", "neutral", "negative"};

bool is_valid_label(const std::string& label);
int label_index(const std::string& label);  // throws on unknown label

struct Sample {
    std::string id;
    std::string image;
    std::string sentence;
    std::string target;
    std::string label;
    std::optional<translation::ObjectAnnotation> object;
    std::string ac;                  // whole-image aesthetic caption
    std::optional<translation::AuxiliaryText> od;  // object description
    std::optional<std::string> sr;
    std::optional<std::string> ir;
    std::optional<std::string> gc;   // generic caption for the caption-swap switch
};

std::string encode_sample(const Sample& s);
Sample decode_sample(const std::string& line);

std::vector<Sample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples);

}  // namespace masc::data
