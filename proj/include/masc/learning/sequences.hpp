// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Task sequence construction and output templates. Inputs are plain text
// with a leading task token; targets wrap the sentiment (and rationale)
// in reserved markers the tokenizer never produces from normal text.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "masc/data/sample.hpp"

namespace masc::learning {

enum class Task { kSC, kSRG, kIRG };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

// Reserved marker tokens.
inline constexpr const char* kTokSc = "⟨sc⟩";
inline constexpr const char* kTokSrg = "⟨srg⟩";
inline constexpr const char* kTokIrg = "⟨irg⟩";
inline constexpr const char* kTokSep = "⟨sep⟩";
inline constexpr const char* kSenOpen = "⟨sen⟩";
inline constexpr const char* kSenClose = "⟨/sen⟩";
inline constexpr const char* kSrOpen = "⟨sr⟩";
inline constexpr const char* kSrClose = "⟨/sr⟩";
inline constexpr const char* kIrOpen = "⟨ir⟩";
inline constexpr const char* kIrClose = "⟨/ir⟩";

std::vector<std::string> marker_tokens();

enum class Sentiment { kPositive, kNeutral, kNegative, kUndiscerned };

const char* sentiment_name(Sentiment s);
Sentiment sentiment_from_label(const std::string& label);  // throws on unknown
Sentiment sentiment_from_token(const std::string& token);  // unknown -> undiscerned

struct ParsedOutput {
    Sentiment sentiment = Sentiment::kUndiscerned;
    std::optional<std::string> rationale;
};

// Input-construction switches matching the ablation rows: drop object
// descriptions, drop the caption segment, or swap in the generic caption.
struct InputPolicy {
    bool use_od = true;
    bool use_caption = true;
    bool aesthetic_caption = true;
};

// Segment order is (task, caption, S, T) when the target has no resolved
// object and (task, S, OD, T) when it has one; segments join on the
// separator token.
std::string build_input(Task task, const data::Sample& sample, const InputPolicy& policy = {});

// Marker-literal escaping so rationale text can never forge a marker.
std::string escape_markers(const std::string& text);
std::string unescape_markers(const std::string& text);

std::string format_target(Task task, const std::string& label,
                          const std::optional<std::string>& rationale);

// Total: any byte string maps to a ParsedOutput, malformed spans included.
ParsedOutput parse_output(Task task, const std::string& text);

}  // namespace masc::learning
