// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Prompt pools for semantic-rationale (SR) and impression-rationale (IR)
// generation. Templates carry {aspect} and {label} placeholders; pools are
// validated on load so rendering can never hit an unknown placeholder.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace masc::rationale {

enum class PromptKind { kSR, kIR };

const char* prompt_kind_name(PromptKind k);
PromptKind prompt_kind_from_name(const std::string& name);

// Every SR template instructs the model to open its answer with this stem.
inline constexpr const char* kSrStem =
    "Based on the image-text pair, the sentiment towards {aspect} is {label} because";

struct PromptTemplate {
    std::string id;
    PromptKind kind = PromptKind::kSR;
    std::string system_text;
    std::string user_text;
};

// Pool validation: unique nonempty ids; every brace span is {aspect} or
// {label}; user_text contains both; SR user_text demands the fixed stem.
std::vector<PromptTemplate> parse_prompt_pool(const std::string& json_text);
std::vector<PromptTemplate> load_prompt_pool(const std::filesystem::path& path);

// Uniform seeded draw among the templates of one kind.
const PromptTemplate& select_prompt(const std::vector<PromptTemplate>& pool, PromptKind kind,
                                    std::uint64_t rng_seed);

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
};

// Substitutes template placeholders in one pass; braces arriving inside
// aspect or label values stay literal.
RenderedPrompt render_prompt(const PromptTemplate& tpl, const std::string& aspect,
                             const std::string& label);

}  // namespace masc::rationale
