// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/rationale/prompts.hpp"

#include <set>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "masc/common/fsio.hpp"
#include "masc/common/random.hpp"
#include "masc/common/text.hpp"

namespace masc::rationale {

using ordered_json = nlohmann::ordered_json;

const char* prompt_kind_name(PromptKind k) {
    return k == PromptKind::kSR ? "SR" : "IR";
}

PromptKind prompt_kind_from_name(const std::string& name) {
    if (name == "SR") return PromptKind::kSR;
    if (name == "IR") return PromptKind::kIR;
    throw std::invalid_argument("unknown prompt kind: " + name);
}

namespace {

// Every "{...}" span must be exactly {aspect} or {label}.
void check_placeholders(const std::string& id, const std::string& field,
                        const std::string& text) {
    size_t i = 0;
    while ((i = text.find('{', i)) != std::string::npos) {
        size_t close = text.find('}', i);
        if (close == std::string::npos)
            throw std::invalid_argument("prompt " + id + ": unclosed brace in " + field);
        std::string name = text.substr(i + 1, close - i - 1);
        if (name != "aspect" && name != "label")
            throw std::invalid_argument("prompt " + id + ": unknown placeholder {" + name +
                                        "} in " + field);
        i = close + 1;
    }
}

void validate_template(const PromptTemplate& t) {
    if (t.id.empty()) throw std::invalid_argument("prompt template with empty id");
    check_placeholders(t.id, "system_text", t.system_text);
    check_placeholders(t.id, "user_text", t.user_text);
    if (!contains(t.user_text, "{aspect}"))
        throw std::invalid_argument("prompt " + t.id + ": user_text lacks {aspect}");
    if (!contains(t.user_text, "{label}"))
        throw std::invalid_argument("prompt " + t.id + ": user_text lacks {label}");
    if (t.kind == PromptKind::kSR && !contains(t.user_text, kSrStem))
        throw std::invalid_argument("prompt " + t.id + ": SR template does not demand the stem");
}

}  // namespace

std::vector<PromptTemplate> parse_prompt_pool(const std::string& json_text) {
    ordered_json j = ordered_json::parse(json_text);
    std::vector<PromptTemplate> pool;
    std::set<std::string> ids;
    for (const auto& item : j.at("templates")) {
        PromptTemplate t;
        t.id = item.at("id").get<std::string>();
        t.kind = prompt_kind_from_name(item.at("kind").get<std::string>());
        t.system_text = item.at("system").get<std::string>();
        t.user_text = item.at("user").get<std::string>();
        validate_template(t);
        if (!ids.insert(t.id).second)
            throw std::invalid_argument("duplicate prompt id: " + t.id);
        pool.push_back(std::move(t));
    }
    return pool;
}

std::vector<PromptTemplate> load_prompt_pool(const std::filesystem::path& path) {
    return parse_prompt_pool(read_file(path));
}

const PromptTemplate& select_prompt(const std::vector<PromptTemplate>& pool, PromptKind kind,
                                    std::uint64_t rng_seed) {
    std::vector<const PromptTemplate*> of_kind;
    for (const PromptTemplate& t : pool)
        if (t.kind == kind) of_kind.push_back(&t);
    if (of_kind.empty())
        throw std::invalid_argument(std::string("empty prompt pool for kind ") +
                                    prompt_kind_name(kind));
    RandomStream rng(rng_seed);
    return *of_kind[static_cast<size_t>(rng.uniform_int(static_cast<int>(of_kind.size())))];
}

namespace {

std::string substitute(const std::string& text, const std::string& aspect,
                       const std::string& label) {
    std::string out;
    out.reserve(text.size() + aspect.size() + label.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text.compare(i, 8, "{aspect}") == 0) {
            out += aspect;
            i += 8;
        } else if (text.compare(i, 7, "{label}") == 0) {
            out += label;
            i += 7;
        } else {
            out += text[i];
            ++i;
        }
    }
    return out;
}

}  // namespace

RenderedPrompt render_prompt(const PromptTemplate& tpl, const std::string& aspect,
                             const std::string& label) {
    if (label != "positive" && label != "neutral" && label != "negative")
        throw std::invalid_argument("render_prompt: unknown label " + label);
    return {substitute(tpl.system_text, aspect, label),
            substitute(tpl.user_text, aspect, label)};
}

}  // namespace masc::rationale
