// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/learning/sequences.hpp"

#include <stdexcept>

#include "masc/common/text.hpp"

namespace masc::learning {

const char* task_name(Task t) {
    switch (t) {
        case Task::kSC: return "SC";
        case Task::kSRG: return "SRG";
        case Task::kIRG: return "IRG";
    }
    return "SC";
}

Task task_from_name(const std::string& name) {
    if (name == "SC") return Task::kSC;
    if (name == "SRG") return Task::kSRG;
    if (name == "IRG") return Task::kIRG;
    throw std::invalid_argument("unknown task: " + name);
}

std::vector<std::string> marker_tokens() {
    return {kTokSc, kTokSrg, kTokIrg, kTokSep,  kSenOpen,
            kSenClose, kSrOpen, kSrClose, kIrOpen, kIrClose};
}

const char* sentiment_name(Sentiment s) {
    switch (s) {
        case Sentiment::kPositive: return "positive";
        case Sentiment::kNeutral: return "neutral";
        case Sentiment::kNegative: return "negative";
        case Sentiment::kUndiscerned: return "undiscerned";
    }
    return "undiscerned";
}

Sentiment sentiment_from_label(const std::string& label) {
    Sentiment s = sentiment_from_token(label);
    if (s == Sentiment::kUndiscerned)
        throw std::invalid_argument("unknown sentiment label: " + label);
    return s;
}

Sentiment sentiment_from_token(const std::string& token) {
    if (token == "positive") return Sentiment::kPositive;
    if (token == "neutral") return Sentiment::kNeutral;
    if (token == "negative") return Sentiment::kNegative;
    return Sentiment::kUndiscerned;
}

namespace {

const char* task_token(Task t) {
    switch (t) {
        case Task::kSC: return kTokSc;
        case Task::kSRG: return kTokSrg;
        case Task::kIRG: return kTokIrg;
    }
    return kTokSc;
}

std::string join_segments(const std::vector<std::string>& segments) {
    std::string out;
    for (size_t i = 0; i < segments.size(); ++i) {
        if (i) out += std::string(" ") + kTokSep + " ";
        out += segments[i];
    }
    return out;
}

}  // namespace

std::string build_input(Task task, const data::Sample& sample, const InputPolicy& policy) {
    bool object_present = policy.use_od && sample.object.has_value();
    if (object_present) {
        if (!sample.od || sample.od->text.empty())
            throw std::invalid_argument("sample " + sample.id +
                                        ": resolved object without an object description");
        return join_segments({task_token(task), sample.sentence, sample.od->text, sample.target});
    }
    if (!policy.use_caption)
        return join_segments({task_token(task), sample.sentence, sample.target});
    const std::string& caption = policy.aesthetic_caption
                                     ? sample.ac
                                     : (sample.gc ? *sample.gc : std::string());
    if (caption.empty())
        throw std::invalid_argument("sample " + sample.id +
                                    ": no caption for a target absent from the image");
    return join_segments({task_token(task), caption, sample.sentence, sample.target});
}

std::string escape_markers(const std::string& text) {
    std::string out = replace_all(text, "&", "&amp;");
    out = replace_all(out, "⟨", "&lab;");
    out = replace_all(out, "⟩", "&rab;");
    return out;
}

std::string unescape_markers(const std::string& text) {
    std::string out = replace_all(text, "&lab;", "⟨");
    out = replace_all(out, "&rab;", "⟩");
    out = replace_all(out, "&amp;", "&");
    return out;
}

std::string format_target(Task task, const std::string& label,
                          const std::optional<std::string>& rationale) {
    sentiment_from_label(label);
    std::string sen = std::string(kSenOpen) + " " + label + " " + kSenClose;
    if (task == Task::kSC) {
        if (rationale)
            throw std::invalid_argument("format_target: SC target carries no rationale");
        return sen;
    }
    if (!rationale)
        throw std::invalid_argument("format_target: rationale required for " +
                                    std::string(task_name(task)));
    const char* open = task == Task::kSRG ? kSrOpen : kIrOpen;
    const char* close = task == Task::kSRG ? kSrClose : kIrClose;
    return std::string(open) + " " + escape_markers(*rationale) + " " + close + " " + sen;
}

namespace {

// First well-formed span: first open marker, then first close marker after it.
std::optional<std::string> first_span(const std::string& text, const std::string& open,
                                      const std::string& close) {
    size_t o = text.find(open);
    if (o == std::string::npos) return std::nullopt;
    size_t begin = o + open.size();
    size_t c = text.find(close, begin);
    if (c == std::string::npos) return std::nullopt;
    return text.substr(begin, c - begin);
}

}  // namespace

ParsedOutput parse_output(Task task, const std::string& text) {
    ParsedOutput out;
    if (auto span = first_span(text, kSenOpen, kSenClose))
        out.sentiment = sentiment_from_token(trim(*span));
    if (task != Task::kSC) {
        const char* open = task == Task::kSRG ? kSrOpen : kIrOpen;
        const char* close = task == Task::kSRG ? kSrClose : kIrClose;
        if (auto span = first_span(text, open, close)) out.rationale = unescape_markers(trim(*span));
    }
    return out;
}

}  // namespace masc::learning
