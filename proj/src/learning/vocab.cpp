// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/learning/vocab.hpp"

#include <stdexcept>

#include "masc/common/text.hpp"
#include "masc/learning/sequences.hpp"

namespace masc::learning {

Vocab::Vocab() {
    for (const char* s : {"⟨pad⟩", "⟨bos⟩", "⟨eos⟩", "⟨unk⟩"})
        add_token(s);
    for (const std::string& m : marker_tokens()) add_token(m);
    for (const char* label : {"positive", "neutral", "negative"}) add_token(label);
}

void Vocab::add_token(const std::string& token) {
    if (index_.count(token)) return;
    index_[token] = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
}

void Vocab::add_corpus(const std::vector<std::string>& texts) {
    for (const std::string& text : texts)
        for (const std::string& tok : split_ws(text)) add_token(tok);
}

int Vocab::id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("vocab id out of range");
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> out;
    for (const std::string& tok : split_ws(text)) out.push_back(id_of(tok));
    return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::vector<std::string> parts;
    for (int id : ids) {
        if (id == kPad || id == kBos || id == kEos) continue;
        parts.push_back(token_of(id));
    }
    return join(parts, " ");
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    if (tokens.size() < v.tokens_.size())
        throw std::invalid_argument("vocab token list shorter than the reserved prefix");
    for (std::size_t i = 0; i < v.tokens_.size(); ++i)
        if (tokens[i] != v.tokens_[i])
            throw std::invalid_argument("vocab token list reserved prefix mismatch");
    for (std::size_t i = v.tokens_.size(); i < tokens.size(); ++i) v.add_token(tokens[i]);
    if (v.tokens_.size() != tokens.size())
        throw std::invalid_argument("vocab token list contains duplicates");
    return v;
}

}  // namespace masc::learning
