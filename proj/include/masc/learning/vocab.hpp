// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Whitespace tokenizer with a fixed reserved prefix: specials, task and
// marker tokens, then corpus words in first-appearance order.

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace masc::learning {

class Vocab {
public:
    // Reserved entries present in every vocabulary, in this id order.
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    Vocab();

    // Adds every whitespace token of every text, skipping known ones.
    void add_corpus(const std::vector<std::string>& texts);

    int id_of(const std::string& token) const;  // kUnk for unknown
    const std::string& token_of(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }

    std::vector<int> encode(const std::string& text) const;
    std::string decode(const std::vector<int>& ids) const;  // skips specials

    const std::vector<std::string>& tokens() const { return tokens_; }
    static Vocab from_tokens(const std::vector<std::string>& tokens);

private:
    void add_token(const std::string& token);

    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace masc::learning
