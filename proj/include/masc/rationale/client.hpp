// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// LLM clients behind one interface. The wire contract is JSON
// {system, user, image?} -> {text}; the mock answers deterministically and
// counts calls so cache behavior is testable.

#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "masc/rationale/prompts.hpp"

namespace masc::rationale {

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const std::string& system_text, const std::string& user_text,
                                 const std::optional<std::string>& image) = 0;
    virtual std::string model_id() const = 0;
};

// Deterministic stand-in: identifies the template whose rendered text it was
// sent (by placeholder-free prefix) and answers "[<template id>] ...". When a
// prompt demands the fixed response stem, the answer opens with the rendered
// stem, mirroring an obedient model. Thread-safe.
class MockLlmClient : public LlmClient {
public:
    explicit MockLlmClient(const std::vector<PromptTemplate>& pool, bool obey_stem = true);

    std::string complete(const std::string& system_text, const std::string& user_text,
                         const std::optional<std::string>& image) override;
    std::string model_id() const override { return "mock-llm"; }

    int calls() const;
    void fail_next(int n);  // next n calls throw

private:
    struct Probe {
        std::string id;
        std::string prefix;  // user_text up to its first placeholder
    };

    std::vector<Probe> probes_;
    bool obey_stem_;
    mutable std::mutex mu_;
    int calls_ = 0;
    int fail_next_ = 0;
};

std::string encode_llm_request(const std::string& system_text, const std::string& user_text,
                               const std::optional<std::string>& image);
std::string encode_llm_response(const std::string& text);
std::string decode_llm_response(const std::string& body);

// HTTP adapter for the wire contract; one request per completion. A
// non-empty api_key is sent as a bearer Authorization header.
class HttpLlmClient : public LlmClient {
public:
    HttpLlmClient(std::string host, int port, std::string path = "/complete",
                  std::string model = "remote-llm", std::string api_key = "");

    std::string complete(const std::string& system_text, const std::string& user_text,
                         const std::optional<std::string>& image) override;
    std::string model_id() const override { return model_; }

private:
    std::string host_;
    int port_;
    std::string path_;
    std::string model_;
    std::string api_key_;
};

}  // namespace masc::rationale
