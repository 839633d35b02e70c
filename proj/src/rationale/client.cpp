// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/rationale/client.hpp"

#include <stdexcept>

#include "httplib.h"
#include "nlohmann/json.hpp"

namespace masc::rationale {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string prefix_before_placeholder(const std::string& text) {
    size_t brace = text.find('{');
    return brace == std::string::npos ? text : text.substr(0, brace);
}

// Pulls the response opening a prompt demands via the instruction
// `Start your response with: "<stem>..."`.
std::optional<std::string> demanded_stem(const std::string& user_text) {
    const std::string marker = "Start your response with: \"";
    size_t begin = user_text.find(marker);
    if (begin == std::string::npos) return std::nullopt;
    begin += marker.size();
    size_t end = user_text.find("...\"", begin);
    if (end == std::string::npos) return std::nullopt;
    return user_text.substr(begin, end - begin);
}

}  // namespace

MockLlmClient::MockLlmClient(const std::vector<PromptTemplate>& pool, bool obey_stem)
    : obey_stem_(obey_stem) {
    for (const PromptTemplate& t : pool)
        probes_.push_back({t.id, prefix_before_placeholder(t.user_text)});
}

std::string MockLlmClient::complete(const std::string&, const std::string& user_text,
                                    const std::optional<std::string>&) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
        if (fail_next_ > 0) {
            --fail_next_;
            throw std::runtime_error("mock-llm: injected failure");
        }
    }
    std::string id = "unknown";
    for (const Probe& p : probes_) {
        if (!p.prefix.empty() && user_text.compare(0, p.prefix.size(), p.prefix) == 0) {
            id = p.id;
            break;
        }
    }
    std::string body = "[" + id + "] mock rationale.";
    if (obey_stem_) {
        if (auto stem = demanded_stem(user_text)) return *stem + " " + body;
    }
    return body;
}

int MockLlmClient::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

void MockLlmClient::fail_next(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    fail_next_ = n;
}

std::string encode_llm_request(const std::string& system_text, const std::string& user_text,
                               const std::optional<std::string>& image) {
    ordered_json j;
    j["system"] = system_text;
    j["user"] = user_text;
    if (image) j["image"] = *image;
    return j.dump();
}

std::string encode_llm_response(const std::string& text) {
    ordered_json j;
    j["text"] = text;
    return j.dump();
}

std::string decode_llm_response(const std::string& body) {
    return ordered_json::parse(body).at("text").get<std::string>();
}

HttpLlmClient::HttpLlmClient(std::string host, int port, std::string path, std::string model,
                             std::string api_key)
    : host_(std::move(host)),
      port_(port),
      path_(std::move(path)),
      model_(std::move(model)),
      api_key_(std::move(api_key)) {}

std::string HttpLlmClient::complete(const std::string& system_text, const std::string& user_text,
                                    const std::optional<std::string>& image) {
    httplib::Client client(host_, port_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path_, headers, encode_llm_request(system_text, user_text, image),
                           "application/json");
    if (!res) throw std::runtime_error(model_ + ": transport failure");
    if (res->status != 200)
        throw std::runtime_error(model_ + ": status " + std::to_string(res->status));
    return decode_llm_response(res->body);
}

}  // namespace masc::rationale
