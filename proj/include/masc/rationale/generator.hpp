// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Rationale dataset construction: one SR and one IR completion per sample,
// drawn from seeded prompt selections, cached durably per call so reruns
// and partial runs never repeat a completed request.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "masc/data/sample.hpp"
#include "masc/rationale/client.hpp"
#include "masc/rationale/prompts.hpp"

namespace masc::rationale {

struct RationaleRecord {
    std::string sample_id;
    std::string sr_text;
    std::string ir_text;
    std::string sr_prompt_id;
    std::string ir_prompt_id;
    std::string model_id;
    std::string cache_key;
};

struct GenerationFailure {
    std::string sample_id;
    std::string error;
};

struct GeneratorConfig {
    std::uint64_t seed = 0;
    int parallelism = 4;
    int max_attempts = 3;
    // called between attempts; default sleeps 100ms * 2^(attempt-1)
    std::function<void(int attempt)> backoff;
};

struct GenerationResult {
    std::vector<RationaleRecord> records;     // sorted by sample_id
    std::vector<GenerationFailure> failures;  // sorted by sample_id
    std::size_t client_calls = 0;
    std::size_t cache_hits = 0;

    bool complete() const { return failures.empty(); }
};

// Stable per-call cache key.
std::string rationale_cache_key(const std::string& sample_id, const std::string& prompt_id,
                                const std::string& model_id);

GenerationResult generate_rationales(const std::vector<data::Sample>& dataset,
                                     const std::vector<PromptTemplate>& pool, LlmClient& client,
                                     const std::filesystem::path& cache_dir,
                                     const GeneratorConfig& cfg = {});

std::string encode_record(const RationaleRecord& r);
RationaleRecord decode_record(const std::string& line);
void write_records(const std::filesystem::path& path, const std::vector<RationaleRecord>& records);
std::vector<RationaleRecord> read_records(const std::filesystem::path& path);

}  // namespace masc::rationale
