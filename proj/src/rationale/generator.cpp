// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/rationale/generator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nlohmann/json.hpp"

#include "masc/common/fsio.hpp"
#include "masc/common/hash.hpp"

namespace masc::rationale {

using ordered_json = nlohmann::ordered_json;

std::string rationale_cache_key(const std::string& sample_id, const std::string& prompt_id,
                                const std::string& model_id) {
    std::uint64_t h = fnv1a64(sample_id);
    h = fnv1a64_combine(h, prompt_id);
    h = fnv1a64_combine(h, model_id);
    return hex64(h);
}

namespace {

std::uint64_t selection_seed(std::uint64_t run_seed, const std::string& sample_id,
                             PromptKind kind) {
    std::uint64_t h = fnv1a64(prompt_kind_name(kind), run_seed ^ 0x9e3779b97f4a7c15ull);
    return fnv1a64_combine(h, sample_id);
}

void default_backoff(int attempt) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
}

struct CacheEntry {
    std::string prompt_id;
    std::string text;
};

// One completion with durable caching and bounded retries.
CacheEntry cached_completion(const data::Sample& sample, const PromptTemplate& tpl,
                             LlmClient& client, const std::filesystem::path& cache_dir,
                             const GeneratorConfig& cfg, std::atomic<std::size_t>& client_calls,
                             std::atomic<std::size_t>& cache_hits) {
    std::string key = rationale_cache_key(sample.id, tpl.id, client.model_id());
    std::filesystem::path path = cache_dir / ("r_" + key + ".json");
    if (std::filesystem::exists(path)) {
        ordered_json j = ordered_json::parse(read_file(path));
        std::string text = j.at("text").get<std::string>();
        if (j.at("sample_id").get<std::string>() == sample.id &&
            j.at("prompt_id").get<std::string>() == tpl.id && !text.empty()) {
            ++cache_hits;
            return {tpl.id, text};
        }
    }
    RenderedPrompt rendered = render_prompt(tpl, sample.target, sample.label);
    std::optional<std::string> image;
    if (!sample.image.empty()) image = sample.image;
    std::string text;
    for (int attempt = 1;; ++attempt) {
        try {
            ++client_calls;
            text = client.complete(rendered.system_text, rendered.user_text, image);
            if (text.empty()) throw std::runtime_error("empty completion");
            break;
        } catch (const std::exception&) {
            if (attempt >= cfg.max_attempts) throw;
            if (cfg.backoff)
                cfg.backoff(attempt);
            else
                default_backoff(attempt);
        }
    }
    ordered_json j;
    j["sample_id"] = sample.id;
    j["kind"] = prompt_kind_name(tpl.kind);
    j["prompt_id"] = tpl.id;
    j["model_id"] = client.model_id();
    j["text"] = text;
    ScopedFileLock lock(path.string() + ".lock");
    atomic_write_file(path, j.dump(2) + "\n");
    return {tpl.id, text};
}

}  // namespace

GenerationResult generate_rationales(const std::vector<data::Sample>& dataset,
                                     const std::vector<PromptTemplate>& pool, LlmClient& client,
                                     const std::filesystem::path& cache_dir,
                                     const GeneratorConfig& cfg) {
    std::filesystem::create_directories(cache_dir);
    std::vector<RationaleRecord> slots(dataset.size());
    std::vector<char> ok(dataset.size(), 0);
    std::vector<GenerationFailure> failures;
    std::mutex failures_mu;
    std::atomic<std::size_t> client_calls{0};
    std::atomic<std::size_t> cache_hits{0};
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= dataset.size()) return;
            const data::Sample& sample = dataset[i];
            try {
                const PromptTemplate& sr_tpl = select_prompt(
                    pool, PromptKind::kSR, selection_seed(cfg.seed, sample.id, PromptKind::kSR));
                const PromptTemplate& ir_tpl = select_prompt(
                    pool, PromptKind::kIR, selection_seed(cfg.seed, sample.id, PromptKind::kIR));
                CacheEntry sr = cached_completion(sample, sr_tpl, client, cache_dir, cfg,
                                                  client_calls, cache_hits);
                CacheEntry ir = cached_completion(sample, ir_tpl, client, cache_dir, cfg,
                                                  client_calls, cache_hits);
                std::uint64_t h = fnv1a64(sample.id);
                h = fnv1a64_combine(h, sr.prompt_id);
                h = fnv1a64_combine(h, ir.prompt_id);
                h = fnv1a64_combine(h, client.model_id());
                slots[i] = {sample.id,    sr.text,         ir.text, sr.prompt_id,
                            ir.prompt_id, client.model_id(), hex64(h)};
                ok[i] = 1;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failures_mu);
                failures.push_back({sample.id, e.what()});
            }
        }
    };

    int threads = std::max(1, std::min<int>(cfg.parallelism,
                                            static_cast<int>(dataset.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) workers.emplace_back(worker);
        for (auto& w : workers) w.join();
    }

    GenerationResult result;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        if (ok[i]) result.records.push_back(std::move(slots[i]));
    std::sort(result.records.begin(), result.records.end(),
              [](const RationaleRecord& a, const RationaleRecord& b) {
                  return a.sample_id < b.sample_id;
              });
    std::sort(failures.begin(), failures.end(),
              [](const GenerationFailure& a, const GenerationFailure& b) {
                  return a.sample_id < b.sample_id;
              });
    result.failures = std::move(failures);
    result.client_calls = client_calls.load();
    result.cache_hits = cache_hits.load();
    return result;
}

std::string encode_record(const RationaleRecord& r) {
    ordered_json j;
    j["sample_id"] = r.sample_id;
    j["sr_text"] = r.sr_text;
    j["ir_text"] = r.ir_text;
    j["sr_prompt_id"] = r.sr_prompt_id;
    j["ir_prompt_id"] = r.ir_prompt_id;
    j["model_id"] = r.model_id;
    j["cache_key"] = r.cache_key;
    return j.dump();
}

RationaleRecord decode_record(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    RationaleRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.sr_text = j.at("sr_text").get<std::string>();
    r.ir_text = j.at("ir_text").get<std::string>();
    r.sr_prompt_id = j.at("sr_prompt_id").get<std::string>();
    r.ir_prompt_id = j.at("ir_prompt_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.cache_key = j.at("cache_key").get<std::string>();
    return r;
}

void write_records(const std::filesystem::path& path,
                   const std::vector<RationaleRecord>& records) {
    std::string body;
    for (const RationaleRecord& r : records) body += encode_record(r) + "\n";
    atomic_write_file(path, body);
}

std::vector<RationaleRecord> read_records(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<RationaleRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(decode_record(line));
    return out;
}

}  // namespace masc::rationale
