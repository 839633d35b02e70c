// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Operator entry points. Every artifact-producing command stamps the exact
// run configuration into <out>/config.json; rerunning with that file
// reproduces the artifacts. Option precedence: defaults, then the config
// file, then explicit command-line flags. Commands are independent
// processes; the shared caches serialize through per-key file locks.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "masc/common/fsio.hpp"
#include "masc/common/hash.hpp"
#include "masc/data/sample.hpp"
#include "masc/eval/analysis.hpp"
#include "masc/eval/metrics.hpp"
#include "masc/features/provider.hpp"
#include "masc/learning/trainer.hpp"
#include "masc/rationale/generator.hpp"
#include "masc/translation/router.hpp"

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

using namespace masc;

namespace {

// ---- shared helpers ----------------------------------------------------------

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw std::invalid_argument(std::string(what) + " path is required");
    if (!fs::exists(path))
        throw std::invalid_argument(std::string(what) + " not found: " + path);
}

void require_out(const std::string& out) {
    if (out.empty()) throw std::invalid_argument("--out is required");
    fs::create_directories(out);
}

std::pair<std::string, int> split_endpoint(const std::string& endpoint) {
    size_t colon = endpoint.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size())
        throw std::invalid_argument("endpoint must be host:port, got: " + endpoint);
    int port = 0;
    try {
        port = std::stoi(endpoint.substr(colon + 1));
    } catch (const std::exception&) {
        throw std::invalid_argument("endpoint port is not a number: " + endpoint);
    }
    if (port < 1 || port > 65535)
        throw std::invalid_argument("endpoint port out of range: " + endpoint);
    return {endpoint.substr(0, colon), port};
}

std::string env_api_key() {
    const char* key = std::getenv("MASCKIT_API_KEY");
    return key == nullptr ? std::string() : std::string(key);
}

// The feature stream is a pure function of the training seed so evaluation
// recreates the features a checkpoint was trained with.
std::uint64_t feature_seed(std::uint64_t train_seed) { return fnv1a64("features", train_seed); }

void merge_rationales(std::vector<data::Sample>& samples, const std::string& records_path) {
    if (records_path.empty()) return;
    auto records = rationale::read_records(records_path);
    std::map<std::string, const rationale::RationaleRecord*> by_id;
    for (const auto& r : records) by_id[r.sample_id] = &r;
    for (auto& s : samples) {
        auto it = by_id.find(s.id);
        if (it == by_id.end()) continue;
        s.sr = it->second->sr_text;
        s.ir = it->second->ir_text;
    }
}

void write_json(const fs::path& path, const ordered_json& j) {
    atomic_write_file(path, j.dump(2) + "\n");
}

ordered_json load_config_file(const std::string& path) {
    require_file(path, "config file");
    return ordered_json::parse(read_file(path));
}

// Config-file value for options the command line left untouched.
template <typename T>
void take(const ordered_json& j, const char* key, const CLI::Option* opt, T& into) {
    if (opt != nullptr && opt->count() > 0) return;
    if (j.contains(key)) into = j.at(key).get<T>();
}

// ---- ablation switches ---------------------------------------------------------

// Switch tokens mirror the ablation rows; each one only disables, so
// applying a stored list twice is idempotent.
void apply_ablation(learning::TrainConfig& tc, const std::string& name) {
    if (name == "full") return;
    if (name == "srg") {
        tc.enable_srg = false;
    } else if (name == "irg") {
        tc.enable_irg = false;
    } else if (name == "srg-irg") {
        tc.enable_srg = false;
        tc.enable_irg = false;
    } else if (name == "lsa") {
        tc.enable_lsa = false;
    } else if (name == "od") {
        tc.enable_od = false;
    } else if (name == "aes-cap") {
        tc.enable_aes_cap = false;
    } else if (name == "irg-ac") {
        tc.enable_irg = false;
        tc.enable_aes_cap = false;
    } else if (name == "generic-caption") {
        tc.aesthetic_caption = false;
    } else {
        throw std::invalid_argument(
            "unknown ablation switch: " + name +
            " (expect srg, irg, srg-irg, lsa, od, aes-cap, irg-ac, generic-caption)");
    }
}

const std::vector<std::string> kDefaultVariants = {"full", "srg",     "irg",     "srg-irg",
                                                   "lsa",  "od",      "aes-cap", "irg-ac"};

std::string variant_dir_name(const std::string& token) {
    if (token == "full" || token == "generic-caption") return token;
    return "no-" + token;
}

// ---- training flag block -------------------------------------------------------

// One flag per tunable; apply() writes only the flags the user passed, so a
// config file keeps authority over everything else.
struct TrainFlags {
    int epochs = 10;
    int batch = 4;
    double lr = 3e-4;
    double weight_decay = 0.01;
    double alpha = 0.2;
    double lambda = 0.2;
    double beta = 0.5;
    double tau = 1.0;
    int n_f_max = 8;
    std::uint64_t seed = 0;
    int max_new_tokens = 48;
    int dim = 32;
    int layers = 2;
    int ffn_hidden = 64;
    int max_len = 160;
    int lsa_dim = 8;
    std::vector<std::string> ablate;

    CLI::Option* o_epochs = nullptr;
    CLI::Option* o_batch = nullptr;
    CLI::Option* o_lr = nullptr;
    CLI::Option* o_weight_decay = nullptr;
    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_beta = nullptr;
    CLI::Option* o_tau = nullptr;
    CLI::Option* o_n_f_max = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_max_new_tokens = nullptr;
    CLI::Option* o_dim = nullptr;
    CLI::Option* o_layers = nullptr;
    CLI::Option* o_ffn_hidden = nullptr;
    CLI::Option* o_max_len = nullptr;
    CLI::Option* o_lsa_dim = nullptr;

    void add(CLI::App* cmd) {
        o_epochs = cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        o_batch = cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
        o_lr = cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
        o_weight_decay = cmd->add_option("--weight-decay", weight_decay, "Decoupled weight decay")
                             ->capture_default_str();
        o_alpha = cmd->add_option("--alpha", alpha, "Classification loss share in (0,1)")
                      ->capture_default_str();
        o_lambda = cmd->add_option("--lambda", lambda, "Alignment loss weight in (0,1)")
                       ->capture_default_str();
        o_beta = cmd->add_option("--beta", beta, "Redundant-fusion mix in [0,1]")
                     ->capture_default_str();
        o_tau = cmd->add_option("--tau", tau, "Selection temperature")->capture_default_str();
        o_n_f_max = cmd->add_option("--nf-max", n_f_max, "Aggregation head width cap")
                        ->capture_default_str();
        o_seed = cmd->add_option("--seed", seed, "Run seed")->capture_default_str();
        o_max_new_tokens = cmd->add_option("--max-new-tokens", max_new_tokens,
                                           "Generation length cap")
                               ->capture_default_str();
        o_dim = cmd->add_option("--dim", dim, "Backbone width")->capture_default_str();
        o_layers = cmd->add_option("--layers", layers, "Encoder/decoder depth")
                       ->capture_default_str();
        o_ffn_hidden = cmd->add_option("--ffn-hidden", ffn_hidden, "Feed-forward width")
                           ->capture_default_str();
        o_max_len = cmd->add_option("--max-len", max_len, "Sequence length cap")
                        ->capture_default_str();
        o_lsa_dim = cmd->add_option("--lsa-dim", lsa_dim, "Alignment feature width")
                        ->capture_default_str();
        cmd->add_option("--ablate", ablate,
                        "Ablation switches: srg, irg, srg-irg, lsa, od, aes-cap, irg-ac, "
                        "generic-caption")
            ->delimiter(',');
    }

    void apply(learning::TrainConfig& tc) const {
        if (o_epochs->count()) tc.epochs = epochs;
        if (o_batch->count()) tc.batch = batch;
        if (o_lr->count()) tc.lr = lr;
        if (o_weight_decay->count()) tc.weight_decay = weight_decay;
        if (o_alpha->count()) tc.weights.alpha = alpha;
        if (o_lambda->count()) tc.weights.lambda = lambda;
        if (o_beta->count()) tc.lsa.beta = beta;
        if (o_tau->count()) tc.lsa.tau = tau;
        if (o_n_f_max->count()) tc.lsa.n_f_max = n_f_max;
        if (o_seed->count()) tc.seed = seed;
        if (o_max_new_tokens->count()) tc.max_new_tokens = max_new_tokens;
        if (o_dim->count()) tc.model.dim = dim;
        if (o_layers->count()) tc.model.layers = layers;
        if (o_ffn_hidden->count()) tc.model.ffn_hidden = ffn_hidden;
        if (o_max_len->count()) tc.model.max_len = max_len;
        if (o_lsa_dim->count()) tc.lsa.dim = lsa_dim;
        for (const auto& name : ablate) apply_ablation(tc, name);
    }
};

learning::TrainConfig resolve_train_config(const ordered_json& cfg_file, const TrainFlags& flags,
                                           std::vector<std::string>& ablate_out) {
    learning::TrainConfig tc;
    ablate_out.clear();
    if (cfg_file.contains("train"))
        tc = learning::train_config_from_json(cfg_file.at("train").dump());
    if (cfg_file.contains("ablate")) {
        for (const auto& name : cfg_file.at("ablate")) {
            apply_ablation(tc, name.get<std::string>());
            ablate_out.push_back(name.get<std::string>());
        }
    }
    flags.apply(tc);
    for (const auto& name : flags.ablate) ablate_out.push_back(name);
    tc.validate();
    return tc;
}

// ---- build-rationales ----------------------------------------------------------

struct BuildArgs {
    std::string config_path;
    std::string data;
    std::string out;
    std::string cache;
    std::string pools = "data/prompts/pools.json";
    std::string client = "mock";
    std::string model = "remote-llm";
    std::uint64_t seed = 0;
    int parallelism = 4;
    int max_attempts = 3;

    CLI::Option *o_data = nullptr, *o_out = nullptr, *o_cache = nullptr, *o_pools = nullptr,
                *o_client = nullptr, *o_model = nullptr, *o_seed = nullptr,
                *o_parallelism = nullptr, *o_max_attempts = nullptr;
};

int cmd_build_rationales(BuildArgs& a) {
    if (!a.config_path.empty()) {
        ordered_json j = load_config_file(a.config_path);
        take(j, "data", a.o_data, a.data);
        take(j, "out", a.o_out, a.out);
        take(j, "cache", a.o_cache, a.cache);
        take(j, "pools", a.o_pools, a.pools);
        take(j, "client", a.o_client, a.client);
        take(j, "model", a.o_model, a.model);
        take(j, "seed", a.o_seed, a.seed);
        take(j, "parallelism", a.o_parallelism, a.parallelism);
        take(j, "max_attempts", a.o_max_attempts, a.max_attempts);
    }
    require_file(a.data, "dataset");
    require_file(a.pools, "prompt pool");
    require_out(a.out);
    if (a.cache.empty()) a.cache = (fs::path(a.out) / "cache").string();
    if (a.parallelism < 1) throw std::invalid_argument("--parallelism must be positive");
    if (a.max_attempts < 1) throw std::invalid_argument("--max-attempts must be positive");

    ordered_json cfg;
    cfg["command"] = "build-rationales";
    cfg["data"] = a.data;
    cfg["out"] = a.out;
    cfg["cache"] = a.cache;
    cfg["pools"] = a.pools;
    cfg["client"] = a.client;
    cfg["model"] = a.model;
    cfg["seed"] = a.seed;
    cfg["parallelism"] = a.parallelism;
    cfg["max_attempts"] = a.max_attempts;
    write_json(fs::path(a.out) / "config.json", cfg);

    auto samples = data::read_samples(a.data);
    auto pool = rationale::load_prompt_pool(a.pools);

    std::unique_ptr<rationale::LlmClient> client;
    if (a.client == "mock") {
        client = std::make_unique<rationale::MockLlmClient>(pool);
    } else {
        auto [host, port] = split_endpoint(a.client);
        client = std::make_unique<rationale::HttpLlmClient>(host, port, "/complete", a.model,
                                                            env_api_key());
    }

    rationale::GeneratorConfig gen;
    gen.seed = a.seed;
    gen.parallelism = a.parallelism;
    gen.max_attempts = a.max_attempts;
    auto result = rationale::generate_rationales(samples, pool, *client, a.cache, gen);

    rationale::write_records(fs::path(a.out) / "records.jsonl", result.records);

    std::string status = result.complete()            ? "complete"
                         : result.records.empty()     ? "failed"
                                                      : "partial";
    ordered_json summary;
    summary["samples"] = samples.size();
    summary["records"] = result.records.size();
    summary["client_calls"] = result.client_calls;
    summary["cache_hits"] = result.cache_hits;
    summary["failures"] = ordered_json::array();
    for (const auto& f : result.failures)
        summary["failures"].push_back({{"sample_id", f.sample_id}, {"error", f.error}});
    summary["status"] = status;
    write_json(fs::path(a.out) / "summary.json", summary);

    std::printf("build-rationales: %zu samples, %zu records, %zu failures, %zu client calls, "
                "%zu cache hits\n",
                samples.size(), result.records.size(), result.failures.size(),
                result.client_calls, result.cache_hits);
    std::printf("status: %s\n", status.c_str());
    if (status == "failed") return 3;
    if (status == "partial") return 2;
    return 0;
}

// ---- prepare-aux ---------------------------------------------------------------

struct PrepareArgs {
    std::string config_path;
    std::string data;
    std::string out;
    std::string cache;
    std::string provider = "mock";
    int max_aux_tokens = 50;

    CLI::Option *o_data = nullptr, *o_out = nullptr, *o_cache = nullptr, *o_provider = nullptr,
                *o_max_aux_tokens = nullptr;
};

int cmd_prepare_aux(PrepareArgs& a) {
    if (!a.config_path.empty()) {
        ordered_json j = load_config_file(a.config_path);
        take(j, "data", a.o_data, a.data);
        take(j, "out", a.o_out, a.out);
        take(j, "cache", a.o_cache, a.cache);
        take(j, "provider", a.o_provider, a.provider);
        take(j, "max_aux_tokens", a.o_max_aux_tokens, a.max_aux_tokens);
    }
    require_file(a.data, "dataset");
    require_out(a.out);
    if (a.cache.empty()) a.cache = (fs::path(a.out) / "cache").string();
    if (a.max_aux_tokens < 1) throw std::invalid_argument("--max-aux-tokens must be positive");

    ordered_json cfg;
    cfg["command"] = "prepare-aux";
    cfg["data"] = a.data;
    cfg["out"] = a.out;
    cfg["cache"] = a.cache;
    cfg["provider"] = a.provider;
    cfg["max_aux_tokens"] = a.max_aux_tokens;
    write_json(fs::path(a.out) / "config.json", cfg);

    auto samples = data::read_samples(a.data);

    translation::MockFaceDetector mock_detector;
    translation::MockCaptioner mock_captioner;
    translation::MockFaceDescriber mock_describer;
    std::unique_ptr<translation::RemoteVisionProvider> remote;
    translation::FaceDetector* detector = &mock_detector;
    translation::Captioner* captioner = &mock_captioner;
    translation::FaceDescriber* describer = &mock_describer;
    if (a.provider != "mock") {
        auto [host, port] = split_endpoint(a.provider);
        remote = std::make_unique<translation::RemoteVisionProvider>(host, port);
        detector = remote.get();
        captioner = remote.get();
        describer = remote.get();
    }

    translation::Router router(*detector, *captioner, *describer, a.cache, a.max_aux_tokens);

    // Fill-if-empty keeps hand-authored fields and makes reruns no-ops.
    int filled_od = 0;
    int filled_ac = 0;
    for (auto& s : samples) {
        if (s.object && (!s.od || s.od->text.empty())) {
            s.od = router.describe(s.image, s.object);
            ++filled_od;
        }
        if (s.ac.empty()) {
            s.ac = router.describe(s.image, std::nullopt).text;
            ++filled_ac;
        }
    }

    data::write_samples(fs::path(a.out) / "prepared.jsonl", samples);

    ordered_json summary;
    summary["samples"] = samples.size();
    summary["filled_od"] = filled_od;
    summary["filled_ac"] = filled_ac;
    summary["cache_hits"] = router.cache_hits();
    summary["cache_misses"] = router.cache_misses();
    write_json(fs::path(a.out) / "summary.json", summary);

    std::printf("prepare-aux: %zu samples, %d object descriptions filled, %d captions filled, "
                "%zu cache hits, %zu cache misses\n",
                samples.size(), filled_od, filled_ac, router.cache_hits(),
                router.cache_misses());
    return 0;
}

// ---- train ---------------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string train_path;
    std::string dev_path;
    std::string rationales;
    std::string out;
    std::string resume;
    int until_epoch = 0;
    TrainFlags flags;

    CLI::Option *o_train = nullptr, *o_dev = nullptr, *o_rationales = nullptr, *o_out = nullptr;
};

int cmd_train(TrainArgs& a) {
    ordered_json cfg_file = ordered_json::object();
    if (!a.config_path.empty()) {
        cfg_file = load_config_file(a.config_path);
        take(cfg_file, "train_data", a.o_train, a.train_path);
        take(cfg_file, "dev_data", a.o_dev, a.dev_path);
        take(cfg_file, "rationales", a.o_rationales, a.rationales);
        take(cfg_file, "out", a.o_out, a.out);
    }
    std::vector<std::string> ablate;
    learning::TrainConfig tc = resolve_train_config(cfg_file, a.flags, ablate);
    require_file(a.train_path, "train split");
    require_file(a.dev_path, "dev split");
    if (!a.rationales.empty()) require_file(a.rationales, "rationale records");
    require_out(a.out);

    auto train = data::read_samples(a.train_path);
    auto dev = data::read_samples(a.dev_path);
    merge_rationales(train, a.rationales);
    merge_rationales(dev, a.rationales);

    std::unique_ptr<features::SyntheticFeatureProvider> provider;
    std::optional<learning::Trainer> trainer;
    if (!a.resume.empty()) {
        require_file(a.resume, "checkpoint");
        ordered_json ck = ordered_json::parse(read_file(a.resume));
        auto stored = learning::train_config_from_json(ck.at("config").dump());
        provider = std::make_unique<features::SyntheticFeatureProvider>(
            stored.lsa.dim, feature_seed(stored.seed));
        trainer.emplace(learning::Trainer::resume(a.resume, provider.get()));
    } else {
        auto vocab = learning::build_vocab(train, tc.input_policy());
        provider = std::make_unique<features::SyntheticFeatureProvider>(tc.lsa.dim,
                                                                        feature_seed(tc.seed));
        trainer.emplace(learning::Trainer(tc, std::move(vocab), provider.get()));
    }

    ordered_json cfg;
    cfg["command"] = "train";
    cfg["train_data"] = a.train_path;
    cfg["dev_data"] = a.dev_path;
    cfg["rationales"] = a.rationales;
    cfg["out"] = a.out;
    cfg["ablate"] = ablate;
    cfg["train"] = ordered_json::parse(learning::train_config_to_json(trainer->config()));
    write_json(fs::path(a.out) / "config.json", cfg);

    auto outcome = trainer->run(train, dev, a.out, a.until_epoch);

    std::printf("train: %d epochs done, %d steps total, best dev acc %.4f at epoch %d\n",
                trainer->epoch(), outcome.steps, outcome.best_dev_acc, outcome.best_epoch);
    std::printf("loss: first step %.6f, last step %.6f\n", outcome.initial_total,
                outcome.final_total);
    std::printf("artifacts: %s\n", a.out.c_str());
    return 0;
}

// ---- evaluate ------------------------------------------------------------------

struct HeadStats {
    int n = 0;
    int agree_sc = 0;
    int correct = 0;

    void add(learning::Sentiment head, learning::Sentiment sc, learning::Sentiment gold) {
        ++n;
        if (head == sc) ++agree_sc;
        if (head == gold) ++correct;
    }

    ordered_json to_json() const {
        ordered_json j;
        j["n"] = n;
        j["agree_sc"] = agree_sc;
        j["agreement"] = n == 0 ? 0.0 : static_cast<double>(agree_sc) / n;
        j["accuracy"] = n == 0 ? 0.0 : static_cast<double>(correct) / n;
        return j;
    }
};

struct EvalArgs {
    std::string config_path;
    std::string checkpoint;
    std::string data;
    std::string rationales;
    std::string out;
    std::string positive_words = "data/lexicons/positive_words.txt";
    std::string negative_words = "data/lexicons/negative_words.txt";
    std::string aesthetic_words = "data/lexicons/aesthetic_words.txt";
    int bins = 20;
    int top_k = 20;

    CLI::Option *o_checkpoint = nullptr, *o_data = nullptr, *o_rationales = nullptr,
                *o_out = nullptr, *o_positive = nullptr, *o_negative = nullptr,
                *o_aesthetic = nullptr, *o_bins = nullptr, *o_top_k = nullptr;
};

ordered_json class_stats_json(const eval::ClassStats& c) {
    ordered_json j;
    j["precision"] = c.precision;
    j["recall"] = c.recall;
    j["f1"] = c.f1;
    j["support"] = c.support;
    j["predicted"] = c.predicted;
    return j;
}

std::string ranking_text(const std::vector<std::pair<std::string, int>>& ranked) {
    std::string out;
    for (const auto& [word, count] : ranked) out += word + " " + std::to_string(count) + "\n";
    return out;
}

int cmd_evaluate(EvalArgs& a) {
    if (!a.config_path.empty()) {
        ordered_json j = load_config_file(a.config_path);
        take(j, "checkpoint", a.o_checkpoint, a.checkpoint);
        take(j, "data", a.o_data, a.data);
        take(j, "rationales", a.o_rationales, a.rationales);
        take(j, "out", a.o_out, a.out);
        take(j, "positive_words", a.o_positive, a.positive_words);
        take(j, "negative_words", a.o_negative, a.negative_words);
        take(j, "aesthetic_words", a.o_aesthetic, a.aesthetic_words);
        take(j, "bins", a.o_bins, a.bins);
        take(j, "top_k", a.o_top_k, a.top_k);
    }
    require_file(a.checkpoint, "checkpoint");
    require_file(a.data, "evaluation split");
    if (!a.rationales.empty()) require_file(a.rationales, "rationale records");
    require_file(a.positive_words, "positive word list");
    require_file(a.negative_words, "negative word list");
    require_file(a.aesthetic_words, "aesthetic word list");
    require_out(a.out);

    ordered_json cfg;
    cfg["command"] = "evaluate";
    cfg["checkpoint"] = a.checkpoint;
    cfg["data"] = a.data;
    cfg["rationales"] = a.rationales;
    cfg["out"] = a.out;
    cfg["positive_words"] = a.positive_words;
    cfg["negative_words"] = a.negative_words;
    cfg["aesthetic_words"] = a.aesthetic_words;
    cfg["bins"] = a.bins;
    cfg["top_k"] = a.top_k;
    write_json(fs::path(a.out) / "config.json", cfg);

    auto samples = data::read_samples(a.data);
    merge_rationales(samples, a.rationales);
    if (samples.empty()) throw std::invalid_argument("evaluation split is empty: " + a.data);

    ordered_json ck = ordered_json::parse(read_file(a.checkpoint));
    auto stored = learning::train_config_from_json(ck.at("config").dump());
    features::SyntheticFeatureProvider provider(stored.lsa.dim, feature_seed(stored.seed));
    auto trainer = learning::Trainer::resume(a.checkpoint, &provider);

    auto [report, losses] = trainer.evaluate_split(samples);

    HeadStats sr_head;
    HeadStats ir_head;
    std::vector<std::string> sr_texts;
    std::vector<std::string> ir_texts;
    for (const auto& s : samples) {
        auto gold = learning::sentiment_from_label(s.label);
        auto sc = trainer.predict(s, learning::Task::kSC);
        if (trainer.config().enable_srg) {
            auto p = trainer.predict(s, learning::Task::kSRG);
            sr_texts.push_back(p.rationale.value_or(""));
            sr_head.add(p.sentiment, sc.sentiment, gold);
        }
        if (trainer.config().enable_irg) {
            auto p = trainer.predict(s, learning::Task::kIRG);
            ir_texts.push_back(p.rationale.value_or(""));
            ir_head.add(p.sentiment, sc.sentiment, gold);
        }
    }

    ordered_json rj;
    rj["n"] = report.n;
    rj["accuracy"] = report.accuracy;
    rj["macro_f1"] = report.macro_f1;
    rj["micro_f1"] = report.micro_f1;
    rj["dis_rate"] = report.dis_rate;
    rj["per_class"] = ordered_json::object();
    for (int c = 0; c < 3; ++c)
        rj["per_class"][data::kLabels[c]] = class_stats_json(report.per_class[c]);
    rj["loss"] = ordered_json::object();
    for (const auto& [key, value] : losses) rj["loss"][key] = value;
    if (trainer.config().enable_srg) rj["sr_head"] = sr_head.to_json();
    if (trainer.config().enable_irg) rj["ir_head"] = ir_head.to_json();
    write_json(fs::path(a.out) / "report.json", rj);

    std::string text = eval::render_metric_report_text(report);
    char line[160];
    for (const auto& [key, value] : losses) {
        std::snprintf(line, sizeof(line), "loss[%s] %.6f\n", key.c_str(), value);
        text += line;
    }
    if (trainer.config().enable_srg) {
        std::snprintf(line, sizeof(line), "sr head: agreement %.4f, accuracy %.4f over %d\n",
                      sr_head.to_json()["agreement"].get<double>(),
                      sr_head.to_json()["accuracy"].get<double>(), sr_head.n);
        text += line;
    }
    if (trainer.config().enable_irg) {
        std::snprintf(line, sizeof(line), "ir head: agreement %.4f, accuracy %.4f over %d\n",
                      ir_head.to_json()["agreement"].get<double>(),
                      ir_head.to_json()["accuracy"].get<double>(), ir_head.n);
        text += line;
    }
    atomic_write_file(fs::path(a.out) / "report.txt", text);

    auto intensity = eval::lexicon_intensity(eval::load_word_list(a.positive_words),
                                             eval::load_word_list(a.negative_words));
    eval::HistogramConfig hist_cfg;
    hist_cfg.bins = a.bins;
    atomic_write_file(fs::path(a.out) / "sr_intensity.csv",
                      eval::histogram_csv(
                          eval::sentiment_intensity_histogram(sr_texts, intensity, hist_cfg)));
    atomic_write_file(fs::path(a.out) / "ir_intensity.csv",
                      eval::histogram_csv(
                          eval::sentiment_intensity_histogram(ir_texts, intensity, hist_cfg)));

    std::vector<std::string> rationale_texts = sr_texts;
    rationale_texts.insert(rationale_texts.end(), ir_texts.begin(), ir_texts.end());
    auto ranked = eval::aesthetic_word_frequency(
        rationale_texts, eval::load_word_list(a.aesthetic_words), a.top_k);
    atomic_write_file(fs::path(a.out) / "aesthetic_words.txt", ranking_text(ranked));

    std::fputs(text.c_str(), stdout);
    std::printf("artifacts: %s\n", a.out.c_str());
    return 0;
}

// ---- ablate --------------------------------------------------------------------

struct AblateArgs {
    std::string config_path;
    std::string train_path;
    std::string dev_path;
    std::string rationales;
    std::string out;
    std::vector<std::string> variants = kDefaultVariants;
    TrainFlags flags;

    CLI::Option *o_train = nullptr, *o_dev = nullptr, *o_rationales = nullptr, *o_out = nullptr,
                *o_variants = nullptr;
};

int cmd_ablate(AblateArgs& a) {
    ordered_json cfg_file = ordered_json::object();
    if (!a.config_path.empty()) {
        cfg_file = load_config_file(a.config_path);
        take(cfg_file, "train_data", a.o_train, a.train_path);
        take(cfg_file, "dev_data", a.o_dev, a.dev_path);
        take(cfg_file, "rationales", a.o_rationales, a.rationales);
        take(cfg_file, "out", a.o_out, a.out);
        take(cfg_file, "variants", a.o_variants, a.variants);
    }
    std::vector<std::string> ablate;
    learning::TrainConfig base = resolve_train_config(cfg_file, a.flags, ablate);
    if (!ablate.empty())
        throw std::invalid_argument("ablate: pass switches through --variants, not --ablate");
    require_file(a.train_path, "train split");
    require_file(a.dev_path, "dev split");
    if (!a.rationales.empty()) require_file(a.rationales, "rationale records");
    if (a.variants.empty()) throw std::invalid_argument("--variants must not be empty");
    require_out(a.out);

    auto train = data::read_samples(a.train_path);
    auto dev = data::read_samples(a.dev_path);
    merge_rationales(train, a.rationales);
    merge_rationales(dev, a.rationales);

    ordered_json sweep;
    sweep["command"] = "ablate";
    sweep["train_data"] = a.train_path;
    sweep["dev_data"] = a.dev_path;
    sweep["rationales"] = a.rationales;
    sweep["out"] = a.out;
    sweep["variants"] = a.variants;
    sweep["train"] = ordered_json::parse(learning::train_config_to_json(base));
    write_json(fs::path(a.out) / "config.json", sweep);

    ordered_json rows = ordered_json::array();
    std::printf("%-18s %8s %10s %10s  %s\n", "variant", "best-ep", "dev-acc", "dev-f1",
                "loss terms");
    for (const auto& token : a.variants) {
        learning::TrainConfig tc = base;
        apply_ablation(tc, token);
        tc.validate();

        std::string dir_name = variant_dir_name(token);
        fs::path run_dir = fs::path(a.out) / dir_name;
        fs::create_directories(run_dir);

        auto vocab = learning::build_vocab(train, tc.input_policy());
        features::SyntheticFeatureProvider provider(tc.lsa.dim, feature_seed(tc.seed));
        learning::Trainer trainer(tc, std::move(vocab), &provider);

        ordered_json cfg;
        cfg["command"] = "train";
        cfg["train_data"] = a.train_path;
        cfg["dev_data"] = a.dev_path;
        cfg["rationales"] = a.rationales;
        cfg["out"] = run_dir.string();
        cfg["ablate"] = token == "full" ? ordered_json::array()
                                        : ordered_json::array({token});
        cfg["train"] = ordered_json::parse(learning::train_config_to_json(tc));
        write_json(run_dir / "config.json", cfg);

        auto outcome = trainer.run(train, dev, run_dir);

        std::vector<std::string> keys;
        double dev_acc = 0;
        double dev_f1 = 0;
        for (auto it = outcome.rows.rbegin(); it != outcome.rows.rend(); ++it) {
            if (it->split != "dev") continue;
            for (const auto& [key, value] : it->loss) keys.push_back(key);
            dev_acc = it->acc;
            dev_f1 = it->f1;
            break;
        }
        ordered_json row;
        row["variant"] = dir_name;
        row["switch"] = token;
        row["best_epoch"] = outcome.best_epoch;
        row["best_dev_acc"] = outcome.best_dev_acc;
        row["final_dev_acc"] = dev_acc;
        row["final_dev_f1"] = dev_f1;
        row["loss_keys"] = keys;
        rows.push_back(row);

        std::string joined;
        for (const auto& k : keys) joined += (joined.empty() ? "" : ",") + k;
        std::printf("%-18s %8d %10.4f %10.4f  %s\n", dir_name.c_str(), outcome.best_epoch,
                    outcome.best_dev_acc, dev_f1, joined.c_str());
    }
    ordered_json summary;
    summary["rows"] = rows;
    write_json(fs::path(a.out) / "summary.json", summary);
    std::printf("artifacts: %s\n", a.out.c_str());
    return 0;
}

// ---- stats ---------------------------------------------------------------------

struct StatsArgs {
    std::string config_path;
    std::string data;
    std::string out;
    std::string positive_words = "data/lexicons/positive_words.txt";
    std::string negative_words = "data/lexicons/negative_words.txt";
    std::string aesthetic_words = "data/lexicons/aesthetic_words.txt";
    int bins = 20;
    int top_k = 20;

    CLI::Option *o_data = nullptr, *o_out = nullptr, *o_positive = nullptr,
                *o_negative = nullptr, *o_aesthetic = nullptr, *o_bins = nullptr,
                *o_top_k = nullptr;
};

int cmd_stats(StatsArgs& a) {
    if (!a.config_path.empty()) {
        ordered_json j = load_config_file(a.config_path);
        take(j, "data", a.o_data, a.data);
        take(j, "out", a.o_out, a.out);
        take(j, "positive_words", a.o_positive, a.positive_words);
        take(j, "negative_words", a.o_negative, a.negative_words);
        take(j, "aesthetic_words", a.o_aesthetic, a.aesthetic_words);
        take(j, "bins", a.o_bins, a.bins);
        take(j, "top_k", a.o_top_k, a.top_k);
    }
    require_file(a.data, "dataset");
    auto samples = data::read_samples(a.data);
    auto st = eval::dataset_stats(samples);
    std::string text = eval::render_stats_text(st);
    std::fputs(text.c_str(), stdout);
    if (a.out.empty()) return 0;

    require_file(a.positive_words, "positive word list");
    require_file(a.negative_words, "negative word list");
    require_file(a.aesthetic_words, "aesthetic word list");
    require_out(a.out);

    ordered_json cfg;
    cfg["command"] = "stats";
    cfg["data"] = a.data;
    cfg["out"] = a.out;
    cfg["positive_words"] = a.positive_words;
    cfg["negative_words"] = a.negative_words;
    cfg["aesthetic_words"] = a.aesthetic_words;
    cfg["bins"] = a.bins;
    cfg["top_k"] = a.top_k;
    write_json(fs::path(a.out) / "config.json", cfg);

    atomic_write_file(fs::path(a.out) / "stats.json", eval::encode_stats_json(st) + "\n");
    atomic_write_file(fs::path(a.out) / "stats.txt", text);

    std::vector<std::string> sr_texts;
    std::vector<std::string> ir_texts;
    std::vector<std::string> all_texts;
    for (const auto& s : samples) {
        if (s.sr) {
            sr_texts.push_back(*s.sr);
            all_texts.push_back(*s.sr);
        }
        if (s.ir) {
            ir_texts.push_back(*s.ir);
            all_texts.push_back(*s.ir);
        }
        if (!s.ac.empty()) all_texts.push_back(s.ac);
    }
    auto intensity = eval::lexicon_intensity(eval::load_word_list(a.positive_words),
                                             eval::load_word_list(a.negative_words));
    eval::HistogramConfig hist_cfg;
    hist_cfg.bins = a.bins;
    atomic_write_file(fs::path(a.out) / "sr_intensity.csv",
                      eval::histogram_csv(
                          eval::sentiment_intensity_histogram(sr_texts, intensity, hist_cfg)));
    atomic_write_file(fs::path(a.out) / "ir_intensity.csv",
                      eval::histogram_csv(
                          eval::sentiment_intensity_histogram(ir_texts, intensity, hist_cfg)));
    auto ranked = eval::aesthetic_word_frequency(
        all_texts, eval::load_word_list(a.aesthetic_words), a.top_k);
    atomic_write_file(fs::path(a.out) / "aesthetic_words.txt", ranking_text(ranked));
    std::printf("artifacts: %s\n", a.out.c_str());
    return 0;
}

// ---- inspect -------------------------------------------------------------------

struct InspectArgs {
    std::string data;
    std::string rationales;
    std::string id;
};

int cmd_inspect(InspectArgs& a) {
    require_file(a.data, "dataset");
    if (!a.rationales.empty()) require_file(a.rationales, "rationale records");
    auto samples = data::read_samples(a.data);
    merge_rationales(samples, a.rationales);
    const data::Sample* found = nullptr;
    for (const auto& s : samples)
        if (s.id == a.id) {
            found = &s;
            break;
        }
    if (found == nullptr) {
        std::fprintf(stderr, "masckit inspect: no sample %s in %s\n", a.id.c_str(),
                     a.data.c_str());
        return 3;
    }
    ordered_json j = ordered_json::parse(data::encode_sample(*found));
    std::printf("%s\n", j.dump(2).c_str());

    struct Row {
        learning::Task task;
        bool available;
    };
    const Row rows[] = {{learning::Task::kSC, true},
                        {learning::Task::kSRG, found->sr.has_value()},
                        {learning::Task::kIRG, found->ir.has_value()}};
    for (const auto& row : rows) {
        const char* name = learning::task_name(row.task);
        try {
            std::printf("input[%s]: %s\n", name,
                        learning::build_input(row.task, *found).c_str());
        } catch (const std::exception& e) {
            std::printf("input[%s]: (unavailable: %s)\n", name, e.what());
        }
        if (!row.available) {
            std::printf("target[%s]: (no rationale on this sample)\n", name);
            continue;
        }
        std::optional<std::string> rationale;
        if (row.task == learning::Task::kSRG) rationale = found->sr;
        if (row.task == learning::Task::kIRG) rationale = found->ir;
        std::printf("target[%s]: %s\n", name,
                    learning::format_target(row.task, found->label, rationale).c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masckit: multimodal aspect-based sentiment toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    auto build = std::make_shared<BuildArgs>();
    {
        CLI::App* cmd = app.add_subcommand(
            "build-rationales", "Generate semantic and impression rationales for a split");
        cmd->add_option("--config", build->config_path, "Config file (JSON)");
        build->o_data = cmd->add_option("--data", build->data, "Input split (JSONL)");
        build->o_out = cmd->add_option("--out", build->out, "Artifact directory");
        build->o_cache = cmd->add_option("--cache", build->cache,
                                         "Completion cache directory (default <out>/cache)");
        build->o_pools = cmd->add_option("--pools", build->pools, "Prompt pool file")
                             ->capture_default_str();
        build->o_client =
            cmd->add_option("--client", build->client,
                            "LLM client: \"mock\" or host:port (MASCKIT_API_KEY is sent as a "
                            "bearer token)")
                ->capture_default_str();
        build->o_model = cmd->add_option("--model", build->model, "Remote model id")
                             ->capture_default_str();
        build->o_seed = cmd->add_option("--seed", build->seed, "Prompt selection seed")
                            ->capture_default_str();
        build->o_parallelism = cmd->add_option("--parallelism", build->parallelism,
                                               "Concurrent requests")
                                   ->capture_default_str();
        build->o_max_attempts = cmd->add_option("--max-attempts", build->max_attempts,
                                                "Attempts per request")
                                    ->capture_default_str();
        cmd->callback([build, &exit_code] { exit_code = cmd_build_rationales(*build); });
    }

    auto prepare = std::make_shared<PrepareArgs>();
    {
        CLI::App* cmd = app.add_subcommand("prepare-aux",
                                           "Fill auxiliary captions and object descriptions");
        cmd->add_option("--config", prepare->config_path, "Config file (JSON)");
        prepare->o_data = cmd->add_option("--data", prepare->data, "Input split (JSONL)");
        prepare->o_out = cmd->add_option("--out", prepare->out, "Artifact directory");
        prepare->o_cache = cmd->add_option("--cache", prepare->cache,
                                           "Routing cache directory (default <out>/cache)");
        prepare->o_provider = cmd->add_option("--provider", prepare->provider,
                                              "Vision provider: \"mock\" or host:port")
                                  ->capture_default_str();
        prepare->o_max_aux_tokens = cmd->add_option("--max-aux-tokens", prepare->max_aux_tokens,
                                                    "Auxiliary text length cap")
                                        ->capture_default_str();
        cmd->callback([prepare, &exit_code] { exit_code = cmd_prepare_aux(*prepare); });
    }

    auto train = std::make_shared<TrainArgs>();
    {
        CLI::App* cmd = app.add_subcommand("train", "Train the multi-task model");
        cmd->add_option("--config", train->config_path, "Config file (JSON)");
        train->o_train = cmd->add_option("--train", train->train_path, "Train split (JSONL)");
        train->o_dev = cmd->add_option("--dev", train->dev_path, "Dev split (JSONL)");
        train->o_rationales = cmd->add_option("--rationales", train->rationales,
                                              "Rationale records to merge (JSONL)");
        train->o_out = cmd->add_option("--out", train->out, "Artifact directory");
        cmd->add_option("--resume", train->resume, "Checkpoint to continue from");
        cmd->add_option("--until-epoch", train->until_epoch,
                        "Stop after this epoch (0 runs the whole schedule)");
        train->flags.add(cmd);
        cmd->callback([train, &exit_code] { exit_code = cmd_train(*train); });
    }

    auto eval_args = std::make_shared<EvalArgs>();
    {
        CLI::App* cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a split");
        cmd->add_option("--config", eval_args->config_path, "Config file (JSON)");
        eval_args->o_checkpoint = cmd->add_option("--checkpoint", eval_args->checkpoint,
                                                  "Checkpoint file");
        eval_args->o_data = cmd->add_option("--data", eval_args->data, "Split to score (JSONL)");
        eval_args->o_rationales = cmd->add_option("--rationales", eval_args->rationales,
                                                  "Rationale records to merge (JSONL)");
        eval_args->o_out = cmd->add_option("--out", eval_args->out, "Artifact directory");
        eval_args->o_positive = cmd->add_option("--positive-words", eval_args->positive_words,
                                                "Positive lexicon")
                                    ->capture_default_str();
        eval_args->o_negative = cmd->add_option("--negative-words", eval_args->negative_words,
                                                "Negative lexicon")
                                    ->capture_default_str();
        eval_args->o_aesthetic = cmd->add_option("--aesthetic-words", eval_args->aesthetic_words,
                                                 "Aesthetic lexicon")
                                     ->capture_default_str();
        eval_args->o_bins = cmd->add_option("--bins", eval_args->bins, "Intensity histogram bins")
                                ->capture_default_str();
        eval_args->o_top_k = cmd->add_option("--top-k", eval_args->top_k,
                                             "Aesthetic ranking size")
                                 ->capture_default_str();
        cmd->callback([eval_args, &exit_code] { exit_code = cmd_evaluate(*eval_args); });
    }

    auto ablate = std::make_shared<AblateArgs>();
    {
        CLI::App* cmd = app.add_subcommand("ablate", "Train one run per ablation switch");
        cmd->add_option("--config", ablate->config_path, "Config file (JSON)");
        ablate->o_train = cmd->add_option("--train", ablate->train_path, "Train split (JSONL)");
        ablate->o_dev = cmd->add_option("--dev", ablate->dev_path, "Dev split (JSONL)");
        ablate->o_rationales = cmd->add_option("--rationales", ablate->rationales,
                                               "Rationale records to merge (JSONL)");
        ablate->o_out = cmd->add_option("--out", ablate->out, "Artifact directory");
        ablate->o_variants = cmd->add_option("--variants", ablate->variants,
                                             "Switches to sweep (default: the full table)")
                                 ->delimiter(',');
        ablate->flags.add(cmd);
        cmd->callback([ablate, &exit_code] { exit_code = cmd_ablate(*ablate); });
    }

    auto stats = std::make_shared<StatsArgs>();
    {
        CLI::App* cmd = app.add_subcommand("stats", "Dataset summary and corpus analyses");
        cmd->add_option("--config", stats->config_path, "Config file (JSON)");
        stats->o_data = cmd->add_option("--data", stats->data, "Split to summarize (JSONL)");
        stats->o_out = cmd->add_option("--out", stats->out,
                                       "Artifact directory (omit to print only)");
        stats->o_positive = cmd->add_option("--positive-words", stats->positive_words,
                                            "Positive lexicon")
                                ->capture_default_str();
        stats->o_negative = cmd->add_option("--negative-words", stats->negative_words,
                                            "Negative lexicon")
                                ->capture_default_str();
        stats->o_aesthetic = cmd->add_option("--aesthetic-words", stats->aesthetic_words,
                                             "Aesthetic lexicon")
                                 ->capture_default_str();
        stats->o_bins = cmd->add_option("--bins", stats->bins, "Intensity histogram bins")
                            ->capture_default_str();
        stats->o_top_k = cmd->add_option("--top-k", stats->top_k, "Aesthetic ranking size")
                             ->capture_default_str();
        cmd->callback([stats, &exit_code] { exit_code = cmd_stats(*stats); });
    }

    auto inspect = std::make_shared<InspectArgs>();
    {
        CLI::App* cmd = app.add_subcommand("inspect", "Print one sample and its task sequences");
        cmd->add_option("--data", inspect->data, "Split to read (JSONL)")->required();
        cmd->add_option("--rationales", inspect->rationales,
                        "Rationale records to merge (JSONL)");
        cmd->add_option("--id", inspect->id, "Sample id")->required();
        cmd->callback([inspect, &exit_code] { exit_code = cmd_inspect(*inspect); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "masckit: %s\n", e.what());
        return 3;
    }
    return exit_code;
}
