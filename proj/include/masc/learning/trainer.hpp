// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-task training loop: the weighted sum of the enabled generation
// losses plus the alignment loss on one tape per batch, AdamW updates over
// every bound parameter, per-epoch metrics rows, and resumable checkpoints.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "masc/ad/params.hpp"
#include "masc/data/sample.hpp"
#include "masc/eval/metrics.hpp"
#include "masc/features/provider.hpp"
#include "masc/learning/losses.hpp"
#include "masc/learning/model.hpp"
#include "masc/learning/sequences.hpp"
#include "masc/learning/vocab.hpp"
#include "masc/lsa/network.hpp"

namespace masc::learning {

struct TrainConfig {
    int epochs = 10;
    int batch = 4;
    double lr = 3e-4;
    double weight_decay = 0.01;
    LossWeights weights;
    std::uint64_t seed = 0;
    // Ablation switches. Disabled loss terms leave the objective and the
    // metrics rows entirely.
    bool enable_srg = true;
    bool enable_irg = true;
    bool enable_lsa = true;
    bool enable_od = true;
    bool enable_aes_cap = true;     // keep the caption segment in inputs
    bool aesthetic_caption = true;  // false swaps in the generic caption
    int max_new_tokens = 48;
    ModelConfig model;
    lsa::LsaConfig lsa;

    InputPolicy input_policy() const;
    void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

// Vocabulary over every input and target text the policy can produce.
Vocab build_vocab(const std::vector<data::Sample>& samples, const InputPolicy& policy);

struct EpochRow {
    int epoch = 0;
    std::string split;
    double acc = 0;
    double f1 = 0;
    std::map<std::string, double> loss;  // enabled components plus "total"
};

std::string encode_epoch_row(const EpochRow& row);
EpochRow decode_epoch_row(const std::string& line);

struct TrainOutcome {
    std::vector<EpochRow> rows;
    double initial_total = 0;  // total loss of this run's first step
    double final_total = 0;    // total loss of this run's last step
    int best_epoch = 0;
    double best_dev_acc = 0;
    int steps = 0;  // optimization steps taken across the whole history
};

class Trainer {
public:
    Trainer(TrainConfig cfg, Vocab vocab, features::FeatureProvider* provider = nullptr);

    // Restores parameters, optimizer moments, vocabulary, and counters.
    static Trainer resume(const std::filesystem::path& checkpoint,
                          features::FeatureProvider* provider = nullptr);

    // Trains from epoch()+1 through config().epochs (or until_epoch when
    // positive). Writes one train and one dev row per epoch to
    // <out_dir>/metrics.jsonl, a rolling <out_dir>/last.json, and
    // <out_dir>/best.json on dev accuracy gains.
    TrainOutcome run(const std::vector<data::Sample>& train,
                     const std::vector<data::Sample>& dev,
                     const std::filesystem::path& out_dir, int until_epoch = 0);

    // Greedy prediction for one sample under the configured input policy.
    ParsedOutput predict(const data::Sample& sample, Task task);

    // Sentiment metrics plus mean loss components; no parameter updates.
    std::pair<eval::MetricReport, std::map<std::string, double>> evaluate_split(
        const std::vector<data::Sample>& samples);

    void save_checkpoint(const std::filesystem::path& path);

    const TrainConfig& config() const { return cfg_; }
    const Vocab& vocab() const { return vocab_; }
    ad::ParamStore& store() { return store_; }
    int epoch() const { return epoch_; }
    int step() const { return step_; }

    // Generation tasks in the objective, kSC always first.
    std::vector<Task> enabled_tasks() const;

    std::vector<int> encode_input(const data::Sample& sample, Task task) const;
    std::vector<int> encode_target(const data::Sample& sample, Task task) const;

private:
    ad::Value batch_objective(ad::ParamSession& ps,
                              const std::vector<const data::Sample*>& batch,
                              std::uint64_t align_seed,
                              std::map<std::string, double>& components);

    TrainConfig cfg_;
    Vocab vocab_;
    Seq2Seq model_;
    lsa::LsaNetwork lsa_;
    ad::ParamStore store_;
    ad::AdamW opt_;
    features::FeatureProvider* provider_ = nullptr;
    int epoch_ = 0;
    int step_ = 0;
    double best_dev_acc_ = -1;
    int best_epoch_ = 0;
};

}  // namespace masc::learning
