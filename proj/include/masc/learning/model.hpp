// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Small encoder-decoder generator over the reverse-mode tape. Pre-norm
// residual blocks, single-head attention, learned positions, and output
// logits tied to the embedding table. It stands in for a pretrained
// sequence-to-sequence backbone at a size the test suite can train.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "masc/ad/params.hpp"
#include "masc/ad/tape.hpp"

namespace masc::learning {

struct ModelConfig {
    int dim = 32;
    int layers = 2;
    int ffn_hidden = 64;
    // Longest encoder or decoder sequence, including the visual row.
    int max_len = 160;
    // Prepend one projected visual row to the encoder input.
    bool visual_prefix = false;
    int visual_dim = 8;

    void validate() const;
};

class Seq2Seq {
public:
    Seq2Seq(ModelConfig cfg, int vocab_size, std::string prefix = "model");

    const ModelConfig& config() const { return cfg_; }
    int vocab_size() const { return vocab_; }
    const std::string& prefix() const { return prefix_; }

    // Registers parameter tensors under the prefix; no-op when present.
    void init_params(ad::ParamStore& store, std::uint64_t seed) const;
    std::vector<std::string> param_names() const;

    // Summed next-token negative log-likelihood of target_ids given
    // input_ids, teacher forced from bos: 1 x 1.
    ad::Value sample_loss(ad::ParamSession& ps, const std::vector<int>& input_ids,
                          const std::vector<int>& target_ids,
                          const Eigen::VectorXd* visual = nullptr) const;

    // Greedy decode until eos or max_new_tokens; bos and eos are not in the
    // returned ids. Ties break toward the lowest id.
    std::vector<int> generate(ad::ParamStore& store, const std::vector<int>& input_ids,
                              int max_new_tokens,
                              const Eigen::VectorXd* visual = nullptr) const;

private:
    ad::Value encode(ad::ParamSession& ps, const std::vector<int>& input_ids,
                     const Eigen::VectorXd* visual) const;
    ad::Value decode(ad::ParamSession& ps, ad::Value memory,
                     const std::vector<int>& dec_ids) const;
    ad::Value attention(ad::ParamSession& ps, const std::string& base, ad::Value q_in,
                        ad::Value kv_in, bool causal) const;
    ad::Value ffn(ad::ParamSession& ps, const std::string& base, ad::Value x) const;
    ad::Value embed_positions(ad::ParamSession& ps, const std::vector<int>& ids,
                              const std::string& pos_table) const;

    ModelConfig cfg_;
    int vocab_;
    std::string prefix_;
};

}  // namespace masc::learning
