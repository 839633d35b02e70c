// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/learning/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "masc/common/hash.hpp"
#include "masc/common/random.hpp"
#include "masc/learning/vocab.hpp"

namespace masc::learning {

namespace {

using ad::Mat;
using ad::Value;

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    return ids;
}

// 0 on and below the diagonal, -1e9 above: rows attend to earlier positions.
Mat causal_mask(Eigen::Index n) {
    Mat m = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = -1e9;
    return m;
}

}  // namespace

void ModelConfig::validate() const {
    if (dim < 2) throw std::invalid_argument("model dim must be at least 2");
    if (layers < 1) throw std::invalid_argument("model needs at least one layer");
    if (ffn_hidden < 1) throw std::invalid_argument("ffn hidden width must be positive");
    if (max_len < 2) throw std::invalid_argument("max_len must be at least 2");
    if (visual_prefix && visual_dim < 1)
        throw std::invalid_argument("visual_dim must be positive");
}

Seq2Seq::Seq2Seq(ModelConfig cfg, int vocab_size, std::string prefix)
    : cfg_(cfg), vocab_(vocab_size), prefix_(std::move(prefix)) {
    cfg_.validate();
    if (vocab_ < Vocab::kUnk + 1)
        throw std::invalid_argument("vocabulary is smaller than the reserved ids");
}

std::vector<std::string> Seq2Seq::param_names() const {
    std::vector<std::string> names;
    auto block = [&](const std::string& base, bool cross) {
        for (const char* head : cross ? std::vector<const char*>{".self", ".cross"}
                                      : std::vector<const char*>{".attn"}) {
            for (const char* w : {".wq", ".wk", ".wv", ".wo", ".bq", ".bk", ".bv", ".bo"})
                names.push_back(base + head + w);
        }
        names.push_back(base + ".norm1");
        names.push_back(base + ".norm2");
        if (cross) names.push_back(base + ".norm3");
        for (const char* w : {".ffn.w1", ".ffn.b1", ".ffn.w2", ".ffn.b2"})
            names.push_back(base + w);
    };
    names.push_back(prefix_ + ".embed");
    names.push_back(prefix_ + ".pos_enc");
    names.push_back(prefix_ + ".pos_dec");
    if (cfg_.visual_prefix) {
        names.push_back(prefix_ + ".vis.w");
        names.push_back(prefix_ + ".vis.b");
    }
    for (int i = 0; i < cfg_.layers; ++i)
        block(prefix_ + ".enc" + std::to_string(i), false);
    names.push_back(prefix_ + ".enc_norm");
    for (int i = 0; i < cfg_.layers; ++i)
        block(prefix_ + ".dec" + std::to_string(i), true);
    names.push_back(prefix_ + ".dec_norm");
    return names;
}

void Seq2Seq::init_params(ad::ParamStore& store, std::uint64_t seed) const {
    if (store.has(prefix_ + ".embed")) return;
    RandomStream rng(fnv1a64(prefix_, seed));
    const int d = cfg_.dim;
    const int f = cfg_.ffn_hidden;
    for (const std::string& name : param_names()) {
        auto ends_with = [&](const char* suffix) {
            std::string s(suffix);
            return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
        };
        Mat value;
        if (ends_with(".embed")) {
            value = ad::xavier_uniform(vocab_, d, rng);
        } else if (ends_with(".pos_enc") || ends_with(".pos_dec")) {
            value = ad::xavier_uniform(cfg_.max_len, d, rng);
        } else if (ends_with(".vis.w")) {
            value = ad::xavier_uniform(cfg_.visual_dim, d, rng);
        } else if (ends_with(".vis.b") || ends_with(".bq") || ends_with(".bk") ||
                   ends_with(".bv") || ends_with(".bo") || ends_with(".ffn.b2")) {
            value = Mat::Zero(1, d);
        } else if (ends_with(".ffn.b1")) {
            value = Mat::Zero(1, f);
        } else if (ends_with(".norm1") || ends_with(".norm2") || ends_with(".norm3") ||
                   ends_with(".enc_norm") || ends_with(".dec_norm")) {
            value = Mat::Ones(1, d);
        } else if (ends_with(".ffn.w1")) {
            value = ad::xavier_uniform(d, f, rng);
        } else if (ends_with(".ffn.w2")) {
            value = ad::xavier_uniform(f, d, rng);
        } else {
            value = ad::xavier_uniform(d, d, rng);
        }
        store.add(name, std::move(value));
    }
}

Value Seq2Seq::attention(ad::ParamSession& ps, const std::string& base, Value q_in,
                         Value kv_in, bool causal) const {
    Value q = ad::add_rowvec(ad::matmul(q_in, ps[base + ".wq"]), ps[base + ".bq"]);
    Value k = ad::add_rowvec(ad::matmul(kv_in, ps[base + ".wk"]), ps[base + ".bk"]);
    Value v = ad::add_rowvec(ad::matmul(kv_in, ps[base + ".wv"]), ps[base + ".bv"]);
    Value scores = ad::scalar_mul(ad::matmul(q, ad::transpose(k)),
                                  1.0 / std::sqrt(static_cast<double>(cfg_.dim)));
    if (causal) scores = ad::add_const(scores, causal_mask(scores.val().rows()));
    Value mixed = ad::matmul(ad::softmax_rows(scores), v);
    return ad::add_rowvec(ad::matmul(mixed, ps[base + ".wo"]), ps[base + ".bo"]);
}

Value Seq2Seq::ffn(ad::ParamSession& ps, const std::string& base, Value x) const {
    Value h = ad::relu(ad::add_rowvec(ad::matmul(x, ps[base + ".ffn.w1"]), ps[base + ".ffn.b1"]));
    return ad::add_rowvec(ad::matmul(h, ps[base + ".ffn.w2"]), ps[base + ".ffn.b2"]);
}

Value Seq2Seq::embed_positions(ad::ParamSession& ps, const std::vector<int>& ids,
                               const std::string& pos_table) const {
    Value tok = ad::gather_rows(ps[prefix_ + ".embed"], ids);
    Value pos = ad::gather_rows(ps[pos_table], iota_ids(static_cast<int>(ids.size())));
    return ad::add(tok, pos);
}

Value Seq2Seq::encode(ad::ParamSession& ps, const std::vector<int>& input_ids,
                      const Eigen::VectorXd* visual) const {
    if (input_ids.empty()) throw std::invalid_argument("encoder input is empty");
    if (cfg_.visual_prefix && visual == nullptr)
        throw std::invalid_argument("model expects a visual vector");
    const int extra = (cfg_.visual_prefix && visual != nullptr) ? 1 : 0;
    if (static_cast<int>(input_ids.size()) + extra > cfg_.max_len)
        throw std::invalid_argument("encoder input exceeds max_len");
    Value x = embed_positions(ps, input_ids, prefix_ + ".pos_enc");
    if (extra == 1) {
        if (visual->size() != cfg_.visual_dim)
            throw std::invalid_argument("visual vector has the wrong dimension");
        Value row = ps.tape().constant(visual->transpose());
        Value projected =
            ad::add_rowvec(ad::matmul(row, ps[prefix_ + ".vis.w"]), ps[prefix_ + ".vis.b"]);
        x = ad::concat_rows(projected, x);
    }
    for (int i = 0; i < cfg_.layers; ++i) {
        std::string base = prefix_ + ".enc" + std::to_string(i);
        Value n1 = ad::rms_norm(x, ps[base + ".norm1"]);
        x = ad::add(x, attention(ps, base + ".attn", n1, n1, false));
        Value n2 = ad::rms_norm(x, ps[base + ".norm2"]);
        x = ad::add(x, ffn(ps, base, n2));
    }
    return ad::rms_norm(x, ps[prefix_ + ".enc_norm"]);
}

Value Seq2Seq::decode(ad::ParamSession& ps, Value memory,
                      const std::vector<int>& dec_ids) const {
    if (static_cast<int>(dec_ids.size()) > cfg_.max_len)
        throw std::invalid_argument("decoder input exceeds max_len");
    Value x = embed_positions(ps, dec_ids, prefix_ + ".pos_dec");
    for (int i = 0; i < cfg_.layers; ++i) {
        std::string base = prefix_ + ".dec" + std::to_string(i);
        Value n1 = ad::rms_norm(x, ps[base + ".norm1"]);
        x = ad::add(x, attention(ps, base + ".self", n1, n1, true));
        Value n2 = ad::rms_norm(x, ps[base + ".norm2"]);
        x = ad::add(x, attention(ps, base + ".cross", n2, memory, false));
        Value n3 = ad::rms_norm(x, ps[base + ".norm3"]);
        x = ad::add(x, ffn(ps, base, n3));
    }
    return ad::rms_norm(x, ps[prefix_ + ".dec_norm"]);
}

Value Seq2Seq::sample_loss(ad::ParamSession& ps, const std::vector<int>& input_ids,
                           const std::vector<int>& target_ids,
                           const Eigen::VectorXd* visual) const {
    if (target_ids.empty()) throw std::invalid_argument("target sequence is empty");
    for (int id : target_ids)
        if (id < 0 || id >= vocab_) throw std::invalid_argument("target id out of range");
    std::vector<int> dec_in;
    dec_in.reserve(target_ids.size() + 1);
    dec_in.push_back(Vocab::kBos);
    dec_in.insert(dec_in.end(), target_ids.begin(), target_ids.end());
    std::vector<int> out = target_ids;
    out.push_back(Vocab::kEos);

    Value memory = encode(ps, input_ids, visual);
    Value h = decode(ps, memory, dec_in);
    Value logits = ad::matmul(h, ad::transpose(ps[prefix_ + ".embed"]));
    return ad::sum_all(ad::cross_entropy_rows(logits, out));
}

std::vector<int> Seq2Seq::generate(ad::ParamStore& store, const std::vector<int>& input_ids,
                                   int max_new_tokens, const Eigen::VectorXd* visual) const {
    std::vector<int> out;
    if (max_new_tokens <= 0) return out;
    ad::Tape tape;
    ad::ParamSession ps(store, tape);
    Value memory = encode(ps, input_ids, visual);
    while (static_cast<int>(out.size()) < max_new_tokens) {
        std::vector<int> dec_in;
        dec_in.reserve(out.size() + 1);
        dec_in.push_back(Vocab::kBos);
        dec_in.insert(dec_in.end(), out.begin(), out.end());
        if (static_cast<int>(dec_in.size()) >= cfg_.max_len) break;
        Value h = decode(ps, memory, dec_in);
        Value last = ad::slice_rows(h, static_cast<int>(dec_in.size()) - 1, 1);
        Value logits = ad::matmul(last, ad::transpose(ps[prefix_ + ".embed"]));
        const Mat& row = logits.val();
        int best = 0;
        for (int c = 1; c < vocab_; ++c)
            if (row(0, c) > row(0, best)) best = c;
        if (best == Vocab::kEos) break;
        out.push_back(best);
    }
    return out;
}

}  // namespace masc::learning
